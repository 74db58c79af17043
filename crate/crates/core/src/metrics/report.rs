use alloc::string::String;
use alloc::vec::Vec;

use super::{acc_cmd, acc_param, apcs_from_score, csss, f1_types, sequence_token_types, Component, ComponentScores, MetricsError, ScoringConfig};
use crate::cad::{validate, CadSequence};

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub id: String,
    pub apcs: f64,
    pub csss: f64,
    /// Reported (x1000) chamfer distance; `None` for invalid or unsampled predictions.
    pub cd_reported: Option<f64>,
    pub valid: bool,
    pub acc_cmd: f64,
    pub acc_param: f64,
    pub f1_types: f64,
    pub complexity: Option<f64>,
    pub bin: Option<usize>,
    /// Per-component APCS.
    pub components: ComponentScores,
}

/// Scores one prediction against its ground truth. Validity is reported
/// separately: an invalid prediction keeps the APCS of its raw sequence but
/// gets no chamfer distance.
pub fn score_pair(id: &str, pred: &CadSequence, gt: &CadSequence, cd_reported: Option<f64>, cfg: &ScoringConfig) -> EvalRow {
    let valid = validate(pred).valid();
    let b = csss(pred, gt, cfg);
    let t = &cfg.thresholds;
    let (apcs, components) = (apcs_from_score(b.total, t), b.components.map(|v| apcs_from_score(v, t)));
    EvalRow {
        id: id.into(),
        apcs,
        csss: b.total,
        cd_reported: if valid { cd_reported } else { None },
        valid,
        acc_cmd: acc_cmd(pred, gt),
        acc_param: acc_param(pred, gt, cfg).value,
        f1_types: f1_types(&sequence_token_types(pred), &sequence_token_types(gt)),
        complexity: None,
        bin: None,
        components,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinSummary {
    pub bin: usize,
    pub count: usize,
    pub complexity_min: f64,
    pub complexity_max: f64,
    pub mean_apcs: f64,
    pub median_cd: Option<f64>,
    pub ir: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    pub mean_apcs: f64,
    pub mean_csss: f64,
    pub median_cd: Option<f64>,
    pub ir: f64,
    pub macro_f1: f64,
    pub mean_acc_cmd: f64,
    pub mean_acc_param: f64,
    /// Mean per-component APCS over the models where the component is defined.
    pub component_apcs: ComponentScores,
    pub bins: Vec<BinSummary>,
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

fn mean(it: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = it.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 { 0.0 } else { s / n as f64 }
}

fn summarize(rows: &[&EvalRow]) -> (f64, Option<f64>, f64) {
    let cds: Vec<f64> = rows.iter().filter(|r| r.valid).filter_map(|r| r.cd_reported).collect();
    let invalid = rows.iter().filter(|r| !r.valid).count();
    (mean(rows.iter().map(|r| r.apcs)), median(&cds), invalid as f64 / rows.len() as f64)
}

/// Row for a prediction that could not be parsed: invalid, every score 0.
pub fn unparseable_row(id: &str, gt: &CadSequence, cfg: &ScoringConfig) -> EvalRow {
    EvalRow {
        id: id.into(),
        apcs: 0.0,
        csss: 0.0,
        cd_reported: None,
        valid: false,
        acc_cmd: 0.0,
        acc_param: 0.0,
        f1_types: f1_types(&[], &sequence_token_types(gt)),
        complexity: None,
        bin: None,
        components: csss(&CadSequence::default(), gt, cfg).components.map(|_| 0.0),
    }
}

/// Aggregates per-model rows. With `bins = Some(q)`, rows carrying a
/// complexity are split into `q` near-equal-count bins by ascending
/// complexity (ties by input order) and each row's `bin` is set.
pub fn aggregate_report(mut rows: Vec<EvalRow>, bins: Option<usize>) -> Result<EvalReport, MetricsError> {
    if rows.is_empty() {
        return Err(MetricsError::EmptyEvaluation);
    }
    let mut bin_summaries = Vec::new();
    if let Some(q) = bins.filter(|&q| q > 0) {
        let mut order: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].complexity.is_some()).collect();
        order.sort_by(|&a, &b| rows[a].complexity.unwrap().total_cmp(&rows[b].complexity.unwrap()).then(a.cmp(&b)));
        let n = order.len();
        for (rank, &i) in order.iter().enumerate() {
            rows[i].bin = Some(rank * q / n);
        }
        for b in 0..q.min(n) {
            let members: Vec<&EvalRow> = order.iter().map(|&i| &rows[i]).filter(|r| r.bin == Some(b)).collect();
            let (mean_apcs, median_cd, ir) = summarize(&members);
            bin_summaries.push(BinSummary {
                bin: b,
                count: members.len(),
                complexity_min: members.first().and_then(|r| r.complexity).unwrap_or(0.0),
                complexity_max: members.last().and_then(|r| r.complexity).unwrap_or(0.0),
                mean_apcs,
                median_cd,
                ir,
            });
        }
    }
    let all: Vec<&EvalRow> = rows.iter().collect();
    let (mean_apcs, median_cd, ir) = summarize(&all);
    let mut component_apcs = ComponentScores::default();
    for c in Component::ALL {
        let vals: Vec<f64> = rows.iter().filter_map(|r| r.components.get(c)).collect();
        component_apcs.set(c, (!vals.is_empty()).then(|| mean(vals.into_iter())));
    }
    Ok(EvalReport {
        mean_apcs,
        mean_csss: mean(rows.iter().map(|r| r.csss)),
        median_cd,
        ir,
        macro_f1: mean(rows.iter().map(|r| r.f1_types)),
        mean_acc_cmd: mean(rows.iter().map(|r| r.acc_cmd)),
        mean_acc_param: mean(rows.iter().map(|r| r.acc_param)),
        component_apcs,
        bins: bin_summaries,
        rows,
    })
}
