//! Evaluation outputs: per-model CSV and a JSON summary with the scoring
//! configuration echoed.

use std::path::Path;

use cadrev_core::metrics::{Component, EvalReport, ScoringConfig};
use cadrev_core::model::LossRecord;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::error::{format_error, IoContext, Result};

#[derive(Serialize)]
struct CsvRow<'a> {
    id: &'a str,
    apcs: f64,
    csss: f64,
    cd_x1000: Option<f64>,
    valid: bool,
    acc_cmd: f64,
    acc_param: f64,
    f1: f64,
    complexity: Option<f64>,
    bin: Option<usize>,
}

pub fn write_report_csv(path: &Path, report: &EvalReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| format_error(path, e.to_string()))?;
    for r in &report.rows {
        w.serialize(CsvRow {
            id: &r.id,
            apcs: r.apcs,
            csss: r.csss,
            cd_x1000: r.cd_reported,
            valid: r.valid,
            acc_cmd: r.acc_cmd,
            acc_param: r.acc_param,
            f1: r.f1_types,
            complexity: r.complexity,
            bin: r.bin,
        })
        .map_err(|e| format_error(path, e.to_string()))?;
    }
    w.flush().at(path)
}

pub fn summary_json(report: &EvalReport, scoring: &ScoringConfig, seed: u64, echo_hash: &str) -> Value {
    let mut components = Map::new();
    for c in Component::ALL {
        components.insert(c.as_str().into(), json!(report.component_apcs.get(c)));
    }
    let bins: Vec<Value> = report
        .bins
        .iter()
        .map(|b| {
            json!({
                "bin": b.bin, "count": b.count, "complexity_min": b.complexity_min,
                "complexity_max": b.complexity_max, "mean_apcs": b.mean_apcs,
                "median_cd": b.median_cd, "ir": b.ir,
            })
        })
        .collect();
    json!({
        "count": report.rows.len(),
        "mean_apcs": report.mean_apcs,
        "mean_csss": report.mean_csss,
        "median_cd": report.median_cd,
        "ir": report.ir,
        "macro_f1": report.macro_f1,
        "mean_acc_cmd": report.mean_acc_cmd,
        "mean_acc_param": report.mean_acc_param,
        "component_apcs": components,
        "bins": bins,
        "config": {
            "k": scoring.k, "thresholds": scoring.thresholds, "eta": scoring.eta,
            "categorical_gate": scoring.categorical_gate, "seed": seed, "echo_hash": echo_hash,
        },
    })
}

pub fn write_json(path: &Path, v: &Value) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(v).expect("serializes") + "\n").at(path)
}

pub fn write_loss_csv(path: &Path, log: &[LossRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| format_error(path, e.to_string()))?;
    let err = |e: csv::Error| format_error(path, e.to_string());
    w.write_record(["step", "total", "L_type", "L_loop", "L_ext", "L_refine"]).map_err(err)?;
    for r in log {
        let p = r.parts;
        w.write_record([r.step.to_string(), p.total.to_string(), p.types.to_string(), p.loops.to_string(), p.ext.to_string(), p.refine.to_string()])
            .map_err(err)?;
    }
    w.flush().at(path)
}

/// Side-by-side table of several evaluation summaries.
pub fn compare_summaries(named: &[(String, Value)]) -> String {
    let mut out = String::from("| run | models | APCS | CSSS | median CD | IR | F1 | ACC_cmd | ACC_param |\n");
    out.push_str("|---|---|---|---|---|---|---|---|---|\n");
    let f = |v: &Value, k: &str| v.get(k).and_then(Value::as_f64).map_or("-".to_string(), |x| format!("{x:.4}"));
    for (name, v) in named {
        out.push_str(&format!(
            "| {name} | {} | {} | {} | {} | {} | {} | {} | {} |\n",
            v.get("count").and_then(Value::as_u64).unwrap_or(0),
            f(v, "mean_apcs"),
            f(v, "mean_csss"),
            f(v, "median_cd"),
            f(v, "ir"),
            f(v, "macro_f1"),
            f(v, "mean_acc_cmd"),
            f(v, "mean_acc_param"),
        ));
    }
    out
}
