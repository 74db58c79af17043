//! Run configuration: one key/value tree read from TOML or JSON, resolved
//! against a model preset. Every command writes the resolved tree next to its
//! outputs together with its SHA-256 (`echo_hash`).

use std::path::Path;

use cadrev_core::metrics::ScoringConfig;
use cadrev_core::model::{EncoderLevel, ModelConfig, Preset, Variant};
use cadrev_core::perturb::{HoleSpec, NoiseSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, IoContext, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelDoc {
    pub points: usize,
    pub radius: f64,
    pub samples: usize,
    pub mlp: Vec<usize>,
}

/// Every field of a model configuration (checkpoint manifests store this).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfigDoc {
    pub n_points: usize,
    pub d_p: usize,
    pub d_z: usize,
    pub l_max: usize,
    pub n_p_max: usize,
    pub bins: u16,
    pub heads: usize,
    pub ff_dim: usize,
    pub dropout: f64,
    pub decoder_blocks: usize,
    pub loop_blocks: usize,
    pub levels: Vec<LevelDoc>,
    pub type_hidden: usize,
    pub ext_hidden: usize,
    pub refiner_hidden: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub warmup: u64,
}

impl From<&ModelConfig> for ModelConfigDoc {
    fn from(c: &ModelConfig) -> Self {
        Self {
            n_points: c.n_points,
            d_p: c.d_p,
            d_z: c.d_z,
            l_max: c.l_max,
            n_p_max: c.n_p_max,
            bins: c.bins,
            heads: c.heads,
            ff_dim: c.ff_dim,
            dropout: c.dropout,
            decoder_blocks: c.decoder_blocks,
            loop_blocks: c.loop_blocks,
            levels: c
                .levels
                .iter()
                .map(|l| LevelDoc { points: l.points, radius: l.radius, samples: l.samples, mlp: l.mlp.clone() })
                .collect(),
            type_hidden: c.type_hidden,
            ext_hidden: c.ext_hidden,
            refiner_hidden: c.refiner_hidden,
            batch_size: c.batch_size,
            lr: c.lr,
            warmup: c.warmup,
        }
    }
}

impl From<&ModelConfigDoc> for ModelConfig {
    fn from(d: &ModelConfigDoc) -> Self {
        Self {
            n_points: d.n_points,
            d_p: d.d_p,
            d_z: d.d_z,
            l_max: d.l_max,
            n_p_max: d.n_p_max,
            bins: d.bins,
            heads: d.heads,
            ff_dim: d.ff_dim,
            dropout: d.dropout,
            decoder_blocks: d.decoder_blocks,
            loop_blocks: d.loop_blocks,
            levels: d
                .levels
                .iter()
                .map(|l| EncoderLevel { points: l.points, radius: l.radius, samples: l.samples, mlp: l.mlp.clone() })
                .collect(),
            type_hidden: d.type_hidden,
            ext_hidden: d.ext_hidden,
            refiner_hidden: d.refiner_hidden,
            batch_size: d.batch_size,
            lr: d.lr,
            warmup: d.warmup,
        }
    }
}

/// Optional per-field overrides of the preset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelOverrides {
    pub n_points: Option<usize>,
    pub d_z: Option<usize>,
    pub heads: Option<usize>,
    pub ff_dim: Option<usize>,
    pub dropout: Option<f64>,
    pub decoder_blocks: Option<usize>,
    pub loop_blocks: Option<usize>,
    pub levels: Option<Vec<LevelDoc>>,
    pub batch_size: Option<usize>,
    pub lr: Option<f64>,
    pub warmup: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub steps: u64,
    /// `hierarchical` or `flat`.
    pub variant: String,
    pub refiner: bool,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self { steps: 2000, variant: Variant::Hierarchical.as_str().into(), refiner: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleSection {
    /// Points per synthesized or sampled cloud.
    pub points: usize,
}

impl Default for SampleSection {
    fn default() -> Self {
        Self { points: 4096 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub count: usize,
    /// Train / validation / test fractions.
    pub split: [f64; 3],
}

impl Default for SynthSection {
    fn default() -> Self {
        Self { count: 64, split: [0.8, 0.1, 0.1] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoringSection {
    pub k: f64,
    pub thresholds: Vec<f64>,
    pub eta: u16,
    pub categorical_gate: bool,
}

impl Default for ScoringSection {
    fn default() -> Self {
        let d = ScoringConfig::default();
        Self { k: d.k, thresholds: d.thresholds, eta: d.eta, categorical_gate: d.categorical_gate }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    /// Points sampled from each sequence for the chamfer distance.
    pub cd_points: usize,
    pub complexity_bins: Option<usize>,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self { cd_points: 4096, complexity_bins: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    pub octaves: u32,
    pub amplitude: f64,
    pub frequency: f64,
    pub persistence: f64,
    pub lacunarity: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        let d = NoiseSpec::default();
        Self { octaves: d.octaves, amplitude: d.amplitude, frequency: d.frequency, persistence: d.persistence, lacunarity: d.lacunarity }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HoleSection {
    pub max_holes: usize,
    pub ratio_mean: f64,
    pub ratio_std: f64,
    pub min_remaining: usize,
}

impl Default for HoleSection {
    fn default() -> Self {
        let d = HoleSpec::default();
        Self { max_holes: d.max_holes, ratio_mean: d.ratio_mean, ratio_std: d.ratio_std, min_remaining: d.min_remaining }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// `toy` or `paper`.
    pub preset: String,
    pub seed: u64,
    pub model: ModelOverrides,
    pub train: TrainSection,
    pub sample: SampleSection,
    pub synth: SynthSection,
    pub scoring: ScoringSection,
    pub eval: EvalSection,
    pub noise: NoiseSection,
    pub holes: HoleSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            preset: Preset::Toy.as_str().into(),
            seed: 0,
            model: ModelOverrides::default(),
            train: TrainSection::default(),
            sample: SampleSection::default(),
            synth: SynthSection::default(),
            scoring: ScoringSection::default(),
            eval: EvalSection::default(),
            noise: NoiseSection::default(),
            holes: HoleSection::default(),
        }
    }
}

impl RunConfig {
    /// Parses TOML for `.toml` files and JSON otherwise.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).at(path)?;
        if path.extension().and_then(|e| e.to_str()) == Some("toml") {
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
        } else {
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
        }
    }

    pub fn preset(&self) -> Result<Preset> {
        Preset::parse(&self.preset).ok_or_else(|| Error::Config(format!("unknown preset `{}`", self.preset)))
    }

    pub fn variant(&self) -> Result<Variant> {
        Variant::parse(&self.train.variant).ok_or_else(|| Error::Config(format!("unknown variant `{}`", self.train.variant)))
    }

    pub fn model_config(&self) -> Result<ModelConfig> {
        let mut c = ModelConfig::preset(self.preset()?);
        let o = &self.model;
        macro_rules! apply {
            ($($f:ident),*) => { $(if let Some(v) = o.$f { c.$f = v; })* };
        }
        apply!(n_points, d_z, heads, ff_dim, dropout, decoder_blocks, loop_blocks, batch_size, lr, warmup);
        if let Some(levels) = &o.levels {
            c.levels = levels
                .iter()
                .map(|l| EncoderLevel { points: l.points, radius: l.radius, samples: l.samples, mlp: l.mlp.clone() })
                .collect();
            c.d_p = c.levels.last().and_then(|l| l.mlp.last()).copied().unwrap_or(c.d_p);
        }
        c.validate()?;
        Ok(c)
    }

    pub fn scoring(&self) -> Result<ScoringConfig> {
        let s = &self.scoring;
        let cfg = ScoringConfig { k: s.k, thresholds: s.thresholds.clone(), eta: s.eta, categorical_gate: s.categorical_gate };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn noise(&self, seed: u64) -> NoiseSpec {
        let n = &self.noise;
        NoiseSpec { octaves: n.octaves, amplitude: n.amplitude, frequency: n.frequency, persistence: n.persistence, lacunarity: n.lacunarity, seed }
    }

    pub fn holes(&self, seed: u64) -> HoleSpec {
        let h = &self.holes;
        HoleSpec { max_holes: h.max_holes, ratio_mean: h.ratio_mean, ratio_std: h.ratio_std, min_remaining: h.min_remaining, seed }
    }

    /// Canonical JSON of the resolved tree (sorted keys) and its SHA-256.
    pub fn resolved(&self) -> Result<(serde_json::Value, String)> {
        let mut v = serde_json::to_value(self).expect("config serializes");
        v["model_resolved"] = serde_json::to_value(ModelConfigDoc::from(&self.model_config()?)).expect("serializes");
        let text = serde_json::to_string(&v).expect("value serializes");
        let hash = hex::encode(Sha256::digest(text.as_bytes()));
        v["echo_hash"] = serde_json::Value::String(hash.clone());
        Ok((v, hash))
    }

    pub fn write_resolved(&self, dir: &Path) -> Result<String> {
        let (v, hash) = self.resolved()?;
        let path = dir.join("config.resolved.json");
        std::fs::write(&path, serde_json::to_string_pretty(&v).expect("serializes") + "\n").at(&path)?;
        Ok(hash)
    }
}
