use alloc::vec;
use alloc::vec::Vec;

use super::ModelError;
use crate::nn::AttentionConfig;

/// One set-abstraction level: centroids, grouping radius, neighbors per
/// centroid and the widths of its shared MLP.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderLevel {
    pub points: usize,
    pub radius: f64,
    pub samples: usize,
    pub mlp: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Toy,
    Paper,
}

impl Preset {
    pub fn as_str(self) -> &'static str {
        match self {
            Preset::Toy => "toy",
            Preset::Paper => "paper",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "toy" => Some(Preset::Toy),
            "paper" => Some(Preset::Paper),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
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
    pub levels: Vec<EncoderLevel>,
    pub type_hidden: usize,
    pub ext_hidden: usize,
    pub refiner_hidden: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub warmup: u64,
}

impl ModelConfig {
    pub fn preset(p: Preset) -> Self {
        match p {
            Preset::Toy => Self::toy(),
            Preset::Paper => Self::paper(),
        }
    }

    pub fn toy() -> Self {
        let radii = [0.1, 0.2, 0.4, 0.8];
        let points = [128, 64, 32, 16];
        let mlps = [vec![16, 16], vec![32, 32], vec![32, 32], vec![32, 16]];
        Self {
            n_points: 512,
            d_p: 16,
            d_z: 32,
            l_max: 24,
            n_p_max: 8,
            bins: 256,
            heads: 4,
            ff_dim: 64,
            dropout: 0.0,
            decoder_blocks: 4,
            loop_blocks: 4,
            levels: (0..4)
                .map(|i| EncoderLevel { points: points[i], radius: radii[i], samples: 16, mlp: mlps[i].clone() })
                .collect(),
            type_hidden: 32,
            ext_hidden: 64,
            refiner_hidden: 64,
            batch_size: 8,
            lr: 5e-3,
            warmup: 100,
        }
    }

    pub fn paper() -> Self {
        let radii = [0.1, 0.2, 0.4, 0.8];
        let points = [512, 256, 128, 16];
        let samples = [64, 64, 64, 32];
        let mlps = [vec![64, 64, 128], vec![128, 128, 256], vec![256, 256, 512], vec![512, 256, 16]];
        Self {
            n_points: 4096,
            d_p: 16,
            d_z: 256,
            l_max: 24,
            n_p_max: 8,
            bins: 256,
            heads: 8,
            ff_dim: 512,
            dropout: 0.1,
            decoder_blocks: 4,
            loop_blocks: 4,
            levels: (0..4)
                .map(|i| EncoderLevel { points: points[i], radius: radii[i], samples: samples[i], mlp: mlps[i].clone() })
                .collect(),
            type_hidden: 256,
            ext_hidden: 256,
            refiner_hidden: 256,
            batch_size: 72,
            lr: 1e-3,
            warmup: 2000,
        }
    }

    pub fn attention(&self) -> AttentionConfig {
        AttentionConfig { heads: self.heads, model_dim: self.d_z, ff_dim: self.ff_dim, dropout: self.dropout }
    }

    /// Quantization classes per parameter (bins plus the sentinel).
    pub fn classes(&self) -> usize {
        self.bins as usize + 1
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &'static str| Err(ModelError::Config(m));
        if self.levels.is_empty() {
            return bad("encoder needs at least one level");
        }
        if self.levels.iter().any(|l| l.points == 0 || l.samples == 0 || l.mlp.is_empty() || !(l.radius > 0.0)) {
            return bad("encoder levels need points, samples, radius and an MLP");
        }
        if self.levels[0].points > self.n_points || self.levels.windows(2).any(|w| w[1].points > w[0].points) {
            return bad("encoder point counts must not increase");
        }
        if self.levels.last().and_then(|l| l.mlp.last()) != Some(&self.d_p) {
            return bad("last encoder MLP width must equal d_p");
        }
        if !self.attention().is_valid() {
            return bad("d_z must be divisible by heads and dropout in [0, 1)");
        }
        if self.l_max < 2 || self.n_p_max == 0 || self.bins < 2 {
            return bad("l_max >= 2, n_p_max >= 1 and bins >= 2 required");
        }
        if self.batch_size == 0 || !(self.lr > 0.0) {
            return bad("batch_size and lr must be positive");
        }
        Ok(())
    }
}
