use alloc::vec::Vec;

use super::{ModelConfig, ModelError};
use crate::cad::{CadSequence, QuantizationSpec, QuantizedExtrusion, TokenType, EXTRUSION_SLOTS, PRIMITIVE_SLOTS};

/// Token types of a sequence padded with `Eos` to `l_max`. Sequences that
/// fill every position carry no terminating `Eos`.
pub fn token_types(seq: &CadSequence, l_max: usize) -> Result<Vec<TokenType>, ModelError> {
    let mut out = Vec::with_capacity(l_max);
    for step in &seq.steps {
        out.extend(core::iter::repeat_n(TokenType::Loop, step.loops.len()));
        if step.extrusion.is_some() {
            out.push(TokenType::Extrusion);
        }
    }
    if out.len() > l_max {
        return Err(ModelError::TokenOverflow { have: out.len(), max: l_max });
    }
    out.resize(l_max, TokenType::Eos);
    Ok(out)
}

/// Teacher-forcing targets of one sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Targets {
    pub types: Vec<TokenType>,
    /// Quantized loop coordinates, `n_p_max` slots per loop and 6 per slot;
    /// unused slots hold the sentinel class.
    pub loop_classes: Vec<usize>,
    /// Continuous coordinates parallel to `loop_classes` (`None` for sentinels).
    pub loop_values: Vec<Option<f64>>,
    /// Quantized extrusion parameters, 11 per extrusion.
    pub ext_classes: Vec<usize>,
}

impl Targets {
    pub fn new(seq: &CadSequence, cfg: &ModelConfig) -> Result<Self, ModelError> {
        let types = token_types(seq, cfg.l_max)?;
        let q = QuantizationSpec::new(cfg.bins)?;
        let sentinel = q.sentinel() as usize;
        let mut loop_classes = Vec::new();
        let mut loop_values = Vec::new();
        for l in seq.loops() {
            if l.primitives.len() > cfg.n_p_max {
                return Err(ModelError::TooManyPrimitives(l.primitives.len()));
            }
            for i in 0..cfg.n_p_max {
                match l.primitives.get(i) {
                    Some(p) => {
                        let a = p.to_array();
                        let has_mid = p.mid.is_some();
                        for (k, &x) in a.iter().enumerate() {
                            let present = has_mid || !(2..4).contains(&k);
                            loop_classes.push(if present { q.quantize(x) as usize } else { sentinel });
                            loop_values.push(present.then_some(x));
                        }
                    }
                    None => {
                        loop_classes.extend([sentinel; PRIMITIVE_SLOTS]);
                        loop_values.extend([None; PRIMITIVE_SLOTS]);
                    }
                }
            }
        }
        let mut ext_classes = Vec::with_capacity(seq.extrusion_count() * EXTRUSION_SLOTS);
        for e in seq.extrusions() {
            ext_classes.extend(QuantizedExtrusion::from_extrusion(e, &q).params.iter().map(|&c| c as usize));
        }
        Ok(Self { types, loop_classes, loop_values, ext_classes })
    }

    pub fn loop_tokens(&self) -> usize {
        self.types.iter().filter(|&&t| t == TokenType::Loop).count()
    }

    pub fn ext_tokens(&self) -> usize {
        self.types.iter().filter(|&&t| t == TokenType::Extrusion).count()
    }

    /// Refiner targets in bin units, `(x − dequantize(quantize(x)))·(bins − 1)`,
    /// with zero weight at sentinel coordinates. Weights sum to one.
    pub fn offset_targets(&self, cfg: &ModelConfig) -> (Vec<f64>, Vec<f64>) {
        let q = QuantizationSpec::new(cfg.bins).expect("validated bins");
        let top = f64::from(cfg.bins - 1);
        let present = self.loop_values.iter().filter(|v| v.is_some()).count().max(1) as f64;
        self.loop_values
            .iter()
            .zip(&self.loop_classes)
            .map(|(v, &c)| match v {
                Some(x) => ((x - q.dequantize(c as u16)) * top, 1.0 / present),
                None => (0.0, 0.0),
            })
            .unzip()
    }
}
