use alloc::vec::Vec;

use crate::cad::{CadSequence, TokenType, L_MAX};

/// Token types of a sequence padded (or truncated) to `L_MAX`.
pub fn sequence_token_types(seq: &CadSequence) -> Vec<TokenType> {
    let mut out = Vec::with_capacity(L_MAX);
    for step in &seq.steps {
        out.extend(core::iter::repeat_n(TokenType::Loop, step.loops.len()));
        if step.extrusion.is_some() {
            out.push(TokenType::Extrusion);
        }
    }
    out.truncate(L_MAX);
    out.resize(L_MAX, TokenType::Eos);
    out
}

/// Confusion counts indexed `[gt][pred]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TypeConfusion {
    pub counts: [[usize; 3]; 3],
}

impl TypeConfusion {
    /// Positional comparison; the shorter list is padded with `Eos`.
    pub fn from_tokens(pred: &[TokenType], gt: &[TokenType]) -> Self {
        let mut c = Self::default();
        c.add(pred, gt);
        c
    }

    pub fn add(&mut self, pred: &[TokenType], gt: &[TokenType]) {
        for i in 0..pred.len().max(gt.len()) {
            let p = pred.get(i).copied().unwrap_or(TokenType::Eos);
            let g = gt.get(i).copied().unwrap_or(TokenType::Eos);
            self.counts[g.index()][p.index()] += 1;
        }
    }

    /// `(tp, fp, fn)` for one class.
    pub fn class_counts(&self, t: TokenType) -> (usize, usize, usize) {
        let c = t.index();
        let tp = self.counts[c][c];
        let fp = (0..3).map(|g| self.counts[g][c]).sum::<usize>() - tp;
        let fn_ = self.counts[c].iter().sum::<usize>() - tp;
        (tp, fp, fn_)
    }

    /// F1 of one class; `None` when the class appears on neither side.
    pub fn class_f1(&self, t: TokenType) -> Option<f64> {
        let (tp, fp, fn_) = self.class_counts(t);
        let denom = 2 * tp + fp + fn_;
        (denom > 0).then(|| 2.0 * tp as f64 / denom as f64)
    }

    /// Mean F1 over the classes present on either side.
    pub fn macro_f1(&self) -> f64 {
        let scores: Vec<f64> = TokenType::ALL.iter().filter_map(|&t| self.class_f1(t)).collect();
        if scores.is_empty() {
            1.0
        } else {
            scores.iter().sum::<f64>() / scores.len() as f64
        }
    }
}

pub fn f1_types(pred: &[TokenType], gt: &[TokenType]) -> f64 {
    TypeConfusion::from_tokens(pred, gt).macro_f1()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use TokenType::*;

    fn padded(head: &[TokenType]) -> Vec<TokenType> {
        let mut v = head.to_vec();
        v.resize(L_MAX, Eos);
        v
    }

    #[test]
    fn identical_is_one() {
        let g = padded(&[Loop, Loop, Extrusion]);
        assert_eq!(f1_types(&g, &g), 1.0);
    }

    #[test]
    fn all_eos_prediction() {
        let g = padded(&[Loop, Extrusion]);
        let p = vec![Eos; L_MAX];
        let c = TypeConfusion::from_tokens(&p, &g);
        assert_eq!(c.class_f1(Loop), Some(0.0));
        assert_eq!(c.class_f1(Extrusion), Some(0.0));
        assert!(c.class_f1(Eos).unwrap() < 1.0);
        assert!(c.macro_f1() < 1.0 / 3.0);
    }

    #[test]
    fn one_extra_loop_hand_count() {
        let g = padded(&[Loop, Extrusion]);
        let p = padded(&[Loop, Extrusion, Loop]);
        let c = TypeConfusion::from_tokens(&p, &g);
        assert_eq!(c.class_counts(Loop), (1, 1, 0));
        assert_eq!(c.class_counts(Extrusion), (1, 0, 0));
        assert_eq!(c.class_counts(Eos), (21, 0, 1));
        let expected = (2.0 / 3.0 + 1.0 + 42.0 / 43.0) / 3.0;
        assert!((c.macro_f1() - expected).abs() < 1e-15);
    }
}
