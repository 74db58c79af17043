use alloc::vec::Vec;

use super::{CadError, CadSequence, L_MAX};

/// High-level token classes predicted by the loop-extrusion decoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TokenType {
    Loop,
    Extrusion,
    Eos,
}

impl TokenType {
    pub const ALL: [TokenType; 3] = [Self::Loop, Self::Extrusion, Self::Eos];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }
}

/// Expands a sequence into `L_MAX` tokens: one `Loop` per loop, one
/// `Extrusion` after each sketch, then `Eos` padding.
pub fn tokenize(seq: &CadSequence) -> Result<Vec<TokenType>, CadError> {
    let mut out = Vec::with_capacity(L_MAX);
    for step in &seq.steps {
        out.extend(core::iter::repeat_n(TokenType::Loop, step.loops.len()));
        if step.extrusion.is_some() {
            out.push(TokenType::Extrusion);
        }
    }
    if out.len() + 1 > L_MAX {
        return Err(CadError::TokenOverflow(out.len() + 1));
    }
    out.resize(L_MAX, TokenType::Eos);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cad::{Extrusion, Loop, PrimitiveDelta, Step, BooleanOp, ExtentType};
    use alloc::vec;
    use TokenType::*;

    fn ext() -> Extrusion {
        Extrusion {
            orientation: [0.5; 3],
            origin: [0.5; 3],
            scale: 0.5,
            distances: [0.3, 0.0],
            boolean_op: BooleanOp::New,
            extent: ExtentType::OneSided,
        }
    }

    fn circle() -> Loop {
        Loop::new(vec![PrimitiveDelta::circle([0.75, 0.5], [0.25, 0.5])])
    }

    #[test]
    fn two_loops_one_extrusion() {
        let seq = CadSequence::new(vec![Step { loops: vec![circle(), circle()], extrusion: Some(ext()) }]);
        let t = tokenize(&seq).unwrap();
        assert_eq!(&t[..4], &[Loop, Loop, Extrusion, Eos]);
        assert_eq!(t.len(), L_MAX);
        assert!(t[3..].iter().all(|&x| x == Eos));
    }

    #[test]
    fn two_steps_alternate() {
        let step = Step { loops: vec![circle()], extrusion: Some(ext()) };
        let seq = CadSequence::new(vec![step.clone(), step]);
        let t = tokenize(&seq).unwrap();
        assert_eq!(&t[..5], &[Loop, Extrusion, Loop, Extrusion, Eos]);
    }

    #[test]
    fn empty_sequence_is_all_eos() {
        let t = tokenize(&CadSequence::default()).unwrap();
        assert_eq!(t, vec![Eos; L_MAX]);
    }

    #[test]
    fn overflow_is_reported() {
        let step = Step { loops: vec![circle(); 11], extrusion: Some(ext()) };
        let seq = CadSequence::new(vec![step.clone(), step]);
        assert_eq!(tokenize(&seq), Err(CadError::TokenOverflow(25)));
    }
}
