use alloc::vec::Vec;

use super::{dist2, tokenize, CadSequence, Loop, PrimitiveType, EPS_CLOSE, N_P_MAX};

/// Reasons a sequence cannot be turned into a solid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FailureCode {
    NoExtrusionToken,
    SingleLineLoop,
    OpenLoop,
    MalformedPrimitive,
    ZeroVolume,
    TokenOverflow,
}

impl FailureCode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::NoExtrusionToken => "no_extrusion_token",
            Self::SingleLineLoop => "single_line_loop",
            Self::OpenLoop => "open_loop",
            Self::MalformedPrimitive => "malformed_primitive",
            Self::ZeroVolume => "zero_volume",
            Self::TokenOverflow => "token_overflow",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidityReport {
    /// Sorted and deduplicated.
    pub failure_codes: Vec<FailureCode>,
}

impl ValidityReport {
    pub fn valid(&self) -> bool {
        self.failure_codes.is_empty()
    }

    pub fn has(&self, code: FailureCode) -> bool {
        self.failure_codes.contains(&code)
    }
}

fn in_unit(v: f64) -> bool {
    v.is_finite() && (0.0..=1.0).contains(&v)
}

fn check_loop(l: &Loop, out: &mut Vec<FailureCode>) {
    let n = l.primitives.len();
    if n == 0 || n > N_P_MAX {
        out.push(FailureCode::MalformedPrimitive);
        return;
    }
    let mut types = Vec::with_capacity(n);
    for p in &l.primitives {
        let coords_ok = in_unit(p.start[0])
            && in_unit(p.start[1])
            && in_unit(p.end[0])
            && in_unit(p.end[1])
            && p.mid.is_none_or(|m| in_unit(m[0]) && in_unit(m[1]));
        if !coords_ok {
            out.push(FailureCode::MalformedPrimitive);
        }
        match p.infer_type() {
            Ok(t) => types.push(t),
            Err(_) => out.push(FailureCode::MalformedPrimitive),
        }
    }
    if n == 1 && types.first() == Some(&PrimitiveType::Line) {
        // A lone line cannot bound a region; closure is meaningless here.
        out.push(FailureCode::SingleLineLoop);
        return;
    }
    if n > 1 && types.contains(&PrimitiveType::Circle) {
        out.push(FailureCode::MalformedPrimitive);
    }
    let open = (0..n).any(|i| dist2(l.primitives[i].end, l.primitives[(i + 1) % n].start) > EPS_CLOSE);
    if open {
        out.push(FailureCode::OpenLoop);
    }
}

/// Applies every validity rule and collects the failures.
pub fn validate(seq: &CadSequence) -> ValidityReport {
    let mut codes = Vec::new();
    let q = seq.quantization;
    if seq.extrusion_count() == 0 || seq.steps.iter().any(|s| s.extrusion.is_none()) {
        codes.push(FailureCode::NoExtrusionToken);
    }
    for step in &seq.steps {
        for l in &step.loops {
            check_loop(l, &mut codes);
        }
        if let Some(e) = &step.extrusion {
            let flat = e.distances.iter().all(|&d| q.quantize(d) == 0);
            if flat || step.loops.is_empty() {
                codes.push(FailureCode::ZeroVolume);
            }
        }
    }
    if tokenize(seq).is_err() {
        codes.push(FailureCode::TokenOverflow);
    }
    codes.sort();
    codes.dedup();
    ValidityReport { failure_codes: codes }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cad::{BooleanOp, ExtentType, Extrusion, PrimitiveDelta, Step};
    use alloc::vec;

    fn ext(e1: f64) -> Extrusion {
        Extrusion {
            orientation: [0.5; 3],
            origin: [0.5; 3],
            scale: 0.5,
            distances: [e1, 0.0],
            boolean_op: BooleanOp::New,
            extent: ExtentType::OneSided,
        }
    }

    fn circle() -> Loop {
        Loop::new(vec![PrimitiveDelta::circle([0.75, 0.5], [0.25, 0.5])])
    }

    fn square() -> Loop {
        Loop::polygon(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    }

    fn seq(loops: Vec<Loop>, e: Option<Extrusion>) -> CadSequence {
        CadSequence::new(vec![Step { loops, extrusion: e }])
    }

    #[test]
    fn circle_with_extrusion_is_valid() {
        assert!(validate(&seq(vec![circle()], Some(ext(0.3)))).valid());
        assert!(validate(&seq(vec![square()], Some(ext(0.3)))).valid());
    }

    #[test]
    fn loops_without_extrusion() {
        let r = validate(&seq(vec![circle()], None));
        assert_eq!(r.failure_codes, vec![FailureCode::NoExtrusionToken]);
    }

    #[test]
    fn empty_sequence_has_no_extrusion() {
        let r = validate(&CadSequence::default());
        assert_eq!(r.failure_codes, vec![FailureCode::NoExtrusionToken]);
    }

    #[test]
    fn single_line_loop() {
        let l = Loop::new(vec![PrimitiveDelta::line([0.1, 0.1], [0.9, 0.1])]);
        let r = validate(&seq(vec![l], Some(ext(0.3))));
        assert_eq!(r.failure_codes, vec![FailureCode::SingleLineLoop]);
    }

    #[test]
    fn open_loop() {
        let mut l = square();
        l.primitives[1].start = [0.9, 0.0];
        let r = validate(&seq(vec![l], Some(ext(0.3))));
        assert_eq!(r.failure_codes, vec![FailureCode::OpenLoop]);
    }

    #[test]
    fn zero_distances() {
        let r = validate(&seq(vec![circle()], Some(ext(0.001))));
        assert_eq!(r.failure_codes, vec![FailureCode::ZeroVolume]);
    }

    #[test]
    fn circle_mixed_with_lines_is_malformed() {
        let mut l = square();
        l.primitives.push(PrimitiveDelta::circle([0.0, 0.0], [0.2, 0.0]));
        let r = validate(&seq(vec![l], Some(ext(0.3))));
        assert!(r.has(FailureCode::MalformedPrimitive));
    }

    #[test]
    fn overflow() {
        let r = validate(&seq(vec![circle(); 23], Some(ext(0.3))));
        assert_eq!(r.failure_codes, vec![FailureCode::TokenOverflow]);
    }
}
