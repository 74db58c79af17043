use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    validate, BooleanOp, CadError, CadSequence, ExtentType, Extrusion, Loop, Point2,
    PrimitiveDelta, QuantizedPrimitive, Step,
};

/// Bounds of the synthetic sequence generator.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    /// Inclusive range of sketch-extrusion steps.
    pub steps: (usize, usize),
    /// Inclusive range of loops per sketch (the second loop is a hole).
    pub loops_per_sketch: (usize, usize),
    /// Inclusive range of primitives in a polygonal loop.
    pub polygon_sides: (usize, usize),
    /// Probability that an outer loop is a circle.
    pub circle_probability: f64,
    /// Probability that a polygon edge is an outward-bulging arc.
    pub arc_probability: f64,
    /// Probability that a later step cuts instead of joins.
    pub cut_probability: f64,
    pub max_retries: usize,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        Self {
            steps: (1, 2),
            loops_per_sketch: (1, 2),
            polygon_sides: (3, 6),
            circle_probability: 0.3,
            arc_probability: 0.3,
            cut_probability: 0.3,
            max_retries: 100,
        }
    }
}

/// Coordinates are kept on a 1e-6 grid so the 9-significant-digit JSON form
/// round-trips exactly.
fn snap(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

fn snap2(p: Point2) -> Point2 {
    [snap(p[0]), snap(p[1])]
}

fn polar(c: Point2, r: f64, a: f64) -> Point2 {
    snap2([c[0] + r * a.cos(), c[1] + r * a.sin()])
}

fn circle_loop(rng: &mut impl Rng, c: Point2, r: f64) -> Loop {
    let a = rng.random_range(0.0..2.0 * PI);
    let start = polar(c, r, a);
    let opposite = polar(c, r, a + PI);
    Loop::new(alloc::vec![PrimitiveDelta::circle(start, opposite)])
}

/// Convex polygon inscribed in the circle `(c, r)`. Returns the loop and a
/// lower bound on its inradius around `c`.
fn polygon_loop(rng: &mut impl Rng, spec: &GeneratorSpec, c: Point2, r: f64, arcs: bool) -> (Loop, f64) {
    let k = rng.random_range(spec.polygon_sides.0..=spec.polygon_sides.1);
    let weights: Vec<f64> = (0..k).map(|_| rng.random_range(1.0..1.5)).collect();
    let total: f64 = weights.iter().sum();
    let a0 = rng.random_range(0.0..2.0 * PI);
    let mut angle = a0;
    let mut max_gap: f64 = 0.0;
    let mut verts = Vec::with_capacity(k);
    for w in &weights {
        verts.push(polar(c, r, angle));
        let gap = 2.0 * PI * w / total;
        max_gap = max_gap.max(gap);
        angle += gap;
    }
    let prims = (0..k)
        .map(|i| {
            let (s, e) = (verts[i], verts[(i + 1) % k]);
            if arcs && rng.random_bool(spec.arc_probability) {
                let chord = [e[0] - s[0], e[1] - s[1]];
                let len = (chord[0] * chord[0] + chord[1] * chord[1]).sqrt();
                // vertices run counter-clockwise, so the outward normal is on the right
                let normal = [chord[1] / len, -chord[0] / len];
                let sagitta = rng.random_range(0.15..0.3) * len;
                let m = [
                    (s[0] + e[0]) * 0.5 + normal[0] * sagitta,
                    (s[1] + e[1]) * 0.5 + normal[1] * sagitta,
                ];
                PrimitiveDelta::arc(s, snap2(m), e)
            } else {
                PrimitiveDelta::line(s, e)
            }
        })
        .collect();
    (Loop::new(prims), r * (max_gap * 0.5).cos())
}

fn sketch(rng: &mut impl Rng, spec: &GeneratorSpec) -> Vec<Loop> {
    let c = [rng.random_range(0.35..0.65), rng.random_range(0.35..0.65)];
    let r = rng.random_range(0.18..0.28);
    let (outer, inradius) = if rng.random_bool(spec.circle_probability) {
        (circle_loop(rng, c, r), r)
    } else {
        polygon_loop(rng, spec, c, r, true)
    };
    let n = rng.random_range(spec.loops_per_sketch.0..=spec.loops_per_sketch.1);
    let mut loops = alloc::vec![outer];
    if n >= 2 {
        let r_in = 0.35 * inradius;
        let hole = if rng.random_bool(0.5) {
            circle_loop(rng, c, r_in)
        } else {
            polygon_loop(rng, spec, c, r_in, false).0
        };
        loops.push(hole);
    }
    loops
}

fn extrusion(rng: &mut impl Rng, spec: &GeneratorSpec, index: usize) -> Extrusion {
    const AXIS: [f64; 3] = [0.25, 0.5, 0.75];
    let orientation = [
        AXIS[rng.random_range(0..3)],
        AXIS[rng.random_range(0..3)],
        AXIS[rng.random_range(0..3)],
    ];
    let origin = [
        snap(rng.random_range(0.3..0.7)),
        snap(rng.random_range(0.3..0.7)),
        snap(rng.random_range(0.3..0.7)),
    ];
    let extent = match rng.random_range(0..4) {
        0 | 1 => ExtentType::OneSided,
        2 => ExtentType::Symmetric,
        _ => ExtentType::TwoSided,
    };
    let e1 = snap(rng.random_range(0.1..0.5));
    let e2 = if extent == ExtentType::TwoSided { snap(rng.random_range(0.05..0.3)) } else { 0.0 };
    let boolean_op = if index == 0 {
        BooleanOp::New
    } else if rng.random_bool(spec.cut_probability) {
        BooleanOp::Cut
    } else {
        BooleanOp::Join
    };
    Extrusion {
        orientation,
        origin,
        scale: snap(rng.random_range(0.3..0.6)),
        distances: [e1, e2],
        boolean_op,
        extent,
    }
}

fn types_survive_quantization(seq: &CadSequence) -> bool {
    let q = seq.quantization;
    seq.loops().flat_map(|l| l.primitives.iter()).all(|p| {
        let back = QuantizedPrimitive::from_delta(p, &q).to_delta(&q);
        p.infer_type().ok() == back.infer_type().ok()
    })
}

/// Draws a valid sequence deterministically from `rng_seed`.
pub fn generate_random_sequence(rng_seed: u64, spec: &GeneratorSpec) -> Result<CadSequence, CadError> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    for _ in 0..spec.max_retries.max(1) {
        let n_steps = rng.random_range(spec.steps.0..=spec.steps.1);
        let steps = (0..n_steps)
            .map(|i| Step { loops: sketch(&mut rng, spec), extrusion: Some(extrusion(&mut rng, spec, i)) })
            .collect();
        let seq = CadSequence::new(steps);
        if validate(&seq).valid() && types_survive_quantization(&seq) {
            return Ok(seq);
        }
    }
    Err(CadError::GeneratorExhausted(spec.max_retries))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cad::PrimitiveType;

    #[test]
    fn seed_seven_is_valid_and_deterministic() {
        let a = generate_random_sequence(7, &GeneratorSpec::default()).unwrap();
        let b = generate_random_sequence(7, &GeneratorSpec::default()).unwrap();
        assert!(validate(&a).valid());
        assert_eq!(a, b);
    }

    #[test]
    fn covers_every_primitive_type() {
        let mut seen = [false; 3];
        for seed in 0..200 {
            let s = generate_random_sequence(seed, &GeneratorSpec::default()).unwrap();
            for p in s.loops().flat_map(|l| &l.primitives) {
                seen[p.infer_type().unwrap() as usize] = true;
            }
        }
        assert_eq!(seen, [true; 3], "{:?}", [PrimitiveType::Line, PrimitiveType::Arc, PrimitiveType::Circle]);
    }

    #[test]
    fn thousand_seeds_all_valid() {
        for seed in 0..1000 {
            let s = generate_random_sequence(seed, &GeneratorSpec::default()).unwrap();
            assert!(validate(&s).valid(), "seed {seed}");
        }
    }
}
