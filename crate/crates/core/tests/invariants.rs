use cadrev_core::cad::{
    generate_random_sequence, tokenize, validate, BooleanOp, ExtentType, Extrusion, GeneratorSpec, Loop, PrimitiveDelta, QuantizationSpec,
    Step, L_MAX,
};
use cadrev_core::geometry::{chamfer_distance_raw, farthest_point_sample, sample_surface, KdTree, PointCloud};
use cadrev_core::metrics::{acc_cmd, apcs_from_score, csss, ScoringConfig};
use cadrev_core::perturb::{apply_noise, punch_holes, HoleSpec, NoiseSpec};
use proptest::prelude::*;

fn point() -> impl Strategy<Value = [f64; 3]> {
    [-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64]
}

fn brute_nearest(q: &[f64; 3], pts: &[[f64; 3]]) -> f64 {
    pts.iter()
        .map(|p| (0..3).map(|k| (p[k] - q[k]) * (p[k] - q[k])).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quantization_error_is_half_a_step(x in 0.0..=1.0f64, bins in 2u16..1024) {
        let q = QuantizationSpec::new(bins).unwrap();
        let i = q.quantize(x);
        prop_assert!(i < q.bins());
        prop_assert!((q.dequantize(i) - x).abs() <= 0.5 / f64::from(bins - 1) + 1e-15);
    }

    #[test]
    fn generated_sequences_are_valid(seed in 0u64..1_000_000) {
        let seq = generate_random_sequence(seed, &GeneratorSpec::default()).unwrap();
        prop_assert!(validate(&seq).valid());
        prop_assert_eq!(tokenize(&seq).unwrap().len(), L_MAX);
    }

    #[test]
    fn csss_is_bounded_and_symmetric(a in 0u64..10_000, b in 0u64..10_000) {
        let cfg = ScoringConfig::default();
        let (x, y) = (
            generate_random_sequence(a, &GeneratorSpec::default()).unwrap(),
            generate_random_sequence(b, &GeneratorSpec::default()).unwrap(),
        );
        let s = csss(&x, &y, &cfg).total;
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert!((s - csss(&y, &x, &cfg).total).abs() < 1e-12);
        prop_assert_eq!(csss(&x, &x, &cfg).total, 1.0);
    }

    #[test]
    fn over_prediction_strictly_lowers_csss(seed in 0u64..10_000, extra_loop in any::<bool>()) {
        let cfg = ScoringConfig::default();
        let gt = generate_random_sequence(seed, &GeneratorSpec { steps: (1, 1), ..Default::default() }).unwrap();
        let mut pred = gt.clone();
        let tri = Loop::polygon(&[[0.1, 0.1], [0.3, 0.1], [0.2, 0.3]]);
        if extra_loop && pred.steps[0].loops.len() < 3 {
            pred.steps[0].loops.push(tri);
            prop_assert!(csss(&pred, &gt, &cfg).total < 1.0);
            return Ok(());
        } else {
            let e = Extrusion {
                orientation: [0.5; 3],
                origin: [0.5; 3],
                scale: 0.4,
                distances: [0.2, 0.0],
                boolean_op: BooleanOp::Join,
                extent: ExtentType::OneSided,
            };
            pred.steps.push(Step { loops: vec![tri], extrusion: Some(e) });
        }
        prop_assert!(csss(&pred, &gt, &cfg).total < 1.0);
        prop_assert_eq!(acc_cmd(&pred, &gt), 1.0);
    }

    #[test]
    fn apcs_is_monotone(a in 0.0..=1.0f64, b in 0.0..=1.0f64) {
        let t = ScoringConfig::default().thresholds;
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(apcs_from_score(lo, &t) <= apcs_from_score(hi, &t));
    }

    #[test]
    fn kd_tree_matches_brute_force(pts in prop::collection::vec(point(), 1..200), q in point()) {
        let tree = KdTree::new(&pts);
        let (_, d2) = tree.nearest(&q).unwrap();
        prop_assert_eq!(d2, brute_nearest(&q, &pts));
    }

    #[test]
    fn chamfer_is_symmetric_and_zero_on_itself(a in prop::collection::vec(point(), 1..100), b in prop::collection::vec(point(), 1..100)) {
        let d = chamfer_distance_raw(&a, &b);
        prop_assert!(d >= 0.0);
        prop_assert_eq!(d, chamfer_distance_raw(&b, &a));
        prop_assert_eq!(chamfer_distance_raw(&a, &a), 0.0);
    }

    #[test]
    fn fps_indices_are_distinct(pts in prop::collection::vec(point(), 1..150), k in 1usize..40) {
        let idx = farthest_point_sample(&pts, k, 0);
        prop_assert_eq!(idx.len(), k.min(pts.len()));
        let mut s = idx.clone();
        s.sort_unstable();
        s.dedup();
        prop_assert_eq!(s.len(), idx.len());
        prop_assert_eq!(idx[0], 0);
    }
}

fn cloud(seed: u64, n: usize) -> PointCloud {
    let seq = generate_random_sequence(seed, &GeneratorSpec::default()).unwrap();
    sample_surface(&seq, n, seed).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn sampling_is_deterministic_with_unit_normals(seed in 0u64..10_000) {
        let (a, b) = (cloud(seed, 256), cloud(seed, 256));
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.len(), 256);
        for n in &a.normals {
            prop_assert!(((n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn noise_is_bounded(seed in 0u64..10_000, amplitude in 0.0..0.01f64) {
        let pc = cloud(seed, 256);
        let out = apply_noise(&pc, &NoiseSpec { amplitude, seed, ..Default::default() }).unwrap();
        for (p, q) in pc.points.iter().zip(&out.points) {
            let d = (0..3).map(|k| (p[k] - q[k]).powi(2)).sum::<f64>().sqrt();
            prop_assert!(d <= amplitude + 1e-12);
        }
    }

    #[test]
    fn holes_keep_a_subset(seed in 0u64..10_000) {
        let pc = cloud(seed, 1024);
        let spec = HoleSpec { min_remaining: 512, seed, ..Default::default() };
        let r = punch_holes(&pc, &spec).unwrap();
        prop_assert!(r.cloud.len() >= 512);
        prop_assert_eq!(r.cloud.len() + r.removed.len(), pc.len());
        prop_assert!((1..=spec.max_holes).contains(&r.holes.len()));
        let total: usize = r.holes.iter().map(Vec::len).sum();
        prop_assert_eq!(total, r.removed.len());
    }
}

#[test]
fn loops_with_too_many_primitives_are_malformed() {
    let ring: Vec<[f64; 2]> = (0..9).map(|i| {
        let a = i as f64 * std::f64::consts::TAU / 9.0;
        [0.5 + 0.3 * a.cos(), 0.5 + 0.3 * a.sin()]
    }).collect();
    let mut seq = generate_random_sequence(1, &GeneratorSpec::default()).unwrap();
    seq.steps[0].loops = vec![Loop::polygon(&ring)];
    assert!(!validate(&seq).valid());
    seq.steps[0].loops = vec![Loop::new(vec![PrimitiveDelta::circle([0.8, 0.5], [0.2, 0.5])])];
    assert!(validate(&seq).valid());
}
