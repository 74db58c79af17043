use alloc::vec::Vec;

use super::{chamfer_distance_raw, PointCloud};
use crate::cad::CadSequence;

/// Raw chamfer distance below which a test model duplicates a training model
/// (0.3 in reported units).
pub const DUPLICATE_THRESHOLD_RAW: f64 = 3e-4;

/// Minimum raw chamfer distance from `test` to any training cloud; infinite
/// for an empty training set.
pub fn model_complexity(test: &PointCloud, train: &[PointCloud]) -> f64 {
    train
        .iter()
        .map(|t| chamfer_distance_raw(&test.points, &t.points))
        .fold(f64::INFINITY, f64::min)
}

/// Flags each test cloud whose model complexity is below `threshold_raw`.
pub fn find_duplicates(test: &[PointCloud], train: &[PointCloud], threshold_raw: f64) -> Vec<bool> {
    test.iter().map(|t| model_complexity(t, train) < threshold_raw).collect()
}

/// The candidate sequence whose cloud is closest in chamfer distance; ties go
/// to the lowest index.
pub fn retrieve_nearest<'a>(query: &PointCloud, candidates: &'a [(CadSequence, PointCloud)]) -> Option<&'a CadSequence> {
    let mut best: Option<(usize, f64)> = None;
    for (i, (_, cloud)) in candidates.iter().enumerate() {
        let d = chamfer_distance_raw(&query.points, &cloud.points);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| &candidates[i].0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{sample_surface, CD_REPORT_SCALE};
    use alloc::vec;

    fn cube() -> CadSequence {
        super::super::sample::tests::unit_cube()
    }

    fn cylinder() -> CadSequence {
        use crate::cad::{BooleanOp, ExtentType, Extrusion, Loop, PrimitiveDelta, Step};
        let c = Loop::new(vec![PrimitiveDelta::circle([0.9, 0.5], [0.1, 0.5])]);
        let e = Extrusion {
            orientation: [0.5; 3],
            origin: [0.5; 3],
            scale: 0.5,
            distances: [0.9, 0.0],
            boolean_op: BooleanOp::New,
            extent: ExtentType::OneSided,
        };
        CadSequence::new(vec![Step { loops: vec![c], extrusion: Some(e) }])
    }

    #[test]
    fn complexity_and_duplicates() {
        let a = sample_surface(&cube(), 4096, 1).unwrap();
        let b = sample_surface(&cube(), 4096, 2).unwrap();
        let cyl = sample_surface(&cylinder(), 4096, 3).unwrap();
        assert_eq!(model_complexity(&a, &[a.clone()]), 0.0);
        let self_cd = model_complexity(&a, &[cyl.clone(), b.clone()]) * CD_REPORT_SCALE;
        assert!(self_cd <= 1.0, "{self_cd}");
        let only_cyl = model_complexity(&a, &[cyl.clone()]);
        assert!(only_cyl * CD_REPORT_SCALE > 0.3);
        assert!(model_complexity(&a, &[cyl.clone(), b.clone()]) <= only_cyl);
        assert_eq!(find_duplicates(&[a.clone()], &[cyl.clone(), b.clone()], DUPLICATE_THRESHOLD_RAW), vec![true]);
        assert_eq!(find_duplicates(&[a.clone()], &[cyl.clone()], DUPLICATE_THRESHOLD_RAW), vec![false]);
        assert_eq!(find_duplicates(&[a.clone()], &[a.clone()], 0.0), vec![false]);
        let cands = vec![(cylinder(), cyl), (cube(), b)];
        assert_eq!(retrieve_nearest(&a, &cands), Some(&cube()));
        assert_eq!(retrieve_nearest(&a, &[]), None);
    }
}
