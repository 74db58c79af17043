use super::{KdTree, Point3};

/// Chamfer distances are reported multiplied by this factor.
pub const CD_REPORT_SCALE: f64 = 1e3;

fn one_way(from: &[Point3], to: &KdTree) -> f64 {
    let sum: f64 = from.iter().map(|p| to.nearest(p).map_or(0.0, |(_, d2)| d2)).sum();
    sum / from.len() as f64
}

/// Mean squared nearest-neighbor distance, summed over both directions.
///
/// Returns 0 when either side is empty.
pub fn chamfer_distance_raw(a: &[Point3], b: &[Point3]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let ta = KdTree::new(a);
    let tb = KdTree::new(b);
    one_way(a, &tb) + one_way(b, &ta)
}

/// Chamfer distance in reporting units (raw × 10³).
pub fn chamfer_distance(a: &[Point3], b: &[Point3]) -> f64 {
    chamfer_distance_raw(a, b) * CD_REPORT_SCALE
}
