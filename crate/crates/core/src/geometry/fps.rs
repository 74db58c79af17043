use alloc::vec;
use alloc::vec::Vec;

use super::{sq_dist, Point3};

/// Farthest point sampling starting from `first`. Ties pick the lowest index.
/// Returns `count.min(points.len())` indices in selection order.
pub fn farthest_point_sample(points: &[Point3], count: usize, first: usize) -> Vec<usize> {
    let n = points.len();
    let count = count.min(n);
    if count == 0 {
        return Vec::new();
    }
    let mut picked = Vec::with_capacity(count);
    let mut dist = vec![f64::INFINITY; n];
    let mut current = first.min(n - 1);
    for _ in 0..count {
        picked.push(current);
        let c = points[current];
        let mut best = 0;
        let mut best_d = f64::NEG_INFINITY;
        for (i, d) in dist.iter_mut().enumerate() {
            let nd = sq_dist(&points[i], &c);
            if nd < *d {
                *d = nd;
            }
            if *d > best_d {
                best_d = *d;
                best = i;
            }
        }
        current = best;
    }
    picked
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn picks_extremes_first() {
        let pts = [[0.0, 0.0, 0.0], [0.1, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, 0.0, 0.0]];
        assert_eq!(farthest_point_sample(&pts, 3, 0), alloc::vec![0, 2, 3]);
    }

    #[test]
    fn degenerate_cloud_terminates() {
        let pts = [[0.3; 3]; 10];
        let s = farthest_point_sample(&pts, 4, 0);
        assert_eq!(s.len(), 4);
    }
}
