use alloc::vec::Vec;

use nalgebra::{Matrix3, SymmetricEigen};

use super::{dot, sub, GeometryError, KdTree, Point3};

/// Relative eigenvalue floor below which a neighborhood counts as rank deficient.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct NormalEstimate {
    pub normals: Vec<Point3>,
    /// Neighborhoods whose covariance has rank < 2; their normal is arbitrary.
    pub degenerate: Vec<bool>,
}

impl NormalEstimate {
    pub fn degenerate_count(&self) -> usize {
        self.degenerate.iter().filter(|&&d| d).count()
    }
}

/// PCA normals over the `k` nearest neighbors (the point included), oriented
/// away from the cloud centroid.
pub fn estimate_normals(points: &[Point3], k: usize) -> Result<NormalEstimate, GeometryError> {
    let n = points.len();
    if k < 3 || n <= k {
        return Err(GeometryError::TooFewPoints { n, k: k.max(3) });
    }
    let tree = KdTree::new(points);
    let mut c = [0.0; 3];
    for p in points {
        for i in 0..3 {
            c[i] += p[i];
        }
    }
    let c = [c[0] / n as f64, c[1] / n as f64, c[2] / n as f64];
    let mut normals = Vec::with_capacity(n);
    let mut degenerate = Vec::with_capacity(n);
    for p in points {
        let nb = tree.knn(p, k);
        let mut mean = [0.0; 3];
        for &(j, _) in &nb {
            for i in 0..3 {
                mean[i] += points[j][i];
            }
        }
        let kf = nb.len() as f64;
        let mean = [mean[0] / kf, mean[1] / kf, mean[2] / kf];
        let mut cov = Matrix3::<f64>::zeros();
        for &(j, _) in &nb {
            let d = sub(points[j], mean);
            for r in 0..3 {
                for s in 0..3 {
                    cov[(r, s)] += d[r] * d[s];
                }
            }
        }
        let eig = SymmetricEigen::new(cov / kf);
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let (lo, mid, hi) = (eig.eigenvalues[order[0]], eig.eigenvalues[order[1]], eig.eigenvalues[order[2]]);
        let _ = lo;
        degenerate.push(hi <= 0.0 || mid <= RANK_TOL * hi);
        let v = eig.eigenvectors.column(order[0]);
        let mut nrm = [v[0], v[1], v[2]];
        let l = dot(nrm, nrm).sqrt();
        if l > 0.0 {
            nrm = [nrm[0] / l, nrm[1] / l, nrm[2] / l];
        } else {
            nrm = [0.0, 0.0, 1.0];
        }
        // canonical sign first so ties with the centroid direction stay deterministic
        let big = (0..3).max_by(|&a, &b| nrm[a].abs().total_cmp(&nrm[b].abs())).unwrap_or(0);
        if nrm[big] < 0.0 {
            nrm = [-nrm[0], -nrm[1], -nrm[2]];
        }
        if dot(nrm, sub(*p, c)) < 0.0 {
            nrm = [-nrm[0], -nrm[1], -nrm[2]];
        }
        normals.push(nrm);
    }
    Ok(NormalEstimate { normals, degenerate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn plane_normals_are_vertical() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts: Vec<Point3> = (0..400).map(|_| [rng.random::<f64>(), rng.random::<f64>(), 0.0]).collect();
        let est = estimate_normals(&pts, 10).unwrap();
        assert_eq!(est.degenerate_count(), 0);
        for n in &est.normals {
            assert!(n[0].abs() < 1e-6 && n[1].abs() < 1e-6 && (n[2].abs() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn sphere_normals_are_radial_and_outward() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pts: Vec<Point3> = (0..3000)
            .map(|_| loop {
                let v = [rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0];
                let l = dot(v, v).sqrt();
                if l > 0.1 && l <= 1.0 {
                    break [v[0] / l, v[1] / l, v[2] / l];
                }
            })
            .collect();
        let est = estimate_normals(&pts, 30).unwrap();
        let mean: f64 = pts.iter().zip(&est.normals).map(|(p, n)| dot(*p, *n).abs()).sum::<f64>() / pts.len() as f64;
        assert!(mean >= 0.99, "{mean}");
        assert!(pts.iter().zip(&est.normals).all(|(p, n)| dot(*p, *n) > 0.0));
        for n in &est.normals {
            assert!((dot(*n, *n).sqrt() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn collinear_neighborhood_is_flagged() {
        let pts: Vec<Point3> = (0..8).map(|i| [i as f64, 2.0 * i as f64, 0.0]).collect();
        let est = estimate_normals(&pts, 3).unwrap();
        assert!(est.degenerate.iter().all(|&d| d));
    }

    #[test]
    fn too_few_points() {
        let pts = [[0.0; 3]; 3];
        assert!(matches!(estimate_normals(&pts, 3), Err(GeometryError::TooFewPoints { .. })));
    }
}
