use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::PerturbError;
use crate::geometry::{sq_dist, KdTree, PointCloud};

/// Neighbor count of the graph whose shortest paths approximate geodesics.
pub const HOLE_GRAPH_K: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct HoleSpec {
    /// Hole count is drawn uniformly from `1..=max_holes`.
    pub max_holes: usize,
    pub ratio_mean: f64,
    pub ratio_std: f64,
    pub min_remaining: usize,
    pub seed: u64,
}

impl Default for HoleSpec {
    fn default() -> Self {
        Self { max_holes: 10, ratio_mean: 0.03, ratio_std: 0.015, min_remaining: 4096, seed: 0 }
    }
}

impl HoleSpec {
    pub const MAX_RATIO: f64 = 0.25;

    fn validate(&self) -> Result<(), PerturbError> {
        if self.max_holes == 0 {
            return Err(PerturbError::InvalidSpec("max_holes must be at least 1"));
        }
        if self.min_remaining == 0 {
            return Err(PerturbError::InvalidSpec("min_remaining must be at least 1"));
        }
        if !(self.ratio_std >= 0.0) || !self.ratio_mean.is_finite() {
            return Err(PerturbError::InvalidSpec("ratio distribution must be finite with std >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PunchedCloud {
    pub cloud: PointCloud,
    /// Removed indices into the input cloud, ascending.
    pub removed: Vec<usize>,
    /// Removed indices per hole, in removal order.
    pub holes: Vec<Vec<usize>>,
}

#[derive(PartialEq)]
struct Entry {
    dist: f64,
    idx: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (dist, idx)
        other.dist.total_cmp(&self.dist).then(other.idx.cmp(&self.idx))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Symmetric k-NN adjacency with Euclidean edge lengths.
fn knn_graph(points: &[crate::geometry::Point3], k: usize) -> Vec<Vec<(usize, f64)>> {
    let tree = KdTree::new(points);
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); points.len()];
    for (i, p) in points.iter().enumerate() {
        for (j, _) in tree.knn(p, k + 1) {
            if j != i {
                let w = sq_dist(p, &points[j]).sqrt();
                adj[i].push((j, w));
                adj[j].push((i, w));
            }
        }
    }
    for a in &mut adj {
        a.sort_by(|x, y| x.0.cmp(&y.0));
        a.dedup_by_key(|e| e.0);
    }
    adj
}

/// The `count` nearest non-removed nodes to `seed` by graph distance.
fn geodesic_ball(adj: &[Vec<(usize, f64)>], removed: &[bool], seed: usize, count: usize) -> Vec<usize> {
    let mut dist = vec![f64::INFINITY; adj.len()];
    let mut done = vec![false; adj.len()];
    let mut heap = BinaryHeap::new();
    let mut out = Vec::with_capacity(count);
    dist[seed] = 0.0;
    heap.push(Entry { dist: 0.0, idx: seed });
    while let Some(Entry { dist: d, idx }) = heap.pop() {
        if out.len() >= count {
            break;
        }
        if done[idx] {
            continue;
        }
        done[idx] = true;
        out.push(idx);
        for &(j, w) in &adj[idx] {
            if removed[j] || done[j] {
                continue;
            }
            let nd = d + w;
            if nd < dist[j] {
                dist[j] = nd;
                heap.push(Entry { dist: nd, idx: j });
            }
        }
    }
    out
}

/// Removes geodesic balls around random seed points. Each hole removes
/// `round(ratio · n)` points, capped so at least `min_remaining` survive.
pub fn punch_holes(pc: &PointCloud, spec: &HoleSpec) -> Result<PunchedCloud, PerturbError> {
    spec.validate()?;
    let n = pc.len();
    if n < spec.min_remaining {
        return Err(PerturbError::InsufficientPoints { have: n, need: spec.min_remaining });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n_holes = rng.random_range(1..=spec.max_holes);
    let ratio_dist = Normal::new(spec.ratio_mean, spec.ratio_std)
        .map_err(|_| PerturbError::InvalidSpec("ratio distribution must be finite with std >= 0"))?;
    let ratios: Vec<f64> = (0..n_holes).map(|_| ratio_dist.sample(&mut rng).clamp(0.0, HoleSpec::MAX_RATIO)).collect();

    let mut removed = vec![false; n];
    let mut remaining = n;
    let mut holes = Vec::with_capacity(n_holes);
    let adj = if ratios.iter().any(|&r| libm::round(r * n as f64) >= 1.0) { knn_graph(&pc.points, HOLE_GRAPH_K) } else { Vec::new() };
    for ratio in ratios {
        let want = (libm::round(ratio * n as f64) as usize).min(remaining - spec.min_remaining);
        // the seed draw happens for every hole so later holes do not depend on earlier sizes
        let pick = rng.random_range(0..remaining.max(1));
        if want == 0 {
            holes.push(Vec::new());
            continue;
        }
        let seed = (0..n).filter(|&i| !removed[i]).nth(pick).unwrap_or(0);
        let ball = geodesic_ball(&adj, &removed, seed, want);
        for &i in &ball {
            removed[i] = true;
        }
        remaining -= ball.len();
        holes.push(ball);
    }
    let keep: Vec<usize> = (0..n).filter(|&i| !removed[i]).collect();
    let removed_idx: Vec<usize> = (0..n).filter(|&i| removed[i]).collect();
    Ok(PunchedCloud { cloud: pc.select(&keep), removed: removed_idx, holes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::sample_surface;

    fn cloud(n: usize) -> PointCloud {
        let seq = crate::cad::generate_random_sequence(8, &Default::default()).unwrap();
        sample_surface(&seq, n, 0).unwrap()
    }

    fn connected(adj: &[Vec<(usize, f64)>], set: &[usize]) -> bool {
        let inside: alloc::collections::BTreeSet<usize> = set.iter().copied().collect();
        let mut seen = alloc::collections::BTreeSet::new();
        let mut stack = vec![set[0]];
        while let Some(i) = stack.pop() {
            if !seen.insert(i) {
                continue;
            }
            stack.extend(adj[i].iter().map(|e| e.0).filter(|j| inside.contains(j) && !seen.contains(j)));
        }
        seen.len() == set.len()
    }

    #[test]
    fn zero_ratio_is_identity() {
        let pc = cloud(512);
        let spec = HoleSpec { ratio_mean: 0.0, ratio_std: 0.0, min_remaining: 1, ..Default::default() };
        let r = punch_holes(&pc, &spec).unwrap();
        assert_eq!(r.cloud, pc);
        assert!(r.removed.is_empty());
    }

    #[test]
    fn defaults_keep_minimum() {
        let pc = cloud(8192);
        for seed in 0..4 {
            let r = punch_holes(&pc, &HoleSpec { seed, ..Default::default() }).unwrap();
            assert!(r.cloud.len() >= 4096);
            assert_eq!(r.cloud.len() + r.removed.len(), 8192);
            assert_eq!(r, punch_holes(&pc, &HoleSpec { seed, ..Default::default() }).unwrap());
        }
    }

    #[test]
    fn single_hole_count_and_connectivity() {
        let pc = cloud(8192);
        let spec = HoleSpec { max_holes: 1, ratio_std: 0.0, ..Default::default() };
        let r = punch_holes(&pc, &spec).unwrap();
        assert_eq!(r.removed.len(), 246);
        let adj = knn_graph(&pc.points, HOLE_GRAPH_K);
        assert!(connected(&adj, &r.holes[0]));
        // output points are a subset of the input
        let mut kept = 0;
        for (i, p) in pc.points.iter().enumerate() {
            if r.removed.binary_search(&i).is_err() {
                assert_eq!(r.cloud.points[kept], *p);
                kept += 1;
            }
        }
    }

    #[test]
    fn every_hole_is_connected() {
        let pc = cloud(2048);
        let spec = HoleSpec { min_remaining: 1024, seed: 3, ..Default::default() };
        let r = punch_holes(&pc, &spec).unwrap();
        let adj = knn_graph(&pc.points, HOLE_GRAPH_K);
        for h in r.holes.iter().filter(|h| !h.is_empty()) {
            assert!(connected(&adj, h));
        }
    }

    #[test]
    fn insufficient_points() {
        let pc = cloud(256);
        assert_eq!(
            punch_holes(&pc, &HoleSpec::default()),
            Err(PerturbError::InsufficientPoints { have: 256, need: 4096 })
        );
    }
}
