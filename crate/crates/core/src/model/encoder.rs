use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use super::{ModelConfig, ModelError};
use crate::geometry::{farthest_point_sample, PointCloud, Point3};
use crate::nn::{Graph, Init, Mlp, ParamStore, Var};

/// Grouping of one set-abstraction level: neighbor indices into the previous
/// level (`samples` per centroid) and their offsets scaled by `1/radius`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelPlan {
    pub centroids: Vec<Point3>,
    pub neighbors: Vec<usize>,
    pub offsets: Vec<f64>,
}

/// Geometry-only part of the encoder, computed once per cloud. Clouds larger
/// than `n_points` are first reduced by farthest-point sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderPlan {
    /// Per-neighbor inputs of the first level: offset, absolute position, normal.
    pub first: Vec<f64>,
    pub levels: Vec<LevelPlan>,
}

const FIRST_CHANNELS: usize = 9;

fn canonical_cmp(points: &[Point3], a: usize, b: usize) -> core::cmp::Ordering {
    let (p, q) = (points[a], points[b]);
    p[0].total_cmp(&q[0]).then(p[1].total_cmp(&q[1])).then(p[2].total_cmp(&q[2])).then(a.cmp(&b))
}

/// Lexicographic order of the points, ties by index.
fn canonical_order(points: &[Point3]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&a, &b| canonical_cmp(points, a, b));
    idx
}

impl EncoderPlan {
    pub fn new(cloud: &PointCloud, cfg: &ModelConfig) -> Result<Self, ModelError> {
        let need = cfg.levels[0].points;
        if cloud.len() < need {
            return Err(ModelError::InsufficientPoints { have: cloud.len(), need });
        }
        let mut order = canonical_order(&cloud.points);
        if order.len() > cfg.n_points {
            let sorted: Vec<Point3> = order.iter().map(|&i| cloud.points[i]).collect();
            let keep = farthest_point_sample(&sorted, cfg.n_points, 0);
            let mut kept: Vec<usize> = keep.iter().map(|&k| order[k]).collect();
            kept.sort_by(|&a, &b| canonical_cmp(&cloud.points, a, b));
            order = kept;
        }
        let pts: Vec<Point3> = order.iter().map(|&i| cloud.points[i]).collect();
        let nrm: Vec<Point3> = order.iter().map(|&i| cloud.normals[i]).collect();
        let mut prev = pts.clone();
        let mut levels = Vec::with_capacity(cfg.levels.len());
        for lvl in &cfg.levels {
            let centers = farthest_point_sample(&prev, lvl.points, 0);
            let r2 = lvl.radius * lvl.radius;
            let mut neighbors = Vec::with_capacity(lvl.points * lvl.samples);
            let mut offsets = Vec::with_capacity(lvl.points * lvl.samples * 3);
            let centroids: Vec<Point3> = centers.iter().map(|&c| prev[c]).collect();
            for (ci, c) in centroids.iter().enumerate() {
                let start = neighbors.len();
                for (j, p) in prev.iter().enumerate() {
                    if neighbors.len() - start == lvl.samples {
                        break;
                    }
                    let d = [p[0] - c[0], p[1] - c[1], p[2] - c[2]];
                    if d[0] * d[0] + d[1] * d[1] + d[2] * d[2] <= r2 {
                        neighbors.push(j);
                    }
                }
                if neighbors.len() == start {
                    neighbors.push(centers[ci]);
                }
                let first = neighbors[start];
                while neighbors.len() - start < lvl.samples {
                    neighbors.push(first);
                }
                for &j in &neighbors[start..] {
                    let p = prev[j];
                    offsets.extend([(p[0] - c[0]) / lvl.radius, (p[1] - c[1]) / lvl.radius, (p[2] - c[2]) / lvl.radius]);
                }
            }
            levels.push(LevelPlan { centroids: centroids.clone(), neighbors, offsets });
            prev = centroids;
        }
        let l0 = &levels[0];
        let mut first = Vec::with_capacity(l0.neighbors.len() * FIRST_CHANNELS);
        for (k, &j) in l0.neighbors.iter().enumerate() {
            first.extend_from_slice(&l0.offsets[k * 3..k * 3 + 3]);
            first.extend_from_slice(&pts[j]);
            first.extend_from_slice(&nrm[j]);
        }
        Ok(Self { first, levels })
    }
}

/// Shared per-level MLPs of the set-abstraction encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct PointEncoder {
    pub mlps: Vec<Mlp>,
}

impl PointEncoder {
    pub fn new(store: &mut ParamStore, cfg: &ModelConfig, rng: &mut impl Rng) -> Self {
        let mut in_dim = FIRST_CHANNELS;
        let mut mlps = Vec::with_capacity(cfg.levels.len());
        for (i, lvl) in cfg.levels.iter().enumerate() {
            let mut dims = alloc::vec![in_dim];
            dims.extend_from_slice(&lvl.mlp);
            mlps.push(Mlp::new(store, &format!("enc.{i}"), &dims, Init::Xavier, rng));
            in_dim = 3 + *lvl.mlp.last().unwrap();
        }
        Self { mlps }
    }

    /// Per-centroid features of the last level, `[points_last × d_p]`.
    pub fn forward(&self, g: &mut Graph, plan: &EncoderPlan, cfg: &ModelConfig) -> Var {
        let mut feats: Option<Var> = None;
        for (i, (lvl, lp)) in cfg.levels.iter().zip(&plan.levels).enumerate() {
            let rows = lp.neighbors.len();
            let x = match feats {
                None => g.input(rows, FIRST_CHANNELS, plan.first.clone()),
                Some(f) => {
                    let rel = g.input(rows, 3, lp.offsets.clone());
                    let gathered = g.gather_rows(f, &lp.neighbors);
                    g.concat_cols(&[rel, gathered])
                }
            };
            let h = self.mlps[i].forward_relu(g, x);
            feats = Some(g.group_max(h, lvl.samples));
        }
        feats.expect("encoder has at least one level")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::sample_surface;
    use crate::nn::Graph;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (ModelConfig, ParamStore, PointEncoder, PointCloud) {
        let cfg = ModelConfig::toy();
        let mut store = ParamStore::new();
        let enc = PointEncoder::new(&mut store, &cfg, &mut ChaCha8Rng::seed_from_u64(1));
        let seq = crate::cad::generate_random_sequence(2, &Default::default()).unwrap();
        let cloud = sample_surface(&seq, cfg.n_points, 4).unwrap();
        (cfg, store, enc, cloud)
    }

    fn run(cfg: &ModelConfig, store: &ParamStore, enc: &PointEncoder, cloud: &PointCloud) -> (usize, usize, Vec<f64>) {
        let plan = EncoderPlan::new(cloud, cfg).unwrap();
        let mut g = Graph::new(store);
        let f = enc.forward(&mut g, &plan, cfg);
        let (r, c) = g.shape(f);
        (r, c, g.value(f).to_vec())
    }

    #[test]
    fn toy_output_shape() {
        let (cfg, store, enc, cloud) = setup();
        let (r, c, v) = run(&cfg, &store, &enc, &cloud);
        assert_eq!((r, c), (16, 16));
        assert!(v.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn permutation_invariant() {
        let (cfg, store, enc, cloud) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut perm: Vec<usize> = (0..cloud.len()).collect();
        for i in (1..perm.len()).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let shuffled = cloud.select(&perm);
        let (_, _, a) = run(&cfg, &store, &enc, &cloud);
        let (_, _, b) = run(&cfg, &store, &enc, &shuffled);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-9);
        }
    }

    #[test]
    fn degenerate_cloud_is_finite() {
        let (cfg, store, enc, _) = setup();
        let cloud = PointCloud::new(alloc::vec![[0.1, 0.2, 0.3]; 512], alloc::vec![[0.0, 0.0, 1.0]; 512]).unwrap();
        let (r, _, v) = run(&cfg, &store, &enc, &cloud);
        assert_eq!(r, 16);
        assert!(v.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn large_clouds_are_reduced_order_invariantly() {
        let (cfg, store, enc, _) = setup();
        let seq = crate::cad::generate_random_sequence(6, &Default::default()).unwrap();
        let big = sample_surface(&seq, 2048, 1).unwrap();
        let rev: Vec<usize> = (0..big.len()).rev().collect();
        let (r, _, a) = run(&cfg, &store, &enc, &big);
        let (_, _, b) = run(&cfg, &store, &enc, &big.select(&rev));
        assert_eq!(r, 16);
        assert_eq!(a, b);
    }

    #[test]
    fn too_few_points() {
        let (cfg, _, _, cloud) = setup();
        let small = cloud.select(&(0..100).collect::<Vec<_>>());
        assert!(matches!(EncoderPlan::new(&small, &cfg), Err(ModelError::InsufficientPoints { .. })));
    }
}
