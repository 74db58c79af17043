use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::frame::EXTENT_RANGE;
use super::tessellate::region_parity;
use super::{farthest_point_sample, norm, tessellate_loop, Frame, GeometryError, PointCloud, Point3, Polygon, MAX_ANGULAR_STEP};
use crate::cad::{validate, BooleanOp, CadSequence, ExtentType, Point2, Step};

/// Boundary / interior tolerance of the membership tests (model units).
pub const DELTA_CSG: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingConfig {
    /// Candidate points drawn per requested output point.
    pub oversample: usize,
    pub delta_csg: f64,
    /// Extra candidate rounds attempted when CSG filtering leaves too few points.
    pub max_rounds: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self { oversample: 8, delta_csg: DELTA_CSG, max_rounds: 8 }
    }
}

/// A sketch region swept along its plane normal over `[z0, z1]`.
struct Solid {
    frame: Frame,
    polygons: Vec<Polygon>,
    /// Per polygon: +1 when the `(dy, -dx)` edge normal points out of the region.
    orientation: Vec<f64>,
    z0: f64,
    z1: f64,
    op: BooleanOp,
    cap_area: f64,
    bbox: (Point2, Point2),
}

impl Solid {
    fn from_step(step: &Step) -> Result<Option<Self>, GeometryError> {
        let Some(e) = step.extrusion.as_ref() else { return Ok(None) };
        if step.loops.is_empty() {
            return Ok(None);
        }
        let polygons = step
            .loops
            .iter()
            .map(|l| tessellate_loop(l, MAX_ANGULAR_STEP))
            .collect::<Result<Vec<_>, _>>()?;
        let frame = Frame::from_extrusion(e);
        let d1 = EXTENT_RANGE * e.distances[0];
        let d2 = EXTENT_RANGE * e.distances[1];
        let (z0, z1) = match e.extent {
            ExtentType::OneSided => (0.0, d1),
            ExtentType::Symmetric => (-0.5 * d1, 0.5 * d1),
            ExtentType::TwoSided => (-d2, d1),
        };
        let mut orientation = Vec::with_capacity(polygons.len());
        let mut cap_area = 0.0;
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for (k, p) in polygons.iter().enumerate() {
            let probe = p.vertices[0];
            let depth = polygons
                .iter()
                .enumerate()
                .filter(|&(j, other)| j != k && super::point_in_loop(probe, other))
                .count();
            let parity = if depth % 2 == 0 { 1.0 } else { -1.0 };
            let a = p.signed_area();
            orientation.push(a.signum() * parity);
            cap_area += parity * a.abs();
            for v in &p.vertices {
                for i in 0..2 {
                    lo[i] = lo[i].min(v[i]);
                    hi[i] = hi[i].max(v[i]);
                }
            }
        }
        let s = frame.scale;
        Ok(Some(Self {
            frame,
            polygons,
            orientation,
            z0,
            z1,
            op: e.boolean_op,
            cap_area: cap_area.abs() * s * s,
            bbox: (lo, hi),
        }))
    }

    fn height(&self) -> f64 {
        self.z1 - self.z0
    }

    fn contains(&self, x: Point3) -> bool {
        let [u, v, z] = self.frame.to_local(x);
        z > self.z0 && z < self.z1 && region_parity([u, v], &self.polygons)
    }
}

#[derive(Debug, Clone, Copy)]
enum Element {
    Cap { solid: usize, top: bool },
    Wall { solid: usize, polygon: usize, edge: usize },
}

fn sample_cap(rng: &mut impl Rng, s: &Solid, top: bool) -> Option<(Point3, Point3)> {
    let (lo, hi) = s.bbox;
    for _ in 0..1000 {
        let u = lo[0] + (hi[0] - lo[0]) * rng.random::<f64>();
        let v = lo[1] + (hi[1] - lo[1]) * rng.random::<f64>();
        if region_parity([u, v], &s.polygons) {
            let z = if top { s.z1 } else { s.z0 };
            let n = s.frame.direction([0.0, 0.0, if top { 1.0 } else { -1.0 }]);
            return Some((s.frame.to_world(u, v, z), n));
        }
    }
    None
}

fn sample_wall(rng: &mut impl Rng, s: &Solid, polygon: usize, edge: usize) -> (Point3, Point3) {
    let poly = &s.polygons[polygon];
    let (a, b) = poly.edge(edge);
    let t: f64 = rng.random();
    let z = s.z0 + s.height() * rng.random::<f64>();
    let p = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len = dx.hypot(dy).max(f64::MIN_POSITIVE);
    let sign = s.orientation[polygon];
    let mut n2 = [sign * dy / len, -sign * dx / len];
    if let Some(c) = poly.arc_centers[edge] {
        let r = [p[0] - c[0], p[1] - c[1]];
        let rl = r[0].hypot(r[1]);
        if rl > 0.0 {
            let flip = if r[0] * n2[0] + r[1] * n2[1] < 0.0 { -1.0 } else { 1.0 };
            n2 = [flip * r[0] / rl, flip * r[1] / rl];
        }
    }
    (s.frame.to_world(p[0], p[1], z), s.frame.direction([n2[0], n2[1], 0.0]))
}

/// Membership of `x` in the folded solid; `source` overrides the test for one solid.
fn fold(solids: &[Solid], x: Point3, source: Option<(usize, bool)>) -> bool {
    let mut acc = false;
    for (i, s) in solids.iter().enumerate() {
        let m = match source {
            Some((j, m)) if j == i => m,
            _ => s.contains(x),
        };
        acc = match s.op {
            BooleanOp::New | BooleanOp::Join => acc || m,
            BooleanOp::Cut => acc && !m,
            BooleanOp::Intersect => acc && m,
        };
    }
    acc
}

/// A candidate on solid `source` with outward normal `n` of the result is kept
/// iff material lies `delta` behind it and none `delta` in front of it.
fn on_boundary(solids: &[Solid], source: usize, p: Point3, n: Point3, delta: f64) -> bool {
    let cut = solids[source].op == BooleanOp::Cut;
    let behind = [p[0] - delta * n[0], p[1] - delta * n[1], p[2] - delta * n[2]];
    let ahead = [p[0] + delta * n[0], p[1] + delta * n[1], p[2] + delta * n[2]];
    fold(solids, behind, Some((source, !cut))) && !fold(solids, ahead, Some((source, cut)))
}

/// Samples an oriented point cloud from the surface of the solid a valid
/// sequence describes, normalized to a unit bounding-box diagonal about the
/// origin.
pub fn sample_surface(seq: &CadSequence, n: usize, rng_seed: u64) -> Result<PointCloud, GeometryError> {
    sample_surface_with(seq, n, rng_seed, &SamplingConfig::default())
}

pub fn sample_surface_with(
    seq: &CadSequence,
    n: usize,
    rng_seed: u64,
    cfg: &SamplingConfig,
) -> Result<PointCloud, GeometryError> {
    if !validate(seq).valid() {
        return Err(GeometryError::InvalidSequence);
    }
    let mut solids = Vec::new();
    for step in &seq.steps {
        if let Some(s) = Solid::from_step(step)? {
            solids.push(s);
        }
    }
    let mut elements = Vec::new();
    let mut weights = Vec::new();
    for (si, s) in solids.iter().enumerate() {
        for top in [false, true] {
            elements.push(Element::Cap { solid: si, top });
            weights.push(s.cap_area);
        }
        for (pi, p) in s.polygons.iter().enumerate() {
            for e in 0..p.len() {
                let (a, b) = p.edge(e);
                elements.push(Element::Wall { solid: si, polygon: pi, edge: e });
                weights.push((b[0] - a[0]).hypot(b[1] - a[1]) * s.frame.scale * s.height());
            }
        }
    }
    let chooser = WeightedIndex::new(&weights).map_err(|_| GeometryError::EmptySolid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let target = n.max(1) * cfg.oversample.max(1);
    let mut points = Vec::with_capacity(target);
    let mut normals = Vec::with_capacity(target);
    for _ in 0..cfg.max_rounds.max(1) {
        for _ in 0..target {
            let (source, sample) = match elements[chooser.sample(&mut rng)] {
                Element::Cap { solid, top } => (solid, sample_cap(&mut rng, &solids[solid], top)),
                Element::Wall { solid, polygon, edge } => {
                    (solid, Some(sample_wall(&mut rng, &solids[solid], polygon, edge)))
                }
            };
            let Some((p, nrm)) = sample else { continue };
            let flip = if solids[source].op == BooleanOp::Cut { -1.0 } else { 1.0 };
            let l = norm(nrm);
            let n_out = [flip * nrm[0] / l, flip * nrm[1] / l, flip * nrm[2] / l];
            if !on_boundary(&solids, source, p, n_out, cfg.delta_csg) {
                continue;
            }
            points.push(p);
            normals.push(n_out);
        }
        if points.len() >= target {
            break;
        }
    }
    if points.is_empty() {
        return Err(GeometryError::EmptySolid);
    }
    let start = rng.random_range(0..points.len());
    let mut keep = farthest_point_sample(&points, n, start);
    // too few survivors: cycle through them to reach exactly n
    let have = keep.len();
    while keep.len() < n {
        keep.push(keep[keep.len() % have]);
    }
    let cloud = PointCloud { points, normals }.select(&keep);
    Ok(normalize_unit_diagonal(cloud))
}

/// Centers the bounding box at the origin and scales its diagonal to 1.
pub(crate) fn normalize_unit_diagonal(mut cloud: PointCloud) -> PointCloud {
    let Some((lo, hi)) = cloud.bounding_box() else { return cloud };
    let c = [(lo[0] + hi[0]) * 0.5, (lo[1] + hi[1]) * 0.5, (lo[2] + hi[2]) * 0.5];
    let diag = norm([hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]]);
    let s = if diag > 0.0 { 1.0 / diag } else { 1.0 };
    for p in &mut cloud.points {
        *p = [(p[0] - c[0]) * s, (p[1] - c[1]) * s, (p[2] - c[2]) * s];
    }
    cloud
}
