//! Point-cloud corruption: Perlin displacement noise and hole punching.

mod holes;
mod perlin;

pub use holes::{punch_holes, HoleSpec, PunchedCloud, HOLE_GRAPH_K};
pub use perlin::{perlin3, NoiseSpec, Perlin};

use thiserror::Error;

use crate::geometry::{estimate_normals, GeometryError, PointCloud};

/// Neighborhood size for normal re-estimation after displacement.
pub const NOISE_NORMAL_K: usize = 30;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PerturbError {
    #[error("cloud has {have} points, at least {need} required")]
    InsufficientPoints { have: usize, need: usize },
    #[error("invalid perturbation spec: {0}")]
    InvalidSpec(&'static str),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Displaces each point along its normal by `amplitude · perlin3(point)` and
/// re-estimates normals. Amplitude 0 returns the input unchanged.
pub fn apply_noise(pc: &PointCloud, spec: &NoiseSpec) -> Result<PointCloud, PerturbError> {
    spec.validate()?;
    if pc.is_empty() {
        return Err(GeometryError::EmptyCloud.into());
    }
    if spec.amplitude == 0.0 {
        return Ok(pc.clone());
    }
    let noise = Perlin::new(spec);
    let points: alloc::vec::Vec<_> = pc
        .points
        .iter()
        .zip(&pc.normals)
        .map(|(p, n)| {
            let d = spec.amplitude * noise.sample(*p);
            [p[0] + d * n[0], p[1] + d * n[1], p[2] + d * n[2]]
        })
        .collect();
    let k = NOISE_NORMAL_K.min(points.len().saturating_sub(1));
    let normals = if k >= 3 { estimate_normals(&points, k)?.normals } else { pc.normals.clone() };
    Ok(PointCloud { points, normals })
}
