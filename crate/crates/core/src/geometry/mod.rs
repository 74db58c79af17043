//! Kernel-free geometry: tessellation, sampling-based CSG, chamfer distance,
//! normal estimation and the chamfer-space retrieval baseline.

mod chamfer;
mod fps;
mod frame;
mod kdtree;
mod normals;
mod retrieval;
mod sample;
mod tessellate;

pub use chamfer::{chamfer_distance, chamfer_distance_raw, CD_REPORT_SCALE};
pub use fps::farthest_point_sample;
pub use frame::Frame;
pub use kdtree::KdTree;
pub use normals::{estimate_normals, NormalEstimate};
pub use retrieval::{find_duplicates, model_complexity, retrieve_nearest, DUPLICATE_THRESHOLD_RAW};
pub use sample::{sample_surface, SamplingConfig, DELTA_CSG};
pub use tessellate::{point_in_loop, point_in_region, tessellate_loop, Polygon, MAX_ANGULAR_STEP};

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use thiserror::Error;

pub type Point3 = [f64; 3];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("loop is not closed")]
    OpenLoop,
    #[error("no boundary points survived CSG filtering")]
    EmptySolid,
    #[error("sequence is not valid and cannot be sampled")]
    InvalidSequence,
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("need more than {k} points for a {k}-neighborhood, got {n}")]
    TooFewPoints { n: usize, k: usize },
    #[error("point cloud points and normals differ in length")]
    LengthMismatch,
}

/// Oriented point cloud. Normals are unit length.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    pub points: Vec<Point3>,
    pub normals: Vec<Point3>,
}

impl PointCloud {
    pub fn new(points: Vec<Point3>, normals: Vec<Point3>) -> Result<Self, GeometryError> {
        if points.len() != normals.len() {
            return Err(GeometryError::LengthMismatch);
        }
        Ok(Self { points, normals })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Keeps only the listed indices, in the given order.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            points: indices.iter().map(|&i| self.points[i]).collect(),
            normals: indices.iter().map(|&i| self.normals[i]).collect(),
        }
    }

    pub fn centroid(&self) -> Point3 {
        let mut c = [0.0; 3];
        for p in &self.points {
            for k in 0..3 {
                c[k] += p[k];
            }
        }
        let n = self.points.len().max(1) as f64;
        [c[0] / n, c[1] / n, c[2] / n]
    }

    pub fn bounding_box(&self) -> Option<(Point3, Point3)> {
        let first = *self.points.first()?;
        let mut lo = first;
        let mut hi = first;
        for p in &self.points {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        Some((lo, hi))
    }

    /// Uniform scaling about the origin.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            points: self.points.iter().map(|p| [p[0] * s, p[1] * s, p[2] * s]).collect(),
            normals: self.normals.clone(),
        }
    }
}

pub(crate) fn sub(a: Point3, b: Point3) -> Point3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn dot(a: Point3, b: Point3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn norm(a: Point3) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn sq_dist(a: &Point3, b: &Point3) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}
