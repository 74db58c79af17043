use core::f64::consts::PI;

use nalgebra::{Matrix3, Rotation3, Vector3};

use super::Point3;
use crate::cad::Extrusion;

/// Placement of a sketch plane in model space.
///
/// A sketch point `(u, v)` and an offset `z` along the plane normal map to
/// `translation + rotation · (scale·u, scale·v, z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
    pub scale: f64,
}

/// Model-space length of a unit normalized extent.
pub const EXTENT_RANGE: f64 = 2.0;

fn angle(v: f64) -> f64 {
    (2.0 * v - 1.0) * PI
}

impl Frame {
    /// Z-Y-Z Euler angles, each normalized value mapped to `[-π, π]`.
    pub fn euler_zyz(a: f64, b: f64, c: f64) -> Matrix3<f64> {
        let rz1 = Rotation3::from_axis_angle(&Vector3::z_axis(), a);
        let ry = Rotation3::from_axis_angle(&Vector3::y_axis(), b);
        let rz2 = Rotation3::from_axis_angle(&Vector3::z_axis(), c);
        (rz1 * ry * rz2).into_inner()
    }

    pub fn from_extrusion(e: &Extrusion) -> Self {
        let [a, b, c] = e.orientation;
        Self {
            rotation: Self::euler_zyz(angle(a), angle(b), angle(c)),
            translation: Vector3::new(
                2.0 * e.origin[0] - 1.0,
                2.0 * e.origin[1] - 1.0,
                2.0 * e.origin[2] - 1.0,
            ),
            // never zero so the inverse mapping stays defined
            scale: (EXTENT_RANGE * e.scale).max(1e-9),
        }
    }

    pub fn normal(&self) -> Point3 {
        let n = self.rotation.column(2);
        [n[0], n[1], n[2]]
    }

    pub fn to_world(&self, u: f64, v: f64, z: f64) -> Point3 {
        let p = self.translation + self.rotation * Vector3::new(self.scale * u, self.scale * v, z);
        [p[0], p[1], p[2]]
    }

    /// Rotates a sketch-plane direction (`z` along the normal) into model space.
    pub fn direction(&self, d: [f64; 3]) -> Point3 {
        let p = self.rotation * Vector3::new(d[0], d[1], d[2]);
        [p[0], p[1], p[2]]
    }

    /// Inverse of [`Frame::to_world`]: `(u, v, z)`.
    pub fn to_local(&self, p: Point3) -> [f64; 3] {
        let l = self.rotation.transpose() * (Vector3::new(p[0], p[1], p[2]) - self.translation);
        [l[0] / self.scale, l[1] / self.scale, l[2]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cad::{BooleanOp, ExtentType};

    #[test]
    fn rotation_is_orthonormal() {
        for &(a, b, c) in &[(0.1, 0.7, 0.3), (0.25, 0.5, 0.75), (0.9, 0.05, 0.4)] {
            let r = Frame::euler_zyz(angle(a), angle(b), angle(c));
            let err = (r.transpose() * r - Matrix3::identity()).abs().max();
            assert!(err < 1e-9);
        }
    }

    #[test]
    fn centered_angles_give_identity() {
        let r = Frame::euler_zyz(angle(0.5), angle(0.5), angle(0.5));
        assert!((r - Matrix3::identity()).abs().max() < 1e-15);
    }

    #[test]
    fn local_world_round_trip() {
        let e = Extrusion {
            orientation: [0.2, 0.6, 0.9],
            origin: [0.4, 0.5, 0.6],
            scale: 0.3,
            distances: [0.2, 0.0],
            boolean_op: BooleanOp::New,
            extent: ExtentType::OneSided,
        };
        let f = Frame::from_extrusion(&e);
        let w = f.to_world(0.3, 0.8, -0.2);
        let l = f.to_local(w);
        assert!((l[0] - 0.3).abs() < 1e-12 && (l[1] - 0.8).abs() < 1e-12 && (l[2] + 0.2).abs() < 1e-12);
    }
}
