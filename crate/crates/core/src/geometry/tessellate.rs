use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use super::GeometryError;
use crate::cad::{Loop, Point2, PrimitiveType, EPS_CLOSE};

/// Largest angular step used when subdividing arcs and circles.
pub const MAX_ANGULAR_STEP: f64 = 2.0 * PI / 64.0;

/// Closed polygon; edge `i` runs from `vertices[i]` to `vertices[i + 1]`
/// (wrapping). Edges cut from an arc remember the arc center so surface
/// normals can be taken from the true curve.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polygon {
    pub vertices: Vec<Point2>,
    pub arc_centers: Vec<Option<Point2>>,
}

impl Polygon {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn edge(&self, i: usize) -> (Point2, Point2) {
        (self.vertices[i], self.vertices[(i + 1) % self.vertices.len()])
    }

    /// Shoelace area, positive for counter-clockwise vertex order.
    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|i| {
                let (a, b) = self.edge(i);
                a[0] * b[1] - b[0] * a[1]
            })
            .sum::<f64>()
            * 0.5
    }

    pub fn perimeter(&self) -> f64 {
        (0..self.len()).map(|i| {
            let (a, b) = self.edge(i);
            (b[0] - a[0]).hypot(b[1] - a[1])
        }).sum()
    }

    pub fn distance_to_boundary(&self, q: Point2) -> f64 {
        (0..self.len())
            .map(|i| {
                let (a, b) = self.edge(i);
                segment_distance(q, a, b)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Even-odd crossing parity for a ray towards +x.
    fn crosses(&self, q: Point2) -> bool {
        let mut inside = false;
        let n = self.len();
        for i in 0..n {
            let (a, b) = self.edge(i);
            if (a[1] > q[1]) != (b[1] > q[1]) {
                let x = a[0] + (q[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
                if q[0] < x {
                    inside = !inside;
                }
            }
        }
        inside
    }
}

fn segment_distance(q: Point2, a: Point2, b: Point2) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let aq = [q[0] - a[0], q[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > 0.0 { ((aq[0] * ab[0] + aq[1] * ab[1]) / len2).clamp(0.0, 1.0) } else { 0.0 };
    let d = [aq[0] - t * ab[0], aq[1] - t * ab[1]];
    d[0].hypot(d[1])
}

fn wrap(a: f64) -> f64 {
    let t = a % (2.0 * PI);
    if t < 0.0 { t + 2.0 * PI } else { t }
}

fn push_arc(out: &mut Polygon, center: Point2, start: Point2, start_angle: f64, sweep: f64, step: f64) {
    let r = (start[0] - center[0]).hypot(start[1] - center[1]);
    let segs = ((sweep.abs() / step) - 1e-9).ceil().max(1.0) as usize;
    out.vertices.push(start);
    out.arc_centers.push(Some(center));
    for i in 1..segs {
        let a = start_angle + sweep * i as f64 / segs as f64;
        out.vertices.push([center[0] + r * a.cos(), center[1] + r * a.sin()]);
        out.arc_centers.push(Some(center));
    }
}

/// Subdivides a closed loop into a polygon; lines are copied verbatim, arcs
/// and circles are split at angular steps of at most `max_step`.
pub fn tessellate_loop(l: &Loop, max_step: f64) -> Result<Polygon, GeometryError> {
    if !l.is_closed() {
        return Err(GeometryError::OpenLoop);
    }
    let mut out = Polygon::default();
    for p in &l.primitives {
        let kind = p.infer_type().unwrap_or(PrimitiveType::Line);
        let center = p.center();
        match (kind, center, p.mid) {
            (PrimitiveType::Circle, Some(c), _) => {
                let a0 = (p.start[1] - c[1]).atan2(p.start[0] - c[0]);
                push_arc(&mut out, c, p.start, a0, 2.0 * PI, max_step);
            }
            (PrimitiveType::Arc, Some(c), Some(m)) => {
                let a_s = (p.start[1] - c[1]).atan2(p.start[0] - c[0]);
                let a_m = (m[1] - c[1]).atan2(m[0] - c[0]);
                let a_e = (p.end[1] - c[1]).atan2(p.end[0] - c[0]);
                let ccw = wrap(a_e - a_s);
                let sweep = if wrap(a_m - a_s) < ccw { ccw } else { ccw - 2.0 * PI };
                push_arc(&mut out, c, p.start, a_s, sweep, max_step);
            }
            _ => {
                out.vertices.push(p.start);
                out.arc_centers.push(None);
            }
        }
    }
    Ok(out)
}

/// Even-odd membership; points within `EPS_CLOSE` of the boundary are inside.
pub fn point_in_loop(q: Point2, polygon: &Polygon) -> bool {
    polygon.distance_to_boundary(q) <= EPS_CLOSE || polygon.crosses(q)
}

/// Even-odd membership in the region bounded by several loops (holes flip
/// parity). Boundary points count as inside.
pub fn point_in_region(q: Point2, polygons: &[Polygon]) -> bool {
    if polygons.iter().any(|p| p.distance_to_boundary(q) <= EPS_CLOSE) {
        return true;
    }
    polygons.iter().filter(|p| p.crosses(q)).count() % 2 == 1
}

/// Strict even-odd parity, no boundary tolerance.
pub(crate) fn region_parity(q: Point2, polygons: &[Polygon]) -> bool {
    polygons.iter().filter(|p| p.crosses(q)).count() % 2 == 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cad::PrimitiveDelta;
    use alloc::vec;

    fn unit_square() -> Loop {
        Loop::polygon(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    }

    #[test]
    fn square_is_copied_verbatim() {
        let p = tessellate_loop(&unit_square(), MAX_ANGULAR_STEP).unwrap();
        assert_eq!(p.vertices, vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
        assert!(p.arc_centers.iter().all(Option::is_none));
        assert!((p.signed_area() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn circle_becomes_64_gon() {
        let l = Loop::new(vec![PrimitiveDelta::circle([0.75, 0.5], [0.25, 0.5])]);
        let p = tessellate_loop(&l, MAX_ANGULAR_STEP).unwrap();
        assert_eq!(p.len(), 64);
        for v in &p.vertices {
            let r = (v[0] - 0.5).hypot(v[1] - 0.5);
            assert!((r - 0.25).abs() < 1e-9);
        }
    }

    #[test]
    fn semicircle_has_32_segments() {
        // upper half from (0.75,0.5) through (0.5,0.75) to (0.25,0.5), closed by a line
        let l = Loop::new(vec![
            PrimitiveDelta::arc([0.75, 0.5], [0.5, 0.75], [0.25, 0.5]),
            PrimitiveDelta::line([0.25, 0.5], [0.75, 0.5]),
        ]);
        let p = tessellate_loop(&l, MAX_ANGULAR_STEP).unwrap();
        let arc_edges = p.arc_centers.iter().filter(|c| c.is_some()).count();
        assert_eq!(arc_edges, 32);
        assert_eq!(p.len(), 33);
        // the arc bulges upwards
        assert!(p.vertices.iter().all(|v| v[1] >= 0.5 - 1e-12));
        assert!(p.signed_area() > 0.0);
    }

    #[test]
    fn clockwise_arc_is_followed() {
        let l = Loop::new(vec![
            PrimitiveDelta::arc([0.25, 0.5], [0.5, 0.75], [0.75, 0.5]),
            PrimitiveDelta::line([0.75, 0.5], [0.25, 0.5]),
        ]);
        let p = tessellate_loop(&l, MAX_ANGULAR_STEP).unwrap();
        assert!(p.vertices.iter().all(|v| v[1] >= 0.5 - 1e-12));
        assert!(p.signed_area() < 0.0);
    }

    #[test]
    fn open_loop_is_rejected() {
        let mut l = unit_square();
        l.primitives[2].end = [0.5, 0.5];
        assert_eq!(tessellate_loop(&l, MAX_ANGULAR_STEP), Err(GeometryError::OpenLoop));
    }

    #[test]
    fn membership() {
        let sq = tessellate_loop(&unit_square(), MAX_ANGULAR_STEP).unwrap();
        assert!(point_in_loop([0.5, 0.5], &sq));
        assert!(!point_in_loop([2.0, 2.0], &sq));
        assert!(point_in_loop([1.0, 0.5], &sq));
        let c = Loop::new(vec![PrimitiveDelta::circle([0.75, 0.5], [0.25, 0.5])]);
        let cp = tessellate_loop(&c, MAX_ANGULAR_STEP).unwrap();
        // sagitta of a 64-gon at r = 0.25 is 0.25·(1 − cos(π/64)) ≈ 3e-4
        for k in 0..16 {
            let a = k as f64 * 0.39;
            assert!(point_in_loop([0.5 + 0.249 * a.cos(), 0.5 + 0.249 * a.sin()], &cp));
        }
    }

    #[test]
    fn hole_flips_parity() {
        let outer = tessellate_loop(&unit_square(), MAX_ANGULAR_STEP).unwrap();
        let hole = tessellate_loop(
            &Loop::new(vec![PrimitiveDelta::circle([0.6, 0.5], [0.4, 0.5])]),
            MAX_ANGULAR_STEP,
        )
        .unwrap();
        let region = [outer, hole];
        assert!(!point_in_region([0.5, 0.5], &region));
        assert!(point_in_region([0.05, 0.5], &region));
    }
}
