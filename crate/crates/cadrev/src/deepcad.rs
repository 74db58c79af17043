//! Importer for DeepCAD-style JSON exports (`entities` + `sequence`, sketch
//! profiles made of `Line3D` / `Arc3D` / `Circle3D` curves, `ExtrudeFeature`
//! operations).
//!
//! Each extrusion's loops are rescaled to the unit square of their bounding
//! box; the sketch frame absorbs the offset and scale. The whole model is then
//! fitted into `[-1,1]³`.

use std::f64::consts::PI;

use cadrev_core::cad::{BooleanOp, CadSequence, ExtentType, Extrusion, Loop, PrimitiveDelta, Step};
use serde_json::Value;

use crate::error::{Error, Result};

type V3 = [f64; 3];

fn bad(msg: impl Into<String>) -> Error {
    Error::Invalid(format!("DeepCAD import: {}", msg.into()))
}

fn get<'a>(v: &'a Value, key: &str) -> Result<&'a Value> {
    v.get(key).ok_or_else(|| bad(format!("missing key `{key}`")))
}

fn num(v: &Value, key: &str) -> Result<f64> {
    get(v, key)?.as_f64().ok_or_else(|| bad(format!("`{key}` is not a number")))
}

fn vec3(v: &Value, key: &str) -> Result<V3> {
    let p = get(v, key)?;
    Ok([num(p, "x")?, num(p, "y")?, num(p, "z").unwrap_or(0.0)])
}

fn xy(v: &Value, key: &str) -> Result<[f64; 2]> {
    let p = vec3(v, key)?;
    Ok([p[0], p[1]])
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Curve in sketch coordinates: start, optional mid, end.
type Curve = ([f64; 2], Option<[f64; 2]>, [f64; 2]);

fn curve(c: &Value) -> Result<Curve> {
    let kind = get(c, "type")?.as_str().unwrap_or_default();
    match kind {
        "Line3D" => Ok((xy(c, "start_point")?, None, xy(c, "end_point")?)),
        "Circle3D" => {
            let o = xy(c, "center_point")?;
            let r = num(c, "radius")?;
            let s = [o[0] + r, o[1]];
            Ok((s, Some([o[0] - r, o[1]]), s))
        }
        "Arc3D" => {
            let o = xy(c, "center_point")?;
            let s = xy(c, "start_point")?;
            let e = xy(c, "end_point")?;
            let r = dist(s, o);
            let sweep = num(c, "end_angle")? - num(c, "start_angle")?;
            let sense = c.get("normal").and_then(|n| n.get("z")).and_then(Value::as_f64).map_or(1.0, f64::signum);
            let a = (s[1] - o[1]).atan2(s[0] - o[0]) + sense * 0.5 * sweep;
            Ok((s, Some([o[0] + r * a.cos(), o[1] + r * a.sin()]), e))
        }
        other => Err(bad(format!("unsupported curve type `{other}`"))),
    }
}

/// Orders curves head to tail, flipping where needed.
fn chain(mut curves: Vec<Curve>) -> Vec<Curve> {
    let mut out = Vec::with_capacity(curves.len());
    if curves.is_empty() {
        return out;
    }
    out.push(curves.remove(0));
    while !curves.is_empty() {
        let tail = out.last().expect("non-empty").2;
        let (i, flip) = curves
            .iter()
            .enumerate()
            .flat_map(|(i, c)| [(i, false, dist(c.0, tail)), (i, true, dist(c.2, tail))])
            .min_by(|a, b| a.2.total_cmp(&b.2))
            .map(|(i, f, _)| (i, f))
            .expect("non-empty");
        let c = curves.remove(i);
        out.push(if flip { (c.2, c.1, c.0) } else { c });
    }
    out
}

/// Z-Y-Z Euler angles of a rotation whose columns are the sketch axes.
fn euler_zyz(x: V3, y: V3, z: V3) -> V3 {
    let r = |i: usize, j: usize| [x, y, z][j][i];
    let b = r(2, 2).clamp(-1.0, 1.0).acos();
    if b.sin().abs() > 1e-9 {
        [r(1, 2).atan2(r(0, 2)), b, r(2, 1).atan2(-r(2, 0))]
    } else if r(2, 2) > 0.0 {
        [r(1, 0).atan2(r(0, 0)), 0.0, 0.0]
    } else {
        [(-r(1, 0)).atan2(-r(0, 0)), PI, 0.0]
    }
}

struct RawStep {
    loops: Vec<Vec<Curve>>,
    translation: V3,
    axes: [V3; 3],
    size: f64,
    extent: ExtentType,
    d: [f64; 2],
    op: BooleanOp,
}

fn add(a: V3, b: V3, s: f64) -> V3 {
    [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]]
}

fn raw_step(entities: &Value, ext: &Value) -> Result<RawStep> {
    let mut loops = Vec::new();
    let mut frame = None;
    for pref in get(ext, "profiles")?.as_array().ok_or_else(|| bad("`profiles` is not a list"))? {
        let sk_id = get(pref, "sketch")?.as_str().ok_or_else(|| bad("sketch id"))?;
        let pr_id = get(pref, "profile")?.as_str().ok_or_else(|| bad("profile id"))?;
        let sketch = get(entities, sk_id)?;
        if frame.is_none() {
            let t = get(sketch, "transform")?;
            frame = Some((vec3(t, "origin")?, [vec3(t, "x_axis")?, vec3(t, "y_axis")?, vec3(t, "z_axis")?]));
        }
        let profile = get(get(sketch, "profiles")?, pr_id)?;
        for l in get(profile, "loops")?.as_array().ok_or_else(|| bad("`loops` is not a list"))? {
            let curves = get(l, "profile_curves")?
                .as_array()
                .ok_or_else(|| bad("`profile_curves` is not a list"))?
                .iter()
                .map(curve)
                .collect::<Result<Vec<_>>>()?;
            loops.push(chain(curves));
        }
    }
    let (origin, axes) = frame.ok_or_else(|| bad("extrusion without profiles"))?;
    let pts: Vec<[f64; 2]> = loops.iter().flatten().flat_map(|c| [Some(c.0), c.1, Some(c.2)]).flatten().collect();
    if pts.is_empty() {
        return Err(bad("extrusion with empty profiles"));
    }
    let lo = [pts.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min), pts.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min)];
    let hi = [pts.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max), pts.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max)];
    let size = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    if !(size > 0.0) {
        return Err(bad("degenerate sketch"));
    }
    for c in loops.iter_mut().flatten() {
        let n = |p: [f64; 2]| [(p[0] - lo[0]) / size, (p[1] - lo[1]) / size];
        *c = (n(c.0), c.1.map(n), n(c.2));
    }
    let translation = add(add(origin, axes[0], lo[0]), axes[1], lo[1]);
    let value = |key: &str| -> f64 {
        ext.get(key).and_then(|e| e.get("distance")).and_then(|d| d.get("value")).and_then(Value::as_f64).unwrap_or(0.0)
    };
    let (e1, e2) = (value("extent_one"), value("extent_two"));
    let kind = get(ext, "extent_type")?.as_str().unwrap_or_default();
    let (extent, d) = match kind {
        "OneSideFeatureExtentType" if e1 >= 0.0 => (ExtentType::OneSided, [e1, 0.0]),
        "OneSideFeatureExtentType" => (ExtentType::TwoSided, [0.0, -e1]),
        "SymmetricFeatureExtentType" => (ExtentType::Symmetric, [2.0 * e1.abs(), 0.0]),
        "TwoSidesFeatureExtentType" => (ExtentType::TwoSided, [e1, e2]),
        other => return Err(bad(format!("unsupported extent type `{other}`"))),
    };
    let op = match get(ext, "operation")?.as_str().unwrap_or_default() {
        "NewBodyFeatureOperation" => BooleanOp::New,
        "JoinFeatureOperation" => BooleanOp::Join,
        "CutFeatureOperation" => BooleanOp::Cut,
        "IntersectFeatureOperation" => BooleanOp::Intersect,
        other => return Err(bad(format!("unsupported operation `{other}`"))),
    };
    Ok(RawStep { loops, translation, axes, size, extent, d, op })
}

/// Converts a DeepCAD-style JSON document into a sequence.
pub fn import_deepcad(text: &str) -> Result<CadSequence> {
    let root: Value = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
    let entities = get(&root, "entities")?;
    let mut order: Vec<(i64, &str, &str)> = get(&root, "sequence")?
        .as_array()
        .ok_or_else(|| bad("`sequence` is not a list"))?
        .iter()
        .map(|s| {
            Ok((
                s.get("index").and_then(Value::as_i64).unwrap_or(0),
                get(s, "type")?.as_str().unwrap_or_default(),
                get(s, "entity")?.as_str().ok_or_else(|| bad("entity id"))?,
            ))
        })
        .collect::<Result<_>>()?;
    order.sort_by_key(|o| o.0);
    let raws = order
        .iter()
        .filter(|o| o.1 == "ExtrudeFeature")
        .map(|o| raw_step(entities, get(entities, o.2)?))
        .collect::<Result<Vec<_>>>()?;
    if raws.is_empty() {
        return Err(bad("no extrusions"));
    }
    // fit the extruded sketch corners into [-1, 1]^3
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for r in &raws {
        let (z0, z1) = match r.extent {
            ExtentType::OneSided => (0.0, r.d[0]),
            ExtentType::Symmetric => (-0.5 * r.d[0], 0.5 * r.d[0]),
            ExtentType::TwoSided => (-r.d[1], r.d[0]),
        };
        for c in r.loops.iter().flatten() {
            for p in [Some(c.0), c.1, Some(c.2)].into_iter().flatten() {
                for z in [z0, z1] {
                    let w = add(add(add(r.translation, r.axes[0], r.size * p[0]), r.axes[1], r.size * p[1]), r.axes[2], z);
                    for i in 0..3 {
                        lo[i] = lo[i].min(w[i]);
                        hi[i] = hi[i].max(w[i]);
                    }
                }
            }
        }
    }
    let center = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1]), 0.5 * (lo[2] + hi[2])];
    let half = (0..3).map(|i| 0.5 * (hi[i] - lo[i])).fold(0.0, f64::max);
    let k = if half > 0.0 { 1.0 / half } else { 1.0 };
    let unit = |x: f64| x.clamp(0.0, 1.0);
    let steps = raws
        .into_iter()
        .map(|r| {
            let angles = euler_zyz(r.axes[0], r.axes[1], r.axes[2]);
            let loops = r
                .loops
                .into_iter()
                .map(|curves| {
                    let cl = |p: [f64; 2]| [unit(p[0]), unit(p[1])];
                    let mut prims: Vec<PrimitiveDelta> =
                        curves.iter().map(|c| PrimitiveDelta { start: cl(c.0), mid: c.1.map(cl), end: cl(c.2) }).collect();
                    let n = prims.len();
                    for i in 0..n {
                        prims[i].end = prims[(i + 1) % n].start;
                    }
                    Loop::new(prims)
                })
                .collect();
            Step {
                loops,
                extrusion: Some(Extrusion {
                    orientation: angles.map(|a| unit((a / PI + 1.0) * 0.5)),
                    origin: [0, 1, 2].map(|i| unit((k * (r.translation[i] - center[i]) + 1.0) * 0.5)),
                    scale: unit(0.5 * k * r.size),
                    distances: r.d.map(|d| unit(0.5 * k * d)),
                    boolean_op: r.op,
                    extent: r.extent,
                }),
            }
        })
        .collect();
    Ok(CadSequence::new(steps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use cadrev_core::geometry::Frame;

    #[test]
    fn euler_round_trip() {
        for &(a, b, c) in &[(0.3, 1.1, -2.0), (-1.0, 0.0, 0.0), (2.0, PI, 0.0), (0.0, PI / 2.0, PI / 2.0)] {
            let m = Frame::euler_zyz(a, b, c);
            let col = |j: usize| [m[(0, j)], m[(1, j)], m[(2, j)]];
            let e = euler_zyz(col(0), col(1), col(2));
            let back = Frame::euler_zyz(e[0], e[1], e[2]);
            assert!((back - m).norm() < 1e-9);
        }
    }
}
