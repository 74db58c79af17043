//! Sketch-extrude CAD sequences.
//!
//! A sequence is an ordered list of steps; each step is a sketch made of one
//! or more closed loops followed by the extrusion that turns it into a solid.
//! Every primitive of a loop is stored as three 2D points (start, mid, end) in
//! the normalized sketch square `[0,1]²`. Lines carry no mid point; circles are
//! encoded with `end == start` and `mid` diametrically opposite to `start`.

mod generate;
mod quant;
mod tokens;
mod validate;

pub use generate::{generate_random_sequence, GeneratorSpec};
pub use quant::{
    dequantize_sequence, quantize_sequence, QuantizationSpec, QuantizedExtrusion,
    QuantizedPrimitive, QuantizedSequence, QuantizedStep,
};
pub use tokens::{tokenize, TokenType};
pub use validate::{validate, FailureCode, ValidityReport};

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use thiserror::Error;

/// Maximum number of tokens (loops, extrusions and the closing EOS).
pub const L_MAX: usize = 24;
/// Maximum number of primitives per loop.
pub const N_P_MAX: usize = 8;
/// Closure / coincidence tolerance in normalized sketch units.
pub const EPS_CLOSE: f64 = 1e-6;
/// Distance of the mid point from the chord under which an arc is a line.
pub const EPS_COL: f64 = 1e-6;
/// Continuous stand-in for an absent mid point.
pub const SENTINEL: Point2 = [-1.0, -1.0];
/// Number of scalar slots of an extrusion.
pub const EXTRUSION_SLOTS: usize = 11;
/// Number of scalar slots of a primitive.
pub const PRIMITIVE_SLOTS: usize = 6;

pub type Point2 = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum CadError {
    #[error("malformed primitive: zero-length line")]
    MalformedPrimitive,
    #[error("token expansion of {0} exceeds the maximum of {L_MAX}")]
    TokenOverflow(usize),
    #[error("quantization needs at least 2 bins, got {0}")]
    InvalidBins(u16),
    #[error("generator gave up after {0} attempts")]
    GeneratorExhausted(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PrimitiveType {
    Line,
    Arc,
    Circle,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrimitiveDelta {
    pub start: Point2,
    /// `None` is the sentinel used by lines.
    pub mid: Option<Point2>,
    pub end: Point2,
}

pub(crate) fn dist2(a: Point2, b: Point2) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    (dx * dx + dy * dy).sqrt()
}

impl PrimitiveDelta {
    pub fn line(start: Point2, end: Point2) -> Self {
        Self { start, mid: None, end }
    }

    pub fn arc(start: Point2, mid: Point2, end: Point2) -> Self {
        Self { start, mid: Some(mid), end }
    }

    /// Circle through `start` with `opposite` diametrically across.
    pub fn circle(start: Point2, opposite: Point2) -> Self {
        Self { start, mid: Some(opposite), end: start }
    }

    /// Deduces the primitive type from the point configuration.
    pub fn infer_type(&self) -> Result<PrimitiveType, CadError> {
        let chord = dist2(self.start, self.end);
        let Some(mid) = self.mid else {
            return if chord <= EPS_CLOSE {
                Err(CadError::MalformedPrimitive)
            } else {
                Ok(PrimitiveType::Line)
            };
        };
        if chord <= EPS_CLOSE {
            return Ok(PrimitiveType::Circle);
        }
        let cross = (self.end[0] - self.start[0]) * (mid[1] - self.start[1])
            - (self.end[1] - self.start[1]) * (mid[0] - self.start[0]);
        if cross.abs() / chord <= EPS_COL {
            Ok(PrimitiveType::Line)
        } else {
            Ok(PrimitiveType::Arc)
        }
    }

    /// Flat `[sx, sy, mx, my, ex, ey]` with sentinel coordinates for lines.
    pub fn to_array(&self) -> [f64; PRIMITIVE_SLOTS] {
        let m = self.mid.unwrap_or(SENTINEL);
        [self.start[0], self.start[1], m[0], m[1], self.end[0], self.end[1]]
    }

    /// Center of the supporting circle for arcs and circles.
    pub fn center(&self) -> Option<Point2> {
        match self.infer_type().ok()? {
            PrimitiveType::Line => None,
            PrimitiveType::Circle => {
                let m = self.mid?;
                Some([(self.start[0] + m[0]) * 0.5, (self.start[1] + m[1]) * 0.5])
            }
            PrimitiveType::Arc => circumcenter(self.start, self.mid?, self.end),
        }
    }
}

/// Center of the circle through three points, `None` when collinear.
pub fn circumcenter(a: Point2, b: Point2, c: Point2) -> Option<Point2> {
    let d = 2.0 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]));
    if d.abs() < 1e-15 {
        return None;
    }
    let a2 = a[0] * a[0] + a[1] * a[1];
    let b2 = b[0] * b[0] + b[1] * b[1];
    let c2 = c[0] * c[0] + c[1] * c[1];
    let ux = (a2 * (b[1] - c[1]) + b2 * (c[1] - a[1]) + c2 * (a[1] - b[1])) / d;
    let uy = (a2 * (c[0] - b[0]) + b2 * (a[0] - c[0]) + c2 * (b[0] - a[0])) / d;
    Some([ux, uy])
}

/// Free function form of [`PrimitiveDelta::infer_type`].
pub fn infer_primitive_type(d: &PrimitiveDelta) -> Result<PrimitiveType, CadError> {
    d.infer_type()
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Loop {
    pub primitives: Vec<PrimitiveDelta>,
}

impl Loop {
    pub fn new(primitives: Vec<PrimitiveDelta>) -> Self {
        Self { primitives }
    }

    /// Closed polygon through the given vertices, all edges straight.
    pub fn polygon(vertices: &[Point2]) -> Self {
        let n = vertices.len();
        let primitives = (0..n)
            .map(|i| PrimitiveDelta::line(vertices[i], vertices[(i + 1) % n]))
            .collect();
        Self { primitives }
    }

    pub fn is_closed(&self) -> bool {
        let n = self.primitives.len();
        if n == 0 {
            return false;
        }
        (0..n).all(|i| {
            dist2(self.primitives[i].end, self.primitives[(i + 1) % n].start) <= EPS_CLOSE
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BooleanOp {
    New,
    Join,
    Cut,
    Intersect,
}

impl BooleanOp {
    pub const ALL: [BooleanOp; 4] = [Self::New, Self::Join, Self::Cut, Self::Intersect];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::New => "new",
            Self::Join => "join",
            Self::Cut => "cut",
            Self::Intersect => "intersect",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExtentType {
    OneSided,
    Symmetric,
    TwoSided,
}

impl ExtentType {
    pub const ALL: [ExtentType; 3] = [Self::OneSided, Self::Symmetric, Self::TwoSided];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::OneSided => "one_sided",
            Self::Symmetric => "symmetric",
            Self::TwoSided => "two_sided",
        }
    }
}

/// Sketch placement and extrusion parameters, all continuous fields in `[0,1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrusion {
    pub orientation: [f64; 3],
    pub origin: [f64; 3],
    pub scale: f64,
    pub distances: [f64; 2],
    pub boolean_op: BooleanOp,
    pub extent: ExtentType,
}

/// Slot layout of the flattened extrusion vector.
pub mod slot {
    use core::ops::Range;
    pub const ORIENTATION: Range<usize> = 0..3;
    pub const ORIGIN: Range<usize> = 3..6;
    pub const SCALE: usize = 6;
    pub const DISTANCES: Range<usize> = 7..9;
    pub const BOOLEAN: usize = 9;
    pub const EXTENT: usize = 10;
}

impl Extrusion {
    /// Flattened 11-vector; categorical slots embedded at evenly spaced values
    /// in `[0,1]` (`{0,1/3,2/3,1}` and `{0,1/2,1}`).
    pub fn to_array(&self) -> [f64; EXTRUSION_SLOTS] {
        let mut v = [0.0; EXTRUSION_SLOTS];
        v[slot::ORIENTATION].copy_from_slice(&self.orientation);
        v[slot::ORIGIN].copy_from_slice(&self.origin);
        v[slot::SCALE] = self.scale;
        v[slot::DISTANCES].copy_from_slice(&self.distances);
        v[slot::BOOLEAN] = self.boolean_op.index() as f64 / 3.0;
        v[slot::EXTENT] = self.extent.index() as f64 / 2.0;
        v
    }
}

/// One sketch (its loops) and the extrusion applied to it. A step without an
/// extrusion only arises from predictions and is always invalid.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Step {
    pub loops: Vec<Loop>,
    pub extrusion: Option<Extrusion>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CadSequence {
    pub steps: Vec<Step>,
    pub quantization: QuantizationSpec,
}

impl CadSequence {
    pub fn new(steps: Vec<Step>) -> Self {
        Self { steps, quantization: QuantizationSpec::default() }
    }

    pub fn loops(&self) -> impl Iterator<Item = &Loop> + '_ {
        self.steps.iter().flat_map(|s| s.loops.iter())
    }

    pub fn extrusions(&self) -> impl Iterator<Item = &Extrusion> + '_ {
        self.steps.iter().filter_map(|s| s.extrusion.as_ref())
    }

    pub fn loop_count(&self) -> usize {
        self.steps.iter().map(|s| s.loops.len()).sum()
    }

    pub fn extrusion_count(&self) -> usize {
        self.steps.iter().filter(|s| s.extrusion.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sentinel_mid_is_line() {
        let d = PrimitiveDelta::line([0.0, 0.0], [1.0, 0.0]);
        assert_eq!(infer_primitive_type(&d), Ok(PrimitiveType::Line));
    }

    #[test]
    fn diametral_encoding_is_circle() {
        let d = PrimitiveDelta::circle([0.75, 0.5], [0.25, 0.5]);
        assert_eq!(d.infer_type(), Ok(PrimitiveType::Circle));
        let c = d.center().unwrap();
        assert!((c[0] - 0.5).abs() < 1e-15 && (c[1] - 0.5).abs() < 1e-15);
        assert!((dist2(c, d.start) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn three_point_arc() {
        let d = PrimitiveDelta::arc([0.0, 0.0], [0.5, 0.5], [1.0, 0.0]);
        assert_eq!(d.infer_type(), Ok(PrimitiveType::Arc));
        let c = d.center().unwrap();
        assert!((c[0] - 0.5).abs() < 1e-12 && c[1].abs() < 1e-12);
        assert!((dist2(c, d.start) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn collinear_arc_is_a_line() {
        let d = PrimitiveDelta::arc([0.0, 0.0], [0.5, 0.0], [1.0, 0.0]);
        assert_eq!(d.infer_type(), Ok(PrimitiveType::Line));
    }

    #[test]
    fn zero_length_line_is_malformed() {
        let d = PrimitiveDelta::line([0.3, 0.3], [0.3, 0.3]);
        assert_eq!(d.infer_type(), Err(CadError::MalformedPrimitive));
    }

    #[test]
    fn extrusion_vector_embeds_categoricals() {
        let e = Extrusion {
            orientation: [0.5; 3],
            origin: [0.5; 3],
            scale: 0.5,
            distances: [0.2, 0.0],
            boolean_op: BooleanOp::Cut,
            extent: ExtentType::TwoSided,
        };
        let v = e.to_array();
        assert_eq!(v[slot::BOOLEAN], 2.0 / 3.0);
        assert_eq!(v[slot::EXTENT], 1.0);
    }
}
