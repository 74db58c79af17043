use alloc::vec::Vec;

use super::{
    BooleanOp, CadError, CadSequence, ExtentType, Extrusion, Loop, PrimitiveDelta, Step,
    EXTRUSION_SLOTS, PRIMITIVE_SLOTS,
};

/// Uniform quantization of `[0,1]` into `bins` levels plus one sentinel class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QuantizationSpec {
    bins: u16,
}

impl Default for QuantizationSpec {
    fn default() -> Self {
        Self { bins: 256 }
    }
}

impl QuantizationSpec {
    pub fn new(bins: u16) -> Result<Self, CadError> {
        if bins < 2 || bins == u16::MAX {
            return Err(CadError::InvalidBins(bins));
        }
        Ok(Self { bins })
    }

    pub fn bins(&self) -> u16 {
        self.bins
    }

    /// Class index reserved for absent coordinates.
    pub fn sentinel(&self) -> u16 {
        self.bins
    }

    /// Number of classes including the sentinel.
    pub fn classes(&self) -> usize {
        self.bins as usize + 1
    }

    pub fn step(&self) -> f64 {
        1.0 / f64::from(self.bins - 1)
    }

    /// Rounds half away from zero after clamping to `[0,1]`.
    pub fn quantize(&self, x: f64) -> u16 {
        let top = f64::from(self.bins - 1);
        let v = libm::round(x.clamp(0.0, 1.0) * top);
        v.clamp(0.0, top) as u16
    }

    pub fn dequantize(&self, i: u16) -> f64 {
        f64::from(i.min(self.bins - 1)) / f64::from(self.bins - 1)
    }

    /// Quantizes a coordinate that may be absent.
    pub fn quantize_opt(&self, x: Option<f64>) -> u16 {
        x.map_or(self.sentinel(), |x| self.quantize(x))
    }

    pub fn dequantize_opt(&self, i: u16) -> Option<f64> {
        (i < self.bins).then(|| self.dequantize(i))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuantizedPrimitive {
    /// `[sx, sy, mx, my, ex, ey]`; mid entries hold the sentinel for lines.
    pub coords: [u16; PRIMITIVE_SLOTS],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuantizedExtrusion {
    /// Nine continuous slots as bin indices, then boolean op and extent class.
    pub params: [u16; EXTRUSION_SLOTS],
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizedStep {
    pub loops: Vec<Vec<QuantizedPrimitive>>,
    pub extrusion: Option<QuantizedExtrusion>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizedSequence {
    pub steps: Vec<QuantizedStep>,
    pub quantization: QuantizationSpec,
}

impl QuantizedPrimitive {
    pub fn from_delta(d: &PrimitiveDelta, q: &QuantizationSpec) -> Self {
        let mid = d.mid.map_or([q.sentinel(); 2], |m| [q.quantize(m[0]), q.quantize(m[1])]);
        Self {
            coords: [
                q.quantize(d.start[0]),
                q.quantize(d.start[1]),
                mid[0],
                mid[1],
                q.quantize(d.end[0]),
                q.quantize(d.end[1]),
            ],
        }
    }

    pub fn to_delta(&self, q: &QuantizationSpec) -> PrimitiveDelta {
        let c = self.coords;
        let mid = match (q.dequantize_opt(c[2]), q.dequantize_opt(c[3])) {
            (Some(x), Some(y)) => Some([x, y]),
            _ => None,
        };
        PrimitiveDelta {
            start: [q.dequantize(c[0]), q.dequantize(c[1])],
            mid,
            end: [q.dequantize(c[4]), q.dequantize(c[5])],
        }
    }
}

impl QuantizedExtrusion {
    pub fn from_extrusion(e: &Extrusion, q: &QuantizationSpec) -> Self {
        let v = e.to_array();
        let mut params = [0u16; EXTRUSION_SLOTS];
        for (p, x) in params.iter_mut().zip(&v[..9]) {
            *p = q.quantize(*x);
        }
        params[9] = e.boolean_op.index() as u16;
        params[10] = e.extent.index() as u16;
        Self { params }
    }

    /// Out-of-range categorical classes fall back to the first class.
    pub fn to_extrusion(&self, q: &QuantizationSpec) -> Extrusion {
        let p = self.params;
        let d = |i: usize| q.dequantize(p[i]);
        Extrusion {
            orientation: [d(0), d(1), d(2)],
            origin: [d(3), d(4), d(5)],
            scale: d(6),
            distances: [d(7), d(8)],
            boolean_op: BooleanOp::from_index(p[9] as usize).unwrap_or(BooleanOp::New),
            extent: ExtentType::from_index(p[10] as usize).unwrap_or(ExtentType::OneSided),
        }
    }
}

pub fn quantize_sequence(seq: &CadSequence) -> QuantizedSequence {
    let q = seq.quantization;
    let steps = seq
        .steps
        .iter()
        .map(|s| QuantizedStep {
            loops: s
                .loops
                .iter()
                .map(|l| l.primitives.iter().map(|d| QuantizedPrimitive::from_delta(d, &q)).collect())
                .collect(),
            extrusion: s.extrusion.as_ref().map(|e| QuantizedExtrusion::from_extrusion(e, &q)),
        })
        .collect();
    QuantizedSequence { steps, quantization: q }
}

pub fn dequantize_sequence(seq: &QuantizedSequence) -> CadSequence {
    let q = seq.quantization;
    let steps = seq
        .steps
        .iter()
        .map(|s| Step {
            loops: s
                .loops
                .iter()
                .map(|l| Loop::new(l.iter().map(|p| p.to_delta(&q)).collect()))
                .collect(),
            extrusion: s.extrusion.as_ref().map(|e| e.to_extrusion(&q)),
        })
        .collect();
    CadSequence { steps, quantization: q }
}
