//! Canonical JSON form of a `CadSequence`: sorted keys, floats rounded to 9
//! significant digits, `null` for absent arc midpoints.

use std::path::Path;

use cadrev_core::cad::{BooleanOp, CadSequence, ExtentType, Extrusion, Loop, PrimitiveDelta, QuantizationSpec, Step};
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::Value;

use crate::error::{format_error, Error, IoContext, Result};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SequenceDoc {
    quantization: QuantDoc,
    steps: Vec<StepDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct QuantDoc {
    bins: u16,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StepDoc {
    loops: Vec<LoopDoc>,
    #[serde(deserialize_with = "nullable")]
    extrusion: Option<ExtrusionDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LoopDoc {
    primitives: Vec<PrimitiveDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PrimitiveDoc {
    start: [f64; 2],
    #[serde(deserialize_with = "nullable")]
    mid: Option<[f64; 2]>,
    end: [f64; 2],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExtrusionDoc {
    orientation: [f64; 3],
    origin: [f64; 3],
    scale: f64,
    distances: [f64; 2],
    boolean_op: BooleanDoc,
    extent: ExtentDoc,
}

#[derive(Serialize, Deserialize, Clone, Copy)]
#[serde(rename_all = "snake_case")]
enum BooleanDoc {
    New,
    Join,
    Cut,
    Intersect,
}

#[derive(Serialize, Deserialize, Clone, Copy)]
#[serde(rename_all = "snake_case")]
enum ExtentDoc {
    OneSided,
    Symmetric,
    TwoSided,
}

/// Required key whose value may be `null`.
fn nullable<'de, D: Deserializer<'de>, T: Deserialize<'de>>(d: D) -> Result<Option<T>, D::Error> {
    Option::<T>::deserialize(d)
}

impl From<BooleanOp> for BooleanDoc {
    fn from(b: BooleanOp) -> Self {
        match b {
            BooleanOp::New => Self::New,
            BooleanOp::Join => Self::Join,
            BooleanOp::Cut => Self::Cut,
            BooleanOp::Intersect => Self::Intersect,
        }
    }
}

impl From<BooleanDoc> for BooleanOp {
    fn from(b: BooleanDoc) -> Self {
        match b {
            BooleanDoc::New => Self::New,
            BooleanDoc::Join => Self::Join,
            BooleanDoc::Cut => Self::Cut,
            BooleanDoc::Intersect => Self::Intersect,
        }
    }
}

impl From<ExtentType> for ExtentDoc {
    fn from(e: ExtentType) -> Self {
        match e {
            ExtentType::OneSided => Self::OneSided,
            ExtentType::Symmetric => Self::Symmetric,
            ExtentType::TwoSided => Self::TwoSided,
        }
    }
}

impl From<ExtentDoc> for ExtentType {
    fn from(e: ExtentDoc) -> Self {
        match e {
            ExtentDoc::OneSided => Self::OneSided,
            ExtentDoc::Symmetric => Self::Symmetric,
            ExtentDoc::TwoSided => Self::TwoSided,
        }
    }
}

fn to_doc(seq: &CadSequence) -> SequenceDoc {
    SequenceDoc {
        quantization: QuantDoc { bins: seq.quantization.bins() },
        steps: seq
            .steps
            .iter()
            .map(|s| StepDoc {
                loops: s
                    .loops
                    .iter()
                    .map(|l| LoopDoc {
                        primitives: l
                            .primitives
                            .iter()
                            .map(|p| PrimitiveDoc { start: p.start, mid: p.mid, end: p.end })
                            .collect(),
                    })
                    .collect(),
                extrusion: s.extrusion.as_ref().map(|e| ExtrusionDoc {
                    orientation: e.orientation,
                    origin: e.origin,
                    scale: e.scale,
                    distances: e.distances,
                    boolean_op: e.boolean_op.into(),
                    extent: e.extent.into(),
                }),
            })
            .collect(),
    }
}

fn from_doc(doc: SequenceDoc) -> Result<CadSequence> {
    let quantization = QuantizationSpec::new(doc.quantization.bins)?;
    let steps = doc
        .steps
        .into_iter()
        .map(|s| Step {
            loops: s
                .loops
                .into_iter()
                .map(|l| Loop::new(l.primitives.into_iter().map(|p| PrimitiveDelta { start: p.start, mid: p.mid, end: p.end }).collect()))
                .collect(),
            extrusion: s.extrusion.map(|e| Extrusion {
                orientation: e.orientation,
                origin: e.origin,
                scale: e.scale,
                distances: e.distances,
                boolean_op: e.boolean_op.into(),
                extent: e.extent.into(),
            }),
        })
        .collect();
    Ok(CadSequence { steps, quantization })
}

/// `x` rounded to 9 significant digits.
pub fn round_sig9(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.8e}").parse().expect("formatted float parses")
}

fn round_numbers(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let r = round_sig9(n.as_f64().expect("f64 number"));
            *v = serde_json::Number::from_f64(r).map_or(Value::Null, Value::Number);
        }
        Value::Array(a) => a.iter_mut().for_each(round_numbers),
        Value::Object(o) => o.values_mut().for_each(round_numbers),
        _ => {}
    }
}

/// Canonical pretty-printed JSON with a trailing newline.
pub fn to_json(seq: &CadSequence) -> String {
    let mut v = serde_json::to_value(to_doc(seq)).expect("sequence serializes");
    round_numbers(&mut v);
    let mut s = serde_json::to_string_pretty(&v).expect("value serializes");
    s.push('\n');
    s
}

pub fn from_json(text: &str) -> Result<CadSequence> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: SequenceDoc = serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        Error::SequenceJson { field, line: inner.line(), column: inner.column(), message: inner.to_string() }
    })?;
    from_doc(doc)
}

pub fn read_sequence(path: &Path) -> Result<CadSequence> {
    let text = std::fs::read_to_string(path).at(path)?;
    from_json(&text).map_err(|e| format_error(path, e.to_string()))
}

pub fn write_sequence(path: &Path, seq: &CadSequence) -> Result<()> {
    std::fs::write(path, to_json(seq)).at(path)
}
