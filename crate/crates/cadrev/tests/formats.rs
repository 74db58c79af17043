use std::path::Path;

use cadrev::{deepcad, ply, seqjson, Error};
use cadrev_core::cad::{generate_random_sequence, validate, BooleanOp, CadSequence, ExtentType, GeneratorSpec};
use cadrev_core::geometry::{sample_surface, PointCloud};

fn close(a: &CadSequence, b: &CadSequence, tol: f64) -> bool {
    let (x, y): (Vec<_>, Vec<_>) = (a.loops().collect(), b.loops().collect());
    x.len() == y.len()
        && a.steps.len() == b.steps.len()
        && x.iter().zip(&y).all(|(l, m)| {
            l.primitives.len() == m.primitives.len()
                && l.primitives.iter().zip(&m.primitives).all(|(p, q)| {
                    p.to_array().iter().zip(q.to_array()).all(|(u, v)| (u - v).abs() <= tol || (u.is_nan() && v.is_nan()))
                })
        })
        && a.steps.iter().zip(&b.steps).all(|(s, t)| match (&s.extrusion, &t.extrusion) {
            (Some(e), Some(f)) => {
                e.boolean_op == f.boolean_op
                    && e.extent == f.extent
                    && e.to_array().iter().zip(f.to_array()).all(|(u, v)| (u - v).abs() <= tol)
            }
            (None, None) => true,
            _ => false,
        })
}

#[test]
fn sequence_json_round_trip() {
    for seed in 0..50 {
        let seq = generate_random_sequence(seed, &GeneratorSpec::default()).unwrap();
        let text = seqjson::to_json(&seq);
        let back = seqjson::from_json(&text).unwrap();
        assert!(close(&seq, &back, 1e-8), "seed {seed}");
        assert_eq!(seqjson::to_json(&back), text, "canonical form must be a fixed point");
        assert!(text.ends_with('\n'));
    }
}

#[test]
fn missing_key_names_the_field() {
    let seq = generate_random_sequence(1, &GeneratorSpec::default()).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&seqjson::to_json(&seq)).unwrap();
    v["steps"][0]["extrusion"].as_object_mut().unwrap().remove("scale");
    let err = seqjson::from_json(&serde_json::to_string_pretty(&v).unwrap()).unwrap_err();
    match &err {
        Error::SequenceJson { field, .. } => assert!(field.contains("steps[0].extrusion"), "{field}"),
        other => panic!("unexpected error {other:?}"),
    }
    assert!(err.to_string().contains("scale"), "{err}");
}

#[test]
fn unknown_and_malformed_fields_are_rejected() {
    let seq = generate_random_sequence(2, &GeneratorSpec::default()).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&seqjson::to_json(&seq)).unwrap();
    v["steps"][0]["colour"] = "red".into();
    assert!(seqjson::from_json(&v.to_string()).is_err());
    let mut v: serde_json::Value = serde_json::from_str(&seqjson::to_json(&seq)).unwrap();
    v["steps"][0]["extrusion"]["boolean_op"] = "merge".into();
    assert!(seqjson::from_json(&v.to_string()).is_err());
    let mut v: serde_json::Value = serde_json::from_str(&seqjson::to_json(&seq)).unwrap();
    v["steps"][0]["loops"][0]["primitives"][0].as_object_mut().unwrap().remove("mid");
    assert!(seqjson::from_json(&v.to_string()).is_err(), "mid is required even when null");
}

#[test]
fn sig9_rounding() {
    assert_eq!(seqjson::round_sig9(0.123456789123), 0.123456789);
    assert_eq!(seqjson::round_sig9(0.0), 0.0);
    assert_eq!(seqjson::round_sig9(1.0), 1.0);
}

fn cloud() -> PointCloud {
    let seq = generate_random_sequence(4, &GeneratorSpec::default()).unwrap();
    sample_surface(&seq, 300, 9).unwrap()
}

#[test]
fn ply_round_trip_at_f32_precision() {
    let pc = cloud();
    let bytes = ply::encode_ply(&pc);
    let back = ply::decode_ply(&bytes, Path::new("mem.ply")).unwrap();
    assert_eq!(back, ply::to_f32_precision(&pc));
    assert_eq!(ply::encode_ply(&back), bytes);
}

#[test]
fn ascii_ply_with_extra_properties() {
    let text = "ply\nformat ascii 1.0\ncomment test\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\n\
                property uchar red\nproperty double nx\nproperty double ny\nproperty double nz\nend_header\n\
                0 0 0 255 0 0 1\n1 2 3 0 1 0 0\n";
    let pc = ply::decode_ply(text.as_bytes(), Path::new("a.ply")).unwrap();
    assert_eq!(pc.points, vec![[0.0, 0.0, 0.0], [1.0, 2.0, 3.0]]);
    assert_eq!(pc.normals, vec![[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]);
}

#[test]
fn ply_without_normals_is_rejected() {
    let text = "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\nend_header\n0 0 0\n";
    let err = ply::decode_ply(text.as_bytes(), Path::new("n.ply")).unwrap_err();
    assert!(err.to_string().contains("n.ply"), "{err}");
}

#[test]
fn xyz_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let pc = cloud();
    let path = dir.path().join("c.xyz");
    ply::write_xyz(&path, &pc).unwrap();
    let back = ply::read_cloud(&path).unwrap();
    assert_eq!(back.len(), pc.len());
    for (a, b) in back.points.iter().zip(&pc.points) {
        assert!((0..3).all(|i| (a[i] - b[i]).abs() < 1e-9));
    }
}

#[test]
fn deepcad_fixture_imports_valid() {
    let text = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/deepcad_plate.json")).unwrap();
    let seq = deepcad::import_deepcad(&text).unwrap();
    let report = validate(&seq);
    assert!(report.valid(), "{:?}", report.failure_codes);
    assert_eq!(seq.steps.iter().map(|s| s.loops.len()).collect::<Vec<_>>(), vec![2, 1, 1]);
    let ext: Vec<_> = seq.extrusions().map(|e| (e.boolean_op, e.extent)).collect();
    assert_eq!(
        ext,
        vec![
            (BooleanOp::New, ExtentType::OneSided),
            (BooleanOp::Join, ExtentType::Symmetric),
            (BooleanOp::Cut, ExtentType::TwoSided)
        ]
    );
    // plate 2 x 1 x 0.3 with a boss reaching z = 0.5
    let pc = sample_surface(&seq, 4096, 3).unwrap();
    let (lo, hi) = pc.bounding_box().unwrap();
    let d = [hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]];
    assert!((d[0] / d[1] - 2.0).abs() < 0.05, "{d:?}");
    assert!((d[2] / d[1] - 0.5).abs() < 0.05, "{d:?}");
}

#[test]
fn deepcad_errors_are_reported() {
    assert!(deepcad::import_deepcad("{}").is_err());
    assert!(deepcad::import_deepcad(r#"{"entities": {}, "sequence": []}"#).is_err());
}
