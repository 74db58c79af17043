use cadrev::checkpoint::{decode, encode, FORMAT_VERSION, MAGIC};
use cadrev::Error;
use cadrev_core::cad::{generate_random_sequence, GeneratorSpec};
use cadrev_core::geometry::sample_surface;
use cadrev_core::model::{Model, ModelConfig, Variant};

fn model(variant: Variant, refine: bool) -> Model {
    Model::new(ModelConfig::toy(), variant, refine, 5).unwrap()
}

#[test]
fn round_trip_is_bit_identical() {
    let seq = generate_random_sequence(8, &GeneratorSpec::default()).unwrap();
    let cloud = sample_surface(&seq, 1024, 1).unwrap();
    for (v, r) in [(Variant::Hierarchical, true), (Variant::Hierarchical, false), (Variant::Flat, false)] {
        let m = model(v, r);
        let bytes = encode(&m);
        assert_eq!(&bytes[..8], MAGIC);
        let back = decode(&bytes).unwrap();
        assert_eq!(encode(&back), bytes);
        assert_eq!((back.variant, back.use_refiner), (v, r));
        assert_eq!(back.infer(&cloud).unwrap(), m.infer(&cloud).unwrap());
    }
}

#[test]
fn version_mismatch_is_rejected() {
    let mut bytes = encode(&model(Variant::Hierarchical, true));
    bytes[8..12].copy_from_slice(&(FORMAT_VERSION + 1).to_le_bytes());
    let err = decode(&bytes).unwrap_err();
    assert!(matches!(err, Error::Checkpoint(_)));
    assert!(err.to_string().contains("version"), "{err}");
}

#[test]
fn corrupt_files_are_rejected() {
    let bytes = encode(&model(Variant::Flat, false));
    assert!(decode(b"not a checkpoint").is_err());
    assert!(decode(&bytes[..bytes.len() - 8]).is_err());
    assert!(decode(&bytes[..40]).is_err());
}

#[test]
fn save_and_load() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.bin");
    let m = model(Variant::Hierarchical, true);
    cadrev::checkpoint::save(&path, &m).unwrap();
    assert_eq!(encode(&cadrev::checkpoint::load(&path).unwrap()), encode(&m));
    let err = cadrev::checkpoint::load(&dir.path().join("missing.bin")).unwrap_err();
    assert!(err.to_string().contains("missing.bin"), "{err}");
}
