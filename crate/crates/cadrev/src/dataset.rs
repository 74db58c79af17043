//! Synthetic datasets on disk: `sequences/<id>.json`, `clouds/<id>.ply` and a
//! `manifest.json` with per-file SHA-256 digests and train/val/test splits.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use cadrev_core::cad::{generate_random_sequence, CadSequence, GeneratorSpec};
use cadrev_core::geometry::{sample_surface, PointCloud};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{format_error, IoContext, Result};
use crate::{ply, seqjson};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub id: String,
    pub sequence: String,
    pub cloud: String,
    pub sequence_sha256: String,
    pub cloud_sha256: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Splits {
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub seed: u64,
    pub count: usize,
    pub points: usize,
    pub entries: Vec<Entry>,
    pub splits: Splits,
    /// SHA-256 of this manifest serialized with an empty digest.
    pub digest: String,
}

impl DatasetManifest {
    fn seal(&mut self) {
        self.digest.clear();
        let text = serde_json::to_string(self).expect("manifest serializes");
        self.digest = hex::encode(Sha256::digest(text.as_bytes()));
    }

    pub fn ids(&self, split: Option<&str>) -> Vec<String> {
        match split {
            Some("train") => self.splits.train.clone(),
            Some("val") => self.splits.val.clone(),
            Some("test") => self.splits.test.clone(),
            _ => self.entries.iter().map(|e| e.id.clone()).collect(),
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Seed of the `index`-th file derived from a base seed.
pub fn file_seed(base: u64, index: usize) -> u64 {
    base ^ index as u64
}

pub fn thread_pool(jobs: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build().expect("thread pool")
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).at(path)
}

/// Generates `count` (sequence, cloud) pairs; file `i` uses seed `seed ^ i`.
pub fn synthesize(out: &Path, count: usize, points: usize, split: [f64; 3], seed: u64, jobs: usize) -> Result<DatasetManifest> {
    let (sdir, cdir) = (out.join("sequences"), out.join("clouds"));
    std::fs::create_dir_all(&sdir).at(&sdir)?;
    std::fs::create_dir_all(&cdir).at(&cdir)?;
    let entries: Vec<Entry> = thread_pool(jobs).install(|| {
        (0..count)
            .into_par_iter()
            .map(|i| {
                let s = file_seed(seed, i);
                let id = format!("{i:06}");
                let seq = generate_random_sequence(s, &GeneratorSpec::default())?;
                let cloud = sample_surface(&seq, points, s)?;
                let json = seqjson::to_json(&seq);
                let plyb = ply::encode_ply(&cloud);
                let (sp, cp) = (format!("sequences/{id}.json"), format!("clouds/{id}.ply"));
                write(&out.join(&sp), json.as_bytes())?;
                write(&out.join(&cp), &plyb)?;
                Ok(Entry { id, sequence: sp, cloud: cp, sequence_sha256: sha256_hex(json.as_bytes()), cloud_sha256: sha256_hex(&plyb) })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut ids: Vec<String> = entries.iter().map(|e| e.id.clone()).collect();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let total: f64 = split.iter().sum();
    let n_train = ((split[0] / total) * count as f64).round() as usize;
    let n_val = (((split[1] / total) * count as f64).round() as usize).min(count - n_train.min(count));
    let n_train = n_train.min(count);
    let mut splits = Splits {
        train: ids[..n_train].to_vec(),
        val: ids[n_train..n_train + n_val].to_vec(),
        test: ids[n_train + n_val..].to_vec(),
    };
    splits.train.sort();
    splits.val.sort();
    splits.test.sort();
    let mut m = DatasetManifest { seed, count, points, entries, splits, digest: String::new() };
    m.seal();
    let path = out.join(MANIFEST);
    write(&path, (serde_json::to_string_pretty(&m).expect("serializes") + "\n").as_bytes())?;
    Ok(m)
}

pub fn read_manifest(dir: &Path) -> Result<DatasetManifest> {
    let path = dir.join(MANIFEST);
    let text = std::fs::read_to_string(&path).at(&path)?;
    serde_json::from_str(&text).map_err(|e| format_error(&path, e.to_string()))
}

fn is_sidecar(name: &str) -> bool {
    name.ends_with(".meta.json") || matches!(name, "config.resolved.json" | "summary.json" | MANIFEST)
}

fn stem(path: &Path) -> String {
    path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string()
}

fn list(dir: &Path, ok: impl Fn(&str) -> bool) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    for e in std::fs::read_dir(dir).at(dir)? {
        let p = e.at(dir)?.path();
        let name = p.file_name().and_then(|s| s.to_str()).unwrap_or_default();
        if p.is_file() && ok(name) {
            out.insert(stem(&p), p);
        }
    }
    Ok(out)
}

/// Sequence files by id: a dataset directory's entries or every `*.json` file.
pub fn list_sequences(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    if dir.join(MANIFEST).is_file() {
        let m = read_manifest(dir)?;
        return Ok(m.entries.iter().map(|e| (e.id.clone(), dir.join(&e.sequence))).collect());
    }
    list(dir, |n| n.ends_with(".json") && !is_sidecar(n))
}

/// Cloud files by id: a dataset directory's entries or every `*.ply` / `*.xyz` file.
pub fn list_clouds(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    if dir.join(MANIFEST).is_file() {
        let m = read_manifest(dir)?;
        return Ok(m.entries.iter().map(|e| (e.id.clone(), dir.join(&e.cloud))).collect());
    }
    list(dir, |n| n.ends_with(".ply") || n.ends_with(".xyz"))
}

/// One example of a dataset directory.
#[derive(Debug, Clone)]
pub struct Example {
    pub id: String,
    pub sequence: CadSequence,
    pub cloud: PointCloud,
}

pub fn load_examples(dir: &Path, split: Option<&str>) -> Result<Vec<Example>> {
    let m = read_manifest(dir)?;
    let wanted: std::collections::BTreeSet<String> = m.ids(split).into_iter().collect();
    m.entries
        .iter()
        .filter(|e| wanted.contains(&e.id))
        .map(|e| {
            Ok(Example {
                id: e.id.clone(),
                sequence: seqjson::read_sequence(&dir.join(&e.sequence))?,
                cloud: ply::read_ply(&dir.join(&e.cloud))?,
            })
        })
        .collect()
}
