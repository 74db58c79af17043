use std::fs;
use std::path::Path;
use std::process::Command;

use cadrev::commands::{self, Ctx, PerturbMode};
use cadrev::config::RunConfig;
use cadrev::{dataset, ply, seqjson};
use cadrev_core::cad::{generate_random_sequence, validate, GeneratorSpec};
use cadrev_core::geometry::sample_surface;

fn ctx(seed: u64, count: usize, points: usize, jobs: usize) -> Ctx {
    let mut cfg = RunConfig { seed, ..Default::default() };
    cfg.synth.count = count;
    cfg.sample.points = points;
    cfg.eval.cd_points = 1024;
    Ctx::new(cfg, jobs)
}

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    for e in walk(dir) {
        out.push((e.strip_prefix(dir).unwrap().display().to_string(), fs::read(&e).unwrap()));
    }
    out.sort();
    out
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    fs::read_dir(dir)
        .unwrap()
        .flat_map(|e| {
            let p = e.unwrap().path();
            if p.is_dir() { walk(&p) } else { vec![p] }
        })
        .collect()
}

#[test]
fn synth_is_deterministic_and_valid() {
    let t = tempfile::tempdir().unwrap();
    let (a, b, c) = (t.path().join("a"), t.path().join("b"), t.path().join("c"));
    let ma = commands::synth(&ctx(1, 10, 256, 1), &a).unwrap();
    let mb = commands::synth(&ctx(1, 10, 256, 2), &b).unwrap();
    let mc = commands::synth(&ctx(2, 10, 256, 1), &c).unwrap();
    assert_eq!(ma.digest, mb.digest);
    assert_ne!(ma.digest, mc.digest);
    assert_eq!(tree(&a), tree(&b));
    assert_eq!(ma.entries.len(), 10);
    let s = &ma.splits;
    assert_eq!(s.train.len() + s.val.len() + s.test.len(), 10);
    for e in dataset::load_examples(&a, None).unwrap() {
        assert!(validate(&e.sequence).valid(), "{}", e.id);
        assert_eq!(e.cloud.len(), 256);
    }
    assert!(a.join("config.resolved.json").exists());
}

#[test]
fn eval_identity_and_missing_ids() {
    let t = tempfile::tempdir().unwrap();
    let ds = t.path().join("ds");
    let c = ctx(3, 6, 256, 2);
    commands::synth(&c, &ds).unwrap();
    let seqs = ds.join("sequences");
    let r = commands::eval(&c, &seqs, &seqs, &t.path().join("ev"), Some(&ds.join("clouds"))).unwrap();
    assert_eq!((r.mean_apcs, r.ir, r.mean_acc_cmd), (1.0, 0.0, 1.0));
    assert!(r.median_cd.unwrap() <= 1.0, "{:?}", r.median_cd);
    let cx: Vec<_> = r.rows.iter().map(|row| row.complexity.unwrap()).collect();
    assert!(cx.iter().all(|&c| c < 5e-3), "{cx:?}");
    let csv = fs::read_to_string(t.path().join("ev/report.csv")).unwrap();
    assert!(csv.starts_with("id,apcs,csss,cd_x1000,valid,acc_cmd,acc_param,f1,complexity,bin\n"));
    assert_eq!(csv.lines().count(), 7);
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(t.path().join("ev/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["config"]["seed"], 3);

    // two predictions missing: both are named before aborting
    let pred = t.path().join("pred");
    fs::create_dir(&pred).unwrap();
    for (id, p) in dataset::list_sequences(&seqs).unwrap().into_iter().skip(2) {
        fs::copy(p, pred.join(format!("{id}.json"))).unwrap();
    }
    let err = commands::eval(&c, &pred, &seqs, &t.path().join("ev2"), None).unwrap_err().to_string();
    assert!(err.contains("000000") && err.contains("000001"), "{err}");

    let out = Command::new(env!("CARGO_BIN_EXE_cadrev"))
        .args(["eval", "--pred"])
        .arg(&pred)
        .arg("--gt")
        .arg(&seqs)
        .arg("--out")
        .arg(t.path().join("ev3"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("000000") && stderr.contains("000001"), "{stderr}");
}

#[test]
fn superset_and_unparseable_predictions() {
    let t = tempfile::tempdir().unwrap();
    let (gt, pred) = (t.path().join("gt"), t.path().join("pred"));
    fs::create_dir_all(&gt).unwrap();
    fs::create_dir_all(&pred).unwrap();
    let spec = GeneratorSpec { steps: (1, 1), loops_per_sketch: (1, 1), circle_probability: 1.0, ..Default::default() };
    let g = generate_random_sequence(11, &spec).unwrap();
    let mut sup = g.clone();
    // massive over-prediction: six more single-loop steps with many edges
    let busy = GeneratorSpec { steps: (2, 2), loops_per_sketch: (1, 1), polygon_sides: (8, 8), circle_probability: 0.0, arc_probability: 0.0, ..spec.clone() };
    for seed in 0..3 {
        let extra = generate_random_sequence(100 + seed, &busy).unwrap();
        sup.steps.extend(extra.steps);
    }
    seqjson::write_sequence(&gt.join("a.json"), &g).unwrap();
    seqjson::write_sequence(&pred.join("a.json"), &sup).unwrap();
    seqjson::write_sequence(&gt.join("b.json"), &g).unwrap();
    fs::write(pred.join("b.json"), "{ not json").unwrap();
    let r = commands::eval(&ctx(0, 0, 0, 1), &pred, &gt, &t.path().join("ev"), None).unwrap();
    let (a, b) = (&r.rows[0], &r.rows[1]);
    assert_eq!((a.acc_cmd, a.acc_param, a.valid), (1.0, 1.0, true));
    assert!(a.apcs < 0.1, "{}", a.apcs);
    assert_eq!((b.apcs, b.valid, b.cd_reported), (0.0, false, None));
    assert!((r.ir - 0.5).abs() < 1e-15);
}

#[test]
fn perturb_contracts() {
    let t = tempfile::tempdir().unwrap();
    let seqs = t.path().join("seqs");
    fs::create_dir(&seqs).unwrap();
    for i in 0..3 {
        let s = generate_random_sequence(20 + i, &GeneratorSpec::default()).unwrap();
        seqjson::write_sequence(&seqs.join(format!("m{i}.json")), &s).unwrap();
    }
    let c = ctx(4, 0, 8192, 2);
    let clouds = t.path().join("clouds");
    assert_eq!(commands::sample(&c, &seqs, &clouds).unwrap(), 3);

    // zero amplitude leaves the geometry byte-identical
    let mut zero = c.clone();
    zero.cfg.noise.amplitude = 0.0;
    commands::perturb(&zero, &clouds, &t.path().join("n0"), PerturbMode::Noise).unwrap();
    for i in 0..3 {
        let f = format!("m{i}.ply");
        assert_eq!(fs::read(clouds.join(&f)).unwrap(), fs::read(t.path().join("n0").join(&f)).unwrap());
    }

    let noisy = t.path().join("n1");
    commands::perturb(&c, &clouds, &noisy, PerturbMode::Noise).unwrap();
    let orig = ply::read_ply(&clouds.join("m0.ply")).unwrap();
    let moved = ply::read_ply(&noisy.join("m0.ply")).unwrap();
    let max = orig.points.iter().zip(&moved.points).map(|(a, b)| (0..3).map(|k| (a[k] - b[k]).powi(2)).sum::<f64>().sqrt()).fold(0.0, f64::max);
    assert!(max > 0.0 && max <= 0.001 + 1e-6, "{max}");

    let holes = t.path().join("h");
    let s = commands::perturb(&c, &clouds, &holes, PerturbMode::Holes).unwrap();
    assert_eq!((s.written.len(), s.skipped.len()), (3, 0));
    for i in 0..3 {
        let pc = ply::read_ply(&holes.join(format!("m{i}.ply"))).unwrap();
        assert!(pc.len() >= 4096);
        let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(holes.join(format!("m{i}.meta.json"))).unwrap()).unwrap();
        let n = meta["holes"].as_array().unwrap().len();
        assert!((1..=10).contains(&n));
        assert_eq!(meta["removed"].as_array().unwrap().len(), 8192 - pc.len());
    }
    // reruns and worker counts do not change a byte
    let again = t.path().join("h2");
    commands::perturb(&Ctx::new(c.cfg.clone(), 1), &clouds, &again, PerturbMode::Holes).unwrap();
    assert_eq!(tree(&holes), tree(&again));

    // clouds below the floor are skipped and listed
    let small = t.path().join("small");
    commands::sample(&ctx(4, 0, 1000, 1), &seqs, &small).unwrap();
    let s = commands::perturb(&c, &small, &t.path().join("hs"), PerturbMode::Holes).unwrap();
    assert_eq!(s.skipped.len(), 3);
    let summary = fs::read_to_string(t.path().join("hs/summary.json")).unwrap();
    assert!(summary.contains("m0") && summary.contains("m2"));
}

#[test]
fn retrieve_finds_the_duplicate() {
    let t = tempfile::tempdir().unwrap();
    let ds = t.path().join("ds");
    let c = ctx(6, 8, 1024, 2);
    commands::synth(&c, &ds).unwrap();
    let examples = dataset::load_examples(&ds, None).unwrap();
    let (q, gt) = (t.path().join("q"), t.path().join("gt"));
    fs::create_dir_all(&q).unwrap();
    fs::create_dir_all(&gt).unwrap();
    // an independent resampling of model 5
    let twin = &examples[5];
    ply::write_ply(&q.join("dup.ply"), &sample_surface(&twin.sequence, 1024, 999).unwrap()).unwrap();
    seqjson::write_sequence(&gt.join("dup.json"), &twin.sequence).unwrap();
    let out = t.path().join("ret");
    commands::retrieve(&c, &ds, &q, &out).unwrap();
    let r = commands::eval(&c, &out, &gt, &t.path().join("ev"), None).unwrap();
    assert_eq!(r.rows[0].apcs, 1.0);
}

#[test]
fn train_then_infer_is_deterministic() {
    let t = tempfile::tempdir().unwrap();
    let ds = t.path().join("ds");
    let mut c = ctx(7, 4, 512, 2);
    c.cfg.train.steps = 3;
    commands::synth(&c, &ds).unwrap();
    let (_, log) = commands::train(&c, &ds, &t.path().join("tr"), None, |_| {}).unwrap();
    assert_eq!(log.len(), 3);
    let csv = fs::read_to_string(t.path().join("tr/loss.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    let ck = t.path().join("tr/checkpoint.bin");
    let (p1, p2) = (t.path().join("p1"), t.path().join("p2"));
    commands::infer(&c, &ck, &ds.join("clouds"), &p1).unwrap();
    commands::infer(&Ctx::new(c.cfg.clone(), 1), &ck, &ds.join("clouds"), &p2).unwrap();
    assert_eq!(tree(&p1), tree(&p2));
    assert_eq!(dataset::list_sequences(&p1).unwrap().len(), 4);

    // same seed, same checkpoint bytes
    commands::train(&c, &ds, &t.path().join("tr2"), None, |_| {}).unwrap();
    assert_eq!(fs::read(&ck).unwrap(), fs::read(t.path().join("tr2/checkpoint.bin")).unwrap());
}

#[test]
fn report_compares_runs() {
    let t = tempfile::tempdir().unwrap();
    let ds = t.path().join("ds");
    let c = ctx(8, 3, 256, 1);
    commands::synth(&c, &ds).unwrap();
    let seqs = ds.join("sequences");
    commands::eval(&c, &seqs, &seqs, &t.path().join("x"), None).unwrap();
    commands::eval(&c, &seqs, &seqs, &t.path().join("y"), None).unwrap();
    let table = commands::report(&[t.path().join("x/summary.json"), t.path().join("y/summary.json")], &t.path().join("cmp.md")).unwrap();
    assert_eq!(table.lines().count(), 4);
    assert!(table.contains("| x |") && table.contains("| y |"));
}

#[test]
fn config_files_are_strict() {
    let t = tempfile::tempdir().unwrap();
    let good = t.path().join("run.toml");
    fs::write(&good, "seed = 9\n[train]\nsteps = 5\nvariant = \"flat\"\n").unwrap();
    let cfg = RunConfig::load(&good).unwrap();
    assert_eq!((cfg.seed, cfg.train.steps), (9, 5));
    let bad = t.path().join("bad.toml");
    fs::write(&bad, "[train]\nstepz = 5\n").unwrap();
    assert!(RunConfig::load(&bad).is_err());
    let (_, h1) = cfg.resolved().unwrap();
    let (_, h2) = RunConfig::load(&good).unwrap().resolved().unwrap();
    assert_eq!(h1, h2);
}
