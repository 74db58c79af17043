use std::path::PathBuf;

use anyhow::Context;
use cadrev::commands::{self, Ctx, PerturbMode};
use cadrev::config::RunConfig;
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "cadrev", version, about = "Point cloud to CAD sequence reverse engineering toolkit")]
struct Cli {
    /// Base seed; per-file seeds are derived as seed XOR file index.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run configuration (TOML or JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for per-file work.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Model preset.
    #[arg(long, global = true, value_enum)]
    preset: Option<PresetArg>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Toy,
    Paper,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Noise,
    Holes,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Hierarchical,
    Flat,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate random sequences with sampled clouds and a manifest.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Sample an oriented cloud (PLY) from every sequence JSON.
    Sample {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Add Perlin noise or punch holes into clouds.
    Perturb {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long)]
        amplitude: Option<f64>,
        #[arg(long)]
        octaves: Option<u32>,
        #[arg(long)]
        max_holes: Option<usize>,
        #[arg(long)]
        min_remaining: Option<usize>,
    },
    /// Score predicted sequences against ground truth.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Training clouds for per-model complexity.
        #[arg(long)]
        train: Option<PathBuf>,
        #[arg(long)]
        complexity_bins: Option<usize>,
    },
    /// Train a model on a synthesized dataset.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        steps: Option<u64>,
        #[arg(long, value_enum)]
        variant: Option<VariantArg>,
        #[arg(long)]
        no_refiner: bool,
        /// Dataset split to train on (`train`, `val`, `test` or `all`).
        #[arg(long, default_value = "train")]
        split: String,
    },
    /// Predict a sequence for every cloud.
    Infer {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Nearest training sequence by chamfer distance for every cloud.
    Retrieve {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Convert DeepCAD-style JSON exports to sequence JSON.
    Import {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare evaluation summaries in a markdown table.
    Report {
        #[arg(long)]
        out: PathBuf,
        summaries: Vec<PathBuf>,
    },
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(p) = cli.preset {
        cfg.preset = match p {
            PresetArg::Toy => "toy",
            PresetArg::Paper => "paper",
        }
        .into();
    }
    match cli.cmd {
        Cmd::Synth { out, count, points } => {
            if let Some(c) = count {
                cfg.synth.count = c;
            }
            if let Some(p) = points {
                cfg.sample.points = p;
            }
            let m = commands::synth(&Ctx::new(cfg, cli.jobs), &out)?;
            println!("{} models written to {} (digest {})", m.count, out.display(), m.digest);
        }
        Cmd::Sample { input, out, points } => {
            if let Some(p) = points {
                cfg.sample.points = p;
            }
            let n = commands::sample(&Ctx::new(cfg, cli.jobs), &input, &out)?;
            println!("{n} clouds written to {}", out.display());
        }
        Cmd::Perturb { input, out, mode, amplitude, octaves, max_holes, min_remaining } => {
            if let Some(a) = amplitude {
                cfg.noise.amplitude = a;
            }
            if let Some(o) = octaves {
                cfg.noise.octaves = o;
            }
            if let Some(m) = max_holes {
                cfg.holes.max_holes = m;
            }
            if let Some(m) = min_remaining {
                cfg.holes.min_remaining = m;
            }
            let mode = match mode {
                ModeArg::Noise => PerturbMode::Noise,
                ModeArg::Holes => PerturbMode::Holes,
            };
            let s = commands::perturb(&Ctx::new(cfg, cli.jobs), &input, &out, mode)?;
            for (id, why) in &s.skipped {
                eprintln!("warning: skipped {id}: {why}");
            }
            println!("{} clouds written, {} skipped", s.written.len(), s.skipped.len());
        }
        Cmd::Eval { pred, gt, out, train, complexity_bins } => {
            if complexity_bins.is_some() {
                cfg.eval.complexity_bins = complexity_bins;
            }
            let r = commands::eval(&Ctx::new(cfg, cli.jobs), &pred, &gt, &out, train.as_deref())?;
            println!(
                "models {}  APCS {:.4}  CSSS {:.4}  median CD {}  IR {:.4}  F1 {:.4}",
                r.rows.len(),
                r.mean_apcs,
                r.mean_csss,
                r.median_cd.map_or("-".into(), |c| format!("{c:.4}")),
                r.ir,
                r.macro_f1
            );
        }
        Cmd::Train { data, out, steps, variant, no_refiner, split } => {
            if let Some(s) = steps {
                cfg.train.steps = s;
            }
            if let Some(v) = variant {
                cfg.train.variant = match v {
                    VariantArg::Hierarchical => "hierarchical",
                    VariantArg::Flat => "flat",
                }
                .into();
            }
            if no_refiner {
                cfg.train.refiner = false;
            }
            let split = (split != "all").then_some(split.as_str());
            let (_, log) = commands::train(&Ctx::new(cfg, cli.jobs), &data, &out, split, |r| {
                if r.step % 100 == 0 {
                    eprintln!("step {:>6}  loss {:.5}", r.step, r.parts.total);
                }
            })?;
            let last = log.last().map_or(f64::NAN, |r| r.parts.total);
            println!("trained {} steps, final loss {last:.5}; checkpoint in {}", log.len(), out.display());
        }
        Cmd::Infer { checkpoint, input, out } => {
            let n = commands::infer(&Ctx::new(cfg, cli.jobs), &checkpoint, &input, &out)?;
            println!("{n} sequences written to {}", out.display());
        }
        Cmd::Retrieve { train, input, out } => {
            let n = commands::retrieve(&Ctx::new(cfg, cli.jobs), &train, &input, &out)?;
            println!("{n} sequences written to {}", out.display());
        }
        Cmd::Import { input, out } => {
            let n = commands::import(&Ctx::new(cfg, cli.jobs), &input, &out)?;
            println!("{n} sequences written to {}", out.display());
        }
        Cmd::Report { out, summaries } => {
            let t = commands::report(&summaries, &out).with_context(|| format!("writing {}", out.display()))?;
            print!("{t}");
        }
    }
    Ok(())
}
