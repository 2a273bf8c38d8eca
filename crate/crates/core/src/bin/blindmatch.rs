use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use blindmatch::pipeline::config::{ExperimentConfig, ExperimentKind, SolverName};
use blindmatch::pipeline::experiments::ExperimentOutput;
use blindmatch::pipeline::report::{output_dir, run_to_dir};
use blindmatch::pipeline::synthetic::{generate_pair, SyntheticConfig};
use blindmatch::{Error, Result};
use clap::{Args, Parser, Subcommand};

/// Blind matching of two embedding sets.
#[derive(Parser)]
#[command(name = "blindmatch", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Distortion of partially shuffled ground-truth matchings.
    Shuffle(RunArgs),
    /// Exact matching of a handful of classes.
    SmallScale(RunArgs),
    /// Subset selection followed by dual-ascent matching.
    LargerScale(RunArgs),
    /// Compare matching solvers on shared instances.
    SolverBench(RunArgs),
    /// Label clusters of one modality through the other.
    UnsupClassify(RunArgs),
    /// Write a synthetic pair of labelled modalities.
    Synth(SynthArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma separated seeds; overrides the config.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Wall-clock limit per dual-ascent solve, in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Matching solver, or the only solver to benchmark.
    #[arg(long)]
    solver: Option<String>,
}

#[derive(Args)]
struct SynthArgs {
    /// Directory receiving x.json and y.json plus their blobs.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 10)]
    classes: usize,
    #[arg(long, default_value_t = 20)]
    samples: usize,
    #[arg(long, default_value_t = 32)]
    dim: usize,
    #[arg(long, default_value_t = 4)]
    latent_dim: usize,
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
    #[arg(long, default_value_t = 0.3)]
    spread: f64,
    /// Draw the second modality independently of the first.
    #[arg(long)]
    unrelated: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn run(kind: ExperimentKind, args: RunArgs) -> Result<()> {
    let bytes = fs::read(&args.config).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::MissingFile(args.config.clone())
        } else {
            Error::Io { path: args.config.clone(), source: e }
        }
    })?;
    let text = String::from_utf8_lossy(&bytes);
    let base = args.config.parent().map(PathBuf::from).unwrap_or_default();
    let mut cfg = ExperimentConfig::from_json(&text, &base)?;
    if cfg.experiment != kind {
        log::warn!("config names {}, running {}", cfg.experiment.name(), kind.name());
        cfg.experiment = kind;
    }
    if let Some(seeds) = args.seeds {
        cfg.seeds = seeds;
    }
    if let Some(limit) = args.time_limit {
        cfg.solver.time_limit = Some(limit);
    }
    if let Some(name) = &args.solver {
        let solver = SolverName::parse(name)?;
        if kind == ExperimentKind::SolverBench {
            cfg.bench.solvers = vec![solver];
        } else {
            cfg.matcher = Some(solver);
        }
    }
    cfg.validate()?;

    let dir = output_dir(&cfg, args.out.as_deref());
    log::info!("running {} into {}", kind.name(), dir.display());
    let (output, manifest) = run_to_dir(&cfg, &bytes, &dir)?;
    match &output {
        ExperimentOutput::Match(rep) => {
            for a in &rep.aggregates {
                println!(
                    "N={} {}: accuracy {:.4} ± {:.4} over {} runs",
                    a.size,
                    a.solver.name(),
                    a.accuracy_mean,
                    a.accuracy_std,
                    a.count
                );
            }
            for f in &rep.failures {
                println!("N={} seed={} {} failed: {}", f.size, f.seed, f.solver.name(), f.error);
            }
        }
        ExperimentOutput::Classify(rep) => println!(
            "accuracy {:.4} ± {:.4}, oracle {:.4}, agreement {:.4}",
            rep.accuracy_mean, rep.accuracy_std, rep.oracle_accuracy_mean, rep.agreement_mean
        ),
        ExperimentOutput::Shuffle(rep) => {
            for s in &rep.series {
                println!("{}: spearman {:.4}", s.kernel, s.spearman);
            }
        }
    }
    println!("wrote {} files to {}", manifest.outputs.len() + 1, dir.display());
    Ok(())
}

fn synth(args: SynthArgs) -> Result<()> {
    let cfg = SyntheticConfig {
        classes: args.classes,
        samples_per_class: args.samples,
        dim: args.dim,
        latent_dim: args.latent_dim,
        noise: args.noise,
        spread: args.spread,
        unrelated: args.unrelated,
        seed: args.seed,
    };
    let (x, y) = generate_pair(&cfg)?;
    fs::create_dir_all(&args.out).map_err(|e| Error::Io { path: args.out.clone(), source: e })?;
    x.save(&args.out.join("x.json"))?;
    y.save(&args.out.join("y.json"))?;
    println!("wrote {} rows per modality to {}", x.rows(), args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Shuffle(a) => run(ExperimentKind::Shuffle, a),
        Command::SmallScale(a) => run(ExperimentKind::SmallScale, a),
        Command::LargerScale(a) => run(ExperimentKind::LargerScale, a),
        Command::SolverBench(a) => run(ExperimentKind::SolverBench, a),
        Command::UnsupClassify(a) => run(ExperimentKind::UnsupClassify, a),
        Command::Synth(a) => synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code().clamp(1, 255) as u8)
        }
    }
}
