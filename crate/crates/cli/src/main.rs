use std::path::PathBuf;
use std::process::ExitCode;

use adclust_cli::{execute, CliError, Job, RunConfig, SweepKind};
use adclust_core::game::Orientation;
use adclust_core::{Execution, WallKind};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "adclust", version, about = "Adversarial clustering with defensive walls")]
struct Cli {
    /// TOML run configuration; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Run every loop on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster a CSV dataset and fit defensive walls.
    Cluster {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        k: Option<f64>,
        #[arg(long)]
        wall: Option<WallKind>,
        #[arg(long)]
        out: PathBuf,
        /// Keep labels on this random fraction of the labeled rows.
        #[arg(long)]
        label_fraction: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        no_svg: bool,
    },
    /// Write a simulation dataset as CSV.
    Simulate {
        #[arg(long)]
        preset: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve a defender/adversary wall game.
    Game {
        #[arg(long)]
        preset: String,
        #[arg(long)]
        orientation: Orientation,
        #[arg(long)]
        out: PathBuf,
        /// Monte-Carlo draws per population.
        #[arg(long)]
        sample_size: Option<usize>,
    },
    /// Weight sweep or wall-level sweep over one dataset.
    Sweep {
        #[arg(long)]
        kind: SweepKind,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        label_fraction: Option<f64>,
    },
    /// Manhattan wall radius eta(alpha) for a Gaussian given as JSON.
    Eta {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        stats: PathBuf,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the job described in the `[run]` section of `--config`.
    Run,
}

fn job(command: Command, cfg: &mut RunConfig) -> Result<Job, CliError> {
    Ok(match command {
        Command::Cluster { input, alpha, k, wall, out, label_fraction, seed, no_svg } => {
            let p = &mut cfg.adclust;
            p.alpha = alpha.unwrap_or(p.alpha);
            p.k = k.unwrap_or(p.k);
            p.wall_kind = wall.unwrap_or(p.wall_kind);
            if let Some(s) = seed {
                p.seed = s;
                cfg.ingest.seed = s;
            }
            cfg.ingest.label_fraction = label_fraction.or(cfg.ingest.label_fraction);
            cfg.output.svg &= !no_svg;
            Job::Cluster { input, out }
        }
        Command::Simulate { preset, seed, out } => Job::Simulate { preset, seed, out },
        Command::Game { preset, orientation, out, sample_size } => {
            cfg.game.sample_size = sample_size.or(cfg.game.sample_size);
            Job::Game { preset, orientation, out }
        }
        Command::Sweep { kind, input, out, runs, label_fraction } => {
            cfg.sweep.runs = runs.unwrap_or(cfg.sweep.runs);
            cfg.ingest.label_fraction = label_fraction.or(cfg.ingest.label_fraction);
            Job::Sweep { kind, input, out }
        }
        Command::Eta { alpha, stats, samples, seed } => {
            cfg.adclust.eta_samples = samples.unwrap_or(cfg.adclust.eta_samples);
            cfg.adclust.seed = seed.unwrap_or(cfg.adclust.seed);
            Job::Eta { alpha, stats }
        }
        Command::Run => cfg
            .run
            .clone()
            .ok_or_else(|| CliError::Config("`run` needs --config with a [run] section".into()))?,
    })
}

fn run(cli: Cli) -> Result<String, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let job = job(cli.command, &mut cfg)?;
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    match cli.threads {
        #[cfg(feature = "parallel")]
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(e.to_string()))?
            .install(|| execute(&job, &cfg, exec)),
        _ => execute(&job, &cfg, exec),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(summary) => {
            print!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
