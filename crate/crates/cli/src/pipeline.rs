//! End-to-end runs behind the CLI subcommands.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use adclust_core::game::{solve, Orientation};
use adclust_core::rng::derive_seed;
use adclust_core::synthetic::{generate, simulation};
use adclust_core::walls::{chi2_quantile, eta_of_alpha, RegionStats};
use adclust_core::{adclust_with, AdclustParams, ClusteringResult, Execution};
use serde::Deserialize;

use crate::config::{Job, RunConfig, SweepKind};
use crate::error::{CliError, Result};
use crate::ingest::{ingest_csv, write_csv, Ingested};
use crate::report::{
    write_json, write_rows, AggregateRow, ClusterReport, EtaReport, GameReport, Reevaluation, SweepReport, Timing,
};
use crate::svg::scatter;

struct Stopwatch {
    start: Instant,
    last: Instant,
    timing: Timing,
}

impl Stopwatch {
    fn new(command: &str) -> Self {
        let now = Instant::now();
        Self {
            start: now,
            last: now,
            timing: Timing { command: command.into(), ..Default::default() },
        }
    }

    fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        self.timing.stages.insert(stage.into(), (now - self.last).as_secs_f64());
        self.last = now;
    }

    fn finish(mut self, out: &Path) -> Result<()> {
        self.timing.total_seconds = self.start.elapsed().as_secs_f64();
        write_json(&out.join("timing.json"), &self.timing)
    }
}

fn create_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(CliError::io(out))
}

/// Clusters an already ingested dataset and builds its report.
pub fn cluster_dataset(
    input_name: &str,
    ingested: &Ingested,
    params: &AdclustParams,
    exec: Execution,
) -> Result<(ClusterReport, ClusteringResult)> {
    let result = adclust_with(&ingested.data, params, exec)?;
    let report = ClusterReport::new(input_name, &ingested.data, ingested.truth.as_deref(), &result);
    Ok((report, result))
}

/// Writes `report.json`, `timing.json` and, for two-dimensional data,
/// `clusters.svg` into `out`.
pub fn run_cluster(input: &Path, out: &Path, cfg: &RunConfig, exec: Execution) -> Result<ClusterReport> {
    let mut watch = Stopwatch::new("cluster");
    let ingested = ingest_csv(input, &cfg.ingest)?;
    watch.lap("ingest");
    let (report, result) = cluster_dataset(&input.display().to_string(), &ingested, &cfg.adclust, exec)?;
    watch.lap("cluster");
    create_dir(out)?;
    write_json(&out.join("report.json"), &report)?;
    if cfg.output.svg {
        let walls: Vec<_> = result.walls.iter().map(|w| &w.wall).collect();
        if let Some(svg) = scatter(&ingested.data, &result.composition.regions, &walls) {
            let path = out.join("clusters.svg");
            std::fs::write(&path, svg).map_err(CliError::io(&path))?;
        }
    }
    watch.lap("write");
    watch.finish(out)?;
    Ok(report)
}

/// Grid points of a sweep as `(k, alpha)` pairs.
pub fn sweep_grid(kind: SweepKind, cfg: &RunConfig) -> Vec<(f64, f64)> {
    match kind {
        SweepKind::Weight => cfg.sweep.weight_ks.iter().map(|&k| (k, cfg.adclust.alpha)).collect(),
        SweepKind::Wall => cfg
            .sweep
            .wall_alphas
            .iter()
            .flat_map(|&a| cfg.sweep.wall_ks.iter().map(move |&k| (k, a)))
            .collect(),
    }
}

/// Runs every grid point `sweep.runs` times. Grid points run in parallel;
/// reports are written afterwards in grid order.
pub fn run_sweep(kind: SweepKind, input: &Path, out: &Path, cfg: &RunConfig, exec: Execution) -> Result<SweepReport> {
    let mut watch = Stopwatch::new("sweep");
    let runs: Vec<Ingested> = (0..cfg.sweep.runs)
        .map(|r| {
            let mut opts = cfg.ingest.clone();
            opts.seed = derive_seed(opts.seed, r as u64);
            ingest_csv(input, &opts)
        })
        .collect::<Result<_>>()?;
    watch.lap("ingest");

    let grid = sweep_grid(kind, cfg);
    let jobs: Vec<(usize, f64, f64)> = (0..cfg.sweep.runs)
        .flat_map(|r| grid.iter().map(move |&(k, a)| (r, k, a)))
        .collect();
    let input_name = input.display().to_string();
    let results = exec.map(jobs.len(), |j| {
        let (r, k, alpha) = jobs[j];
        let params = AdclustParams {
            k,
            alpha,
            seed: derive_seed(cfg.adclust.seed, r as u64),
            ..cfg.adclust.clone()
        };
        cluster_dataset(&input_name, &runs[r], &params, Execution::Sequential).map(|(report, _)| report)
    });
    watch.lap("cluster");

    create_dir(out)?;
    if cfg.output.sweep_reports {
        create_dir(&out.join("runs"))?;
    }
    let mut rows = Vec::with_capacity(jobs.len());
    for (&(run, k, alpha), report) in jobs.iter().zip(results) {
        let report = report?;
        let name = format!("runs/k{k}_alpha{alpha}_run{run}.json");
        if cfg.output.sweep_reports {
            write_json(&out.join(&name), &report)?;
        }
        let m = &report.metrics;
        rows.push(AggregateRow {
            k,
            alpha,
            run,
            seed: report.params.seed,
            n_points: m.n_points,
            mixed: m.count(adclust_core::Region::MixedOverlap),
            outlier: m.count(adclust_core::Region::Outlier),
            unknown: m.count(adclust_core::Region::UnknownCluster),
            abnormal_fraction_in_mixed: m.abnormal_fraction[adclust_core::Region::MixedOverlap.as_str()],
            walls: report.walls.len(),
            wall_purity: m.wall_purity,
            report: cfg.output.sweep_reports.then_some(name),
        });
    }
    write_rows(&out.join("aggregate.csv"), &rows)?;
    let summary = SweepReport {
        schema_version: crate::report::SCHEMA_VERSION,
        generator: Default::default(),
        kind,
        input: input_name,
        base_params: cfg.adclust.clone(),
        sweep: cfg.sweep.clone(),
        rows,
    };
    write_json(&out.join("report.json"), &summary)?;
    watch.lap("write");
    watch.finish(out)?;
    Ok(summary)
}

/// Solves a preset game and writes `report.json`, `landscape.csv` and
/// `timing.json`.
pub fn run_game(preset: &str, orientation: Orientation, out: &Path, cfg: &RunConfig, exec: Execution) -> Result<GameReport> {
    let mut watch = Stopwatch::new("game");
    let config = cfg.game.apply(preset)?;
    let (game, tables, eq) = solve(&config, orientation, exec)?;
    watch.lap("solve");
    let outcomes: Vec<_> = (0..game.n_adversaries())
        .map(|i| game.evaluate(eq.level_index, i, eq.t[i]))
        .collect();
    let report = GameReport {
        schema_version: crate::report::SCHEMA_VERSION,
        generator: Default::default(),
        preset: preset.into(),
        orientation,
        config,
        alpha_levels: tables.alphas.len(),
        t_levels: tables.ts.len(),
        t_step: game.config.effective_t_step(orientation),
        reevaluated: Reevaluation {
            defender_utility: game.evaluate_defender(eq.level_index, &eq.t),
            attacker_utilities: outcomes.iter().map(|o| o.utility).collect(),
            pass_rates: outcomes.iter().map(|o| o.pass_rate()).collect(),
        },
        equilibrium: eq,
    };
    create_dir(out)?;
    write_json(&out.join("report.json"), &report)?;
    write_rows(&out.join("landscape.csv"), &adclust_core::game::landscape(&tables))?;
    watch.lap("write");
    watch.finish(out)?;
    Ok(report)
}

#[derive(Deserialize)]
struct StatsFile {
    mean: Vec<f64>,
    covariance: Vec<Vec<f64>>,
    #[serde(default)]
    member_count: usize,
}

/// `eta(alpha)` for the Gaussian in a JSON file holding `mean` and
/// `covariance`.
pub fn run_eta(alpha: f64, stats: &Path, cfg: &RunConfig, exec: Execution) -> Result<EtaReport> {
    let text = std::fs::read_to_string(stats).map_err(|e| CliError::Input {
        path: stats.into(),
        message: e.to_string(),
    })?;
    let file: StatsFile = serde_json::from_str(&text).map_err(|e| CliError::Input {
        path: stats.into(),
        message: e.to_string(),
    })?;
    let region = RegionStats::from_moments(file.mean, file.covariance, file.member_count)?;
    let samples = cfg.adclust.eta_samples;
    let seed = cfg.adclust.seed;
    Ok(EtaReport {
        alpha,
        dim: region.dim(),
        eta: eta_of_alpha(&region, alpha, samples, seed, exec)?,
        chi2_quantile: chi2_quantile(region.dim(), alpha)?,
        samples,
        seed,
    })
}

pub fn run_simulate(preset: &str, seed: u64, out: &Path) -> Result<()> {
    let generated = generate(&simulation(preset, seed)?)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    write_csv(out, &generated.data, Some(&generated.truth))
}

/// What a job printed on success, as one JSON document.
pub fn execute(job: &Job, cfg: &RunConfig, exec: Execution) -> Result<String> {
    let mut cfg = cfg.clone();
    cfg.run = Some(job.clone());
    cfg.validate()?;
    let summary: BTreeMap<&str, serde_json::Value> = match job {
        Job::Cluster { input, out } => {
            let r = run_cluster(input, out, &cfg, exec)?;
            BTreeMap::from([
                ("out", out.display().to_string().into()),
                ("metrics", serde_json::to_value(&r.metrics)?),
                ("walls", r.walls.len().into()),
            ])
        }
        Job::Sweep { kind, input, out } => {
            let r = run_sweep(*kind, input, out, &cfg, exec)?;
            BTreeMap::from([("out", out.display().to_string().into()), ("runs", r.rows.len().into())])
        }
        Job::Game { preset, orientation, out } => {
            let r = run_game(preset, *orientation, out, &cfg, exec)?;
            BTreeMap::from([
                ("out", out.display().to_string().into()),
                ("equilibrium", serde_json::to_value(&r.equilibrium)?),
            ])
        }
        Job::Eta { alpha, stats } => {
            let r = run_eta(*alpha, stats, &cfg, exec)?;
            return crate::report::to_json(&r);
        }
        Job::Simulate { preset, seed, out } => {
            run_simulate(preset, *seed, out)?;
            BTreeMap::from([("out", out.display().to_string().into())])
        }
    };
    crate::report::to_json(&summary)
}
