//! TOML run configuration. Every section is optional and falls back to the
//! library defaults; command-line flags override the file.
//!
//! ```toml
//! [run]
//! command = "cluster"
//! input = "sim2.csv"
//! out = "out/sim2"
//!
//! [adclust]
//! k = 10.0
//! alpha = 0.6
//! ```

use std::path::{Path, PathBuf};

use adclust_core::game::{GameConfig, Orientation};
use adclust_core::synthetic::game_preset;
use adclust_core::AdclustParams;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::ingest::IngestOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    Weight,
    Wall,
}

impl std::str::FromStr for SweepKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "weight" => Ok(SweepKind::Weight),
            "wall" => Ok(SweepKind::Wall),
            other => Err(format!("unknown sweep kind `{other}` (expected weight or wall)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase", deny_unknown_fields)]
pub enum Job {
    Cluster { input: PathBuf, out: PathBuf },
    Simulate { preset: String, seed: u64, out: PathBuf },
    Game { preset: String, orientation: Orientation, out: PathBuf },
    Sweep { kind: SweepKind, input: PathBuf, out: PathBuf },
    Eta { alpha: f64, stats: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// k values of the weight sweep, run at `adclust.alpha`.
    pub weight_ks: Vec<f64>,
    pub wall_alphas: Vec<f64>,
    pub wall_ks: Vec<f64>,
    /// Repetitions per grid point. Run `r` reseeds label retention (when
    /// `ingest.label_fraction` is set) and the wall calibration.
    pub runs: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            weight_ks: vec![1.0, 10.0, 30.0, 50.0, 100.0],
            wall_alphas: vec![0.6, 0.7, 0.8, 0.9, 0.95],
            wall_ks: vec![1.0, 30.0, 50.0],
            runs: 1,
        }
    }
}

/// Overrides applied on top of a named game preset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GameOverrides {
    pub sample_size: Option<usize>,
    pub alpha_step: Option<f64>,
    pub t_step: Option<f64>,
    pub joint_t_step: Option<f64>,
    pub budget: Option<u64>,
    pub c: Option<f64>,
    pub k_max: Option<f64>,
    pub eta_samples: Option<usize>,
    pub seed: Option<u64>,
}

impl GameOverrides {
    pub fn apply(&self, preset: &str) -> Result<GameConfig> {
        let mut cfg = game_preset(preset)?;
        if let Some(n) = self.sample_size {
            cfg.normal.sample_size = n;
            cfg.adversaries.iter_mut().for_each(|a| a.sample_size = n);
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
            cfg.normal.seed = adclust_core::rng::derive_seed(seed, 0);
            for (i, a) in cfg.adversaries.iter_mut().enumerate() {
                a.seed = adclust_core::rng::derive_seed(seed, 1 + i as u64);
            }
        }
        if let Some(k) = self.k_max {
            cfg.utilities.iter_mut().for_each(|u| u.k_max = k);
        }
        cfg.alpha_step = self.alpha_step.unwrap_or(cfg.alpha_step);
        cfg.t_step = self.t_step.unwrap_or(cfg.t_step);
        cfg.joint_t_step = self.joint_t_step.unwrap_or(cfg.joint_t_step);
        cfg.budget = self.budget.unwrap_or(cfg.budget);
        cfg.c = self.c.unwrap_or(cfg.c);
        cfg.eta_samples = self.eta_samples.unwrap_or(cfg.eta_samples);
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputOptions {
    /// Scatter plot for two-dimensional data.
    pub svg: bool,
    /// Per-grid-point reports next to the sweep aggregate.
    pub sweep_reports: bool,
}

impl Default for OutputOptions {
    fn default() -> Self {
        Self { svg: true, sweep_reports: true }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub run: Option<Job>,
    pub adclust: AdclustParams,
    pub ingest: IngestOptions,
    pub sweep: SweepConfig,
    pub game: GameOverrides,
    pub output: OutputOptions,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Input {
            path: path.into(),
            message: e.to_string(),
        })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.adclust.validate()?;
        if self.sweep.runs == 0 {
            return Err(CliError::Config("sweep.runs must be at least 1".into()));
        }
        let exists = |p: &Path| {
            if p.is_file() {
                Ok(())
            } else {
                Err(CliError::Input { path: p.into(), message: "no such file".into() })
            }
        };
        match &self.run {
            Some(Job::Cluster { input, .. } | Job::Sweep { input, .. }) => exists(input),
            Some(Job::Eta { stats, .. }) => exists(stats),
            Some(Job::Game { preset, .. }) => self.game.apply(preset).map(drop),
            Some(Job::Simulate { .. }) | None => Ok(()),
        }
    }
}
