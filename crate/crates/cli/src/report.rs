//! JSON reports. Field order is fixed by the struct definitions, so the same
//! run always serializes to the same bytes. Run timing is kept out of the
//! reports and written to `timing.json` instead.

use std::collections::BTreeMap;
use std::path::Path;

use adclust_core::game::{Equilibrium, GameConfig, Orientation};
use adclust_core::grid::Thresholds;
use adclust_core::synthetic::ComponentClass;
use adclust_core::walls::WallKind;
use adclust_core::{AdclustParams, ClusteringResult, Dataset, Label, Region};
use serde::{Deserialize, Serialize};

use crate::config::{SweepConfig, SweepKind};
use crate::error::{CliError, Result};
use crate::ingest::truth_str;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub name: String,
    pub version: String,
}

impl Default for Generator {
    fn default() -> Self {
        Self {
            name: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSummary {
    pub path: String,
    pub n_points: usize,
    pub dim: usize,
    pub feature_names: Vec<String>,
    pub labeled_normal: usize,
    pub labeled_abnormal: usize,
    pub has_truth: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRow {
    pub index: usize,
    pub label: Label,
    pub truth: Option<String>,
    pub region: Region,
    pub global_cluster: Option<usize>,
    /// Labeled or residual sub-cluster containing the point.
    pub subcluster: Option<usize>,
    pub inside_wall: bool,
    pub score: f64,
    pub weight: f64,
    pub density: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WallRow {
    pub subcluster: usize,
    pub global_cluster: usize,
    pub kind: WallKind,
    pub level: f64,
    pub radius: f64,
    pub mean: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub member_count: usize,
    pub ridge: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub global_clusters: usize,
    pub global_sizes: Vec<usize>,
    pub normal_subclusters: usize,
    pub abnormal_subclusters: usize,
    pub residual_subclusters: usize,
    pub conflicted_points: usize,
    pub residual_outliers: usize,
    pub global_outliers: usize,
}

/// Everything here is recomputable from the per-point table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionMetrics {
    pub n_points: usize,
    pub counts: BTreeMap<String, usize>,
    /// Ground-truth abnormal share of each region; absent without truth.
    pub abnormal_fraction: BTreeMap<String, Option<f64>>,
    pub mixed_plus_outlier: usize,
    pub inside_wall: usize,
    pub protected: usize,
    /// Ground-truth normal share of the points inside walls.
    pub wall_purity: Option<f64>,
}

impl RegionMetrics {
    pub fn from_points(points: &[PointRow]) -> Self {
        let mut counts = BTreeMap::new();
        let mut abnormal_fraction = BTreeMap::new();
        let has_truth = points.iter().all(|p| p.truth.is_some()) && !points.is_empty();
        for region in Region::ALL {
            let rows: Vec<&PointRow> = points.iter().filter(|p| p.region == region).collect();
            counts.insert(region.as_str().to_string(), rows.len());
            let frac = (has_truth && !rows.is_empty()).then(|| {
                rows.iter().filter(|p| p.truth.as_deref() == Some("abnormal")).count() as f64 / rows.len() as f64
            });
            abnormal_fraction.insert(region.as_str().to_string(), frac);
        }
        let inside: Vec<&PointRow> = points.iter().filter(|p| p.inside_wall).collect();
        let wall_purity = (has_truth && !inside.is_empty()).then(|| {
            inside.iter().filter(|p| p.truth.as_deref() == Some("normal")).count() as f64 / inside.len() as f64
        });
        Self {
            n_points: points.len(),
            mixed_plus_outlier: counts[Region::MixedOverlap.as_str()] + counts[Region::Outlier.as_str()],
            counts,
            abnormal_fraction,
            inside_wall: inside.len(),
            protected: inside.iter().filter(|p| p.region == Region::NormalCore).count(),
            wall_purity,
        }
    }

    pub fn count(&self, region: Region) -> usize {
        self.counts[region.as_str()]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub schema_version: u32,
    pub generator: Generator,
    pub input: InputSummary,
    pub params: AdclustParams,
    pub sections: Vec<usize>,
    pub degenerate_dims: Vec<usize>,
    pub thresholds: Thresholds,
    pub kernel_bandwidth: f64,
    pub clusters: ClusterSummary,
    pub walls: Vec<WallRow>,
    pub skipped_walls: Vec<usize>,
    pub metrics: RegionMetrics,
    pub points: Vec<PointRow>,
    pub notes: Vec<String>,
}

impl ClusterReport {
    pub fn new(
        input_path: &str,
        data: &Dataset,
        truth: Option<&[ComponentClass]>,
        result: &ClusteringResult,
    ) -> Self {
        let comp = &result.composition;
        let mut subcluster_of = vec![None; data.len()];
        for (i, s) in comp.subclusters.iter().enumerate() {
            s.members.iter().for_each(|&p| subcluster_of[p] = Some(i));
        }
        let points: Vec<PointRow> = (0..data.len())
            .map(|p| PointRow {
                index: p,
                label: data.label(p),
                truth: truth.map(|t| truth_str(t[p]).to_string()),
                region: comp.regions[p],
                global_cluster: comp.global_of_point[p],
                subcluster: subcluster_of[p],
                inside_wall: result.inside_wall[p],
                score: result.weighting.scores[p],
                weight: result.weighting.weights[p],
                density: result.profile.density.point[p],
            })
            .collect();
        let walls = result
            .walls
            .iter()
            .map(|w| WallRow {
                subcluster: w.subcluster,
                global_cluster: w.global_cluster,
                kind: w.wall.kind,
                level: w.wall.level,
                radius: w.wall.radius,
                mean: w.wall.stats.mean.clone(),
                covariance: w.wall.stats.covariance.clone(),
                member_count: w.wall.stats.member_count,
                ridge: w.wall.stats.ridge,
            })
            .collect();
        let mut notes = Vec::new();
        if data.dim() != 2 {
            notes.push(format!("no plot: plotting requires q = 2, data has q = {}", data.dim()));
        }
        if truth.is_none() {
            notes.push("no ground truth: abnormal fractions and wall purity omitted".into());
        }
        Self {
            schema_version: SCHEMA_VERSION,
            generator: Generator::default(),
            input: InputSummary {
                path: input_path.to_string(),
                n_points: data.len(),
                dim: data.dim(),
                feature_names: data.feature_names().to_vec(),
                labeled_normal: data.count_label(Label::Normal),
                labeled_abnormal: data.count_label(Label::Abnormal),
                has_truth: truth.is_some(),
            },
            params: result.params.clone(),
            sections: result.sections.clone(),
            degenerate_dims: result.degenerate_dims.clone(),
            thresholds: result.thresholds,
            kernel_bandwidth: result.weighting.bandwidth,
            clusters: ClusterSummary {
                global_clusters: comp.global_clusters.len(),
                global_sizes: comp.global_clusters.iter().map(Vec::len).collect(),
                normal_subclusters: result.pass1.normal.len(),
                abnormal_subclusters: result.pass1.abnormal.len(),
                residual_subclusters: comp.subclusters.len() - result.pass1.normal.len() - result.pass1.abnormal.len(),
                conflicted_points: result.pass1.conflicted.len(),
                residual_outliers: result.residual_outliers.len(),
                global_outliers: result.global_outliers.len(),
            },
            walls,
            skipped_walls: result.skipped_walls.clone(),
            metrics: RegionMetrics::from_points(&points),
            points,
            notes,
        }
    }

    /// Whether the embedded metrics match a recomputation from the points.
    pub fn is_self_consistent(&self) -> bool {
        RegionMetrics::from_points(&self.points) == self.metrics
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reevaluation {
    pub defender_utility: f64,
    pub attacker_utilities: Vec<f64>,
    pub pass_rates: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameReport {
    pub schema_version: u32,
    pub generator: Generator,
    pub preset: String,
    pub orientation: Orientation,
    pub config: GameConfig,
    pub alpha_levels: usize,
    pub t_levels: usize,
    pub t_step: f64,
    pub equilibrium: Equilibrium,
    /// Utilities recomputed directly from the samples at the equilibrium.
    pub reevaluated: Reevaluation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub k: f64,
    pub alpha: f64,
    pub run: usize,
    pub seed: u64,
    pub n_points: usize,
    pub mixed: usize,
    pub outlier: usize,
    pub unknown: usize,
    pub abnormal_fraction_in_mixed: Option<f64>,
    pub walls: usize,
    pub wall_purity: Option<f64>,
    pub report: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub schema_version: u32,
    pub generator: Generator,
    pub kind: SweepKind,
    pub input: String,
    pub base_params: AdclustParams,
    pub sweep: SweepConfig,
    pub rows: Vec<AggregateRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaReport {
    pub alpha: f64,
    pub dim: usize,
    pub eta: f64,
    pub chi2_quantile: f64,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub command: String,
    pub stages: BTreeMap<String, f64>,
    pub total_seconds: f64,
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, to_json(value)?).map_err(CliError::io(path))
}

pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(CliError::csv(path))?;
    for row in rows {
        w.serialize(row).map_err(CliError::csv(path))?;
    }
    w.flush().map_err(CliError::io(path))
}
