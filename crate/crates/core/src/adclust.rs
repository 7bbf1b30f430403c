//! The three-pass clustering pipeline and the region taxonomy built from it.
//!
//! Pass 1 grows normal and abnormal sub-clusters from label-weighted density.
//! Pass 2 clusters whatever pass 1 left behind by plain density. Pass 3
//! clusters everything while ignoring labels. Matching the sub-clusters
//! against the global clusters tags every point, and a wall is fitted around
//! each normal region.

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Label};
use crate::error::{Error, Result, Stage};
use crate::exec::Execution;
use crate::grid::{build_grid, thresholds, DensityMode, DensityProfile, Grid, LogBase, Thresholds};
use crate::kernel::{KernelClassifier, KernelOptions, Weighting};
use crate::merge::{merge, merge_with, MergeOutcome};
use crate::rng::derive_seed;
use crate::walls::{RegionStats, Wall, WallKind, DEFAULT_ETA_SAMPLES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdclustParams {
    /// Label weight magnitude.
    pub k: f64,
    pub coef_rt: f64,
    pub coef_dt: f64,
    /// Wall level.
    pub alpha: f64,
    pub wall_kind: WallKind,
    /// Fraction of each dimension's range covered by one grid section.
    pub target_fraction: f64,
    pub seed: u64,
    pub log_base: LogBase,
    pub density_mode: DensityMode,
    /// Kernel bandwidth; `None` uses the median labeled pairwise distance.
    pub bandwidth: Option<f64>,
    /// Multiplier on the median-distance bandwidth heuristic.
    pub bandwidth_scale: f64,
    /// Class-balanced kernel scores.
    pub balanced_scores: bool,
    pub eta_samples: usize,
    /// Normal regions with fewer points than this get no wall.
    pub min_wall_points: usize,
    /// Keep a pass-1 sub-cluster only if it holds a labeled point of its own
    /// class. Without this, weight leaking from distant labels can promote an
    /// unlabeled blob to a labeled region.
    pub require_label_anchor: bool,
    /// Recount densities among the residual points in pass 2 instead of
    /// reusing the full-data counts.
    pub recompute_residual_density: bool,
}

impl Default for AdclustParams {
    fn default() -> Self {
        Self {
            k: 30.0,
            coef_rt: 0.55,
            coef_dt: 5.0,
            alpha: 0.6,
            wall_kind: WallKind::Euclidean,
            target_fraction: crate::grid::DEFAULT_TARGET_FRACTION,
            seed: 0,
            log_base: LogBase::Natural,
            density_mode: DensityMode::Neighborhood,
            bandwidth: None,
            bandwidth_scale: 0.5,
            balanced_scores: true,
            eta_samples: DEFAULT_ETA_SAMPLES,
            min_wall_points: 10,
            require_label_anchor: true,
            recompute_residual_density: false,
        }
    }
}

impl AdclustParams {
    /// The literal published coefficients (`coef_rt = 20`, `coef_dt = 0.95`).
    /// On the bundled simulations these give a merge radius well below the
    /// typical nearest-neighbor spacing, so the defaults are calibrated
    /// instead.
    pub fn published() -> Self {
        Self {
            coef_rt: 20.0,
            coef_dt: 0.95,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Domain(format!("{name} must be positive and finite, got {v}")))
            }
        };
        positive("k", self.k)?;
        positive("coef_rt", self.coef_rt)?;
        positive("coef_dt", self.coef_dt)?;
        positive("target_fraction", self.target_fraction)?;
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Domain(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.target_fraction > 1.0 {
            return Err(Error::Domain(format!(
                "target_fraction must be at most 1, got {}",
                self.target_fraction
            )));
        }
        if self.wall_kind == WallKind::Manhattan && self.eta_samples < 1000 {
            return Err(Error::Domain(format!(
                "eta_samples must be >= 1000, got {}",
                self.eta_samples
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassTag {
    Normal,
    Abnormal,
    Unlabeled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PassOrigin {
    Pass1,
    Pass2,
    Pass3,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubCluster {
    /// Sorted point ids.
    pub members: Vec<usize>,
    pub class_tag: ClassTag,
    pub pass_origin: PassOrigin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    NormalCore,
    AbnormalRegion,
    MixedOverlap,
    UnknownCluster,
    Outlier,
}

impl Region {
    pub const ALL: [Region; 5] = [
        Region::NormalCore,
        Region::AbnormalRegion,
        Region::MixedOverlap,
        Region::UnknownCluster,
        Region::Outlier,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Region::NormalCore => "normal_core",
            Region::AbnormalRegion => "abnormal_region",
            Region::MixedOverlap => "mixed_overlap",
            Region::UnknownCluster => "unknown_cluster",
            Region::Outlier => "outlier",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pass1 {
    pub normal: Vec<SubCluster>,
    pub abnormal: Vec<SubCluster>,
    /// Points claimed by clusters of both signs.
    pub conflicted: Vec<usize>,
    /// Points outside every kept pass-1 sub-cluster, ascending.
    pub remaining: Vec<usize>,
}

/// Labeled pass: one merge seeded by strongly normal points and one seeded by
/// strongly abnormal points, both on the signed re-weighted density.
pub fn pass1_labeled(
    data: &Dataset,
    density: &[usize],
    th: &Thresholds,
    weighting: &Weighting,
    require_label_anchor: bool,
    exec: Execution,
) -> Pass1 {
    let rho = weighting.reweighted_density(density);
    let all: Vec<usize> = (0..data.len()).collect();
    // a seed of one class never joins the other class's clusters; weak
    // points may join either, and end up conflicted if both reach them
    let normal = merge_with(&all, &|p| rho[p] >= th.dt, &|p| -rho[p] < th.dt, th.rt, data, exec);
    let abnormal = merge_with(&all, &|p| -rho[p] >= th.dt, &|p| rho[p] < th.dt, th.rt, data, exec);

    let mut claims = vec![0u8; data.len()];
    for c in &normal.clusters {
        c.iter().for_each(|&p| claims[p] |= 1);
    }
    for c in &abnormal.clusters {
        c.iter().for_each(|&p| claims[p] |= 2);
    }
    let conflicted: Vec<usize> = (0..data.len()).filter(|&p| claims[p] == 3).collect();

    let keep = |outcome: MergeOutcome, tag: ClassTag, anchor: Label| -> Vec<SubCluster> {
        outcome
            .clusters
            .into_iter()
            .map(|c| c.into_iter().filter(|&p| claims[p] != 3).collect::<Vec<_>>())
            .filter(|c| !c.is_empty())
            .filter(|c| !require_label_anchor || c.iter().any(|&p| data.label(p) == anchor))
            .map(|members| SubCluster {
                members,
                class_tag: tag,
                pass_origin: PassOrigin::Pass1,
            })
            .collect()
    };
    let normal = keep(normal, ClassTag::Normal, Label::Normal);
    let abnormal = keep(abnormal, ClassTag::Abnormal, Label::Abnormal);

    let mut taken = vec![false; data.len()];
    for s in normal.iter().chain(&abnormal) {
        s.members.iter().for_each(|&p| taken[p] = true);
    }
    let remaining = (0..data.len()).filter(|&p| !taken[p]).collect();
    Pass1 {
        normal,
        abnormal,
        conflicted,
        remaining,
    }
}

/// Residual pass: plain density merge over the points pass 1 left behind.
/// Returns the unlabeled sub-clusters and the outlier candidates.
pub fn pass2_residual(
    data: &Dataset,
    grid: &Grid,
    remaining: &[usize],
    density: &[usize],
    th: &Thresholds,
    recompute: bool,
    exec: Execution,
) -> (Vec<SubCluster>, Vec<usize>) {
    let stat: Vec<f64> = if recompute {
        let mut inside = vec![false; data.len()];
        remaining.iter().for_each(|&p| inside[p] = true);
        let r2 = th.rt * th.rt;
        let counts = exec.map(data.len(), |p| {
            if !inside[p] {
                return 0.0;
            }
            let origin = data.point(p);
            grid.neighborhood_points(p)
                .filter(|&o| inside[o] && crate::dataset::squared_euclidean(origin, data.point(o)) <= r2)
                .count() as f64
        });
        counts
    } else {
        density.iter().map(|&n| n as f64).collect()
    };
    let out = merge(remaining, &stat, th.dt, th.rt, data, exec);
    let subs = out
        .clusters
        .into_iter()
        .map(|members| SubCluster {
            members,
            class_tag: ClassTag::Unlabeled,
            pass_origin: PassOrigin::Pass2,
        })
        .collect();
    (subs, out.unassigned)
}

/// Global pass: plain density merge over every point, labels ignored.
pub fn pass3_global(data: &Dataset, density: &[usize], th: &Thresholds, exec: Execution) -> MergeOutcome {
    let stat: Vec<f64> = density.iter().map(|&n| n as f64).collect();
    let all: Vec<usize> = (0..data.len()).collect();
    merge(&all, &stat, th.dt, th.rt, data, exec)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterComposition {
    pub global_clusters: Vec<Vec<usize>>,
    /// Index into `global_clusters` for every point, if any.
    pub global_of_point: Vec<Option<usize>>,
    pub regions: Vec<Region>,
    /// Pass-1 normal, pass-1 abnormal, then pass-2 sub-clusters.
    pub subclusters: Vec<SubCluster>,
    /// Matched global cluster for each entry of `subclusters`.
    pub containment: Vec<Option<usize>>,
}

impl ClusterComposition {
    pub fn count(&self, region: Region) -> usize {
        self.regions.iter().filter(|&&r| r == region).count()
    }

    pub fn points_in(&self, region: Region) -> Vec<usize> {
        (0..self.regions.len()).filter(|&p| self.regions[p] == region).collect()
    }
}

/// Global cluster holding the plurality of `members`; ties go to the larger
/// global cluster, then to the lower index.
fn plurality(members: &[usize], global_of_point: &[Option<usize>], sizes: &[usize]) -> Option<usize> {
    let mut votes = std::collections::BTreeMap::<usize, usize>::new();
    for &p in members {
        if let Some(g) = global_of_point[p] {
            *votes.entry(g).or_default() += 1;
        }
    }
    votes
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(sizes[a.0].cmp(&sizes[b.0])).then(b.0.cmp(&a.0)))
        .map(|(g, _)| g)
}

/// Tags every point from the three passes.
///
/// Points outside every global cluster are outliers. A point in a normal or
/// abnormal sub-cluster matched to the point's own global cluster takes that
/// class. Every other point in a global cluster is an unknown-cluster point
/// if no labeled sub-cluster matched that global cluster, and a mixed-overlap
/// point otherwise.
pub fn match_regions(
    n_points: usize,
    normal: &[SubCluster],
    abnormal: &[SubCluster],
    unlabeled: &[SubCluster],
    global: &MergeOutcome,
) -> ClusterComposition {
    let mut global_of_point = vec![None; n_points];
    for (g, c) in global.clusters.iter().enumerate() {
        c.iter().for_each(|&p| global_of_point[p] = Some(g));
    }
    let sizes: Vec<usize> = global.clusters.iter().map(Vec::len).collect();
    let subclusters: Vec<SubCluster> = normal.iter().chain(abnormal).chain(unlabeled).cloned().collect();
    let containment: Vec<Option<usize>> = subclusters
        .iter()
        .map(|s| plurality(&s.members, &global_of_point, &sizes))
        .collect();

    let mut labeled_global = vec![false; global.clusters.len()];
    let mut class_of = vec![None; n_points];
    for (s, g) in subclusters.iter().zip(&containment) {
        let Some(g) = *g else { continue };
        let region = match s.class_tag {
            ClassTag::Normal => Region::NormalCore,
            ClassTag::Abnormal => Region::AbnormalRegion,
            ClassTag::Unlabeled => continue,
        };
        labeled_global[g] = true;
        for &p in &s.members {
            if global_of_point[p] == Some(g) {
                class_of[p] = Some(region);
            }
        }
    }
    let regions = (0..n_points)
        .map(|p| match (global_of_point[p], class_of[p]) {
            (None, _) => Region::Outlier,
            (Some(_), Some(r)) => r,
            (Some(g), None) if !labeled_global[g] => Region::UnknownCluster,
            (Some(_), None) => Region::MixedOverlap,
        })
        .collect();
    ClusterComposition {
        global_clusters: global.clusters.clone(),
        global_of_point,
        regions,
        subclusters,
        containment,
    }
}

/// A wall fitted around one normal region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedWall {
    /// Index into [`ClusterComposition::subclusters`].
    pub subcluster: usize,
    pub global_cluster: usize,
    pub wall: Wall,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringResult {
    pub params: AdclustParams,
    pub sections: Vec<usize>,
    pub degenerate_dims: Vec<usize>,
    pub thresholds: Thresholds,
    pub profile: DensityProfile,
    pub weighting: Weighting,
    pub pass1: Pass1,
    pub residual_outliers: Vec<usize>,
    pub global_outliers: Vec<usize>,
    pub composition: ClusterComposition,
    pub walls: Vec<FittedWall>,
    /// Normal regions too small to fit a wall around (sub-cluster indices).
    pub skipped_walls: Vec<usize>,
    /// Per point: inside at least one wall.
    pub inside_wall: Vec<bool>,
}

impl ClusteringResult {
    /// Points inside a wall and tagged normal core.
    pub fn protected(&self) -> Vec<usize> {
        (0..self.inside_wall.len())
            .filter(|&p| self.inside_wall[p] && self.composition.regions[p] == Region::NormalCore)
            .collect()
    }

    /// Fraction of the points inside any wall for which `is_normal` holds;
    /// `None` when no point is inside a wall.
    pub fn wall_purity(&self, is_normal: impl Fn(usize) -> bool) -> Option<f64> {
        let inside: Vec<usize> = (0..self.inside_wall.len()).filter(|&p| self.inside_wall[p]).collect();
        if inside.is_empty() {
            return None;
        }
        let good = inside.iter().filter(|&&p| is_normal(p)).count();
        Some(good as f64 / inside.len() as f64)
    }
}

pub fn adclust(data: &Dataset, params: &AdclustParams) -> Result<ClusteringResult> {
    adclust_with(data, params, Execution::default())
}

pub fn adclust_with(data: &Dataset, params: &AdclustParams, exec: Execution) -> Result<ClusteringResult> {
    params.validate()?;
    let grid = build_grid(data, params.target_fraction).map_err(|e| e.at(Stage::Grid))?;
    let (th, profile) = thresholds(
        &grid,
        data,
        params.coef_rt,
        params.coef_dt,
        params.log_base,
        params.density_mode,
        exec,
    )
    .map_err(|e| e.at(Stage::Thresholds))?;
    let classifier = KernelClassifier::fit_with(
        data,
        &KernelOptions {
            bandwidth: params.bandwidth,
            bandwidth_scale: params.bandwidth_scale,
            balanced: params.balanced_scores,
        },
    ).map_err(|e| e.at(Stage::Weighting))?;
    let weighting = Weighting::compute(data, &classifier, params.k, exec).map_err(|e| e.at(Stage::Weighting))?;
    let density = &profile.density.point;

    let pass1 = pass1_labeled(data, density, &th, &weighting, params.require_label_anchor, exec);
    let (unlabeled, residual_outliers) = pass2_residual(
        data,
        &grid,
        &pass1.remaining,
        density,
        &th,
        params.recompute_residual_density,
        exec,
    );
    let global = pass3_global(data, density, &th, exec);
    let composition = match_regions(data.len(), &pass1.normal, &pass1.abnormal, &unlabeled, &global);

    let mut walls = Vec::new();
    let mut skipped_walls = Vec::new();
    for (i, (s, g)) in composition.subclusters.iter().zip(&composition.containment).enumerate() {
        if s.class_tag != ClassTag::Normal {
            continue;
        }
        let Some(g) = *g else {
            skipped_walls.push(i);
            continue;
        };
        let members: Vec<usize> = s
            .members
            .iter()
            .copied()
            .filter(|&p| composition.global_of_point[p] == Some(g))
            .collect();
        if members.len() < params.min_wall_points.max(2) {
            skipped_walls.push(i);
            continue;
        }
        let stats = RegionStats::fit(data, &members).map_err(|e| e.at(Stage::Walls))?;
        let wall = Wall::fit(
            params.wall_kind,
            stats,
            params.alpha,
            params.eta_samples,
            derive_seed(params.seed, i as u64),
            exec,
        )
        .map_err(|e| e.at(Stage::Walls))?;
        walls.push(FittedWall {
            subcluster: i,
            global_cluster: g,
            wall,
        });
    }
    let inside_wall = exec.map(data.len(), |p| walls.iter().any(|w| w.wall.contains(data.point(p))));

    Ok(ClusteringResult {
        params: params.clone(),
        sections: grid.sections().to_vec(),
        degenerate_dims: grid.degenerate_dims().to_vec(),
        thresholds: th,
        profile,
        weighting,
        pass1,
        residual_outliers,
        global_outliers: global.unassigned,
        composition,
        walls,
        skipped_walls,
        inside_wall,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sub(members: Vec<usize>, class_tag: ClassTag) -> SubCluster {
        SubCluster {
            members,
            class_tag,
            pass_origin: if class_tag == ClassTag::Unlabeled {
                PassOrigin::Pass2
            } else {
                PassOrigin::Pass1
            },
        }
    }

    #[test]
    fn hand_matching_table() {
        // global clusters: A = 0..6, B = 6..10; points 10, 11 are outliers
        let global = MergeOutcome {
            clusters: vec![(0..6).collect(), (6..10).collect()],
            unassigned: vec![10, 11],
        };
        // normal sub mostly in A, with one member (6) that sits in B
        let normal = [sub(vec![0, 1, 2, 6], ClassTag::Normal)];
        // abnormal sub split 1:1 between A and B -> larger cluster A wins
        let abnormal = [sub(vec![3, 7], ClassTag::Abnormal)];
        let unlabeled = [sub(vec![8, 9], ClassTag::Unlabeled)];
        let comp = match_regions(12, &normal, &abnormal, &unlabeled, &global);
        assert_eq!(comp.containment, vec![Some(0), Some(0), Some(1)]);
        use Region::*;
        assert_eq!(
            comp.regions,
            vec![
                NormalCore,
                NormalCore,
                NormalCore,
                AbnormalRegion,
                MixedOverlap,
                MixedOverlap,
                UnknownCluster,
                UnknownCluster,
                UnknownCluster,
                UnknownCluster,
                Outlier,
                Outlier
            ]
        );
    }

    #[test]
    fn plurality_tie_prefers_lower_index_among_equal_sizes() {
        let g = vec![Some(0), Some(0), Some(1), Some(1)];
        assert_eq!(plurality(&[0, 2], &g, &[2, 2]), Some(0));
        assert_eq!(plurality(&[0, 2], &g, &[2, 3]), Some(1));
        assert_eq!(plurality(&[], &g, &[2, 2]), None);
    }

    #[test]
    fn params_validation() {
        assert!(AdclustParams::default().validate().is_ok());
        let bad = AdclustParams {
            alpha: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = AdclustParams {
            k: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
