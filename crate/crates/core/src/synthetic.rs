//! Seeded Gaussian-mixture datasets and the game scenarios.

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::dataset::{default_feature_names, Dataset, Label};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::game::{GameConfig, PopulationSpec, Role, UtilityFamily, UtilitySpec};
use crate::gaussian::Gaussian;
use crate::rng::{derive_seed, stream};
use crate::walls::{WallKind, DEFAULT_ETA_SAMPLES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComponentClass {
    Normal,
    Abnormal,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub mean: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub count: usize,
    pub class: ComponentClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub components: Vec<Component>,
    /// Fraction of each normal or abnormal class that keeps its label.
    pub label_fraction: f64,
    pub seed: u64,
}

/// A generated dataset with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub data: Dataset,
    /// Component index per point.
    pub component: Vec<usize>,
    /// Class of each point's component.
    pub truth: Vec<ComponentClass>,
}

/// Labels kept for a class of `n` points.
pub fn labels_to_keep(fraction: f64, n: usize) -> usize {
    if fraction <= 0.0 || n == 0 {
        0
    } else {
        ((fraction * n as f64).round() as usize).clamp(1, n)
    }
}

pub fn generate(spec: &MixtureSpec) -> Result<Generated> {
    if !(0.0..=1.0).contains(&spec.label_fraction) {
        return Err(Error::Domain(format!(
            "label_fraction must lie in [0, 1], got {}",
            spec.label_fraction
        )));
    }
    let Some(first) = spec.components.first() else {
        return Err(Error::InvalidInput("mixture has no components".into()));
    };
    let q = first.mean.len();
    let mut values = Vec::new();
    let mut component = Vec::new();
    let mut truth = Vec::new();
    for (idx, c) in spec.components.iter().enumerate() {
        if c.count == 0 {
            return Err(Error::InvalidInput(format!("component {idx} has zero points")));
        }
        if c.mean.len() != q {
            return Err(Error::InvalidInput(format!("component {idx} has dimension {}", c.mean.len())));
        }
        let g = Gaussian::new(c.mean.clone(), &c.covariance)?;
        values.extend(g.sample(c.count, derive_seed(spec.seed, idx as u64), Execution::Sequential));
        component.extend(std::iter::repeat_n(idx, c.count));
        truth.extend(std::iter::repeat_n(c.class, c.count));
    }

    let mut labels = vec![Label::Unlabeled; truth.len()];
    let classes = [(ComponentClass::Normal, Label::Normal), (ComponentClass::Abnormal, Label::Abnormal)];
    for (slot, (class, label)) in classes.into_iter().enumerate() {
        let members: Vec<usize> = (0..truth.len()).filter(|&p| truth[p] == class).collect();
        let keep = labels_to_keep(spec.label_fraction, members.len());
        // separate stream per class, disjoint from the component streams
        let mut rng = stream(spec.seed, u64::MAX - slot as u64);
        let mut picked: Vec<usize> = sample(&mut rng, members.len(), keep).into_iter().collect();
        picked.sort_unstable();
        for i in picked {
            labels[members[i]] = label;
        }
    }
    let data = Dataset::from_flat(q, values, labels, default_feature_names(q))?;
    Ok(Generated { data, component, truth })
}

fn iso(scale: f64) -> Vec<Vec<f64>> {
    vec![vec![scale, 0.0], vec![0.0, scale]]
}

fn blob(x: f64, y: f64, count: usize, class: ComponentClass) -> Component {
    Component {
        mean: vec![x, y],
        covariance: iso(0.4),
        count,
        class,
    }
}

pub const SIMULATION_PRESETS: [&str; 3] = ["sim1", "sim2", "sim3"];

/// The three two-dimensional simulation layouts, 2% labels per class.
pub fn simulation(name: &str, seed: u64) -> Result<MixtureSpec> {
    use ComponentClass::*;
    let components = match name {
        "sim1" => vec![blob(0.0, -1.0, 300, Normal), blob(1.0, -1.0, 300, Abnormal)],
        // two normal blobs bridged by an abnormal one in the middle
        "sim2" => vec![
            blob(-1.0, -1.0, 300, Normal),
            blob(0.0, 0.0, 300, Abnormal),
            blob(1.0, 1.0, 300, Normal),
        ],
        "sim3" => vec![
            blob(0.5, -1.0, 300, Normal),
            blob(1.0, -1.0, 300, Abnormal),
            blob(1.0, 1.0, 300, Normal),
            blob(3.0, 3.0, 100, Unknown),
        ],
        other => return Err(Error::UnknownPreset(other.to_string())),
    };
    Ok(MixtureSpec {
        components,
        label_fraction: 0.02,
        seed,
    })
}

pub const GAME_PRESETS: [&str; 6] = [
    "one_adv_log",
    "one_adv_linear",
    "one_adv_exp",
    "three_adv_log",
    "three_adv_linear",
    "three_adv_exp",
];

const GAME_SAMPLE: usize = 10_000;
const K_MAX: f64 = 7.0;

/// Game scenario by name. A `_euclidean` or `_manhattan` suffix picks the wall
/// kind; Euclidean otherwise.
pub fn game_preset(name: &str) -> Result<GameConfig> {
    let (base, wall_kind) = if let Some(b) = name.strip_suffix("_manhattan") {
        (b, WallKind::Manhattan)
    } else if let Some(b) = name.strip_suffix("_euclidean") {
        (b, WallKind::Euclidean)
    } else {
        (name, WallKind::Euclidean)
    };
    let utility = |family, a| UtilitySpec { family, a, k_max: K_MAX };
    let population = |mean: [f64; 2], cov: [[f64; 2]; 2], role, stream: u64| PopulationSpec {
        mean: mean.to_vec(),
        covariance: cov.iter().map(|r| r.to_vec()).collect(),
        role,
        sample_size: GAME_SAMPLE,
        seed: derive_seed(0x5eed, stream),
    };
    let first = ([6.0, 6.0], [[1.0, 1.0], [1.0, 2.0]]);
    let second = ([-7.0, -7.0], [[1.0, -0.5], [-0.5, 1.0]]);
    let third = ([-6.0, 6.0], [[1.0, 0.0], [0.0, 2.0]]);
    use UtilityFamily::*;
    let (c, adversaries, utilities) = match base {
        "one_adv_log" => (20.0, vec![first], vec![utility(Log, 4.0)]),
        "one_adv_linear" => (20.0, vec![first], vec![utility(Linear, 1.5)]),
        "one_adv_exp" => (20.0, vec![first], vec![utility(Exponential, 0.75)]),
        "three_adv_log" => (
            10.0,
            vec![first, second, third],
            vec![utility(Log, 1.75), utility(Log, 1.25), utility(Log, 1.25)],
        ),
        "three_adv_linear" => (
            10.0,
            vec![first, second, third],
            vec![utility(Linear, 0.5), utility(Linear, 0.25), utility(Linear, 0.5)],
        ),
        "three_adv_exp" => (
            10.0,
            vec![first, second, third],
            vec![utility(Exponential, 4.5), utility(Exponential, 4.0), utility(Exponential, 4.5)],
        ),
        _ => return Err(Error::UnknownPreset(name.to_string())),
    };
    Ok(GameConfig {
        wall_kind,
        c,
        alpha_step: 0.01,
        t_step: 0.01,
        joint_t_step: 0.05,
        joint_min_adversaries: 3,
        budget: 250_000_000,
        normal: population([0.0, 0.0], [[1.0, 0.0], [0.0, 2.0]], Role::Normal, 0),
        adversaries: adversaries
            .into_iter()
            .enumerate()
            .map(|(i, (m, s))| population(m, s, Role::Adversary, 1 + i as u64))
            .collect(),
        utilities,
        eta_samples: DEFAULT_ETA_SAMPLES,
        seed: 0x5eed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sim1_counts() {
        let g = generate(&simulation("sim1", 4).unwrap()).unwrap();
        assert_eq!(g.data.len(), 600);
        assert_eq!(g.data.count_label(Label::Normal), 6);
        assert_eq!(g.data.count_label(Label::Abnormal), 6);
    }

    #[test]
    fn sim3_unknown_is_unlabeled() {
        let g = generate(&simulation("sim3", 1).unwrap()).unwrap();
        assert_eq!(g.data.len(), 1000);
        assert!((0..1000).filter(|&p| g.component[p] == 3).all(|p| g.data.label(p) == Label::Unlabeled));
        assert_eq!(g.data.count_label(Label::Normal), 12);
    }

    #[test]
    fn zero_fraction_means_no_labels() {
        let mut spec = simulation("sim1", 0).unwrap();
        spec.label_fraction = 0.0;
        let g = generate(&spec).unwrap();
        assert_eq!(g.data.count_label(Label::Unlabeled), 600);
    }

    #[test]
    fn deterministic_per_seed() {
        let a = generate(&simulation("sim2", 9).unwrap()).unwrap();
        let b = generate(&simulation("sim2", 9).unwrap()).unwrap();
        let c = generate(&simulation("sim2", 10).unwrap()).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.data, c.data);
        assert_eq!(c.data.count_label(Label::Normal), a.data.count_label(Label::Normal));
    }

    #[test]
    fn presets() {
        let g = game_preset("one_adv_log").unwrap();
        assert_eq!(g.adversaries[0].mean, vec![6.0, 6.0]);
        assert_eq!(g.utilities[0].a, 4.0);
        assert_eq!(g.c, 20.0);
        let g = game_preset("three_adv_exp_manhattan").unwrap();
        assert_eq!(g.wall_kind, WallKind::Manhattan);
        let a: Vec<f64> = g.utilities.iter().map(|u| u.a).collect();
        assert_eq!(a, vec![4.5, 4.0, 4.5]);
        let a: Vec<f64> = game_preset("three_adv_log").unwrap().utilities.iter().map(|u| u.a).collect();
        assert_eq!(a, vec![1.75, 1.25, 1.25]);
        assert!(matches!(game_preset("nope"), Err(Error::UnknownPreset(_))));
    }
}
