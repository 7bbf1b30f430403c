//! Gaussian-kernel (Nadaraya-Watson) scoring from a handful of labels, and the
//! map from scores to signed weights.

use serde::{Deserialize, Serialize};

use crate::dataset::{euclidean, squared_euclidean, Dataset, Label};
use crate::error::{Error, Result};
use crate::exec::Execution;

/// Smallest bandwidth the median heuristic may return.
pub const MIN_BANDWIDTH: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelClassifier {
    dim: usize,
    labeled: Vec<f64>,
    /// 1.0 for normal, 0.0 for abnormal.
    targets: Vec<f64>,
    bandwidth: f64,
    /// Divide each class's kernel mass by its label count before averaging.
    balanced: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelOptions {
    /// Fixed bandwidth; overrides the median heuristic.
    pub bandwidth: Option<f64>,
    /// Multiplier on the median labeled pairwise distance.
    pub bandwidth_scale: f64,
    /// Divide each class's kernel mass by its label count, so an uneven
    /// number of labels does not tilt scores toward the larger class.
    pub balanced: bool,
}

impl KernelOptions {
    /// Unscaled median heuristic, unbalanced Nadaraya-Watson average.
    pub fn plain() -> Self {
        Self {
            bandwidth: None,
            bandwidth_scale: 1.0,
            balanced: false,
        }
    }
}

/// A score in `[0, 1]`; `underflow` is set when every kernel weight vanished
/// and the neutral 0.5 was returned instead.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub value: f64,
    pub underflow: bool,
}

impl KernelClassifier {
    /// Fits on the labeled subset of `data`. The bandwidth is the median
    /// pairwise distance among labeled points unless `bandwidth` overrides it.
    pub fn fit(data: &Dataset, bandwidth: Option<f64>) -> Result<Self> {
        Self::fit_with(
            data,
            &KernelOptions {
                bandwidth,
                ..KernelOptions::plain()
            },
        )
    }

    pub fn fit_with(data: &Dataset, options: &KernelOptions) -> Result<Self> {
        let mut labeled = Vec::new();
        let mut targets = Vec::new();
        for (i, &label) in data.labels().iter().enumerate() {
            let target = match label {
                Label::Normal => 1.0,
                Label::Abnormal => 0.0,
                Label::Unlabeled => continue,
            };
            labeled.extend_from_slice(data.point(i));
            targets.push(target);
        }
        let has = |t: f64| targets.contains(&t);
        if !has(1.0) || !has(0.0) {
            return Err(Error::InsufficientLabels);
        }
        let dim = data.dim();
        let bandwidth = match options.bandwidth {
            Some(h) if h > 0.0 && h.is_finite() => h,
            Some(h) => return Err(Error::Domain(format!("bandwidth must be positive, got {h}"))),
            None => {
                let s = options.bandwidth_scale;
                if !(s > 0.0 && s.is_finite()) {
                    return Err(Error::Domain(format!("bandwidth scale must be positive, got {s}")));
                }
                (s * median_pairwise(&labeled, dim)).max(MIN_BANDWIDTH)
            }
        };
        let balanced = options.balanced;
        Ok(Self {
            dim,
            labeled,
            targets,
            bandwidth,
            balanced,
        })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn n_labeled(&self) -> usize {
        self.targets.len()
    }

    /// Kernel-weighted average of the 0/1 targets at `point`.
    pub fn score(&self, point: &[f64]) -> Score {
        let scale = 2.0 * self.bandwidth * self.bandwidth;
        let (mut pos, mut neg) = (0.0, 0.0);
        for (x, &y) in self.labeled.chunks_exact(self.dim).zip(&self.targets) {
            let k = (-squared_euclidean(point, x) / scale).exp();
            if y == 1.0 {
                pos += k;
            } else {
                neg += k;
            }
        }
        if self.balanced {
            let n_pos = self.targets.iter().filter(|&&y| y == 1.0).count() as f64;
            pos /= n_pos;
            neg /= self.targets.len() as f64 - n_pos;
        }
        let (num, den) = (pos, pos + neg);
        if den > 0.0 && den.is_finite() {
            Score {
                value: (num / den).clamp(0.0, 1.0),
                underflow: false,
            }
        } else {
            Score {
                value: 0.5,
                underflow: true,
            }
        }
    }
}

fn median_pairwise(points: &[f64], dim: usize) -> f64 {
    let rows: Vec<&[f64]> = points.chunks_exact(dim).collect();
    let mut d: Vec<f64> = rows
        .iter()
        .enumerate()
        .flat_map(|(i, a)| rows[i + 1..].iter().map(move |b| euclidean(a, b)))
        .collect();
    if d.is_empty() {
        return 0.0;
    }
    d.sort_by(f64::total_cmp);
    let mid = d.len() / 2;
    if d.len() % 2 == 1 {
        d[mid]
    } else {
        0.5 * (d[mid - 1] + d[mid])
    }
}

/// Affine map of a score in `[0, 1]` onto `[-k, k]`, neutral at 0.5.
pub fn weight(b: f64, k: f64) -> f64 {
    k * (2.0 * b - 1.0)
}

/// Scores, weights and signed re-weighted densities for every point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Weighting {
    pub k: f64,
    pub bandwidth: f64,
    pub scores: Vec<f64>,
    pub weights: Vec<f64>,
    pub underflow: Vec<usize>,
}

impl Weighting {
    /// Labeled points take their own label as score (1 for normal, 0 for
    /// abnormal); unlabeled points are scored by the classifier.
    pub fn compute(
        data: &Dataset,
        classifier: &KernelClassifier,
        k: f64,
        exec: Execution,
    ) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::Domain(format!("weight k must be positive, got {k}")));
        }
        let scored = exec.map(data.len(), |i| match data.label(i) {
            Label::Normal => Score {
                value: 1.0,
                underflow: false,
            },
            Label::Abnormal => Score {
                value: 0.0,
                underflow: false,
            },
            Label::Unlabeled => classifier.score(data.point(i)),
        });
        let scores: Vec<f64> = scored.iter().map(|s| s.value).collect();
        let weights = scores.iter().map(|&b| weight(b, k)).collect();
        let underflow = scored
            .iter()
            .enumerate()
            .filter(|(_, s)| s.underflow)
            .map(|(i, _)| i)
            .collect();
        Ok(Self {
            k,
            bandwidth: classifier.bandwidth(),
            scores,
            weights,
            underflow,
        })
    }

    /// Signed centroid statistic `n(p) * w(p)`.
    pub fn reweighted_density(&self, density: &[usize]) -> Vec<f64> {
        density
            .iter()
            .zip(&self.weights)
            .map(|(&n, &w)| n as f64 * w)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn labeled(rows: Vec<Vec<f64>>, labels: Vec<Label>) -> Dataset {
        let dim = rows[0].len();
        Dataset::new(rows, labels, crate::dataset::default_feature_names(dim)).unwrap()
    }

    #[test]
    fn single_pair_bandwidth() {
        let d = labeled(vec![vec![0.0, 0.0], vec![4.0, 0.0]], vec![Label::Normal, Label::Abnormal]);
        assert_eq!(KernelClassifier::fit(&d, None).unwrap().bandwidth(), 4.0);
    }

    #[test]
    fn median_of_three_distances() {
        // pairwise distances 1, 2, 3 on a line
        let d = labeled(
            vec![vec![0.0], vec![1.0], vec![3.0]],
            vec![Label::Normal, Label::Abnormal, Label::Normal],
        );
        assert_eq!(KernelClassifier::fit(&d, None).unwrap().bandwidth(), 2.0);
    }

    #[test]
    fn coincident_labels_hit_floor() {
        let d = labeled(vec![vec![1.0], vec![1.0]], vec![Label::Normal, Label::Abnormal]);
        let c = KernelClassifier::fit(&d, None).unwrap();
        assert_eq!(c.bandwidth(), MIN_BANDWIDTH);
    }

    #[test]
    fn missing_class() {
        let d = labeled(vec![vec![0.0], vec![1.0]], vec![Label::Normal, Label::Unlabeled]);
        assert!(matches!(KernelClassifier::fit(&d, None), Err(Error::InsufficientLabels)));
    }

    #[test]
    fn dominant_and_symmetric_scores() {
        let d = labeled(
            vec![vec![0.0, 0.0], vec![100.0, 0.0]],
            vec![Label::Normal, Label::Abnormal],
        );
        let c = KernelClassifier::fit(&d, Some(5.0)).unwrap();
        let near = c.score(&[0.0, 0.0]);
        assert!(near.value > 1.0 - 1e-12 && !near.underflow);
        assert_relative_eq!(c.score(&[50.0, 7.0]).value, 0.5);
    }

    #[test]
    fn far_point_underflows_to_neutral() {
        let d = labeled(vec![vec![0.0], vec![1.0]], vec![Label::Normal, Label::Abnormal]);
        let c = KernelClassifier::fit(&d, None).unwrap();
        let s = c.score(&[1e6]);
        assert_eq!(s, Score { value: 0.5, underflow: true });
    }

    #[test]
    fn weight_examples() {
        assert_eq!(weight(0.5, 30.0), 0.0);
        assert_eq!(weight(1.0, 10.0), 10.0);
        assert_eq!(weight(0.25, 20.0), -10.0);
    }
}
