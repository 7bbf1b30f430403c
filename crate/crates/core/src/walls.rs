//! Defensive walls around the centroid of a normal region.
//!
//! A Euclidean wall is the ellipsoid `(x - mean)' S^-1 (x - mean) <= chi2_q(alpha)`.
//! A Manhattan wall is the diamond `sum_i |x_i - mean_i| / sd_i <= eta(alpha)`,
//! where `eta(alpha)` is the empirical alpha-quantile of that scaled L1 norm
//! over a large sample drawn from the region's fitted Gaussian.
//! Both walls are closed: boundary points count as inside.

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_lr;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::gaussian::{to_matrix, Gaussian};
use crate::rng::CHUNK;

/// Relative ridge scale applied to near-singular covariances.
pub const RIDGE_SCALE: f64 = 1e-9;
/// Absolute floor on the ridge, so an all-zero covariance still inverts.
pub const RIDGE_FLOOR: f64 = 1e-12;
pub const DEFAULT_ETA_SAMPLES: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WallKind {
    #[default]
    Euclidean,
    Manhattan,
}

impl std::str::FromStr for WallKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(WallKind::Euclidean),
            "manhattan" => Ok(WallKind::Manhattan),
            other => Err(Error::InvalidInput(format!("unknown wall kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionStats {
    pub mean: Vec<f64>,
    /// Sample covariance (denominator `n - 1`), ridged if near-singular.
    pub covariance: Vec<Vec<f64>>,
    pub stddevs: Vec<f64>,
    pub member_count: usize,
    /// Amount added to the diagonal; zero when no ridge was needed.
    pub ridge: f64,
}

impl RegionStats {
    pub fn fit(data: &Dataset, members: &[usize]) -> Result<Self> {
        let points: Vec<&[f64]> = members.iter().map(|&i| data.point(i)).collect();
        Self::fit_points(&points)
    }

    pub fn fit_points(points: &[&[f64]]) -> Result<Self> {
        let n = points.len();
        if n < 2 {
            return Err(Error::DegenerateRegion(n));
        }
        let q = points[0].len();
        let mut mean = vec![0.0; q];
        for p in points {
            for (m, v) in mean.iter_mut().zip(*p) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut cov = vec![vec![0.0; q]; q];
        for p in points {
            for i in 0..q {
                let di = p[i] - mean[i];
                for j in 0..=i {
                    cov[i][j] += di * (p[j] - mean[j]);
                }
            }
        }
        for i in 0..q {
            for j in 0..=i {
                cov[i][j] /= (n - 1) as f64;
                cov[j][i] = cov[i][j];
            }
        }
        Self::from_moments(mean, cov, n)
    }

    /// Builds stats from known moments, applying the ridge guard.
    pub fn from_moments(mean: Vec<f64>, mut covariance: Vec<Vec<f64>>, member_count: usize) -> Result<Self> {
        let q = mean.len();
        let m = to_matrix(&covariance)?;
        if m.nrows() != q {
            return Err(Error::InvalidInput("mean and covariance dimensions differ".into()));
        }
        let trace: f64 = (0..q).map(|i| m[(i, i)]).sum();
        let threshold = (RIDGE_SCALE * trace / q as f64).max(RIDGE_FLOOR);
        let min_eig = SymmetricEigen::new(m)
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        let ridge = if min_eig < threshold { threshold } else { 0.0 };
        for (i, row) in covariance.iter_mut().enumerate() {
            row[i] += ridge;
        }
        let stddevs = (0..q).map(|i| covariance[i][i].sqrt()).collect();
        Ok(Self {
            mean,
            covariance,
            stddevs,
            member_count,
            ridge,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn gaussian(&self) -> Result<Gaussian> {
        Gaussian::new(self.mean.clone(), &self.covariance)
    }

    /// `sum_i |x_i - mean_i| / sd_i`.
    pub fn scaled_l1(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.mean)
            .zip(&self.stddevs)
            .map(|((x, m), s)| (x - m).abs() / s)
            .sum()
    }
}

fn check_level(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("level must lie in (0, 1), got {alpha}")))
    }
}

/// Alpha-quantile of the chi-square distribution with `dof` degrees of
/// freedom, by bisection on the regularized lower incomplete gamma function.
pub fn chi2_quantile(dof: usize, alpha: f64) -> Result<f64> {
    check_level(alpha)?;
    if dof == 0 {
        return Err(Error::Domain("chi-square needs at least one degree of freedom".into()));
    }
    let k = dof as f64 / 2.0;
    let cdf = |x: f64| gamma_lr(k, x / 2.0);
    let mut hi = dof as f64 + 1.0;
    while cdf(hi) < alpha {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < alpha {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi.max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `eta(alpha)` for each level in `alphas`, all read off one Monte-Carlo sample
/// of `sample_size` draws from the region's Gaussian.
pub fn eta_curve(
    stats: &RegionStats,
    alphas: &[f64],
    sample_size: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<f64>> {
    if sample_size < 1000 {
        return Err(Error::Domain(format!("eta sample size must be >= 1000, got {sample_size}")));
    }
    for &a in alphas {
        check_level(a)?;
    }
    let gaussian = stats.gaussian()?;
    let q = stats.dim();
    let chunks = sample_size.div_ceil(CHUNK);
    let mut scores: Vec<f64> = exec
        .map(chunks, |c| {
            let len = CHUNK.min(sample_size - c * CHUNK);
            let draws = gaussian.sample(len, crate::rng::derive_seed(seed, c as u64), Execution::Sequential);
            draws.chunks_exact(q).map(|x| stats.scaled_l1(x)).collect::<Vec<_>>()
        })
        .concat();
    scores.sort_by(f64::total_cmp);
    Ok(alphas.iter().map(|&a| empirical_quantile(&scores, a)).collect())
}

/// Smallest sample value whose empirical CDF reaches `alpha`.
pub fn empirical_quantile(sorted: &[f64], alpha: f64) -> f64 {
    let idx = ((alpha * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1;
    sorted[idx]
}

pub fn eta_of_alpha(
    stats: &RegionStats,
    alpha: f64,
    sample_size: usize,
    seed: u64,
    exec: Execution,
) -> Result<f64> {
    Ok(eta_curve(stats, &[alpha], sample_size, seed, exec)?[0])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Wall {
    pub kind: WallKind,
    pub stats: RegionStats,
    pub level: f64,
    /// `chi2_q(alpha)` for Euclidean walls, `eta(alpha)` for Manhattan walls.
    pub radius: f64,
    #[serde(skip)]
    gaussian: Option<Gaussian>,
}

impl Wall {
    pub fn euclidean(stats: RegionStats, alpha: f64) -> Result<Self> {
        let radius = chi2_quantile(stats.dim(), alpha)?;
        let gaussian = Some(stats.gaussian()?);
        Ok(Self {
            kind: WallKind::Euclidean,
            stats,
            level: alpha,
            radius,
            gaussian,
        })
    }

    pub fn manhattan(
        stats: RegionStats,
        alpha: f64,
        sample_size: usize,
        seed: u64,
        exec: Execution,
    ) -> Result<Self> {
        let eta = eta_of_alpha(&stats, alpha, sample_size, seed, exec)?;
        Self::manhattan_with_eta(stats, alpha, eta)
    }

    pub fn manhattan_with_eta(stats: RegionStats, alpha: f64, eta: f64) -> Result<Self> {
        check_level(alpha)?;
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::Domain(format!("eta must be positive, got {eta}")));
        }
        Ok(Self {
            kind: WallKind::Manhattan,
            stats,
            level: alpha,
            radius: eta,
            gaussian: None,
        })
    }

    /// Fits either kind; Manhattan walls calibrate `eta` by Monte Carlo.
    pub fn fit(
        kind: WallKind,
        stats: RegionStats,
        alpha: f64,
        eta_samples: usize,
        seed: u64,
        exec: Execution,
    ) -> Result<Self> {
        match kind {
            WallKind::Euclidean => Self::euclidean(stats, alpha),
            WallKind::Manhattan => Self::manhattan(stats, alpha, eta_samples, seed, exec),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self.kind {
            WallKind::Euclidean => self.mahalanobis_sq(x) <= self.radius,
            WallKind::Manhattan => self.stats.scaled_l1(x) <= self.radius,
        }
    }

    pub fn mahalanobis_sq(&self, x: &[f64]) -> f64 {
        match &self.gaussian {
            Some(g) => g.mahalanobis_sq(x),
            // deserialized walls: refactor on demand
            None => self
                .stats
                .gaussian()
                .expect("ridged covariance is positive definite")
                .mahalanobis_sq(x),
        }
    }

    /// Restores the cached factor after deserialization.
    pub fn prepared(mut self) -> Result<Self> {
        if self.kind == WallKind::Euclidean && self.gaussian.is_none() {
            self.gaussian = Some(self.stats.gaussian()?);
        }
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn identity_stats(q: usize) -> RegionStats {
        let cov = (0..q)
            .map(|i| (0..q).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        RegionStats::from_moments(vec![0.0; q], cov, 100).unwrap()
    }

    #[test]
    fn two_point_stats_get_ridge() {
        let s = RegionStats::fit_points(&[&[0.0, 0.0], &[2.0, 0.0]]).unwrap();
        assert_eq!(s.mean, vec![1.0, 0.0]);
        assert_relative_eq!(s.covariance[0][0], 2.0, epsilon = 1e-8);
        assert!(s.ridge > 0.0);
        assert_relative_eq!(s.ridge, 1e-9);
        assert_eq!(s.covariance[1][1], s.ridge);
    }

    #[test]
    fn duplicated_point_is_fully_ridged() {
        let p = [3.0, -1.0];
        let pts: Vec<&[f64]> = (0..10).map(|_| &p[..]).collect();
        let s = RegionStats::fit_points(&pts).unwrap();
        assert_eq!(s.ridge, RIDGE_FLOOR);
        assert!(Wall::euclidean(s.clone(), 0.5).unwrap().contains(&p));
        assert!(s.stddevs.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn too_few_points() {
        assert!(matches!(RegionStats::fit_points(&[&[1.0]]), Err(Error::DegenerateRegion(1))));
    }

    #[test]
    fn chi2_two_dof_closed_form() {
        assert_relative_eq!(chi2_quantile(2, 0.95).unwrap(), -2.0 * 0.05f64.ln(), epsilon = 1e-8);
        assert_relative_eq!(chi2_quantile(2, 0.60).unwrap(), -2.0 * 0.40f64.ln(), epsilon = 1e-8);
        assert_relative_eq!(chi2_quantile(2, 0.95).unwrap(), 5.9915, epsilon = 1e-4);
    }

    #[test]
    fn chi2_domain() {
        assert!(chi2_quantile(2, 0.0).is_err());
        assert!(chi2_quantile(2, 1.0).is_err());
        assert!(chi2_quantile(0, 0.5).is_err());
    }

    #[test]
    fn euclidean_containment() {
        let w = Wall::euclidean(identity_stats(2), 0.95).unwrap();
        assert!(w.contains(&[0.0, 0.0]));
        assert!(!w.contains(&[3.0, 0.0]));
        assert!(w.contains(&[2.4, 0.0]));
    }

    #[test]
    fn manhattan_containment() {
        let mut s = identity_stats(2);
        let w = Wall::manhattan_with_eta(s.clone(), 0.5, 2.0).unwrap();
        assert!(w.contains(&[0.0, 0.0]));
        assert!(w.contains(&[2.0, 0.0]));
        assert!(!w.contains(&[2.0, 1e-9]));
        s.stddevs = vec![1.0, 2.0];
        let w = Wall::manhattan_with_eta(s, 0.5, 1.0).unwrap();
        assert!(!w.contains(&[0.5, 1.2]));
        assert!(w.contains(&[0.5, 0.9]));
    }

    #[test]
    fn eta_needs_large_sample() {
        assert!(eta_of_alpha(&identity_stats(1), 0.5, 999, 0, Execution::Sequential).is_err());
    }

    #[test]
    fn eta_is_monotone_and_deterministic() {
        let s = identity_stats(2);
        let alphas = [0.3, 0.5, 0.7, 0.9, 0.99];
        let a = eta_curve(&s, &alphas, 20_000, 5, Execution::Sequential).unwrap();
        let b = eta_curve(&s, &alphas, 20_000, 5, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        assert!(a.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn eta_near_one_is_sample_max() {
        let s = identity_stats(2);
        let n = 5_000;
        let top = eta_of_alpha(&s, 1.0 - 1e-9, n, 3, Execution::Sequential).unwrap();
        let g = s.gaussian().unwrap();
        let max = (0..n.div_ceil(CHUNK))
            .flat_map(|c| {
                let len = CHUNK.min(n - c * CHUNK);
                g.sample(len, crate::rng::derive_seed(3, c as u64), Execution::Sequential)
            })
            .collect::<Vec<_>>()
            .chunks_exact(2)
            .map(|x| s.scaled_l1(x))
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(top, max);
    }

    #[test]
    fn empirical_quantile_definition() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(empirical_quantile(&v, 0.25), 1.0);
        assert_eq!(empirical_quantile(&v, 0.26), 2.0);
        assert_eq!(empirical_quantile(&v, 0.999), 4.0);
    }

    #[test]
    fn serde_roundtrip_keeps_containment() {
        let w = Wall::euclidean(identity_stats(2), 0.7).unwrap();
        let json = serde_json_like(&w);
        assert!(json.prepared().unwrap().contains(&[1.0, 0.5]));
    }

    fn serde_json_like(w: &Wall) -> Wall {
        // field-wise clone without the cached factor
        Wall {
            gaussian: None,
            ..w.clone()
        }
    }
}
