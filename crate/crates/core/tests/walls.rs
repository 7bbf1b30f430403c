mod common;

use adclust_core::gaussian::Gaussian;
use adclust_core::walls::{chi2_quantile, eta_curve, eta_of_alpha, RegionStats, Wall};
use adclust_core::Execution;
use approx::assert_relative_eq;
use proptest::prelude::*;

fn stats(mean: Vec<f64>, cov: Vec<Vec<f64>>) -> RegionStats {
    RegionStats::from_moments(mean, cov, 1000).unwrap()
}

#[test]
fn chi2_matches_series_oracle() {
    for dof in [1, 2, 3, 5, 7, 10] {
        for alpha in [0.05, 0.3, 0.6, 0.8, 0.95, 0.99] {
            let got = chi2_quantile(dof, alpha).unwrap();
            assert_relative_eq!(got, common::chi2_quantile_oracle(dof, alpha), epsilon = 1e-8);
        }
    }
}

#[test]
fn fitted_moments_recover_population() {
    let g = Gaussian::new(vec![0.0, 0.0], &[vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
    let draws = g.sample(50_000, 11, Execution::Parallel);
    let pts: Vec<&[f64]> = draws.chunks_exact(2).collect();
    let s = RegionStats::fit_points(&pts).unwrap();
    assert!(s.mean.iter().all(|m| m.abs() < 0.03));
    assert!((s.covariance[0][0] - 1.0).abs() < 0.04);
    assert!((s.covariance[1][1] - 2.0).abs() < 0.08);
    assert!(s.covariance[0][1].abs() < 0.04);
    assert_eq!(s.ridge, 0.0);
}

#[test]
fn euclidean_coverage_at_seventy_percent() {
    let s = stats(vec![1.0, -2.0], vec![vec![2.0, 0.6], vec![0.6, 1.0]]);
    let w = Wall::euclidean(s.clone(), 0.7).unwrap();
    let draws = s.gaussian().unwrap().sample(1000, 3, Execution::Sequential);
    let inside = draws.chunks_exact(2).filter(|x| w.contains(x)).count() as f64 / 1000.0;
    assert!((inside - 0.7).abs() <= 0.04, "{inside}");
}

#[test]
fn eta_one_dimensional_closed_form() {
    let s = stats(vec![3.0], vec![vec![4.0]]);
    for alpha in [0.5, 0.8, 0.95] {
        let eta = eta_of_alpha(&s, alpha, 100_000, 1, Execution::Parallel).unwrap();
        assert!((eta - common::normal_quantile((1.0 + alpha) / 2.0)).abs() < 0.05, "{alpha}: {eta}");
    }
}

#[test]
fn eta_spacing_widens() {
    let s = stats(vec![0.0; 7], (0..7).map(|i| (0..7).map(|j| if i == j { 1.0 + i as f64 } else { 0.0 }).collect()).collect());
    let alphas = [0.6, 0.7, 0.8, 0.9];
    let eta = eta_curve(&s, &alphas, 100_000, 2, Execution::Parallel).unwrap();
    let d: Vec<f64> = eta.windows(2).map(|w| w[1] - w[0]).collect();
    assert!(d.windows(2).all(|w| w[1] >= w[0] - 0.02), "{eta:?}");
}

#[test]
fn euclidean_affine_equivariance() {
    let pts: Vec<Vec<f64>> = (0..60)
        .map(|i| {
            let t = i as f64;
            vec![(t * 0.7).sin() * 2.0 + 0.1 * t.cos(), (t * 1.9).cos()]
        })
        .collect();
    let map = |p: &[f64]| vec![2.0 * p[0] + 0.5 * p[1] + 3.0, -0.3 * p[0] + 1.5 * p[1] - 1.0];
    let mapped: Vec<Vec<f64>> = pts.iter().map(|p| map(p)).collect();
    let refs: Vec<&[f64]> = pts.iter().map(Vec::as_slice).collect();
    let mapped_refs: Vec<&[f64]> = mapped.iter().map(Vec::as_slice).collect();
    let a = Wall::euclidean(RegionStats::fit_points(&refs).unwrap(), 0.6).unwrap();
    let b = Wall::euclidean(RegionStats::fit_points(&mapped_refs).unwrap(), 0.6).unwrap();
    for i in 0..40 {
        let probe = vec![(i as f64 * 0.31).sin() * 2.5, (i as f64 * 0.53).cos() * 1.5];
        let (da, db) = (a.mahalanobis_sq(&probe), b.mahalanobis_sq(&map(&probe)));
        assert_relative_eq!(da, db, max_relative = 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn euclidean_walls_nest(a1 in 0.01f64..0.98, gap in 0.001f64..0.5, x in -4.0f64..4.0, y in -4.0f64..4.0) {
        let a2 = (a1 + gap).min(0.99);
        let s = stats(vec![0.5, -0.5], vec![vec![1.0, 0.3], vec![0.3, 0.5]]);
        let small = Wall::euclidean(s.clone(), a1).unwrap();
        let big = Wall::euclidean(s.clone(), a2).unwrap();
        prop_assert!(!small.contains(&[x, y]) || big.contains(&[x, y]));
        prop_assert!(small.contains(&s.mean));
    }

    #[test]
    fn manhattan_scaling_equivariance(scale in 0.1f64..10.0, x in -3.0f64..3.0, y in -3.0f64..3.0) {
        let pts: Vec<Vec<f64>> = (0..30).map(|i| vec![(i as f64 * 0.77).sin(), (i as f64 * 0.41).cos() * 2.0]).collect();
        let scaled: Vec<Vec<f64>> = pts.iter().map(|p| vec![p[0] * scale, p[1]]).collect();
        let r1: Vec<&[f64]> = pts.iter().map(Vec::as_slice).collect();
        let r2: Vec<&[f64]> = scaled.iter().map(Vec::as_slice).collect();
        let a = Wall::manhattan_with_eta(RegionStats::fit_points(&r1).unwrap(), 0.6, 1.3).unwrap();
        let b = Wall::manhattan_with_eta(RegionStats::fit_points(&r2).unwrap(), 0.6, 1.3).unwrap();
        let sa = a.stats.scaled_l1(&[x, y]);
        let sb = b.stats.scaled_l1(&[x * scale, y]);
        prop_assert!((sa - sb).abs() < 1e-9 * sa.max(1.0));
    }
}
