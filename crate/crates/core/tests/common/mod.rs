//! Brute-force reference implementations shared by the integration tests and
//! the acceptance suite. Nothing here uses the library's grid or merge code.
#![allow(dead_code)]

use std::collections::BTreeMap;

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub struct GridOracle {
    pub cell: Vec<Vec<usize>>,
    pub rt: f64,
    pub dt: f64,
    /// n(p) restricted to neighbor cells.
    pub density: Vec<usize>,
    /// n(p) over all points.
    pub density_all: Vec<usize>,
    pub min_side: f64,
}

/// All-pairs computation of the grid thresholds on row-major `points`.
pub fn grid_oracle(points: &[Vec<f64>], fraction: f64, coef_rt: f64, coef_dt: f64) -> Option<GridOracle> {
    let n = points.len();
    let q = points[0].len();
    let m = ((1.0 / fraction + 1e-9).floor() as usize).clamp(1, n);
    let mut min_side = f64::INFINITY;
    let mut sections = vec![m; q];
    let ranges: Vec<(f64, f64)> = (0..q)
        .map(|d| {
            let lo = points.iter().map(|p| p[d]).fold(f64::INFINITY, f64::min);
            let hi = points.iter().map(|p| p[d]).fold(f64::NEG_INFINITY, f64::max);
            (lo, hi)
        })
        .collect();
    for d in 0..q {
        let (lo, hi) = ranges[d];
        if hi > lo {
            min_side = min_side.min((hi - lo) / m as f64);
        } else {
            sections[d] = 1;
        }
    }
    let cell: Vec<Vec<usize>> = points
        .iter()
        .map(|p| {
            (0..q)
                .map(|d| {
                    let (lo, hi) = ranges[d];
                    if sections[d] == 1 {
                        0
                    } else {
                        (((p[d] - lo) / (hi - lo) * m as f64).floor() as usize).min(m - 1)
                    }
                })
                .collect()
        })
        .collect();
    let adjacent =
        |a: &[usize], b: &[usize]| a.iter().zip(b).all(|(x, y)| (*x as i64 - *y as i64).abs() <= 1);

    let avg: Vec<Option<f64>> = (0..n)
        .map(|p| {
            let ds: Vec<f64> = (0..n)
                .filter(|&o| o != p && adjacent(&cell[p], &cell[o]))
                .map(|o| dist(&points[p], &points[o]))
                .collect();
            (!ds.is_empty()).then(|| ds.iter().sum::<f64>() / ds.len() as f64)
        })
        .collect();
    let mut groups: BTreeMap<&Vec<usize>, Vec<usize>> = BTreeMap::new();
    for p in 0..n {
        groups.entry(&cell[p]).or_default().push(p);
    }
    let cell_avgs: Vec<f64> = groups
        .values()
        .filter_map(|members| {
            let v: Vec<f64> = members.iter().filter_map(|&p| avg[p]).collect();
            (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
        })
        .collect();
    if cell_avgs.is_empty() {
        return None;
    }
    let rt = cell_avgs.iter().sum::<f64>() / cell_avgs.len() as f64 / (q as f64 * coef_rt);
    let count = |p: usize, restricted: bool| {
        (0..n)
            .filter(|&o| (!restricted || adjacent(&cell[p], &cell[o])) && dist(&points[p], &points[o]) <= rt)
            .count()
    };
    let density: Vec<usize> = (0..n).map(|p| count(p, true)).collect();
    let density_all: Vec<usize> = (0..n).map(|p| count(p, false)).collect();
    let cell_density: Vec<f64> = groups
        .values()
        .map(|members| members.iter().map(|&p| density[p] as f64).sum::<f64>() / members.len() as f64)
        .collect();
    let dt = cell_density.iter().sum::<f64>() / cell_density.len() as f64 / (n as f64).ln() * coef_dt;
    Some(GridOracle {
        cell,
        rt,
        dt,
        density,
        density_all,
        min_side,
    })
}

/// Connected components of the merge graph: seeds link to seeds and to
/// attachable points within `rt`; only components holding a seed count.
/// Returned sorted, each component sorted.
pub fn merge_oracle(
    points: &[Vec<f64>],
    ids: &[usize],
    seed: &dyn Fn(usize) -> bool,
    attach: &dyn Fn(usize) -> bool,
    rt: f64,
) -> Vec<Vec<usize>> {
    let n = ids.len();
    let mut adj = vec![Vec::new(); n];
    for a in 0..n {
        for b in 0..n {
            if a == b || !seed(ids[a]) {
                continue;
            }
            if (seed(ids[b]) || attach(ids[b])) && dist(&points[ids[a]], &points[ids[b]]) <= rt {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
    }
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        if seen[start] || !seed(ids[start]) {
            continue;
        }
        let mut stack = vec![start];
        let mut comp = Vec::new();
        seen[start] = true;
        while let Some(v) = stack.pop() {
            comp.push(ids[v]);
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out.sort();
    out
}

/// Standard normal quantile by bisection on the complementary error function
/// series; accurate to about 1e-10 over the central range.
pub fn normal_quantile(p: f64) -> f64 {
    let cdf = |x: f64| 0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2));
    let (mut lo, mut hi) = (-10.0, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Maclaurin series for erf, fine for |x| < 6.
pub fn erf(x: f64) -> f64 {
    let mut term = x;
    let mut sum = x;
    let x2 = x * x;
    let mut k = 0.0;
    while term.abs() > 1e-17 * sum.abs().max(1e-300) {
        k += 1.0;
        term *= -x2 / k;
        let add = term / (2.0 * k + 1.0);
        sum += add;
        if add.abs() < 1e-18 {
            break;
        }
    }
    sum * 2.0 / std::f64::consts::PI.sqrt()
}

/// Chi-square CDF by the power series of the lower incomplete gamma function.
pub fn chi2_cdf(dof: usize, x: f64) -> f64 {
    let s = dof as f64 / 2.0;
    let z = x / 2.0;
    let mut term = 1.0 / s;
    let mut sum = term;
    let mut k = 1.0;
    while term > 1e-18 * sum {
        term *= z / (s + k);
        sum += term;
        k += 1.0;
    }
    let ln_gamma = ln_gamma(s);
    (s * z.ln() - z - ln_gamma).exp() * sum
}

fn ln_gamma(s: f64) -> f64 {
    // half-integer and integer arguments only
    let twice = (2.0 * s).round() as usize;
    if twice.is_multiple_of(2) {
        (1..twice / 2).map(|i| (i as f64).ln()).sum()
    } else {
        // Gamma(n + 1/2) = (2n)! / (4^n n!) sqrt(pi)
        let n = twice / 2;
        let mut v = 0.5 * std::f64::consts::PI.ln();
        for i in 0..n {
            v += (i as f64 + 0.5).ln();
        }
        v
    }
}

pub fn chi2_quantile_oracle(dof: usize, alpha: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 200.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if chi2_cdf(dof, mid) < alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
