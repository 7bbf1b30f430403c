//! Multivariate normal sampling and Mahalanobis distances via a Cholesky
//! factor.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::rng::{stream, CHUNK};

/// `N(mean, L L')` with `L` stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    mean: Vec<f64>,
    chol: Vec<f64>,
}

pub(crate) fn to_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let q = rows.len();
    if q == 0 || rows.iter().any(|r| r.len() != q) {
        return Err(Error::InvalidInput("covariance must be a non-empty square matrix".into()));
    }
    Ok(DMatrix::from_fn(q, q, |i, j| rows[i][j]))
}

impl Gaussian {
    pub fn new(mean: Vec<f64>, covariance: &[Vec<f64>]) -> Result<Self> {
        let cov = to_matrix(covariance)?;
        if cov.nrows() != mean.len() {
            return Err(Error::InvalidInput(format!(
                "mean has {} entries but covariance is {}x{}",
                mean.len(),
                cov.nrows(),
                cov.ncols()
            )));
        }
        let asym = (0..mean.len())
            .flat_map(|i| (0..i).map(move |j| (i, j)))
            .any(|(i, j)| (cov[(i, j)] - cov[(j, i)]).abs() > 1e-12 * (1.0 + cov[(i, j)].abs()));
        if asym {
            return Err(Error::NotPositiveDefinite("covariance is not symmetric".into()));
        }
        let l = cov
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite(format!("{covariance:?}")))?
            .l();
        let q = mean.len();
        let chol = (0..q * q).map(|k| l[(k / q, k % q)]).collect();
        Ok(Self { mean, chol })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// `n` draws, row-major. Draws are produced in independently seeded
    /// chunks so the result does not depend on `exec`.
    pub fn sample(&self, n: usize, seed: u64, exec: Execution) -> Vec<f64> {
        let q = self.dim();
        let chunks = n.div_ceil(CHUNK);
        exec.map(chunks, |c| {
            let len = CHUNK.min(n - c * CHUNK);
            let mut rng = stream(seed, c as u64);
            let mut out = Vec::with_capacity(len * q);
            let mut z = vec![0.0; q];
            for _ in 0..len {
                for zi in z.iter_mut() {
                    *zi = rng.sample(StandardNormal);
                }
                for i in 0..q {
                    let row = &self.chol[i * q..i * q + i + 1];
                    let v: f64 = row.iter().zip(&z).map(|(l, z)| l * z).sum();
                    out.push(self.mean[i] + v);
                }
            }
            out
        })
        .concat()
    }

    /// Squared Mahalanobis distance of `x` from the mean, by forward
    /// substitution against the Cholesky factor.
    pub fn mahalanobis_sq(&self, x: &[f64]) -> f64 {
        let q = self.dim();
        let mut stack = [0.0f64; 16];
        let mut heap;
        let y: &mut [f64] = if q <= 16 {
            &mut stack[..q]
        } else {
            heap = vec![0.0; q];
            &mut heap
        };
        let mut total = 0.0;
        for i in 0..q {
            let row = &self.chol[i * q..i * q + i];
            let partial: f64 = row.iter().zip(y.iter()).map(|(l, y)| l * y).sum();
            let yi = (x[i] - self.mean[i] - partial) / self.chol[i * q + i];
            y[i] = yi;
            total += yi * yi;
        }
        total
    }
}
