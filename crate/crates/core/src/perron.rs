//! Power-iteration oracle for the Perron pair and the stopped matrix `B`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{require_primitive, NonNegativeMatrix};

pub const DEFAULT_MAX_ITER: usize = 1_000_000;

/// Perron-Frobenius eigenvalue with the L1-normalized left eigenvector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerronPair {
    pub lambda: f64,
    pub u: Vec<f64>,
    /// `|u A - lambda u|_1` at the returned iterate.
    pub residual: f64,
}

/// Default absolute residual tolerance for `a`, proportional to its largest row sum.
pub fn default_tol(a: &NonNegativeMatrix) -> f64 {
    let scale = a.row_sums().into_iter().fold(1.0, f64::max);
    1e-13 * scale * (a.dim() as f64).sqrt().max(1.0)
}

/// Left power iteration from the uniform vector with L1 normalization.
///
/// Since the iterate stays non-negative with unit mass, `|x A|_1` is the
/// eigenvalue estimate at every step.
pub fn perron_pair(a: &NonNegativeMatrix, tol: f64, max_iter: usize) -> Result<PerronPair> {
    require_primitive(a)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be positive, got {tol}")));
    }
    let n = a.dim();
    let mut x = vec![1.0 / n as f64; n];
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let y = a.left_mul(&x);
        let lambda: f64 = y.iter().sum();
        residual = y.iter().zip(&x).map(|(yj, xj)| (yj - lambda * xj).abs()).sum();
        if residual <= tol {
            return Ok(PerronPair {
                lambda,
                u: x,
                residual,
            });
        }
        x = y.into_iter().map(|v| v / lambda).collect();
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual,
    })
}

/// [`perron_pair`] with [`default_tol`] and [`DEFAULT_MAX_ITER`].
pub fn perron_pair_default(a: &NonNegativeMatrix) -> Result<PerronPair> {
    perron_pair(a, default_tol(a), DEFAULT_MAX_ITER)
}

/// Stationary distribution of a primitive row-stochastic matrix.
pub fn stationary_markov(p: &NonNegativeMatrix) -> Result<Vec<f64>> {
    p.check_stochastic(1e-12)?;
    Ok(perron_pair(p, 1e-14 * (p.dim() as f64).max(1.0), DEFAULT_MAX_ITER)?.u)
}

/// The matrix `B` obtained from `A` by zeroing row `stopped_type`.
#[derive(Debug, Clone, PartialEq)]
pub struct StoppedMatrix {
    pub(crate) base: NonNegativeMatrix,
    stopped_type: usize,
    rho_estimate: f64,
}

const RHO_ITERATIONS: usize = 200;
const RHO_WINDOW: usize = 10;

impl StoppedMatrix {
    pub fn base(&self) -> &NonNegativeMatrix {
        &self.base
    }

    pub fn stopped_type(&self) -> usize {
        self.stopped_type
    }

    /// Power-iteration estimate of the spectral radius of `B`.
    pub fn rho_estimate(&self) -> f64 {
        self.rho_estimate
    }

    /// `x B`, never reading the (zero) stopped row.
    pub fn left_mul(&self, x: &[f64]) -> Vec<f64> {
        let n = self.base.dim();
        let mut out = vec![0.0; n];
        for (k, (xk, row)) in x.iter().zip(self.base.rows()).enumerate() {
            if k == self.stopped_type || *xk == 0.0 {
                continue;
            }
            for (o, b) in out.iter_mut().zip(row) {
                *o += xk * b;
            }
        }
        out
    }
}

/// Builds `B` and estimates its spectral radius.
///
/// `B` may be reducible or nilpotent, so the estimate is the largest one-step
/// growth ratio `|x B|_1 / |x|_1` over the last iterations of an L1-normalized
/// power iteration started from the uniform vector.
pub fn stopped_matrix(a: &NonNegativeMatrix, i: usize) -> Result<StoppedMatrix> {
    let base = a.with_zero_row(i)?;
    let mut s = StoppedMatrix {
        base,
        stopped_type: i,
        rho_estimate: 0.0,
    };
    let n = a.dim();
    let mut x = vec![1.0 / n as f64; n];
    let mut rho = 0.0f64;
    for it in 0..RHO_ITERATIONS {
        let y = s.left_mul(&x);
        let growth: f64 = y.iter().sum();
        if it + RHO_WINDOW >= RHO_ITERATIONS {
            rho = rho.max(growth);
        }
        if growth == 0.0 {
            // B^k x = 0 from a positive start: B is nilpotent.
            rho = 0.0;
            break;
        }
        x = y.into_iter().map(|v| v / growth).collect();
    }
    s.rho_estimate = rho;
    Ok(s)
}
