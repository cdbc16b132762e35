//! Deterministic eigenvector evaluators built on the stopped matrix `B`.
//!
//! Both return the unnormalized vector `v` with `v(i) = 1`:
//!
//! * the generation series `v = sum_{n>=1} lambda^-n (A B^{n-1})(i, .)`,
//! * the resolvent `v = A(i, .) (lambda I - B)^-1`, which is the Laplace
//!   transform of the continuous-time mean curve `A(i, .) e^{(B-I)t}` at
//!   `lambda - 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::matrix::NonNegativeMatrix;
use crate::perron::{stopped_matrix, StoppedMatrix};

pub const DEFAULT_SERIES_TOL: f64 = 1e-12;
pub const DEFAULT_N_MAX: usize = 1_000_000;

/// Inflation applied to `rho(B) / lambda` before using it as a decay rate.
const RATIO_SAFETY: f64 = 1.1;

/// Stopping rule for the generation series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationPlan {
    /// Target absolute bound on the neglected tail (L1).
    pub tol: f64,
    pub n_max: usize,
    /// Geometric decay rate of the terms; `>= 1` means no usable bound.
    pub ratio: f64,
}

impl TruncationPlan {
    /// Plan for `B` and `lambda` with decay rate `1.1 rho(B) / lambda`, pulled
    /// back to the midpoint of `[rho/lambda, 1)` when the inflated value would
    /// reach 1.
    pub fn new(stopped: &StoppedMatrix, lambda: f64, tol: f64, n_max: usize) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
        }
        if !(tol > 0.0) || n_max == 0 {
            return Err(Error::InvalidParameter("tol and n_max must be positive".into()));
        }
        let base = stopped.rho_estimate() / lambda;
        let ratio = if base >= 1.0 {
            1.0
        } else if base * RATIO_SAFETY < 1.0 {
            base * RATIO_SAFETY
        } else {
            0.5 * (1.0 + base)
        };
        Ok(Self { tol, n_max, ratio })
    }

    pub fn has_bound(&self) -> bool {
        self.ratio < 1.0
    }
}

/// Generation series for the stopped process started from one type-`i` individual.
///
/// Terms `t_n = lambda^-n A(i,.) B^{n-1}` are produced by the recursion
/// `t_{n+1} = t_n B / lambda`. Summation stops when the next term vanishes
/// exactly, or once at least `dim` terms are in and the geometric tail bound
/// `|t_n|_1 r / (1 - r)` drops below `plan.tol`, where `r` is the larger of
/// `plan.ratio` and the last observed term ratio.
pub fn series_vector(
    a: &NonNegativeMatrix,
    i: usize,
    lambda: f64,
    plan: &TruncationPlan,
) -> Result<Vec<f64>> {
    let stopped = stopped_matrix(a, i)?;
    series_from_stopped(a.row(i), &stopped, lambda, plan)
}

pub(crate) fn series_from_stopped(
    first_row: &[f64],
    stopped: &StoppedMatrix,
    lambda: f64,
    plan: &TruncationPlan,
) -> Result<Vec<f64>> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
    }
    let dim = first_row.len();
    let mut term: Vec<f64> = first_row.iter().map(|x| x / lambda).collect();
    let mut sum = vec![0.0; dim];
    let mut prev_norm = f64::NAN;
    let mut bound = f64::INFINITY;
    let mut r = plan.ratio;
    for n in 1..=plan.n_max {
        let norm: f64 = term.iter().sum();
        for (s, t) in sum.iter_mut().zip(&term) {
            *s += t;
        }
        if norm == 0.0 {
            return Ok(sum);
        }
        let observed = norm / prev_norm;
        r = if observed.is_finite() { plan.ratio.max(observed) } else { plan.ratio };
        bound = if r < 1.0 { norm * r / (1.0 - r) } else { f64::INFINITY };
        if n >= dim && bound < plan.tol {
            return Ok(sum);
        }
        prev_norm = norm;
        term = stopped.left_mul(&term);
        term.iter_mut().for_each(|t| *t /= lambda);
    }
    Err(Error::Truncation {
        terms: plan.n_max,
        bound,
        ratio: r,
        partial: sum,
    })
}

/// Coordinate `i` of [`series_vector`]: the weighted sum over paths from `i`
/// back to `i` that avoid `i` in between. Equals 1 at the Perron eigenvalue.
pub fn path_sum_check(
    a: &NonNegativeMatrix,
    i: usize,
    lambda: f64,
    plan: &TruncationPlan,
) -> Result<f64> {
    Ok(series_vector(a, i, lambda, plan)?[i])
}

/// Series evaluation with a default plan built from `B`.
pub fn series_vector_default(a: &NonNegativeMatrix, i: usize, lambda: f64) -> Result<Vec<f64>> {
    let stopped = stopped_matrix(a, i)?;
    let plan = TruncationPlan::new(&stopped, lambda, DEFAULT_SERIES_TOL, DEFAULT_N_MAX)?;
    series_from_stopped(a.row(i), &stopped, lambda, &plan)
}

/// Solves `v (lambda I - B) = A(i, .)` by partial-pivoting elimination.
///
/// A negative component in the solution means `lambda <= rho(B)`.
pub fn resolvent_vector(a: &NonNegativeMatrix, i: usize, lambda: f64) -> Result<Vec<f64>> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
    }
    let b = a.with_zero_row(i)?;
    let n = a.dim();
    let mut m: Vec<f64> = b.entries().iter().map(|x| -x).collect();
    for k in 0..n {
        m[k * n + k] += lambda;
    }
    let v = linalg::solve_left(n, &m, a.row(i))?;
    let mass: f64 = v.iter().map(|x| x.abs()).sum();
    if v.iter().any(|&x| x < -1e-12 * mass) {
        return Err(Error::LambdaTooSmall { lambda });
    }
    Ok(v)
}

/// Mean population of the stopped continuous-time process at time `t`:
/// `A(i, .) e^{(B - I) t}`.
pub fn stopped_mean_curve(a: &NonNegativeMatrix, i: usize, t: f64) -> Result<Vec<f64>> {
    let b = a.with_zero_row(i)?;
    let n = a.dim();
    let mut g: Vec<f64> = b.entries().iter().map(|x| x * t).collect();
    for k in 0..n {
        g[k * n + k] -= t;
    }
    let e = linalg::expm(n, &g)?;
    let row = a.row(i);
    Ok((0..n)
        .map(|k| (0..n).map(|j| row[j] * e[j * n + k]).sum())
        .collect())
}

/// L1-normalized copy of a non-negative vector.
pub fn normalized(v: &[f64]) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    v.iter().map(|x| x / s).collect()
}
