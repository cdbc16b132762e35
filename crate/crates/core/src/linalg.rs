//! Small dense kernels: LU with partial pivoting and the matrix exponential.
//!
//! Matrices here are plain row-major `&[f64]` slices of length `n * n`; they may
//! hold negative entries (e.g. `lambda I - B` or `B - I`).

use crate::error::{Error, Result};

/// Pivots smaller than this (relative to the largest entry) are rejected.
pub const PIVOT_TOL: f64 = 1e-12;

/// LU factorization `P M = L U` with row partial pivoting.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    pub fn factor(n: usize, m: &[f64]) -> Result<Self> {
        assert_eq!(m.len(), n * n);
        let scale = m.iter().fold(0.0f64, |s, x| s.max(x.abs())).max(f64::MIN_POSITIVE);
        let mut lu = m.to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pivot) = (k..n)
                .map(|r| (r, lu[r * n + k].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot < PIVOT_TOL * scale {
                return Err(Error::Singular { column: k, pivot });
            }
            if p != k {
                for c in 0..n {
                    lu.swap(k * n + c, p * n + c);
                }
                perm.swap(k, p);
            }
            let d = lu[k * n + k];
            for r in k + 1..n {
                let f = lu[r * n + k] / d;
                lu[r * n + k] = f;
                if f != 0.0 {
                    for c in k + 1..n {
                        lu[r * n + c] -= f * lu[k * n + c];
                    }
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    /// Solves `M x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for r in 0..n {
            let s: f64 = (0..r).map(|c| self.lu[r * n + c] * x[c]).sum();
            x[r] -= s;
        }
        for r in (0..n).rev() {
            let s: f64 = (r + 1..n).map(|c| self.lu[r * n + c] * x[c]).sum();
            x[r] = (x[r] - s) / self.lu[r * n + r];
        }
        x
    }

    /// Solves `M X = B` column by column for a square right-hand side.
    fn solve_matrix(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        let mut col = vec![0.0; n];
        for c in 0..n {
            for r in 0..n {
                col[r] = b[r * n + c];
            }
            let x = self.solve(&col);
            for r in 0..n {
                out[r * n + c] = x[r];
            }
        }
        out
    }
}

/// Solves the row-vector system `x M = b`, i.e. `M^T x^T = b^T`.
pub fn solve_left(n: usize, m: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    Ok(Lu::factor(n, &transpose(n, m))?.solve(b))
}

pub fn transpose(n: usize, m: &[f64]) -> Vec<f64> {
    let mut t = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            t[c * n + r] = m[r * n + c];
        }
    }
    t
}

pub fn matmul(n: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for r in 0..n {
        for k in 0..n {
            let x = a[r * n + k];
            if x == 0.0 {
                continue;
            }
            for c in 0..n {
                out[r * n + c] += x * b[k * n + c];
            }
        }
    }
    out
}

fn norm1(n: usize, m: &[f64]) -> f64 {
    (0..n)
        .map(|c| (0..n).map(|r| m[r * n + c].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn identity(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}

// Diagonal Pade(6,6) coefficients c_k = (12-k)! 6! / (12! k! (6-k)!).
const PADE6: [f64; 7] = [
    1.0,
    0.5,
    5.0 / 44.0,
    1.0 / 66.0,
    1.0 / 792.0,
    1.0 / 15840.0,
    1.0 / 665280.0,
];

/// Matrix exponential by scaling and squaring with a (6,6) Pade approximant.
///
/// The argument is scaled by `2^-s` until its 1-norm is at most 1/2.
pub fn expm(n: usize, m: &[f64]) -> Result<Vec<f64>> {
    assert_eq!(m.len(), n * n);
    let norm = norm1(n, m);
    let s = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scale = 0.5f64.powi(s);
    let x: Vec<f64> = m.iter().map(|v| v * scale).collect();

    let mut num = vec![0.0; n * n];
    let mut den = vec![0.0; n * n];
    let mut power = identity(n);
    for (k, &ck) in PADE6.iter().enumerate() {
        if k > 0 {
            power = matmul(n, &power, &x);
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        for idx in 0..n * n {
            num[idx] += ck * power[idx];
            den[idx] += sign * ck * power[idx];
        }
    }
    let mut e = Lu::factor(n, &den)?.solve_matrix(&num);
    for _ in 0..s {
        e = matmul(n, &e, &e);
    }
    Ok(e)
}
