//! Dense non-negative matrices and the primitivity test.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Square matrix with non-negative finite entries, stored row-major.
///
/// Entry `(i, j)` is the mean number of type-`j` children of a type-`i` parent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix", into = "RawMatrix")]
pub struct NonNegativeMatrix {
    n: usize,
    entries: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl TryFrom<RawMatrix> for NonNegativeMatrix {
    type Error = Error;
    fn try_from(raw: RawMatrix) -> Result<Self> {
        NonNegativeMatrix::new(raw.n, raw.entries)
    }
}

impl From<NonNegativeMatrix> for RawMatrix {
    fn from(m: NonNegativeMatrix) -> Self {
        RawMatrix {
            n: m.n,
            entries: m.entries,
        }
    }
}

impl NonNegativeMatrix {
    /// Builds a matrix from `n * n` row-major entries.
    pub fn new(n: usize, entries: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyMatrix);
        }
        if entries.len() != n * n {
            return Err(Error::ShapeMismatch {
                n,
                expected: n * n,
                got: entries.len(),
            });
        }
        for (k, &value) in entries.iter().enumerate() {
            let (row, col) = (k / n, k % n);
            if !value.is_finite() {
                return Err(Error::NonFiniteEntry { row, col });
            }
            if value < 0.0 {
                return Err(Error::NegativeEntry { row, col, value });
            }
        }
        Ok(Self { n, entries })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for row in rows {
            let row = row.as_ref();
            if row.len() != n {
                return Err(Error::ShapeMismatch {
                    n,
                    expected: n * n,
                    got: n * (n - 1) + row.len(),
                });
            }
            entries.extend_from_slice(row);
        }
        Self::new(n, entries)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.entries.chunks_exact(self.n)
    }

    pub fn check_index(&self, index: usize) -> Result<()> {
        if index < self.n {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { index, n: self.n })
        }
    }

    /// Returns `c * self`. `c` must be positive and finite.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "scaling factor must be positive and finite, got {c}"
            )));
        }
        Ok(Self {
            n: self.n,
            entries: self.entries.iter().map(|x| x * c).collect(),
        })
    }

    /// Copy of the matrix with row `i` set to zero.
    pub fn with_zero_row(&self, i: usize) -> Result<Self> {
        self.check_index(i)?;
        let mut entries = self.entries.clone();
        entries[i * self.n..(i + 1) * self.n].fill(0.0);
        Ok(Self { n: self.n, entries })
    }

    /// Row vector times matrix: `(x A)(j) = sum_k x(k) A(k, j)`.
    pub fn left_mul(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.n);
        let mut out = vec![0.0; self.n];
        for (xk, row) in x.iter().zip(self.rows()) {
            if *xk == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(row) {
                *o += xk * a;
            }
        }
        out
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.rows().map(|r| r.iter().sum()).collect()
    }

    /// Checks every row sums to one within `tol`.
    pub fn check_stochastic(&self, tol: f64) -> Result<()> {
        for (row, sum) in self.row_sums().into_iter().enumerate() {
            if (sum - 1.0).abs() > tol {
                return Err(Error::NotStochastic { row, sum });
            }
        }
        Ok(())
    }
}

/// Outcome of [`validate_primitive`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimitivityReport {
    pub is_primitive: bool,
    /// Smallest `m` with `A^m > 0` entrywise.
    pub exponent: Option<usize>,
    pub reason: Option<String>,
}

/// Wielandt's bound `(n-1)^2 + 1` on the primitivity exponent.
pub fn wielandt_bound(n: usize) -> usize {
    (n - 1) * (n - 1) + 1
}

/// Boolean matrix with bitset rows.
#[derive(Clone, PartialEq, Eq)]
struct Pattern {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl Pattern {
    fn of(a: &NonNegativeMatrix) -> Self {
        let n = a.dim();
        let words = n.div_ceil(64);
        let mut bits = vec![0u64; n * words];
        for i in 0..n {
            for j in 0..n {
                if a.get(i, j) > 0.0 {
                    bits[i * words + j / 64] |= 1 << (j % 64);
                }
            }
        }
        Self { n, words, bits }
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    fn has(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.words + j / 64] & (1 << (j % 64)) != 0
    }

    fn mul(&self, other: &Pattern) -> Pattern {
        let mut bits = vec![0u64; self.bits.len()];
        for i in 0..self.n {
            let out = &mut bits[i * self.words..(i + 1) * self.words];
            for k in 0..self.n {
                if self.has(i, k) {
                    for (o, w) in out.iter_mut().zip(other.row(k)) {
                        *o |= w;
                    }
                }
            }
        }
        Pattern {
            n: self.n,
            words: self.words,
            bits,
        }
    }

    fn is_full(&self) -> bool {
        let tail = self.n % 64;
        (0..self.n).all(|i| {
            let row = self.row(i);
            row.iter().enumerate().all(|(w, &word)| {
                if w + 1 == self.words && tail != 0 {
                    word == (1u64 << tail) - 1
                } else {
                    word == u64::MAX
                }
            })
        })
    }

    fn pow(&self, mut m: usize) -> Pattern {
        let mut base = self.clone();
        let mut acc: Option<Pattern> = None;
        while m > 0 {
            if m & 1 == 1 {
                acc = Some(match acc {
                    None => base.clone(),
                    Some(a) => a.mul(&base),
                });
            }
            m >>= 1;
            if m > 0 {
                base = base.mul(&base);
            }
        }
        acc.expect("pow called with m >= 1")
    }
}

/// Decides primitivity from the zero pattern of `a` using boolean matrix
/// powers, and reports the smallest exponent `m` with `a^m > 0`.
///
/// Positivity of `A^m` is monotone in `m` once reached (a primitive matrix has
/// no zero column), so the exponent is found by bisection over `[1, (n-1)^2+1]`.
pub fn validate_primitive(a: &NonNegativeMatrix) -> PrimitivityReport {
    let n = a.dim();
    let pattern = Pattern::of(a);
    let cap = wielandt_bound(n);
    if let Some(i) = (0..n).find(|&i| pattern.row(i).iter().all(|&w| w == 0)) {
        return not_primitive(format!("row {i} is identically zero"));
    }
    if let Some(j) = (0..n).find(|&j| (0..n).all(|i| !pattern.has(i, j))) {
        return not_primitive(format!("column {j} is identically zero"));
    }
    if !pattern.pow(cap).is_full() {
        return not_primitive(format!(
            "no power up to the Wielandt bound {cap} is entrywise positive"
        ));
    }
    let (mut lo, mut hi) = (1usize, cap);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if pattern.pow(mid).is_full() {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    PrimitivityReport {
        is_primitive: true,
        exponent: Some(lo),
        reason: None,
    }
}

fn not_primitive(reason: String) -> PrimitivityReport {
    PrimitivityReport {
        is_primitive: false,
        exponent: None,
        reason: Some(reason),
    }
}

pub(crate) fn require_primitive(a: &NonNegativeMatrix) -> Result<()> {
    let report = validate_primitive(a);
    if report.is_primitive {
        Ok(())
    } else {
        Err(Error::NotPrimitive(report.reason.unwrap_or_default()))
    }
}

/// Seeded random primitive matrix with entries uniform on `[0, 2]`.
///
/// Roughly a third of the off-cycle entries are zeroed. The diagonal and the
/// cycle `0 -> 1 -> ... -> n-1 -> 0` are kept positive, which makes the
/// pattern irreducible and aperiodic.
pub fn random_primitive(n: usize, seed: u64) -> NonNegativeMatrix {
    assert!(n >= 1, "dimension must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let forced = i == j || j == (i + 1) % n;
            let x: f64 = rng.random_range(0.0..=2.0);
            entries[i * n + j] = if forced {
                x.max(0.05)
            } else if rng.random_bool(1.0 / 3.0) {
                0.0
            } else {
                x
            };
        }
    }
    NonNegativeMatrix::new(n, entries).expect("entries are finite and non-negative")
}
