//! Offspring laws with a prescribed mean matrix and count-level sampling.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::NonNegativeMatrix;

/// Row sums of a single-child law must be one within this tolerance.
pub const STOCHASTIC_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LawKind {
    /// Independent Poisson(c A(i,j)) children of each type j.
    PoissonRows,
    /// Exactly one child, of type j with probability c A(i,j).
    SingleChildMarkov,
    /// floor(c A(i,j)) children of type j plus one more with probability
    /// equal to the fractional part.
    BernoulliSplit,
}

impl LawKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LawKind::PoissonRows => "poisson_rows",
            LawKind::SingleChildMarkov => "single_child_markov",
            LawKind::BernoulliSplit => "bernoulli_split",
        }
    }
}

impl std::str::FromStr for LawKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "poisson_rows" | "poisson" => Ok(LawKind::PoissonRows),
            "single_child_markov" | "markov" => Ok(LawKind::SingleChildMarkov),
            "bernoulli_split" | "bernoulli" => Ok(LawKind::BernoulliSplit),
            other => Err(Error::InvalidParameter(format!("unknown law kind `{other}`"))),
        }
    }
}

/// Number of individuals of each type.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Population(pub Vec<u64>);

impl Population {
    pub fn zeros(n: usize) -> Self {
        Population(vec![0; n])
    }

    pub fn single(n: usize, ty: usize) -> Self {
        let mut p = Self::zeros(n);
        p.0[ty] = 1;
        p
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn is_extinct(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    pub fn counts(&self) -> &[u64] {
        &self.0
    }
}

/// Reproduction law whose mean matrix is `c A`.
#[derive(Debug, Clone, PartialEq)]
pub struct OffspringLaw {
    kind: LawKind,
    base: NonNegativeMatrix,
    c: f64,
    mean: NonNegativeMatrix,
}

impl OffspringLaw {
    pub fn new(kind: LawKind, base: NonNegativeMatrix, c: f64) -> Result<Self> {
        let mean = base.scaled(c)?;
        if kind == LawKind::SingleChildMarkov {
            mean.check_stochastic(STOCHASTIC_TOL)?;
        }
        Ok(Self { kind, base, c, mean })
    }

    pub fn kind(&self) -> LawKind {
        self.kind
    }

    pub fn base(&self) -> &NonNegativeMatrix {
        &self.base
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    /// The exact mean matrix `c A` (analytic, not sampled).
    pub fn mean(&self) -> &NonNegativeMatrix {
        &self.mean
    }

    /// Adds the offspring of `k` type-`parent` individuals into `out`.
    pub fn add_offspring<R: Rng + ?Sized>(&self, parent: usize, k: u64, out: &mut [u64], rng: &mut R) {
        if k == 0 {
            return;
        }
        let row = self.mean.row(parent);
        match self.kind {
            LawKind::PoissonRows => {
                // Superposition: k independent Poisson(m) draws sum to Poisson(k m).
                for (o, &m) in out.iter_mut().zip(row) {
                    if m > 0.0 {
                        let d = Poisson::new(k as f64 * m).expect("finite positive mean");
                        *o += d.sample(rng) as u64;
                    }
                }
            }
            LawKind::SingleChildMarkov => {
                if k == 1 {
                    out[categorical(row, rng)] += 1;
                } else {
                    multinomial(row, k, out, rng);
                }
            }
            LawKind::BernoulliSplit => {
                for (o, &m) in out.iter_mut().zip(row) {
                    let whole = m.floor();
                    let frac = m - whole;
                    *o += k * whole as u64;
                    if frac > 0.0 {
                        *o += Binomial::new(k, frac).expect("probability in [0,1)").sample(rng);
                    }
                }
            }
        }
    }
}

fn last_positive(p: &[f64]) -> usize {
    p.iter().rposition(|&x| x > 0.0).expect("stochastic row has a positive entry")
}

fn categorical<R: Rng + ?Sized>(p: &[f64], rng: &mut R) -> usize {
    let last = last_positive(p);
    let total: f64 = p.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (j, &pj) in p[..last].iter().enumerate() {
        if u < pj {
            return j;
        }
        u -= pj;
    }
    last
}

/// Multinomial(k, p) by the conditional binomial chain.
fn multinomial<R: Rng + ?Sized>(p: &[f64], k: u64, out: &mut [u64], rng: &mut R) {
    let last = last_positive(p);
    let mut remaining = k;
    let mut mass: f64 = p.iter().sum();
    for (j, &pj) in p[..last].iter().enumerate() {
        if remaining == 0 {
            return;
        }
        if pj <= 0.0 {
            continue;
        }
        let q = (pj / mass).clamp(0.0, 1.0);
        let x = Binomial::new(remaining, q).expect("probability in [0,1]").sample(rng);
        out[j] += x;
        remaining -= x;
        mass -= pj;
    }
    out[last] += remaining;
}

/// Offspring of `k` individuals of type `parent`.
pub fn sample_offspring_aggregate<R: Rng + ?Sized>(
    law: &OffspringLaw,
    parent: usize,
    k: u64,
    rng: &mut R,
) -> Population {
    let mut out = Population::zeros(law.dim());
    law.add_offspring(parent, k, &mut out.0, rng);
    out
}

/// Next generation: every individual not of `stopped_type` reproduces.
pub fn step_generation<R: Rng + ?Sized>(
    pop: &Population,
    law: &OffspringLaw,
    stopped_type: Option<usize>,
    rng: &mut R,
) -> Population {
    let mut next = Population::zeros(law.dim());
    for (ty, &count) in pop.0.iter().enumerate() {
        if Some(ty) != stopped_type {
            law.add_offspring(ty, count, &mut next.0, rng);
        }
    }
    next
}
