//! Discrete-time stopped Galton-Watson process.
//!
//! Generation 0 is a single type-`i` individual that reproduces with the full
//! law. From generation 1 on, type-`i` individuals are counted but have no
//! offspring.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::law::{step_generation, OffspringLaw, Population};

pub const DEFAULT_GENERATION_CAP: u64 = 10_000;
pub const DEFAULT_SIZE_CAP: u64 = 100_000_000;

/// Slack allowed on `lambda <= 1` for analytic weighting, since the effective
/// eigenvalue of a critically scaled law is only known to rounding.
pub const CRITICAL_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClockMode {
    /// Stop at an independent geometric time `tau` with `P(tau >= n) = lambda^-(n-1)`.
    GeometricClock,
    /// Run to extinction and weight generation `n` by `lambda^-n` afterwards.
    AnalyticWeights,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClockConfig {
    pub mode: ClockMode,
    /// Effective Perron eigenvalue of the law's mean matrix.
    pub lambda: f64,
    pub generation_cap: u64,
    pub size_cap: u64,
}

impl ClockConfig {
    pub fn new(mode: ClockMode, lambda: f64) -> Self {
        Self {
            mode,
            lambda,
            generation_cap: DEFAULT_GENERATION_CAP,
            size_cap: DEFAULT_SIZE_CAP,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda must be positive, got {}", self.lambda)));
        }
        match self.mode {
            ClockMode::GeometricClock if self.lambda <= 1.0 => Err(Error::InvalidParameter(format!(
                "geometric clock needs lambda > 1, got {}",
                self.lambda
            ))),
            ClockMode::AnalyticWeights if self.lambda > 1.0 + CRITICAL_SLACK => {
                Err(Error::InvalidParameter(format!(
                    "analytic weights need a critical or subcritical law (lambda <= 1), got {}",
                    self.lambda
                )))
            }
            _ => Ok(()),
        }
    }

    /// Weight of generation `n` in the per-run statistic.
    pub fn weight(&self, generation: usize) -> f64 {
        match self.mode {
            ClockMode::GeometricClock => 1.0,
            ClockMode::AnalyticWeights => self.lambda.powi(-(generation as i32)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Extinct,
    ClockKilled,
    GenerationCap,
    TimeCap,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::Extinct => "extinct",
            StopReason::ClockKilled => "clock_killed",
            StopReason::GenerationCap => "generation_cap",
            StopReason::TimeCap => "time_cap",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GwTrajectory {
    pub stopped_type: usize,
    /// `|Z_n|_1` for generations `n = 1, 2, ...` up to the stop; the extinct
    /// generation itself is not recorded.
    pub sizes: Vec<u64>,
    pub per_type: Option<Vec<Population>>,
    pub stop_reason: StopReason,
    pub generations_run: usize,
}

impl GwTrajectory {
    /// `sum_n w_n |Z_n|_1` with the clock's generation weights.
    pub fn statistic(&self, clock: &ClockConfig) -> f64 {
        self.sizes
            .iter()
            .enumerate()
            .map(|(k, &s)| clock.weight(k + 1) * s as f64)
            .sum()
    }

    /// Per-type statistic `sum_n w_n Z_n(j)` over `dim` types. Requires
    /// per-type recording.
    pub fn type_statistic(&self, clock: &ClockConfig, dim: usize) -> Option<Vec<f64>> {
        let gens = self.per_type.as_ref()?;
        let mut acc = vec![0.0; dim];
        for (k, pop) in gens.iter().enumerate() {
            let w = clock.weight(k + 1);
            for (a, &c) in acc.iter_mut().zip(&pop.0) {
                *a += w * c as f64;
            }
        }
        Some(acc)
    }
}

/// Samples `tau >= 1` with `P(tau >= n) = lambda^-(n-1)` by inverse transform.
pub fn sample_clock<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    let u = 1.0 - rng.random::<f64>();
    let k = (u.ln() / (-lambda.ln())).floor();
    1 + if k >= u64::MAX as f64 { u64::MAX - 1 } else { k as u64 }
}

/// Runs the process stopped on `i`.
///
/// With a geometric clock, generations `1 .. tau - 1` are recorded. Hitting
/// `generation_cap` ends the run with [`StopReason::GenerationCap`] and the
/// partial record.
pub fn run_stopped_gw<R: Rng + ?Sized>(
    i: usize,
    law: &OffspringLaw,
    clock: &ClockConfig,
    record_per_type: bool,
    rng: &mut R,
) -> Result<GwTrajectory> {
    law.base().check_index(i)?;
    clock.validate()?;
    let tau = match clock.mode {
        ClockMode::GeometricClock => Some(sample_clock(clock.lambda, rng)),
        ClockMode::AnalyticWeights => None,
    };
    let mut pop = Population::single(law.dim(), i);
    let mut sizes = Vec::new();
    let mut per_type = record_per_type.then(Vec::new);
    let mut generation: u64 = 1;
    let stop_reason = loop {
        if tau.is_some_and(|t| generation >= t) {
            break StopReason::ClockKilled;
        }
        if generation > clock.generation_cap {
            break StopReason::GenerationCap;
        }
        let stopped = if generation == 1 { None } else { Some(i) };
        let next = step_generation(&pop, law, stopped, rng);
        let total = next.total();
        if total > clock.size_cap {
            return Err(Error::SizeCapExceeded {
                size: total,
                cap: clock.size_cap,
            });
        }
        if total == 0 {
            break StopReason::Extinct;
        }
        sizes.push(total);
        if let Some(p) = per_type.as_mut() {
            p.push(next.clone());
        }
        pop = next;
        generation += 1;
    };
    Ok(GwTrajectory {
        stopped_type: i,
        generations_run: sizes.len(),
        sizes,
        per_type,
        stop_reason,
    })
}

/// Runs the process (optionally stopped) from `start` for up to `generations`
/// steps. Returns generations `0..=k`, ending early at extinction.
pub fn simulate_generations<R: Rng + ?Sized>(
    start: Population,
    law: &OffspringLaw,
    stopped_type: Option<usize>,
    generations: usize,
    size_cap: u64,
    rng: &mut R,
) -> Result<Vec<Population>> {
    let mut history = vec![start];
    for _ in 0..generations {
        let last = history.last().expect("non-empty");
        if last.is_extinct() {
            break;
        }
        let next = step_generation(last, law, stopped_type, rng);
        let total = next.total();
        if total > size_cap {
            return Err(Error::SizeCapExceeded { size: total, cap: size_cap });
        }
        history.push(next);
    }
    Ok(history)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::law::LawKind;
    use crate::matrix::NonNegativeMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn m(rows: &[&[f64]]) -> NonNegativeMatrix {
        NonNegativeMatrix::from_rows(rows).unwrap()
    }

    fn no_clock() -> ClockConfig {
        ClockConfig::new(ClockMode::AnalyticWeights, 1.0)
    }

    #[test]
    fn two_cycle_returns_after_two_generations() {
        let law = OffspringLaw::new(LawKind::SingleChildMarkov, m(&[&[0.0, 1.0], &[1.0, 0.0]]), 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = run_stopped_gw(0, &law, &no_clock(), true, &mut rng).unwrap();
        assert_eq!(t.sizes, vec![1, 1]);
        assert_eq!(t.stop_reason, StopReason::Extinct);
        let gens = t.per_type.unwrap();
        assert_eq!(gens[0].0, vec![0, 1]);
        assert_eq!(gens[1].0, vec![1, 0]);
    }

    #[test]
    fn single_type_dies_after_first_generation() {
        let law = OffspringLaw::new(LawKind::PoissonRows, m(&[&[3.0]]), 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let t = run_stopped_gw(0, &law, &no_clock_sub(), false, &mut rng).unwrap();
            assert!(t.sizes.len() <= 1);
            assert_eq!(t.stop_reason, StopReason::Extinct);
        }
    }

    fn no_clock_sub() -> ClockConfig {
        ClockConfig::new(ClockMode::AnalyticWeights, 0.5)
    }

    #[test]
    fn clock_of_one_gives_empty_record() {
        let law = OffspringLaw::new(LawKind::PoissonRows, m(&[&[1.0, 1.0], &[1.0, 1.0]]), 1.0).unwrap();
        let clock = ClockConfig::new(ClockMode::GeometricClock, 2.0);
        let mut empty = 0;
        for seed in 0..400 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut probe = rng.clone();
            let tau = sample_clock(2.0, &mut probe);
            let t = run_stopped_gw(0, &law, &clock, false, &mut rng).unwrap();
            if tau == 1 {
                empty += 1;
                assert!(t.sizes.is_empty());
                assert_eq!(t.stop_reason, StopReason::ClockKilled);
                assert_eq!(t.statistic(&clock), 0.0);
            } else {
                assert!(t.sizes.len() < tau as usize);
            }
        }
        assert!(empty > 100);
    }

    #[test]
    fn clock_law_is_geometric() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let lambda = 1.5;
        let draws = 200_000;
        let mut at_least = [0u64; 6];
        for _ in 0..draws {
            let t = sample_clock(lambda, &mut rng);
            for (n, c) in at_least.iter_mut().enumerate() {
                if t >= n as u64 + 1 {
                    *c += 1;
                }
            }
        }
        for (n, &c) in at_least.iter().enumerate() {
            let p = lambda.powi(-(n as i32));
            let se = (p * (1.0 - p) / draws as f64).sqrt().max(1e-9);
            assert!((c as f64 / draws as f64 - p).abs() < 4.0 * se, "n = {}", n + 1);
        }
    }

    #[test]
    fn config_validation() {
        let law = OffspringLaw::new(LawKind::PoissonRows, m(&[&[3.0]]), 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let bad = ClockConfig::new(ClockMode::GeometricClock, 1.0);
        assert!(run_stopped_gw(0, &law, &bad, false, &mut rng).is_err());
        let bad = ClockConfig::new(ClockMode::AnalyticWeights, 3.0);
        assert!(run_stopped_gw(0, &law, &bad, false, &mut rng).is_err());
        assert!(run_stopped_gw(1, &law, &no_clock(), false, &mut rng).is_err());
    }

    #[test]
    fn caps_surface_explicitly() {
        let law = OffspringLaw::new(LawKind::PoissonRows, m(&[&[1.0, 4.0], &[1.0, 4.0]]), 1.0).unwrap();
        let mut clock = ClockConfig::new(ClockMode::GeometricClock, 1.0 + 1e-6);
        clock.size_cap = 1_000;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut saw_error = false;
        for _ in 0..50 {
            if let Err(Error::SizeCapExceeded { cap, .. }) = run_stopped_gw(0, &law, &clock, false, &mut rng) {
                assert_eq!(cap, 1_000);
                saw_error = true;
            }
        }
        assert!(saw_error);

        let mut clock = ClockConfig::new(ClockMode::GeometricClock, 1.0 + 1e-9);
        clock.generation_cap = 3;
        let law = OffspringLaw::new(LawKind::SingleChildMarkov, m(&[&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0]]), 1.0).unwrap();
        let t = run_stopped_gw(1, &law, &clock, false, &mut rng);
        // Three-cycle returns at generation 3 and is extinct at 4, past the cap.
        let t = t.unwrap();
        assert_eq!(t.sizes, vec![1, 1, 1]);
        assert_eq!(t.stop_reason, StopReason::GenerationCap);
    }

    #[test]
    fn markov_sizes_are_indicators_up_to_return() {
        let law = OffspringLaw::new(LawKind::SingleChildMarkov, m(&[&[0.5, 0.5], &[0.25, 0.75]]), 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..1000 {
            let t = run_stopped_gw(0, &law, &no_clock(), true, &mut rng).unwrap();
            assert!(t.sizes.iter().all(|&s| s == 1));
            let gens = t.per_type.unwrap();
            let first_return = gens.iter().position(|p| p.0[0] > 0).unwrap() + 1;
            assert_eq!(first_return, t.sizes.len());
        }
    }

    #[test]
    fn stopped_individuals_have_no_children() {
        // Single-child law: generation total drops by exactly the number of
        // type-i individuals in the previous generation.
        let law = OffspringLaw::new(LawKind::SingleChildMarkov, m(&[&[0.2, 0.3, 0.5], &[0.4, 0.4, 0.2], &[0.1, 0.1, 0.8]]), 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let start = Population(vec![5, 6, 7]);
        let hist = simulate_generations(start, &law, Some(1), 40, u64::MAX, &mut rng).unwrap();
        for w in hist.windows(2) {
            assert_eq!(w[1].total(), w[0].total() - w[0].0[1]);
        }
    }

    #[test]
    fn seeded_runs_are_identical() {
        let law = OffspringLaw::new(LawKind::PoissonRows, m(&[&[0.5, 1.0], &[0.7, 0.3]]), 1.0).unwrap();
        let clock = ClockConfig::new(ClockMode::GeometricClock, 1.2);
        let a = run_stopped_gw(1, &law, &clock, true, &mut ChaCha8Rng::seed_from_u64(77)).unwrap();
        let b = run_stopped_gw(1, &law, &clock, true, &mut ChaCha8Rng::seed_from_u64(77)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn first_generation_mean_matches_law() {
        let a = m(&[&[0.5, 1.5, 0.0], &[0.7, 0.3, 1.0], &[0.2, 0.2, 2.0]]);
        let law = OffspringLaw::new(LawKind::PoissonRows, a, 1.0).unwrap();
        let runs = 100_000;
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut sum = [0.0; 3];
        let mut sq = [0.0; 3];
        for _ in 0..runs {
            let h = simulate_generations(Population::single(3, 2), &law, None, 1, u64::MAX, &mut rng).unwrap();
            let z1 = h.get(1).cloned().unwrap_or(Population::zeros(3));
            for j in 0..3 {
                let x = z1.0[j] as f64;
                sum[j] += x;
                sq[j] += x * x;
            }
        }
        for j in 0..3 {
            let mean = sum[j] / runs as f64;
            let se = ((sq[j] / runs as f64 - mean * mean) / runs as f64).sqrt().max(1e-12);
            assert!((mean - law.mean().get(2, j)).abs() < 4.0 * se);
        }
    }
}
