//! Continuous-time stopped branching process, simulated event by event.
//!
//! Every individual reproduces at rate 1 and is replaced by an offspring
//! sample from the law, so the mean matrix is `e^{(A - I) t}`. Type-`i`
//! individuals die at rate 1 without offspring. The initial population is
//! one offspring sample of a type-`i` parent.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gw::StopReason;
use crate::law::{sample_offspring_aggregate, OffspringLaw, Population};
use crate::stream::{replica_rng, StreamTag};

pub const DEFAULT_TIME_CAP: f64 = 1_000.0;
pub const DEFAULT_SIZE_CAP: u64 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CtMode {
    /// Independent kill time `K ~ Exp(lambda - 1)` drawn up front.
    ExponentialClock,
    /// Same kill law, realized as a competing rate-`(lambda - 1)` event.
    CompetingClock,
    /// No kill; `|Z_t|` is integrated against `e^{-(lambda-1)t}` up to `time_cap`.
    AnalyticWeights,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CtClockConfig {
    pub mode: CtMode,
    pub lambda: f64,
    pub time_cap: f64,
    pub size_cap: u64,
}

impl CtClockConfig {
    pub fn new(lambda: f64) -> Self {
        Self {
            mode: CtMode::ExponentialClock,
            lambda,
            time_cap: DEFAULT_TIME_CAP,
            size_cap: DEFAULT_SIZE_CAP,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.time_cap > 0.0) {
            return Err(Error::InvalidParameter("time_cap must be positive".into()));
        }
        if self.mode != CtMode::AnalyticWeights && self.lambda <= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "exponential kill clock needs lambda > 1, got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CtTrajectory {
    pub stopped_type: usize,
    /// `int_0^T |Z_t|_1 dt` (times the analytic weight in that mode).
    pub weighted_integral: f64,
    pub event_count: u64,
    pub stop_reason: StopReason,
}

/// `int_a^b e^{-alpha s} ds`.
fn discounted_span(alpha: f64, a: f64, b: f64) -> f64 {
    if alpha == 0.0 {
        b - a
    } else {
        ((-alpha * a).exp() - (-alpha * b).exp()) / alpha
    }
}

/// Index of the individual picked uniformly among `total`, as a type.
fn pick_type<R: Rng + ?Sized>(counts: &[u64], total: u64, rng: &mut R) -> usize {
    let mut k = rng.random_range(0..total);
    for (ty, &c) in counts.iter().enumerate() {
        if k < c {
            return ty;
        }
        k -= c;
    }
    unreachable!("total exceeds sum of counts")
}

fn apply_event<R: Rng + ?Sized>(pop: &mut Population, i: usize, law: &OffspringLaw, total: u64, rng: &mut R) {
    let ty = pick_type(&pop.0, total, rng);
    pop.0[ty] -= 1;
    if ty != i {
        law.add_offspring(ty, 1, &mut pop.0, rng);
    }
}

/// Simulates the process stopped on `i` until extinction, the kill clock, or
/// `time_cap`. Between events the population is constant, so the integral is
/// an exact sum of `size * gap`.
pub fn run_stopped_ct<R: Rng + ?Sized>(
    i: usize,
    law: &OffspringLaw,
    clock: &CtClockConfig,
    rng: &mut R,
) -> Result<CtTrajectory> {
    law.base().check_index(i)?;
    clock.validate()?;
    let kill_rate = clock.lambda - 1.0;
    let mut pop = sample_offspring_aggregate(law, i, 1, rng);
    let kill_time = match clock.mode {
        CtMode::ExponentialClock => Exp::new(kill_rate).expect("positive rate").sample(rng),
        _ => f64::INFINITY,
    };
    let horizon = kill_time.min(clock.time_cap);
    let alpha = match clock.mode {
        CtMode::AnalyticWeights => kill_rate,
        _ => 0.0,
    };

    let mut t = 0.0f64;
    let mut integral = 0.0f64;
    let mut events = 0u64;
    let stop_reason = loop {
        let total = pop.total();
        if total > clock.size_cap {
            return Err(Error::SizeCapExceeded { size: total, cap: clock.size_cap });
        }
        if total == 0 {
            break StopReason::Extinct;
        }
        let size = total as f64;
        let rate = match clock.mode {
            CtMode::CompetingClock => size + kill_rate,
            _ => size,
        };
        let wait = Exp::new(rate).expect("positive rate").sample(rng);
        if t + wait >= horizon {
            integral += size * discounted_span(alpha, t, horizon);
            break if kill_time <= clock.time_cap {
                StopReason::ClockKilled
            } else {
                StopReason::TimeCap
            };
        }
        integral += size * discounted_span(alpha, t, t + wait);
        t += wait;
        if clock.mode == CtMode::CompetingClock && rng.random::<f64>() * rate < kill_rate {
            break StopReason::ClockKilled;
        }
        apply_event(&mut pop, i, law, total, rng);
        events += 1;
    };
    Ok(CtTrajectory {
        stopped_type: i,
        weighted_integral: integral,
        event_count: events,
        stop_reason,
    })
}

/// Empirical mean of `Z^i_t` at one grid time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub t: f64,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
}

/// Replicates the unkilled stopped process and records `Z^i_t` on `t_grid`,
/// for comparison with `A(i, .) e^{(B - I) t}`.
pub fn expectation_check_ct(
    law: &OffspringLaw,
    i: usize,
    t_grid: &[f64],
    replicas: u64,
    master_seed: u64,
) -> Result<Vec<CurvePoint>> {
    law.base().check_index(i)?;
    if replicas < 2 {
        return Err(Error::Estimation("need at least two replicas".into()));
    }
    if t_grid.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
        return Err(Error::InvalidParameter("grid times must be finite and non-negative".into()));
    }
    let mut order: Vec<usize> = (0..t_grid.len()).collect();
    order.sort_by(|&a, &b| t_grid[a].total_cmp(&t_grid[b]));
    let n = law.dim();

    let samples: Vec<Vec<Population>> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = replica_rng(master_seed, StreamTag::Auxiliary, i, r);
            let mut pop = sample_offspring_aggregate(law, i, 1, &mut rng);
            let mut snapshots = vec![Population::zeros(n); t_grid.len()];
            let mut t = 0.0;
            let mut next = 0;
            loop {
                let total = pop.total();
                if total > DEFAULT_SIZE_CAP {
                    return Err(Error::SizeCapExceeded { size: total, cap: DEFAULT_SIZE_CAP });
                }
                let wait = if total == 0 {
                    f64::INFINITY
                } else {
                    Exp::new(total as f64).expect("positive rate").sample(&mut rng)
                };
                while next < order.len() && t_grid[order[next]] < t + wait {
                    snapshots[order[next]] = pop.clone();
                    next += 1;
                }
                if next == order.len() {
                    return Ok(snapshots);
                }
                t += wait;
                apply_event(&mut pop, i, law, total, &mut rng);
            }
        })
        .collect::<Result<_>>()?;

    let reps = replicas as f64;
    Ok((0..t_grid.len())
        .map(|g| {
            let mut mean = vec![0.0; n];
            let mut sq = vec![0.0; n];
            for s in &samples {
                for j in 0..n {
                    let x = s[g].0[j] as f64;
                    mean[j] += x;
                    sq[j] += x * x;
                }
            }
            let stderr = (0..n)
                .map(|j| {
                    mean[j] /= reps;
                    let var = (sq[j] - reps * mean[j] * mean[j]) / (reps - 1.0);
                    (var.max(0.0) / reps).sqrt()
                })
                .collect();
            CurvePoint { t: t_grid[g], mean, stderr }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluate::{resolvent_vector, stopped_mean_curve};
    use crate::law::LawKind;
    use crate::matrix::NonNegativeMatrix;
    use crate::perron::perron_pair_default;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn m(rows: &[&[f64]]) -> NonNegativeMatrix {
        NonNegativeMatrix::from_rows(rows).unwrap()
    }

    fn mean_se(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, (var / n).sqrt())
    }

    #[test]
    fn empty_start_has_zero_integral() {
        // Poisson(1e-12) start sample is empty for any realistic seed.
        let law = OffspringLaw::new(LawKind::PoissonRows, m(&[&[1e-12, 0.0], &[1.0, 1.0]]), 1.0).unwrap();
        let t = run_stopped_ct(0, &law, &CtClockConfig::new(2.0), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(t.weighted_integral, 0.0);
        assert_eq!(t.stop_reason, StopReason::Extinct);
        assert_eq!(t.event_count, 0);
    }

    #[test]
    fn single_type_denominator_is_one() {
        let law = OffspringLaw::new(LawKind::PoissonRows, m(&[&[3.0]]), 1.0).unwrap();
        let clock = CtClockConfig::new(3.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let xs: Vec<f64> = (0..100_000)
            .map(|_| run_stopped_ct(0, &law, &clock, &mut rng).unwrap().weighted_integral)
            .collect();
        let (mean, se) = mean_se(&xs);
        assert!((mean - 1.0).abs() < 4.0 * se, "{mean} +- {se}");
    }

    #[test]
    fn large_lambda_shrinks_integral() {
        let law = OffspringLaw::new(LawKind::PoissonRows, m(&[&[1.0, 1.0], &[1.0, 1.0]]), 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut means = Vec::new();
        for lambda in [2.0, 20.0, 2_000.0] {
            let clock = CtClockConfig::new(lambda);
            let xs: Vec<f64> = (0..20_000)
                .map(|_| run_stopped_ct(0, &law, &clock, &mut rng).unwrap().weighted_integral)
                .collect();
            means.push(mean_se(&xs).0);
        }
        assert!(means[0] > means[1] && means[1] > means[2]);
        assert!(means[2] < 0.01);
    }

    #[test]
    fn stopped_deaths_leave_no_offspring() {
        // Only type 0 exists in the start sample and it is stopped: one death per event.
        let law = OffspringLaw::new(LawKind::BernoulliSplit, m(&[&[4.0]]), 1.0).unwrap();
        let clock = CtClockConfig { mode: CtMode::AnalyticWeights, lambda: 1.0, ..CtClockConfig::new(1.0) };
        let t = run_stopped_ct(0, &law, &clock, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(t.event_count, 4);
        assert_eq!(t.stop_reason, StopReason::Extinct);
    }

    #[test]
    fn clock_mean_matches_resolvent_denominator() {
        let a = m(&[&[0.5, 1.0, 0.2], &[0.3, 0.4, 0.8], &[1.1, 0.0, 0.6]]);
        let pp = perron_pair_default(&a).unwrap();
        let c = 1.5 / pp.lambda;
        let scaled = a.scaled(c).unwrap();
        let law = OffspringLaw::new(LawKind::PoissonRows, a, c).unwrap();
        let i = 2;
        let expect: f64 = resolvent_vector(&scaled, i, 1.5).unwrap().iter().sum();
        let clock = CtClockConfig::new(1.5);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let xs: Vec<f64> = (0..100_000)
            .map(|_| run_stopped_ct(i, &law, &clock, &mut rng).unwrap().weighted_integral)
            .collect();
        let (mean, se) = mean_se(&xs);
        assert!((mean - expect).abs() < 4.0 * se, "{mean} +- {se} vs {expect}");
    }

    /// Kolmogorov-Smirnov two-sample test between up-front and competing kill clocks.
    #[test]
    fn competing_clock_is_indistinguishable() {
        let law = OffspringLaw::new(LawKind::PoissonRows, m(&[&[0.6, 0.6], &[0.9, 0.3]]), 1.0).unwrap();
        let n = 100_000;
        let run = |mode, seed| {
            let clock = CtClockConfig { mode, ..CtClockConfig::new(1.4) };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut xs: Vec<f64> = (0..n)
                .map(|_| run_stopped_ct(1, &law, &clock, &mut rng).unwrap().weighted_integral)
                .collect();
            xs.sort_by(f64::total_cmp);
            xs
        };
        let a = run(CtMode::ExponentialClock, 10);
        let b = run(CtMode::CompetingClock, 11);
        let (mut ia, mut ib, mut d) = (0usize, 0usize, 0.0f64);
        while ia < n && ib < n {
            let x = a[ia].min(b[ib]);
            while ia < n && a[ia] <= x {
                ia += 1;
            }
            while ib < n && b[ib] <= x {
                ib += 1;
            }
            d = d.max((ia as f64 - ib as f64).abs() / n as f64);
        }
        // Critical KS value at 1% for equal samples: 1.628 sqrt(2/n).
        let crit = 1.628 * (2.0 / n as f64).sqrt();
        assert!(d < crit, "KS statistic {d} >= {crit}");
    }

    #[test]
    fn analytic_weights_match_clock() {
        let law = OffspringLaw::new(LawKind::PoissonRows, m(&[&[3.0]]), 1.0).unwrap();
        let clock = CtClockConfig { mode: CtMode::AnalyticWeights, ..CtClockConfig::new(3.0) };
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let xs: Vec<f64> = (0..50_000)
            .map(|_| run_stopped_ct(0, &law, &clock, &mut rng).unwrap().weighted_integral)
            .collect();
        let (mean, se) = mean_se(&xs);
        assert!((mean - 1.0).abs() < 4.0 * se);
    }

    #[test]
    fn mean_curve_two_types() {
        let a = m(&[&[1.0, 1.0], &[1.0, 1.0]]);
        let law = OffspringLaw::new(LawKind::PoissonRows, a.clone(), 1.0).unwrap();
        let pts = expectation_check_ct(&law, 0, &[1.0, 0.0], 100_000, 3).unwrap();
        for p in &pts {
            let exact = stopped_mean_curve(&a, 0, p.t).unwrap();
            for j in 0..2 {
                assert!((p.mean[j] - exact[j]).abs() < 4.0 * p.stderr[j], "t={} j={j}", p.t);
            }
        }
    }

    #[test]
    fn validation() {
        let law = OffspringLaw::new(LawKind::PoissonRows, m(&[&[3.0]]), 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(run_stopped_ct(0, &law, &CtClockConfig::new(1.0), &mut rng).is_err());
        assert!(expectation_check_ct(&law, 0, &[1.0], 1, 0).is_err());
        assert!(expectation_check_ct(&law, 0, &[-1.0], 10, 0).is_err());
    }
}
