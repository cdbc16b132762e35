//! Monte Carlo estimators of the normalized Perron eigenvector.
//!
//! Replicas are independent and run on the rayon pool; each uses the stream
//! from [`replica_rng`]. Results are collected in replica order and reduced
//! sequentially, so the output is bit-identical for any thread count.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ct::{run_stopped_ct, CtClockConfig, CtMode};
use crate::error::{Error, Result};
use crate::gw::{run_stopped_gw, ClockConfig, ClockMode, StopReason};
use crate::law::{LawKind, OffspringLaw};
use crate::matrix::NonNegativeMatrix;
use crate::perron::{perron_pair_default, stopped_matrix};
use crate::stream::{replica_rng, StreamTag};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.96;

/// Default effective eigenvalue for clock modes.
pub const DEFAULT_MARGIN: f64 = 1.5;

/// Default scaling. The critical law with analytic weights makes the stopped
/// process subcritical, so the per-run statistic always has finite variance.
pub const DEFAULT_SCALING: Scaling = Scaling::Critical;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub replicas: u64,
    pub ci95: (f64, f64),
}

impl Estimate {
    pub fn new(value: f64, stderr: f64, replicas: u64) -> Self {
        Self {
            value,
            stderr,
            replicas,
            ci95: (value - Z95 * stderr, value + Z95 * stderr),
        }
    }

    /// Sample mean with standard error `sd / sqrt(n)`.
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        Self::new(mean, (var / n).sqrt(), xs.len() as u64)
    }

    /// Distance to `other` in standard errors.
    pub fn z_score(&self, other: f64) -> f64 {
        (self.value - other).abs() / self.stderr
    }
}

/// Joint z-score of two independent estimates.
pub fn joint_z(a: &Estimate, b: &Estimate) -> f64 {
    (a.value - b.value).abs() / (a.stderr * a.stderr + b.stderr * b.stderr).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    GwReciprocal,
    GwVector,
    CtReciprocal,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::GwReciprocal => "gw_reciprocal",
            Method::GwVector => "gw_vector",
            Method::CtReciprocal => "ct_reciprocal",
        }
    }
}

/// Largest and mean per-run statistic for one starting type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailDiagnostic {
    pub start_type: usize,
    pub mean: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// `sum_i u_hat(i)`; 1 in the limit.
    pub normalization_sum: f64,
    /// `sqrt(sum_i stderr_i^2)`.
    pub sigma_total: f64,
    pub stop_reasons: BTreeMap<String, u64>,
    /// Denominator estimates `D_i` (reciprocal methods).
    pub denominators: Vec<Estimate>,
    /// Starting type and the unnormalized `v(start)` (vector method; ~1).
    pub start_type: Option<usize>,
    pub v_start: Option<Estimate>,
    pub heavy_tail: Vec<TailDiagnostic>,
    /// Starting types whose per-run statistic has infinite variance under the
    /// kill clock (GW: `rho_eff^2 >= lambda_eff`; CT: `2 (rho_eff - 1) >=
    /// lambda_eff - 1`, with `rho_eff` the estimated radius of `c B`).
    /// Standard errors for these types are not meaningful.
    pub infinite_variance_types: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenvectorEstimate {
    pub u_hat: Vec<Estimate>,
    pub method: Method,
    pub lambda_used: f64,
    pub c_used: f64,
    pub diagnostics: Diagnostics,
}

impl EigenvectorEstimate {
    pub fn values(&self) -> Vec<f64> {
        self.u_hat.iter().map(|e| e.value).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GwEstimatorConfig {
    pub law: LawKind,
    pub c: f64,
    pub mode: ClockMode,
    pub generation_cap: u64,
    pub size_cap: u64,
    pub seed: u64,
}

impl GwEstimatorConfig {
    pub fn new(law: LawKind, c: f64, mode: ClockMode, seed: u64) -> Self {
        Self {
            law,
            c,
            mode,
            generation_cap: crate::gw::DEFAULT_GENERATION_CAP,
            size_cap: crate::gw::DEFAULT_SIZE_CAP,
            seed,
        }
    }

    /// Critical scaling uses analytic weights, a margin uses the geometric clock.
    pub fn for_scaling(a: &NonNegativeMatrix, law: LawKind, scaling: Scaling, seed: u64) -> Result<Self> {
        let mode = match scaling {
            Scaling::Critical => ClockMode::AnalyticWeights,
            Scaling::SupercriticalMargin(_) => ClockMode::GeometricClock,
        };
        Ok(Self::new(law, choose_scaling(a, scaling)?, mode, seed))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CtEstimatorConfig {
    pub law: LawKind,
    pub c: f64,
    pub mode: CtMode,
    pub time_cap: f64,
    pub size_cap: u64,
    pub seed: u64,
}

impl CtEstimatorConfig {
    pub fn new(law: LawKind, c: f64, seed: u64) -> Self {
        Self {
            law,
            c,
            mode: CtMode::ExponentialClock,
            time_cap: crate::ct::DEFAULT_TIME_CAP,
            size_cap: crate::ct::DEFAULT_SIZE_CAP,
            seed,
        }
    }

    /// Critical scaling uses analytic weights (integral to extinction), a
    /// margin uses the exponential kill clock.
    pub fn for_scaling(a: &NonNegativeMatrix, law: LawKind, scaling: Scaling, seed: u64) -> Result<Self> {
        let mut cfg = Self::new(law, choose_scaling(a, scaling)?, seed);
        if scaling == Scaling::Critical {
            cfg.mode = CtMode::AnalyticWeights;
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scaling {
    /// `c = 1 / lambda`: critical law, effective eigenvalue 1.
    Critical,
    /// `c = margin / lambda`: supercritical law with effective eigenvalue `margin`.
    SupercriticalMargin(f64),
}

pub fn choose_scaling(a: &NonNegativeMatrix, target: Scaling) -> Result<f64> {
    let lambda = perron_pair_default(a)?.lambda;
    match target {
        Scaling::Critical => Ok(1.0 / lambda),
        Scaling::SupercriticalMargin(margin) if margin > 0.0 => Ok(margin / lambda),
        Scaling::SupercriticalMargin(margin) => {
            Err(Error::InvalidParameter(format!("margin must be positive, got {margin}")))
        }
    }
}

/// Type with the largest row sum.
pub fn default_start_type(a: &NonNegativeMatrix) -> usize {
    a.row_sums()
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (k, &s)| if s > best.1 { (k, s) } else { best })
        .0
}

fn check_replicas(replicas: u64) -> Result<()> {
    if replicas < 2 {
        Err(Error::Estimation(format!("need at least 2 replicas, got {replicas}")))
    } else {
        Ok(())
    }
}

fn effective_lambda(law: &OffspringLaw) -> Result<f64> {
    Ok(perron_pair_default(law.mean())?.lambda)
}

/// Reciprocal of a positive mean with the delta-method stderr `se / D^2`.
fn reciprocal(d: &Estimate) -> Result<Estimate> {
    if !(d.value > 0.0) {
        return Err(Error::Estimation("every replica produced an empty statistic".into()));
    }
    Ok(Estimate::new(1.0 / d.value, d.stderr / (d.value * d.value), d.replicas))
}

fn finish(
    u_hat: Vec<Estimate>,
    method: Method,
    lambda_used: f64,
    c_used: f64,
    mut diagnostics: Diagnostics,
) -> EigenvectorEstimate {
    diagnostics.normalization_sum = u_hat.iter().map(|e| e.value).sum();
    diagnostics.sigma_total = u_hat.iter().map(|e| e.stderr * e.stderr).sum::<f64>().sqrt();
    EigenvectorEstimate {
        u_hat,
        method,
        lambda_used,
        c_used,
        diagnostics,
    }
}

fn empty_diagnostics() -> Diagnostics {
    Diagnostics {
        normalization_sum: 0.0,
        sigma_total: 0.0,
        stop_reasons: BTreeMap::new(),
        denominators: Vec::new(),
        start_type: None,
        v_start: None,
        heavy_tail: Vec::new(),
        infinite_variance_types: Vec::new(),
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Clock {
    Discrete,
    Continuous,
}

fn infinite_variance(mean: &NonNegativeMatrix, lambda: f64, types: &[usize], clock: Clock) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for &i in types {
        let rho = stopped_matrix(mean, i)?.rho_estimate();
        let heavy = match clock {
            Clock::Discrete => rho * rho >= lambda,
            Clock::Continuous => 2.0 * (rho - 1.0) >= lambda - 1.0,
        };
        if heavy {
            out.push(i);
        }
    }
    Ok(out)
}

fn tally(hist: &mut BTreeMap<String, u64>, reasons: impl Iterator<Item = StopReason>) {
    for r in reasons {
        *hist.entry(r.as_str().to_string()).or_default() += 1;
    }
}

fn tail(start_type: usize, xs: &[f64]) -> TailDiagnostic {
    TailDiagnostic {
        start_type,
        mean: xs.iter().sum::<f64>() / xs.len() as f64,
        max: xs.iter().copied().fold(0.0, f64::max),
    }
}

fn gw_setup(a: &NonNegativeMatrix, cfg: &GwEstimatorConfig) -> Result<(OffspringLaw, ClockConfig)> {
    let law = OffspringLaw::new(cfg.law, a.clone(), cfg.c)?;
    let lambda = effective_lambda(&law)?;
    let clock = ClockConfig {
        mode: cfg.mode,
        lambda,
        generation_cap: cfg.generation_cap,
        size_cap: cfg.size_cap,
    };
    clock.validate()?;
    Ok((law, clock))
}

/// `u(i) = 1 / E_i(sum_n w_n |Z^i_n|_1)` for every starting type `i`.
///
/// In clock mode `w_n = 1` and runs stop at the geometric clock; in analytic
/// mode `w_n = lambda^-n` with `lambda <= 1`.
pub fn estimate_u_gw_reciprocal(
    a: &NonNegativeMatrix,
    replicas: u64,
    cfg: &GwEstimatorConfig,
) -> Result<EigenvectorEstimate> {
    check_replicas(replicas)?;
    let (law, clock) = gw_setup(a, cfg)?;
    let mut diag = empty_diagnostics();
    let mut u_hat = Vec::with_capacity(a.dim());
    for i in 0..a.dim() {
        let runs: Vec<(f64, StopReason)> = (0..replicas)
            .into_par_iter()
            .map(|r| {
                let mut rng = replica_rng(cfg.seed, StreamTag::GwReciprocal, i, r);
                let t = run_stopped_gw(i, &law, &clock, false, &mut rng)?;
                Ok((t.statistic(&clock), t.stop_reason))
            })
            .collect::<Result<_>>()?;
        if runs.iter().all(|(_, s)| *s == StopReason::GenerationCap) {
            return Err(Error::Estimation(format!("all replicas from type {i} hit the generation cap")));
        }
        tally(&mut diag.stop_reasons, runs.iter().map(|r| r.1));
        let stats: Vec<f64> = runs.into_iter().map(|r| r.0).collect();
        let d = Estimate::from_samples(&stats);
        u_hat.push(reciprocal(&d)?);
        diag.denominators.push(d);
        diag.heavy_tail.push(tail(i, &stats));
    }
    if clock.mode == ClockMode::GeometricClock {
        let all: Vec<usize> = (0..a.dim()).collect();
        diag.infinite_variance_types = infinite_variance(law.mean(), clock.lambda, &all, Clock::Discrete)?;
    }
    Ok(finish(u_hat, Method::GwReciprocal, clock.lambda, cfg.c, diag))
}

/// Estimates the whole vector `v(j) = E_i(sum_n w_n Z^i_n(j))` from runs
/// started at `i`, then normalizes. Standard errors of `v_hat / |v_hat|_1`
/// use the delta method for a ratio of means.
pub fn estimate_u_gw_vector(
    a: &NonNegativeMatrix,
    i: usize,
    replicas: u64,
    cfg: &GwEstimatorConfig,
) -> Result<EigenvectorEstimate> {
    check_replicas(replicas)?;
    a.check_index(i)?;
    let (law, clock) = gw_setup(a, cfg)?;
    let n = a.dim();
    let runs: Vec<(Vec<f64>, StopReason)> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = replica_rng(cfg.seed, StreamTag::GwVector, i, r);
            let t = run_stopped_gw(i, &law, &clock, true, &mut rng)?;
            let s = t.type_statistic(&clock, n).expect("per-type recording enabled");
            Ok((s, t.stop_reason))
        })
        .collect::<Result<_>>()?;
    if runs.iter().all(|(_, s)| *s == StopReason::GenerationCap) {
        return Err(Error::Estimation(format!("all replicas from type {i} hit the generation cap")));
    }
    let mut diag = empty_diagnostics();
    tally(&mut diag.stop_reasons, runs.iter().map(|r| r.1));

    let reps = replicas as f64;
    let mut v = vec![0.0; n];
    for (s, _) in &runs {
        for (acc, x) in v.iter_mut().zip(s) {
            *acc += x;
        }
    }
    v.iter_mut().for_each(|x| *x /= reps);
    let mass: f64 = v.iter().sum();
    if !(mass > 0.0) {
        return Err(Error::Estimation("every replica produced an empty statistic".into()));
    }
    let totals: Vec<f64> = runs.iter().map(|(s, _)| s.iter().sum()).collect();
    let u_hat = (0..n)
        .map(|j| {
            let uj = v[j] / mass;
            let psi: Vec<f64> = runs
                .iter()
                .zip(&totals)
                .map(|((s, _), t)| (s[j] - uj * t) / mass)
                .collect();
            Estimate::new(uj, Estimate::from_samples(&psi).stderr, replicas)
        })
        .collect();
    let start: Vec<f64> = runs.iter().map(|(s, _)| s[i]).collect();
    diag.start_type = Some(i);
    diag.v_start = Some(Estimate::from_samples(&start));
    diag.heavy_tail.push(tail(i, &totals));
    if clock.mode == ClockMode::GeometricClock {
        diag.infinite_variance_types = infinite_variance(law.mean(), clock.lambda, &[i], Clock::Discrete)?;
    }
    Ok(finish(u_hat, Method::GwVector, clock.lambda, cfg.c, diag))
}

/// `u(i) = 1 / E_i(int_0^K |Z^i_t|_1 dt)` with `K ~ Exp(lambda - 1)`.
pub fn estimate_u_ct(
    a: &NonNegativeMatrix,
    replicas: u64,
    cfg: &CtEstimatorConfig,
) -> Result<EigenvectorEstimate> {
    check_replicas(replicas)?;
    let law = OffspringLaw::new(cfg.law, a.clone(), cfg.c)?;
    let lambda = effective_lambda(&law)?;
    let clock = CtClockConfig {
        mode: cfg.mode,
        lambda,
        time_cap: cfg.time_cap,
        size_cap: cfg.size_cap,
    };
    clock.validate()?;
    let mut diag = empty_diagnostics();
    let mut u_hat = Vec::with_capacity(a.dim());
    for i in 0..a.dim() {
        let runs: Vec<(f64, StopReason)> = (0..replicas)
            .into_par_iter()
            .map(|r| {
                let mut rng = replica_rng(cfg.seed, StreamTag::Ct, i, r);
                let t = run_stopped_ct(i, &law, &clock, &mut rng)?;
                Ok((t.weighted_integral, t.stop_reason))
            })
            .collect::<Result<_>>()?;
        if runs.iter().all(|(_, s)| *s == StopReason::TimeCap) {
            return Err(Error::Estimation(format!("all replicas from type {i} hit the time cap")));
        }
        tally(&mut diag.stop_reasons, runs.iter().map(|r| r.1));
        let stats: Vec<f64> = runs.into_iter().map(|r| r.0).collect();
        let d = Estimate::from_samples(&stats);
        u_hat.push(reciprocal(&d)?);
        diag.denominators.push(d);
        diag.heavy_tail.push(tail(i, &stats));
    }
    if clock.mode != CtMode::AnalyticWeights {
        let all: Vec<usize> = (0..a.dim()).collect();
        diag.infinite_variance_types = infinite_variance(law.mean(), lambda, &all, Clock::Continuous)?;
    }
    Ok(finish(u_hat, Method::CtReciprocal, lambda, cfg.c, diag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluate::series_vector_default;
    use crate::matrix::random_primitive;
    use crate::perron::stationary_markov;

    fn m(rows: &[&[f64]]) -> NonNegativeMatrix {
        NonNegativeMatrix::from_rows(rows).unwrap()
    }

    fn within(est: &EigenvectorEstimate, exact: &[f64], k: f64) {
        for (e, x) in est.u_hat.iter().zip(exact) {
            assert!(e.z_score(*x) <= k, "{:?}: {} +- {} vs {x}", est.method, e.value, e.stderr);
        }
    }

    #[test]
    fn estimate_ci_and_delta() {
        let e = Estimate::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.value, 2.5);
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((e.stderr - sd / 2.0).abs() < 1e-15);
        assert!((e.ci95.0 - (2.5 - 1.96 * e.stderr)).abs() < 1e-15);
        let r = reciprocal(&e).unwrap();
        assert!((r.value - 0.4).abs() < 1e-15);
        assert!((r.stderr - e.stderr / 6.25).abs() < 1e-15);
        assert!(reciprocal(&Estimate::new(0.0, 0.0, 5)).is_err());
    }

    #[test]
    fn scaling_examples() {
        let ones = m(&[&[1.0, 1.0], &[1.0, 1.0]]);
        assert!((choose_scaling(&ones, Scaling::Critical).unwrap() - 0.5).abs() < 1e-12);
        assert!((choose_scaling(&m(&[&[3.0]]), Scaling::Critical).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        let a = m(&[&[0.0, 1.0], &[3.0, 2.0]]);
        let c = choose_scaling(&a, Scaling::SupercriticalMargin(1.5)).unwrap();
        assert!((c - 0.5).abs() < 1e-11);
        let lam = perron_pair_default(&a.scaled(c).unwrap()).unwrap().lambda;
        assert!((lam - 1.5).abs() < 1e-11);
        assert!(choose_scaling(&m(&[&[0.0, 1.0], &[1.0, 0.0]]), Scaling::Critical).is_err());
    }

    #[test]
    fn default_start_is_largest_row() {
        assert_eq!(default_start_type(&m(&[&[0.0, 1.0], &[3.0, 2.0]])), 1);
    }

    #[test]
    fn replica_guard() {
        let ones = m(&[&[1.0, 1.0], &[1.0, 1.0]]);
        let cfg = GwEstimatorConfig::new(LawKind::PoissonRows, 0.75, ClockMode::GeometricClock, 0);
        assert!(matches!(estimate_u_gw_vector(&ones, 0, 0, &cfg), Err(Error::Estimation(_))));
        assert!(matches!(estimate_u_gw_reciprocal(&ones, 1, &cfg), Err(Error::Estimation(_))));
    }

    #[test]
    fn incompatible_clock_is_rejected() {
        let ones = m(&[&[1.0, 1.0], &[1.0, 1.0]]);
        let cfg = GwEstimatorConfig::new(LawKind::PoissonRows, 0.5, ClockMode::GeometricClock, 0);
        assert!(matches!(estimate_u_gw_reciprocal(&ones, 10, &cfg), Err(Error::InvalidParameter(_))));
        let cfg = GwEstimatorConfig::new(LawKind::PoissonRows, 1.0, ClockMode::AnalyticWeights, 0);
        assert!(matches!(estimate_u_gw_reciprocal(&ones, 10, &cfg), Err(Error::InvalidParameter(_))));
        let cfg = CtEstimatorConfig::new(LawKind::PoissonRows, 0.5, 0);
        assert!(matches!(estimate_u_ct(&ones, 10, &cfg), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn symmetric_matrix_all_methods() {
        let ones = m(&[&[1.0, 1.0], &[1.0, 1.0]]);
        let c = choose_scaling(&ones, Scaling::SupercriticalMargin(1.5)).unwrap();
        let gw = GwEstimatorConfig::new(LawKind::PoissonRows, c, ClockMode::GeometricClock, 42);
        within(&estimate_u_gw_reciprocal(&ones, 20_000, &gw).unwrap(), &[0.5, 0.5], 4.0);
        let vec = estimate_u_gw_vector(&ones, 0, 20_000, &gw).unwrap();
        within(&vec, &[0.5, 0.5], 4.0);
        let v0 = vec.diagnostics.v_start.unwrap();
        assert!(v0.z_score(1.0) < 4.0);
        let ct = CtEstimatorConfig::new(LawKind::PoissonRows, c, 42);
        within(&estimate_u_ct(&ones, 20_000, &ct).unwrap(), &[0.5, 0.5], 4.0);
    }

    #[test]
    fn markov_critical_reproduces_stationary_law() {
        let p = m(&[&[0.5, 0.5], &[0.25, 0.75]]);
        let c = choose_scaling(&p, Scaling::Critical).unwrap();
        let cfg = GwEstimatorConfig::new(LawKind::SingleChildMarkov, c, ClockMode::AnalyticWeights, 7);
        let est = estimate_u_gw_reciprocal(&p, 20_000, &cfg).unwrap();
        within(&est, &stationary_markov(&p).unwrap(), 4.0);
        assert!(est.diagnostics.denominators[0].z_score(3.0) < 4.0);
        assert!(est.diagnostics.denominators[1].z_score(1.5) < 4.0);
    }

    #[test]
    fn single_type_clock() {
        let three = m(&[&[3.0]]);
        let cfg = GwEstimatorConfig::new(LawKind::PoissonRows, 1.0, ClockMode::GeometricClock, 1);
        within(&estimate_u_gw_reciprocal(&three, 20_000, &cfg).unwrap(), &[1.0], 4.0);
        let ct = CtEstimatorConfig::new(LawKind::PoissonRows, 1.0, 1);
        let est = estimate_u_ct(&three, 20_000, &ct).unwrap();
        assert!(est.diagnostics.denominators[0].z_score(1.0) < 4.0);
    }

    #[test]
    fn denominators_match_series() {
        let a = random_primitive(3, 17);
        let c = choose_scaling(&a, Scaling::SupercriticalMargin(1.5)).unwrap();
        let scaled = a.scaled(c).unwrap();
        let lam = perron_pair_default(&scaled).unwrap().lambda;
        let cfg = GwEstimatorConfig::new(LawKind::BernoulliSplit, c, ClockMode::GeometricClock, 3);
        let est = estimate_u_gw_reciprocal(&a, 20_000, &cfg).unwrap();
        for i in 0..3 {
            let d: f64 = series_vector_default(&scaled, i, lam).unwrap().iter().sum();
            assert!(est.diagnostics.denominators[i].z_score(d) < 4.0, "type {i}");
        }
        let s = &est.diagnostics;
        assert!((s.normalization_sum - 1.0).abs() <= 5.0 * s.sigma_total);
    }

    #[test]
    fn flags_infinite_variance_under_clock() {
        // rho(B_1) / lambda ~ 0.85 here, so (1.5 * 0.85)^2 > 1.5.
        let a = m(&[&[0.5, 0.76, 1.75], &[0.0, 0.8, 0.44], &[0.85, 1.35, 0.82]]);
        let clock = GwEstimatorConfig::for_scaling(&a, LawKind::PoissonRows, Scaling::SupercriticalMargin(1.5), 1).unwrap();
        let est = estimate_u_gw_reciprocal(&a, 200, &clock).unwrap();
        assert_eq!(est.diagnostics.infinite_variance_types, vec![1]);
        let crit = GwEstimatorConfig::for_scaling(&a, LawKind::PoissonRows, Scaling::Critical, 1).unwrap();
        assert_eq!(crit.mode, ClockMode::AnalyticWeights);
        let est = estimate_u_gw_reciprocal(&a, 200, &crit).unwrap();
        assert!(est.diagnostics.infinite_variance_types.is_empty());
    }

    #[test]
    fn critical_ct_integrates_to_extinction() {
        let a = random_primitive(3, 20);
        let u = perron_pair_default(&a).unwrap().u;
        let cfg = CtEstimatorConfig::for_scaling(&a, LawKind::PoissonRows, Scaling::Critical, 5).unwrap();
        assert_eq!(cfg.mode, CtMode::AnalyticWeights);
        let est = estimate_u_ct(&a, 20_000, &cfg).unwrap();
        within(&est, &u, 4.0);
        assert_eq!(est.diagnostics.stop_reasons.get("extinct"), Some(&(3 * 20_000)));
    }

    #[test]
    fn results_do_not_depend_on_thread_count() {
        let a = random_primitive(3, 2);
        let c = choose_scaling(&a, Scaling::SupercriticalMargin(1.5)).unwrap();
        let cfg = GwEstimatorConfig::new(LawKind::PoissonRows, c, ClockMode::GeometricClock, 9);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| estimate_u_gw_vector(&a, 1, 3_000, &cfg).unwrap())
        };
        assert_eq!(run(1), run(4));
    }
}
