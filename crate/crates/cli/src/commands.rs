use std::collections::BTreeMap;
use std::fmt;

use perron_core::estimator::{
    default_start_type, estimate_u_ct, estimate_u_gw_reciprocal, estimate_u_gw_vector,
    CtEstimatorConfig, EigenvectorEstimate, GwEstimatorConfig, Scaling, DEFAULT_MARGIN,
};
use perron_core::evaluate::{normalized, series_vector, TruncationPlan, DEFAULT_N_MAX};
use perron_core::io::{read_matrix, MatrixFileError};
use perron_core::perron::perron_pair_default;
use perron_core::{resolvent_vector, stopped_matrix, validate_primitive, Error, LawKind, NonNegativeMatrix};

use crate::report::*;
use crate::{Input, LawArg, McMethod, ScalingArg};

/// Monte Carlo z-scores above this are flagged by `compare`.
pub const Z_FLAG: f64 = 4.0;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Parse(MatrixFileError),
    Domain(String),
    NotPrimitive(Box<RunReport>, bool),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Parse(_) => 2,
            CliError::Domain(_) | CliError::NotPrimitive(..) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Domain(m) => f.write_str(m),
            CliError::Parse(e) => write!(f, "{e}"),
            CliError::NotPrimitive(..) => f.write_str("not primitive"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_) | Error::IndexOutOfRange { .. } => CliError::Usage(e.to_string()),
            other => CliError::Domain(other.to_string()),
        }
    }
}

fn load(input: &Input) -> Result<(NonNegativeMatrix, MatrixEcho), CliError> {
    let a = read_matrix(&input.file, input.format).map_err(CliError::Parse)?;
    let echo = MatrixEcho {
        path: input.file.display().to_string(),
        n: a.dim(),
    };
    Ok((a, echo))
}

/// Loads and rejects non-primitive input with a validate-style report.
fn load_primitive(input: &Input) -> Result<(NonNegativeMatrix, MatrixEcho), CliError> {
    let (a, echo) = load(input)?;
    let primitivity = validate_primitive(&a);
    if !primitivity.is_primitive {
        let report = RunReport::Validate(ValidateReport {
            matrix: echo,
            primitivity,
            lambda: None,
            u: None,
            residual: None,
        });
        return Err(CliError::NotPrimitive(Box::new(report), input.json));
    }
    Ok((a, echo))
}

pub fn validate(input: &Input) -> Result<RunReport, CliError> {
    let (a, echo) = load_primitive(input)?;
    let pp = perron_pair_default(&a)?;
    Ok(RunReport::Validate(ValidateReport {
        matrix: echo,
        primitivity: validate_primitive(&a),
        lambda: Some(pp.lambda),
        u: Some(pp.u),
        residual: Some(pp.residual),
    }))
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn evaluator_result(v: Vec<f64>, start: usize, oracle: &[f64]) -> EvaluatorResult {
    let u = normalized(&v);
    EvaluatorResult {
        v_start: v[start],
        max_abs_diff_vs_oracle: max_abs_diff(&u, oracle),
        u,
        v,
    }
}

pub fn exact(input: &Input, start_type: usize, tol: f64) -> Result<RunReport, CliError> {
    if !(tol > 0.0) {
        return Err(CliError::Usage(format!("--tol must be positive, got {tol}")));
    }
    let (a, echo) = load_primitive(input)?;
    a.check_index(start_type)?;
    let pp = perron_pair_default(&a)?;
    let plan = TruncationPlan::new(&stopped_matrix(&a, start_type)?, pp.lambda, tol, DEFAULT_N_MAX)?;
    let series = series_vector(&a, start_type, pp.lambda, &plan).map_err(|e| match e {
        Error::Truncation { terms, bound, partial, .. } => CliError::Domain(format!(
            "series truncation failed after {terms} terms (tail bound {bound:e}); partial sum {partial:?}"
        )),
        other => other.into(),
    })?;
    let resolvent = resolvent_vector(&a, start_type, pp.lambda)?;
    Ok(RunReport::Exact(ExactReport {
        matrix: echo,
        start_type,
        tol,
        lambda: pp.lambda,
        series: evaluator_result(series, start_type, &pp.u),
        resolvent: evaluator_result(resolvent, start_type, &pp.u),
        oracle_u: pp.u,
    }))
}

pub struct McOptions {
    pub method: McMethod,
    pub replicas: u64,
    pub seed: u64,
    pub scaling: ScalingArg,
    pub margin: f64,
    pub law: LawArg,
    pub start_type: Option<usize>,
}

fn law_kind(l: LawArg) -> LawKind {
    match l {
        LawArg::PoissonRows => LawKind::PoissonRows,
        LawArg::SingleChildMarkov => LawKind::SingleChildMarkov,
        LawArg::BernoulliSplit => LawKind::BernoulliSplit,
    }
}

fn method_name(m: McMethod) -> &'static str {
    match m {
        McMethod::GwReciprocal => "gw-reciprocal",
        McMethod::GwVector => "gw-vector",
        McMethod::Ct => "ct",
    }
}

fn estimate(a: &NonNegativeMatrix, opts: &McOptions) -> Result<(EigenvectorEstimate, Option<usize>), CliError> {
    let scaling = match opts.scaling {
        ScalingArg::Critical => Scaling::Critical,
        ScalingArg::Margin => {
            if !(opts.margin > 1.0) {
                return Err(CliError::Usage(format!(
                    "--margin must exceed 1 for the killing clock, got {}",
                    opts.margin
                )));
            }
            Scaling::SupercriticalMargin(opts.margin)
        }
    };
    if opts.start_type.is_some() && opts.method != McMethod::GwVector {
        return Err(CliError::Usage("--type only applies to --method gw-vector".into()));
    }
    let law = law_kind(opts.law);
    let usage = |e: Error| match e {
        Error::NotStochastic { row, sum } => CliError::Usage(format!(
            "--law single-child-markov needs c A row-stochastic; row {row} sums to {sum}"
        )),
        other => other.into(),
    };
    Ok(match opts.method {
        McMethod::GwReciprocal | McMethod::GwVector => {
            let gw = GwEstimatorConfig::for_scaling(a, law, scaling, opts.seed)?;
            if opts.method == McMethod::GwReciprocal {
                (estimate_u_gw_reciprocal(a, opts.replicas, &gw).map_err(usage)?, None)
            } else {
                let i = opts.start_type.unwrap_or_else(|| default_start_type(a));
                a.check_index(i)?;
                (estimate_u_gw_vector(a, i, opts.replicas, &gw).map_err(usage)?, Some(i))
            }
        }
        McMethod::Ct => {
            let cfg = CtEstimatorConfig::for_scaling(a, law, scaling, opts.seed)?;
            (estimate_u_ct(a, opts.replicas, &cfg).map_err(usage)?, None)
        }
    })
}

pub fn mc(input: &Input, opts: &McOptions) -> Result<RunReport, CliError> {
    let (a, echo) = load_primitive(input)?;
    let (est, start_type) = estimate(&a, opts)?;
    Ok(RunReport::Mc(McReport {
        matrix: echo,
        config: McConfig {
            method: method_name(opts.method).to_string(),
            law: law_kind(opts.law).as_str().to_string(),
            scaling: match opts.scaling {
                ScalingArg::Critical => "critical".into(),
                ScalingArg::Margin => "margin".into(),
            },
            margin: opts.margin,
            seed: opts.seed,
            replicas: opts.replicas,
            c: est.c_used,
            lambda_eff: est.lambda_used,
            start_type,
        },
        results: McResults::from_estimate(&est),
        diagnostics: est.diagnostics,
    }))
}

fn exact_row(source: &str, result: Result<Vec<f64>, Error>, oracle: &[f64]) -> CompareRow {
    match result {
        Ok(v) => {
            let u = normalized(&v);
            CompareRow {
                source: source.into(),
                max_abs_diff: Some(max_abs_diff(&u, oracle)),
                u: Some(u),
                stderr: None,
                max_z: None,
                flagged: false,
                error: None,
            }
        }
        Err(e) => error_row(source, e.to_string()),
    }
}

fn error_row(source: &str, error: String) -> CompareRow {
    CompareRow {
        source: source.into(),
        u: None,
        stderr: None,
        max_abs_diff: None,
        max_z: None,
        flagged: false,
        error: Some(error),
    }
}

pub fn compare(input: &Input, replicas: u64, seed: u64) -> Result<RunReport, CliError> {
    let (a, echo) = load_primitive(input)?;
    let pp = perron_pair_default(&a)?;
    let i = default_start_type(&a);
    let mut rows = vec![CompareRow {
        source: "oracle".into(),
        u: Some(pp.u.clone()),
        stderr: None,
        max_abs_diff: Some(0.0),
        max_z: None,
        flagged: false,
        error: None,
    }];
    rows.push(exact_row(
        "series",
        perron_core::evaluate::series_vector_default(&a, i, pp.lambda),
        &pp.u,
    ));
    rows.push(exact_row("resolvent", resolvent_vector(&a, i, pp.lambda), &pp.u));

    let mut stop_reasons = BTreeMap::new();
    for method in [McMethod::GwReciprocal, McMethod::GwVector, McMethod::Ct] {
        let opts = McOptions {
            method,
            replicas,
            seed,
            scaling: ScalingArg::Critical,
            margin: DEFAULT_MARGIN,
            law: LawArg::PoissonRows,
            start_type: (method == McMethod::GwVector).then_some(i),
        };
        let name = method_name(method);
        match estimate(&a, &opts) {
            Ok((est, _)) => {
                let u = est.values();
                let stderr: Vec<f64> = est.u_hat.iter().map(|e| e.stderr).collect();
                let max_z = est
                    .u_hat
                    .iter()
                    .zip(&pp.u)
                    .map(|(e, x)| e.z_score(*x))
                    .fold(0.0, f64::max);
                stop_reasons.insert(name.to_string(), est.diagnostics.stop_reasons.clone());
                rows.push(CompareRow {
                    source: name.into(),
                    max_abs_diff: Some(max_abs_diff(&u, &pp.u)),
                    u: Some(u),
                    stderr: Some(stderr),
                    max_z: Some(max_z),
                    flagged: !(max_z <= Z_FLAG),
                    error: None,
                });
            }
            Err(e) => rows.push(error_row(name, e.to_string())),
        }
    }
    Ok(RunReport::Compare(CompareReport {
        matrix: echo,
        seed,
        replicas,
        z_threshold: Z_FLAG,
        lambda: pp.lambda,
        rows,
        stop_reasons,
    }))
}
