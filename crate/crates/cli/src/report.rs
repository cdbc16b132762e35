//! JSON report types and the human-readable rendering.

use std::collections::BTreeMap;

use perron_core::estimator::{Diagnostics, EigenvectorEstimate};
use perron_core::PrimitivityReport;
use serde::Serialize;

#[derive(Debug, Serialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum RunReport {
    Validate(ValidateReport),
    Exact(ExactReport),
    Mc(McReport),
    Compare(CompareReport),
}

#[derive(Debug, Serialize)]
pub struct MatrixEcho {
    pub path: String,
    pub n: usize,
}

#[derive(Debug, Serialize)]
pub struct ValidateReport {
    pub matrix: MatrixEcho,
    pub primitivity: PrimitivityReport,
    pub lambda: Option<f64>,
    pub u: Option<Vec<f64>>,
    pub residual: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct EvaluatorResult {
    /// Unnormalized vector with `v[start_type] == 1`.
    pub v: Vec<f64>,
    pub v_start: f64,
    pub u: Vec<f64>,
    pub max_abs_diff_vs_oracle: f64,
}

#[derive(Debug, Serialize)]
pub struct ExactReport {
    pub matrix: MatrixEcho,
    pub start_type: usize,
    pub tol: f64,
    pub lambda: f64,
    pub oracle_u: Vec<f64>,
    pub series: EvaluatorResult,
    pub resolvent: EvaluatorResult,
}

#[derive(Debug, Serialize)]
pub struct McConfig {
    pub method: String,
    pub law: String,
    pub scaling: String,
    pub margin: f64,
    pub seed: u64,
    pub replicas: u64,
    pub c: f64,
    pub lambda_eff: f64,
    pub start_type: Option<usize>,
}

#[derive(Debug, Serialize)]
pub struct McResults {
    pub u: Vec<f64>,
    pub stderr: Vec<f64>,
    pub ci95_low: Vec<f64>,
    pub ci95_high: Vec<f64>,
}

impl McResults {
    pub fn from_estimate(e: &EigenvectorEstimate) -> Self {
        Self {
            u: e.u_hat.iter().map(|x| x.value).collect(),
            stderr: e.u_hat.iter().map(|x| x.stderr).collect(),
            ci95_low: e.u_hat.iter().map(|x| x.ci95.0).collect(),
            ci95_high: e.u_hat.iter().map(|x| x.ci95.1).collect(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct McReport {
    pub matrix: MatrixEcho,
    pub config: McConfig,
    pub results: McResults,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Serialize)]
pub struct CompareRow {
    pub source: String,
    pub u: Option<Vec<f64>>,
    pub stderr: Option<Vec<f64>>,
    pub max_abs_diff: Option<f64>,
    pub max_z: Option<f64>,
    pub flagged: bool,
    pub error: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct CompareReport {
    pub matrix: MatrixEcho,
    pub seed: u64,
    pub replicas: u64,
    pub z_threshold: f64,
    pub lambda: f64,
    pub rows: Vec<CompareRow>,
    pub stop_reasons: BTreeMap<String, BTreeMap<String, u64>>,
}

fn vec_str(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.10}")).collect();
    format!("({})", parts.join(", "))
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        match self {
            RunReport::Validate(r) => {
                out += &format!("matrix       {} (n = {})\n", r.matrix.path, r.matrix.n);
                match r.primitivity.exponent {
                    Some(m) => out += &format!("primitive    yes (A^{m} > 0)\n"),
                    None => {
                        out += &format!(
                            "primitive    no: {}\n",
                            r.primitivity.reason.as_deref().unwrap_or("unknown")
                        )
                    }
                }
                if let (Some(l), Some(u)) = (r.lambda, &r.u) {
                    out += &format!("lambda       {l:.12}\nu            {}\n", vec_str(u));
                }
            }
            RunReport::Exact(r) => {
                out += &format!("lambda       {:.12}\n", r.lambda);
                out += &format!("oracle u     {}\n", vec_str(&r.oracle_u));
                for (name, e) in [("series", &r.series), ("resolvent", &r.resolvent)] {
                    out += &format!(
                        "{name:<12} v = {}  v({}) = {:.12}\n{:<12} u = {}  max|du| = {:.3e}\n",
                        vec_str(&e.v),
                        r.start_type,
                        e.v_start,
                        "",
                        vec_str(&e.u),
                        e.max_abs_diff_vs_oracle
                    );
                }
            }
            RunReport::Mc(r) => {
                out += &format!(
                    "method {}  law {}  c = {:.6}  lambda_eff = {:.6}  replicas {}  seed {}\n",
                    r.config.method, r.config.law, r.config.c, r.config.lambda_eff, r.config.replicas, r.config.seed
                );
                out += &format!("{:>6} {:>14} {:>12} {:>14} {:>14}\n", "type", "u_hat", "stderr", "ci95_low", "ci95_high");
                for j in 0..r.results.u.len() {
                    out += &format!(
                        "{:>6} {:>14.8} {:>12.3e} {:>14.8} {:>14.8}\n",
                        j, r.results.u[j], r.results.stderr[j], r.results.ci95_low[j], r.results.ci95_high[j]
                    );
                }
                out += &format!(
                    "sum u_hat = {:.8} (sigma_total {:.3e})\n",
                    r.diagnostics.normalization_sum, r.diagnostics.sigma_total
                );
                if let Some(v) = &r.diagnostics.v_start {
                    out += &format!("v(start) = {:.6} +- {:.3e}\n", v.value, v.stderr);
                }
                let hist: Vec<String> = r.diagnostics.stop_reasons.iter().map(|(k, v)| format!("{k}={v}")).collect();
                out += &format!("stop reasons: {}\n", hist.join(" "));
            }
            RunReport::Compare(r) => {
                out += &format!("lambda = {:.12}  replicas {}  seed {}\n", r.lambda, r.replicas, r.seed);
                out += &format!("{:<14} {:>12} {:>8} {:>5}  u\n", "source", "max|du|", "max z", "flag");
                for row in &r.rows {
                    match (&row.u, &row.error) {
                        (Some(u), _) => {
                            out += &format!(
                                "{:<14} {:>12.3e} {:>8} {:>5}  {}\n",
                                row.source,
                                row.max_abs_diff.unwrap_or(0.0),
                                row.max_z.map_or("-".to_string(), |z| format!("{z:.2}")),
                                if row.flagged { "!!" } else { "" },
                                vec_str(u)
                            )
                        }
                        (None, Some(e)) => out += &format!("{:<14} error: {e}\n", row.source),
                        (None, None) => {}
                    }
                }
            }
        }
        out
    }
}
