//! Fit reports as JSON documents and aligned plain-text tables.

use std::fmt::Write as _;

use serde::Serialize;

use recall_core::mlr::{CoefficientRow, MlrFit, Windows};
use recall_core::rpl::{RplFit, RplParams};
use recall_core::FormatKind;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MlrFitReport {
    pub windows: Windows,
    pub windows_selected: bool,
    pub samples: usize,
    pub iterations: usize,
    pub converged: bool,
    pub log_likelihood: f64,
    pub mean_log_likelihood: f64,
    pub coefficients: Vec<CoefficientRow>,
    pub warnings: Vec<String>,
    pub skipped_lines: usize,
}

impl MlrFitReport {
    pub fn new(fit: &MlrFit, windows_selected: bool, warnings: Vec<String>, skipped_lines: usize) -> Self {
        Self {
            windows: fit.params.windows(),
            windows_selected,
            samples: fit.samples,
            iterations: fit.iterations,
            converged: fit.converged,
            log_likelihood: fit.log_likelihood,
            mean_log_likelihood: fit.log_likelihood / fit.samples as f64,
            coefficients: fit.coefficients(),
            warnings,
            skipped_lines,
        }
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "windows n={} m={} l={}  samples={}  iterations={}  converged={}  log-likelihood={:.4}",
            self.windows.n, self.windows.m, self.windows.l, self.samples, self.iterations, self.converged, self.log_likelihood
        );
        out.push_str(&coefficient_table(&self.coefficients));
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        out
    }
}

pub fn coefficient_table(rows: &[CoefficientRow]) -> String {
    let name_width = rows.iter().map(|r| r.name.len()).max().unwrap_or(4).max(4);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<name_width$}  {:>10}  {:>10}  {:>8}  {:>10}  {:>22}",
        "name", "estimate", "std.err", "z", "p", "95% CI"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<name_width$}  {:>10.4}  {:>10.4}  {:>8.2}  {:>10.3e}  [{:>9.4}, {:>9.4}]",
            r.name, r.value, r.std_err, r.z, r.p_value, r.ci_low, r.ci_high
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RplFitReport {
    pub trials: usize,
    pub evaluations: usize,
    pub log_likelihood: f64,
    pub mean_log_likelihood: f64,
    pub start_values: Vec<f64>,
    pub params: RplParams,
    pub warnings: Vec<String>,
    pub skipped_lines: usize,
}

impl RplFitReport {
    pub fn new(fit: &RplFit, skipped_lines: usize) -> Self {
        Self {
            trials: fit.trials,
            evaluations: fit.evaluations,
            log_likelihood: fit.log_likelihood,
            mean_log_likelihood: fit.mean_log_likelihood(),
            start_values: fit.start_values.clone(),
            params: fit.params.clone(),
            warnings: fit.warnings.clone(),
            skipped_lines,
        }
    }

    pub fn table(&self) -> String {
        let p = &self.params;
        let mut rows: Vec<(String, f64)> = vec![
            ("s_0".into(), p.s_0),
            ("s_c".into(), p.s_c),
            ("s_i".into(), p.s_i),
            ("tau_0c".into(), p.tau_0c),
            ("tau_0i".into(), p.tau_0i),
            ("tau_c".into(), p.tau_c),
            ("tau_i".into(), p.tau_i),
            ("gamma_c".into(), p.gamma_c),
            ("gamma_i".into(), p.gamma_i),
            ("transfer_t".into(), p.transfer_t),
        ];
        for kind in FormatKind::ALL.iter().filter(|k| **k != FormatKind::CuedRecall) {
            if let Some(k) = p.k_factors.get(kind) {
                rows.push((format!("k[{}]", kind.as_str()), *k));
            }
        }
        let mut out = String::new();
        let _ = writeln!(
            out,
            "trials={}  evaluations={}  log-likelihood={:.4}  per trial={:.6}",
            self.trials, self.evaluations, self.log_likelihood, self.mean_log_likelihood
        );
        for (name, value) in rows {
            let _ = writeln!(out, "{name:<28}  {value:>14.6}");
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        out
    }
}
