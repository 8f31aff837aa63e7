//! Experiment runner behind the `sparsefb` binary.

pub mod config;
pub mod experiment;
pub mod gallery;
pub mod instances;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::io::read_trace_csv;
use crate::solver::{distances_nonincreasing, FEJER_SLACK};
use crate::support::{audit_supports, SupportReport};

pub use config::{Builtin, ExperimentConfig, ProblemSource};
pub use experiment::{run_experiment, ExperimentOutcome, RunSummary};
pub use gallery::{emit_prox_gallery, parse_penalty_spec, prox_gallery, GallerySpec};
pub use instances::{builtin_data, generate_synthetic, SyntheticInstance};

/// Result of re-auditing a stored trace against a stored support report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditResult {
    pub violations: usize,
    pub reported_violations: usize,
    pub identification_iteration: Option<usize>,
    pub bound: f64,
    pub bound_holds: bool,
    pub descent: bool,
    /// `None` when the trace carries no distances.
    pub fejer: Option<bool>,
    pub passed: bool,
}

/// Recounts support violations in `trace.csv` and checks them against `support_report.json`.
pub fn audit_files(trace_path: &Path, report_path: &Path) -> Result<AuditResult> {
    let trace = read_trace_csv(trace_path, f64::NAN)?;
    let report: SupportReport = serde_json::from_str(&std::fs::read_to_string(report_path)?)?;
    let supports = trace
        .records()
        .iter()
        .enumerate()
        .map(|(i, r)| (r.iteration, trace.support_at(i)));
    let id = audit_supports(supports, &report.esupp);
    let bound_holds = id.violations as f64 <= report.identification_bound.ceil();
    let descent = trace.objective_nonincreasing(experiment::DESCENT_SLACK);
    let dists: Option<Vec<f64>> = trace.records().iter().map(|r| r.dist_to_ref).collect();
    let fejer = dists.map(|d| distances_nonincreasing(&d, FEJER_SLACK));
    Ok(AuditResult {
        violations: id.violations,
        reported_violations: report.observed_violations,
        identification_iteration: id.identification_iteration,
        bound: report.identification_bound,
        bound_holds,
        descent,
        fejer,
        passed: bound_holds
            && descent
            && fejer.unwrap_or(true)
            && id.violations == report.observed_violations,
    })
}
