//! Evaluation metrics: pass@1, error-resolved rate, error detection
//! rate, and per-error-type breakdowns.
//!
//! Percentages carry both the exact value and a one-decimal half-up
//! rounding that matches how results tables are printed.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textdiff::{lcs_kept_lines, normalized_lines};

/// Percentage with its exact value retained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Percent {
    pub exact: f64,
    pub rounded: f64,
}

impl Percent {
    pub fn new(exact: f64) -> Self {
        Percent { exact, rounded: round_half_up_1(exact) }
    }
}

/// Round to one decimal, halves away from zero.
fn round_half_up_1(x: f64) -> f64 {
    (x * 10.0 + 0.5).floor() / 10.0
}

/// The six benchmark error categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorType {
    MissingLogic,
    ExcessLogic,
    ValueMisuse,
    OperatorMisuse,
    VariableMisuse,
    FunctionMisuse,
}

impl ErrorType {
    pub fn name(&self) -> &'static str {
        match self {
            ErrorType::MissingLogic => "missing_logic",
            ErrorType::ExcessLogic => "excess_logic",
            ErrorType::ValueMisuse => "value_misuse",
            ErrorType::OperatorMisuse => "operator_misuse",
            ErrorType::VariableMisuse => "variable_misuse",
            ErrorType::FunctionMisuse => "function_misuse",
        }
    }
}

/// Per-problem evaluation outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemResult {
    pub problem_id: String,
    /// Whether the pre-edit solution already passed (generation-benchmark
    /// setting).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub passed_before: Option<bool>,
    pub passed_after: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_type: Option<ErrorType>,
}

/// Aggregated evaluation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub pass_at_1: Percent,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub err: Option<Percent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detection_rate: Option<Percent>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub per_type: BTreeMap<ErrorType, Percent>,
}

/// Percentage of problems whose edited solution passes.
pub fn pass_at_1(results: &[ProblemResult]) -> Result<Percent> {
    if results.is_empty() {
        return Err(Error::Precondition("pass@1 over zero problems is undefined".into()));
    }
    let passed = results.iter().filter(|r| r.passed_after).count();
    Ok(Percent::new(100.0 * passed as f64 / results.len() as f64))
}

/// Error-resolved rate: the pass@1 gain from editing, normalized by the
/// initially-unsolved fraction.
pub fn err(pass_before: f64, pass_after: f64) -> Result<Percent> {
    if pass_before >= 100.0 {
        if pass_before == 100.0 {
            return Err(Error::Precondition(
                "ERR is undefined at pass_before = 100 (zero denominator)".into(),
            ));
        }
        return Err(Error::Precondition("pass_before outside [0, 100)".into()));
    }
    if pass_before < 0.0 {
        return Err(Error::Precondition("pass_before outside [0, 100)".into()));
    }
    if pass_after < pass_before {
        return Err(Error::Precondition("pass_after must be >= pass_before".into()));
    }
    Ok(Percent::new(100.0 * (pass_after - pass_before) / (100.0 - pass_before)))
}

/// Fraction of annotated error lines that the edit changed or deleted,
/// under the LCS line diff.
pub fn error_detection_rate(
    wrong_code: &str,
    edited_code: &str,
    error_line_indices: &[usize],
) -> Result<Percent> {
    if error_line_indices.is_empty() {
        return Err(Error::Precondition("no annotated error lines".into()));
    }
    let n_lines = normalized_lines(wrong_code).len();
    if let Some(&bad) = error_line_indices.iter().find(|&&i| i >= n_lines) {
        return Err(Error::Precondition(format!(
            "error line index {bad} out of range for {n_lines}-line code"
        )));
    }
    let kept = lcs_kept_lines(wrong_code, edited_code);
    let edited = error_line_indices.iter().filter(|&&i| !kept[i]).count();
    Ok(Percent::new(100.0 * edited as f64 / error_line_indices.len() as f64))
}

/// pass@1 per error category. Categories with no results are absent from
/// the map rather than reported as zero.
pub fn error_type_breakdown(results: &[ProblemResult]) -> Result<BTreeMap<ErrorType, Percent>> {
    let missing: Vec<&str> = results
        .iter()
        .filter(|r| r.error_type.is_none())
        .map(|r| r.problem_id.as_str())
        .collect();
    if !missing.is_empty() {
        return Err(Error::Precondition(format!(
            "results missing error_type: {}",
            missing.join(", ")
        )));
    }
    let mut grouped: BTreeMap<ErrorType, Vec<ProblemResult>> = BTreeMap::new();
    for r in results {
        grouped.entry(r.error_type.unwrap()).or_default().push(r.clone());
    }
    grouped
        .into_iter()
        .map(|(ty, group)| Ok((ty, pass_at_1(&group)?)))
        .collect()
}
