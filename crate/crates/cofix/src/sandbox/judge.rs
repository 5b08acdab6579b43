//! Verdict computation over test-case sets.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ExecStatus, ExecutionLimits, Sandbox};
use crate::data::TestCase;
use crate::error::{Error, Result};
use crate::textdiff::normalize_output;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    WrongAnswer,
    Error,
    Timeout,
}

/// Per-test verdicts aligned with the input order, plus aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeReport {
    pub verdicts: Vec<Verdict>,
    pub pass_ratio: f64,
    pub all_passed: bool,
}

impl JudgeReport {
    fn from_verdicts(verdicts: Vec<Verdict>) -> Self {
        let passed = verdicts.iter().filter(|v| **v == Verdict::Pass).count();
        let pass_ratio = passed as f64 / verdicts.len() as f64;
        JudgeReport { all_passed: passed == verdicts.len(), pass_ratio, verdicts }
    }
}

fn verdict_for(status: ExecStatus, stdout: &str, expected: &str) -> Verdict {
    match status {
        ExecStatus::Ok => {
            if normalize_output(stdout) == normalize_output(expected) {
                Verdict::Pass
            } else {
                Verdict::WrongAnswer
            }
        }
        ExecStatus::Timeout => Verdict::Timeout,
        // Truncated output cannot be trusted for comparison.
        ExecStatus::RuntimeError | ExecStatus::MemoryExceeded | ExecStatus::OutputTruncated => {
            Verdict::Error
        }
    }
}

impl Sandbox {
    /// Judge `code` on every test. Execution fans out over the worker
    /// pool; verdicts are gathered positionally, so reports are identical
    /// for any worker count (for deterministic programs).
    pub fn judge(&self, code: &str, tests: &[TestCase], limits: &ExecutionLimits) -> Result<JudgeReport> {
        if tests.is_empty() {
            return Err(Error::Precondition("judge requires at least one test case".into()));
        }
        let results: Vec<Result<Verdict>> = self.pool.install(|| {
            tests
                .par_iter()
                .map(|tc| {
                    let run = self.run_program(code, &tc.input, limits)?;
                    Ok(verdict_for(run.status, &run.stdout, &tc.expected_output))
                })
                .collect()
        });
        let verdicts = results.into_iter().collect::<Result<Vec<_>>>()?;
        Ok(JudgeReport::from_verdicts(verdicts))
    }

    /// Fraction of tests the code passes; the preference score of the
    /// feedback that produced it.
    pub fn preference_score(&self, code: &str, tests: &[TestCase], limits: &ExecutionLimits) -> Result<f64> {
        Ok(self.judge(code, tests, limits)?.pass_ratio)
    }
}
