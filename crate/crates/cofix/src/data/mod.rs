//! Dataset schema: problems, test cases, edit instances, and the
//! validated container tying them together.
//!
//! All types are immutable after construction; operations over them are
//! pure, so they are safe to share across threads.

mod filters;
mod io;
mod overlap;
mod stats;

pub use filters::{filter_duplicate_solutions, filter_error_free, default_error_free_predicate, FilterOutcome, NO_ERRORS_MARKER};
pub use io::{load_dataset, serialize_dataset};
pub use overlap::{line_overlap, OverlapReport, SolutionOverlap, OVERLAP_BUCKETS};
pub use stats::{compute_stats, difficulty_counts, DatasetStats};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textdiff::normalized_lines;

/// Where a test case came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestProvenance {
    /// Produced by executing the golden solution on a model-proposed input.
    Synthetic,
    /// Shipped with a benchmark.
    Benchmark,
}

/// One stdin/expected-stdout pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCase {
    pub input: String,
    pub expected_output: String,
    pub provenance: TestProvenance,
}

/// A programming problem with its hidden tests.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Problem {
    pub id: String,
    pub description: String,
    /// Difficulty level, 1 (beginner) through 5 (expert).
    pub difficulty: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_format: Option<String>,
    #[serde(default)]
    pub test_cases: Vec<TestCase>,
    /// 0-based indices into a reference wrong code; benchmark annotation
    /// consumed by the error-detection metric.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_line_indices: Option<Vec<usize>>,
}

/// One (problem, wrong code, correct code, feedback) edit instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditInstance {
    pub problem_id: String,
    pub user_id: String,
    /// Position in the user's submission history, starting at 1.
    pub submission_index: u32,
    pub wrong_code: String,
    pub correct_code: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feedback: Option<String>,
}

impl EditInstance {
    /// Identity string used in diagnostics.
    pub fn identity(&self) -> String {
        format!("{}/{}#{}", self.problem_id, self.user_id, self.submission_index)
    }
}

/// Validated collection of problems and edit instances.
///
/// Construction checks every type invariant; the container is immutable
/// afterwards (filters return new datasets).
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Dataset {
    problems: BTreeMap<String, Problem>,
    instances: Vec<EditInstance>,
}

impl Dataset {
    pub fn new(problems: Vec<Problem>, instances: Vec<EditInstance>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for p in problems {
            validate_problem(&p)?;
            if map.insert(p.id.clone(), p).is_some() {
                return Err(Error::Invariant("duplicate problem id".into()));
            }
        }
        let ds = Dataset { problems: map, instances: Vec::new() };
        let mut ds = ds;
        for inst in instances {
            ds.push_instance(inst, None)?;
        }
        Ok(ds)
    }

    /// Append one instance, validating invariants. `line` is attached to
    /// errors when the instance came from a file.
    pub(crate) fn push_instance(&mut self, inst: EditInstance, line: Option<usize>) -> Result<()> {
        validate_instance(&inst)?;
        if !self.problems.contains_key(&inst.problem_id) {
            return Err(Error::DanglingProblem {
                line: line.unwrap_or(0),
                problem_id: inst.problem_id.clone(),
            });
        }
        let key = (inst.problem_id.as_str(), inst.user_id.as_str(), inst.submission_index);
        if self
            .instances
            .iter()
            .any(|i| (i.problem_id.as_str(), i.user_id.as_str(), i.submission_index) == key)
        {
            return Err(Error::Invariant(format!(
                "duplicate instance key {}",
                inst.identity()
            )));
        }
        self.instances.push(inst);
        Ok(())
    }

    pub(crate) fn insert_problem(&mut self, p: Problem) -> Result<()> {
        validate_problem(&p)?;
        if self.problems.contains_key(&p.id) {
            return Err(Error::Invariant(format!("duplicate problem id '{}'", p.id)));
        }
        self.problems.insert(p.id.clone(), p);
        Ok(())
    }

    pub fn problems(&self) -> impl Iterator<Item = &Problem> {
        self.problems.values()
    }

    pub fn problem(&self, id: &str) -> Option<&Problem> {
        self.problems.get(id)
    }

    pub fn instances(&self) -> &[EditInstance] {
        &self.instances
    }

    pub fn n_problems(&self) -> usize {
        self.problems.len()
    }

    pub fn n_instances(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.problems.is_empty() && self.instances.is_empty()
    }

    /// Rebuild keeping only instances accepted by `keep`. Problems are
    /// retained even if all their instances are dropped.
    pub(crate) fn retain_instances(&self, mut keep: impl FnMut(&EditInstance) -> bool) -> Dataset {
        Dataset {
            problems: self.problems.clone(),
            instances: self.instances.iter().filter(|i| keep(i)).cloned().collect(),
        }
    }

    /// Copy of this dataset with `feedback` replaced on one instance.
    pub fn with_feedback(&self, index: usize, feedback: String) -> Dataset {
        let mut out = self.clone();
        out.instances[index].feedback = Some(feedback);
        out
    }

    /// Copy of this dataset with extra test cases appended to a problem.
    pub fn with_test_cases(&self, problem_id: &str, cases: Vec<TestCase>) -> Dataset {
        let mut out = self.clone();
        if let Some(p) = out.problems.get_mut(problem_id) {
            p.test_cases.extend(cases);
        }
        out
    }
}

fn validate_problem(p: &Problem) -> Result<()> {
    if p.id.is_empty() {
        return Err(Error::Invariant("problem id must be non-empty".into()));
    }
    if !(1..=5).contains(&p.difficulty) {
        return Err(Error::Invariant(format!(
            "problem '{}': difficulty {} outside 1..=5",
            p.id, p.difficulty
        )));
    }
    Ok(())
}

fn validate_instance(inst: &EditInstance) -> Result<()> {
    if inst.submission_index < 1 {
        return Err(Error::Invariant(format!(
            "instance {}: submission_index must be >= 1",
            inst.identity()
        )));
    }
    if normalized_lines(&inst.wrong_code) == normalized_lines(&inst.correct_code) {
        return Err(Error::Invariant(format!(
            "instance {}: wrong_code equals correct_code after normalization",
            inst.identity()
        )));
    }
    Ok(())
}
