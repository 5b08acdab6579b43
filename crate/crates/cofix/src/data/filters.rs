//! Instance-level quality filters.

use std::collections::BTreeMap;

use super::{Dataset, EditInstance};
use crate::error::{Error, Result};
use crate::textdiff::normalized_lines;

/// Marker some annotators emit when no error is found in the wrong code.
pub const NO_ERRORS_MARKER: &str = "NO_ERRORS";

/// Result of a filter pass.
#[derive(Debug, Clone)]
pub struct FilterOutcome {
    pub dataset: Dataset,
    pub removed: usize,
}

/// Default detection of error-free feedback: empty/whitespace text or the
/// `NO_ERRORS` marker.
pub fn default_error_free_predicate(feedback: &str) -> bool {
    feedback.trim().is_empty() || feedback.contains(NO_ERRORS_MARKER)
}

/// Drop instances whose feedback satisfies `is_error_free`.
///
/// Every instance must have feedback populated (run annotation first).
pub fn filter_error_free(
    dataset: &Dataset,
    is_error_free: impl Fn(&str) -> bool,
) -> Result<FilterOutcome> {
    for inst in dataset.instances() {
        if inst.feedback.is_none() {
            return Err(Error::Precondition(format!(
                "instance {} has no feedback; annotate before filtering",
                inst.identity()
            )));
        }
    }
    let before = dataset.n_instances();
    let filtered = dataset.retain_instances(|inst| {
        !is_error_free(inst.feedback.as_deref().unwrap_or(""))
    });
    Ok(FilterOutcome {
        removed: before - filtered.n_instances(),
        dataset: filtered,
    })
}

fn normalized_code(code: &str) -> String {
    normalized_lines(code).join("\n")
}

/// Drop cross-user copies: within a problem, when instances from different
/// users share byte-identical normalized correct code, only the
/// lexicographically first user's instances survive. Duplicates within a
/// single user are left alone.
pub fn filter_duplicate_solutions(dataset: &Dataset) -> FilterOutcome {
    // (problem, normalized solution) -> first user owning it
    let mut owner: BTreeMap<(String, String), String> = BTreeMap::new();
    for inst in dataset.instances() {
        let key = (inst.problem_id.clone(), normalized_code(&inst.correct_code));
        owner
            .entry(key)
            .and_modify(|u| {
                if inst.user_id < *u {
                    *u = inst.user_id.clone();
                }
            })
            .or_insert_with(|| inst.user_id.clone());
    }
    let keep = |inst: &EditInstance| {
        let key = (inst.problem_id.clone(), normalized_code(&inst.correct_code));
        owner.get(&key).is_some_and(|u| *u == inst.user_id)
    };
    let before = dataset.n_instances();
    let filtered = dataset.retain_instances(keep);
    FilterOutcome {
        removed: before - filtered.n_instances(),
        dataset: filtered,
    }
}
