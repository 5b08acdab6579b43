//! Corpus statistics.
//!
//! Length statistics are character counts; error lines per instance use
//! the LCS line diff from [`crate::textdiff`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::textdiff::changed_line_count;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub n_instances: usize,
    pub n_problems: usize,
    pub avg_solution_len: f64,
    pub avg_wrong_code_len: f64,
    pub avg_feedback_len: f64,
    pub avg_description_len: f64,
    pub avg_error_lines: f64,
    pub avg_submissions_per_user: f64,
    pub avg_tests_per_problem: f64,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for v in values {
        sum += v;
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Deterministic aggregate statistics; an empty dataset yields zeros.
pub fn compute_stats(dataset: &Dataset) -> DatasetStats {
    let instances = dataset.instances();
    let mut per_user: BTreeMap<(&str, &str), usize> = BTreeMap::new();
    for inst in instances {
        *per_user.entry((inst.problem_id.as_str(), inst.user_id.as_str())).or_default() += 1;
    }
    DatasetStats {
        n_instances: instances.len(),
        n_problems: dataset.n_problems(),
        avg_solution_len: mean(instances.iter().map(|i| i.correct_code.chars().count() as f64)),
        avg_wrong_code_len: mean(instances.iter().map(|i| i.wrong_code.chars().count() as f64)),
        // Instances without feedback are excluded rather than counted as 0.
        avg_feedback_len: mean(
            instances
                .iter()
                .filter_map(|i| i.feedback.as_ref())
                .map(|f| f.chars().count() as f64),
        ),
        avg_description_len: mean(dataset.problems().map(|p| p.description.chars().count() as f64)),
        avg_error_lines: mean(
            instances
                .iter()
                .map(|i| changed_line_count(&i.wrong_code, &i.correct_code) as f64),
        ),
        avg_submissions_per_user: mean(per_user.values().map(|&c| c as f64)),
        avg_tests_per_problem: mean(dataset.problems().map(|p| p.test_cases.len() as f64)),
    }
}

/// Instances per difficulty level, for the stratification report.
pub fn difficulty_counts(dataset: &Dataset) -> BTreeMap<u8, usize> {
    let mut counts = BTreeMap::new();
    for p in dataset.problems() {
        *counts.entry(p.difficulty).or_default() += 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{EditInstance, Problem};

    /// Hand-counted fixture: lengths frozen from direct character counts.
    pub(crate) fn hand_fixture() -> Dataset {
        let p1 = Problem {
            id: "p1".into(),
            description: "Add two numbers.".into(), // 16 chars
            difficulty: 1,
            input_format: None,
            test_cases: vec![
                tc("1 2\n", "3\n"),
                tc("2 3\n", "5\n"),
            ],
            error_line_indices: None,
        };
        let p2 = Problem {
            id: "p2".into(),
            description: "Echo the input line.".into(), // 20 chars
            difficulty: 2,
            input_format: None,
            test_cases: vec![tc("hi\n", "hi\n")],
            error_line_indices: None,
        };
        let i1 = inst(
            "p1", "alice", 1,
            "a,b=map(int,input().split())\nprint(a-b)\n", // 40 chars
            "a,b=map(int,input().split())\nprint(a+b)\n", // 40 chars
            "Use addition instead of subtraction.",       // 36 chars
        );
        let i2 = inst(
            "p1", "bob", 1,
            "print(1)\n",                                  // 9 chars
            "a,b=map(int,input().split())\nprint(a+b)\n",  // 40 chars
            "Read the two integers and add them.",         // 35 chars
        );
        let i3 = inst(
            "p2", "alice", 1,
            "print('hi')\n",    // 12 chars
            "print(input())\n", // 15 chars
            "Echo the actual input.", // 22 chars
        );
        Dataset::new(vec![p1, p2], vec![i1, i2, i3]).unwrap()
    }

    fn tc(input: &str, output: &str) -> crate::data::TestCase {
        crate::data::TestCase {
            input: input.into(),
            expected_output: output.into(),
            provenance: crate::data::TestProvenance::Benchmark,
        }
    }

    fn inst(pid: &str, user: &str, idx: u32, wrong: &str, correct: &str, fb: &str) -> EditInstance {
        EditInstance {
            problem_id: pid.into(),
            user_id: user.into(),
            submission_index: idx,
            wrong_code: wrong.into(),
            correct_code: correct.into(),
            feedback: Some(fb.into()),
        }
    }

    #[test]
    fn empty_dataset_yields_zeros() {
        let stats = compute_stats(&Dataset::default());
        assert_eq!(stats.n_instances, 0);
        assert_eq!(stats.avg_solution_len, 0.0);
        assert_eq!(stats.avg_tests_per_problem, 0.0);
    }

    #[test]
    fn hand_counted_fixture_matches_exactly() {
        let stats = compute_stats(&hand_fixture());
        assert_eq!(stats.n_instances, 3);
        assert_eq!(stats.n_problems, 2);
        assert_eq!(stats.avg_solution_len, (40.0 + 40.0 + 15.0) / 3.0);
        assert_eq!(stats.avg_wrong_code_len, (40.0 + 9.0 + 12.0) / 3.0);
        assert_eq!(stats.avg_feedback_len, (36.0 + 35.0 + 22.0) / 3.0);
        assert_eq!(stats.avg_description_len, 18.0);
        // each instance differs from its correct code on exactly one line
        assert_eq!(stats.avg_error_lines, 1.0);
        assert_eq!(stats.avg_submissions_per_user, 1.0);
        assert_eq!(stats.avg_tests_per_problem, 1.5);
    }

    #[test]
    fn permutation_invariant_over_instance_order() {
        let ds = hand_fixture();
        let mut instances: Vec<EditInstance> = ds.instances().to_vec();
        instances.reverse();
        let problems: Vec<Problem> = ds.problems().cloned().collect();
        let reordered = Dataset::new(problems, instances).unwrap();
        assert_eq!(compute_stats(&ds), compute_stats(&reordered));
    }

    #[test]
    fn difficulty_histogram() {
        let counts = difficulty_counts(&hand_fixture());
        assert_eq!(counts.get(&1), Some(&1));
        assert_eq!(counts.get(&2), Some(&1));
    }
}
