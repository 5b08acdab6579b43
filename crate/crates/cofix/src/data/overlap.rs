//! Train/benchmark line-overlap analysis.
//!
//! Measures how much of each training solution appears verbatim in a
//! benchmark corpus, as a leakage check.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

/// Number of equal-width histogram buckets over the fraction range [0,1].
pub const OVERLAP_BUCKETS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionOverlap {
    /// Lines of this solution (after normalization) found anywhere in the
    /// benchmark corpus.
    pub repeated_lines: usize,
    /// Total normalized lines of this solution.
    pub total_lines: usize,
    /// repeated_lines / total_lines; 0 for solutions with no lines.
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapReport {
    pub per_solution: Vec<SolutionOverlap>,
    /// Counts per fraction bucket; bucket i covers [i/10, (i+1)/10), with
    /// 1.0 landing in the last bucket.
    pub histogram: [usize; OVERLAP_BUCKETS],
}

fn corpus_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines().map(str::trim).filter(|l| !l.is_empty())
}

/// Per-solution overlap of training solutions against a benchmark corpus.
///
/// A line counts as repeated when, after trimming surrounding whitespace
/// and dropping blank lines, it occurs in any benchmark solution. Each
/// occurrence in the train solution is counted.
pub fn line_overlap(train_solutions: &[String], benchmark_solutions: &[String]) -> OverlapReport {
    let benchmark: HashSet<&str> =
        benchmark_solutions.iter().flat_map(|s| corpus_lines(s)).collect();
    let mut per_solution = Vec::with_capacity(train_solutions.len());
    let mut histogram = [0usize; OVERLAP_BUCKETS];
    for sol in train_solutions {
        let lines: Vec<&str> = corpus_lines(sol).collect();
        let repeated = lines.iter().filter(|l| benchmark.contains(**l)).count();
        let total = lines.len();
        let fraction = if total == 0 { 0.0 } else { repeated as f64 / total as f64 };
        let bucket = ((fraction * OVERLAP_BUCKETS as f64) as usize).min(OVERLAP_BUCKETS - 1);
        histogram[bucket] += 1;
        per_solution.push(SolutionOverlap { repeated_lines: repeated, total_lines: total, fraction });
    }
    OverlapReport { per_solution, histogram }
}
