//! Line normalization and LCS line diff shared by statistics, metrics,
//! and output comparison.

/// Split into lines with trailing whitespace stripped from each line.
///
/// A trailing newline does not produce an extra empty line.
pub fn normalized_lines(text: &str) -> Vec<&str> {
    text.lines().map(|l| l.trim_end()).collect()
}

/// Normalize program output for judge comparison: strip trailing
/// whitespace per line, then drop trailing blank lines.
pub fn normalize_output(text: &str) -> String {
    let mut lines: Vec<&str> = normalized_lines(text);
    while lines.last().is_some_and(|l| l.is_empty()) {
        lines.pop();
    }
    lines.join("\n")
}

/// For each line of `old`, whether it is kept verbatim in `new` under a
/// longest-common-subsequence line alignment. `false` marks the line as
/// changed or deleted.
///
/// Lines are compared after per-line trailing-whitespace stripping.
pub fn lcs_kept_lines(old: &str, new: &str) -> Vec<bool> {
    let a = normalized_lines(old);
    let b = normalized_lines(new);
    let n = a.len();
    let m = b.len();
    // Classic O(n*m) LCS table; inputs here are source files, small enough.
    let mut dp = vec![vec![0u32; m + 1]; n + 1];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            dp[i][j] = if a[i] == b[j] {
                dp[i + 1][j + 1] + 1
            } else {
                dp[i + 1][j].max(dp[i][j + 1])
            };
        }
    }
    let mut kept = vec![false; n];
    let (mut i, mut j) = (0, 0);
    while i < n && j < m {
        if a[i] == b[j] {
            kept[i] = true;
            i += 1;
            j += 1;
        } else if dp[i + 1][j] >= dp[i][j + 1] {
            i += 1;
        } else {
            j += 1;
        }
    }
    kept
}

/// Number of lines of `old` that are changed or deleted relative to `new`.
pub fn changed_line_count(old: &str, new: &str) -> usize {
    lcs_kept_lines(old, new).iter().filter(|k| !**k).count()
}
