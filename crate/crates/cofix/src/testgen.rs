//! Synthetic test-case augmentation: parse model-proposed inputs out of
//! delimited completion text, execute the golden solution on each, and
//! record the surviving input/output pairs.

use serde::{Deserialize, Serialize};

use crate::data::{Problem, TestCase, TestProvenance};
use crate::error::Result;
use crate::sandbox::{ExecStatus, ExecutionLimits, Sandbox};

const START_TOKEN: &str = "<start>";
const END_TOKEN: &str = "<end>";

/// Inputs recovered from a completion, with parse diagnostics.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ExtractedInputs {
    /// Bodies of well-formed delimited blocks, in order, first occurrence
    /// kept on duplicates.
    pub inputs: Vec<String>,
    /// Blocks opened but never closed.
    pub dropped_unterminated: usize,
    /// Exact duplicates merged away.
    pub dropped_duplicates: usize,
}

/// Scan completion text for `<start>...<end>` blocks.
///
/// Never fails: malformed content degrades to fewer inputs, counted in
/// the diagnostics.
pub fn extract_test_inputs(completion_text: &str) -> ExtractedInputs {
    let mut out = ExtractedInputs::default();
    let mut cursor = 0;
    while let Some(start_rel) = completion_text[cursor..].find(START_TOKEN) {
        let body_start = cursor + start_rel + START_TOKEN.len();
        match completion_text[body_start..].find(END_TOKEN) {
            Some(end_rel) => {
                let body = &completion_text[body_start..body_start + end_rel];
                if out.inputs.iter().any(|prev| prev == body) {
                    out.dropped_duplicates += 1;
                } else {
                    out.inputs.push(body.to_string());
                }
                cursor = body_start + end_rel + END_TOKEN.len();
            }
            None => {
                out.dropped_unterminated += 1;
                break;
            }
        }
    }
    out
}

/// Why a proposed input was discarded during synthesis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscardedInput {
    pub input: String,
    pub status: ExecStatus,
}

/// Outcome of synthesizing tests for one problem.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TestSynthesis {
    pub cases: Vec<TestCase>,
    pub discarded: Vec<DiscardedInput>,
}

impl TestSynthesis {
    /// No input survived the golden run; the caller decides whether the
    /// problem is still usable.
    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }
}

/// Run the problem's golden solution on each proposed input; inputs whose
/// run is not clean are discarded, the rest become synthetic test cases
/// with the raw stdout as expected output.
///
/// Normalization happens at judge time only, keeping the recorded pairs
/// faithful to the actual execution.
pub fn synthesize_test_cases(
    _problem: &Problem,
    golden_code: &str,
    inputs: &[String],
    sandbox: &Sandbox,
    limits: &ExecutionLimits,
) -> Result<TestSynthesis> {
    let mut synthesis = TestSynthesis::default();
    for input in inputs {
        let run = sandbox.run_program(golden_code, input, limits)?;
        if run.status == ExecStatus::Ok {
            synthesis.cases.push(TestCase {
                input: input.clone(),
                expected_output: run.stdout,
                provenance: TestProvenance::Synthetic,
            });
        } else {
            synthesis.discarded.push(DiscardedInput { input: input.clone(), status: run.status });
        }
    }
    Ok(synthesis)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extracts_blocks_in_order() {
        let got = extract_test_inputs("<start>1 2\n<end><start>3 4\n<end>");
        assert_eq!(got.inputs, vec!["1 2\n", "3 4\n"]);
        assert_eq!(got.dropped_unterminated, 0);
    }

    #[test]
    fn unterminated_block_is_dropped_and_counted() {
        let got = extract_test_inputs("<start>1 2");
        assert!(got.inputs.is_empty());
        assert_eq!(got.dropped_unterminated, 1);
    }

    #[test]
    fn duplicates_keep_first_occurrence() {
        let got = extract_test_inputs("<start>a<end> noise <start>a<end><start>b<end>");
        assert_eq!(got.inputs, vec!["a", "b"]);
        assert_eq!(got.dropped_duplicates, 1);
    }

    #[test]
    fn surrounding_prose_is_ignored() {
        let got = extract_test_inputs("Here are the samples:\n<start>5\n<end>\nDone.");
        assert_eq!(got.inputs, vec!["5\n"]);
    }

    #[test]
    fn empty_text_yields_nothing() {
        assert_eq!(extract_test_inputs(""), ExtractedInputs::default());
    }

    #[test]
    fn extraction_is_pure_and_stable() {
        let text = "<start>x<end><start>y<end>";
        assert_eq!(extract_test_inputs(text), extract_test_inputs(text));
    }

    fn problem() -> Problem {
        Problem {
            id: "p".into(),
            description: "d".into(),
            difficulty: 1,
            input_format: Some("one line".into()),
            test_cases: vec![],
            error_line_indices: None,
        }
    }

    #[test]
    fn echo_golden_records_raw_stdout() {
        let sandbox = Sandbox::with_default_runner(1).unwrap();
        let golden = "import sys\nsys.stdout.write(sys.stdin.read())\n";
        let inputs = vec!["a\n".to_string(), "b\n".to_string()];
        let out = synthesize_test_cases(
            &problem(),
            golden,
            &inputs,
            &sandbox,
            &ExecutionLimits::default(),
        )
        .unwrap();
        assert_eq!(out.cases.len(), 2);
        assert_eq!(out.cases[0].expected_output, "a\n");
        assert_eq!(out.cases[1].expected_output, "b\n");
        assert!(out.cases.iter().all(|c| c.provenance == TestProvenance::Synthetic));
    }

    #[test]
    fn failing_golden_run_discards_that_input() {
        let sandbox = Sandbox::with_default_runner(1).unwrap();
        let golden = "import sys\nx = sys.stdin.read().strip()\nif x == 'bad':\n    raise ValueError()\nprint(x)\n";
        let inputs = vec!["ok\n".to_string(), "bad\n".to_string()];
        let out = synthesize_test_cases(
            &problem(),
            golden,
            &inputs,
            &sandbox,
            &ExecutionLimits::default(),
        )
        .unwrap();
        assert_eq!(out.cases.len(), 1);
        assert_eq!(out.discarded.len(), 1);
        assert_eq!(out.discarded[0].status, ExecStatus::RuntimeError);
    }

    #[test]
    fn sum_two_ints_expected_output_from_execution() {
        let sandbox = Sandbox::with_default_runner(1).unwrap();
        let golden = "a, b = map(int, input().split())\nprint(a + b)\n";
        let out = synthesize_test_cases(
            &problem(),
            golden,
            &["2 3\n".to_string()],
            &sandbox,
            &ExecutionLimits::default(),
        )
        .unwrap();
        assert_eq!(out.cases[0].expected_output, "5\n");
    }

    #[test]
    fn synthesized_tests_pass_their_golden_code() {
        let sandbox = Sandbox::with_default_runner(1).unwrap();
        let golden = "a, b = map(int, input().split())\nprint(a * b)\n";
        let inputs: Vec<String> = ["1 1\n", "2 3\n", "10 7\n"].iter().map(|s| s.to_string()).collect();
        let limits = ExecutionLimits::default();
        let out = synthesize_test_cases(&problem(), golden, &inputs, &sandbox, &limits).unwrap();
        for case in &out.cases {
            let report = sandbox.judge(golden, std::slice::from_ref(case), &limits).unwrap();
            assert!(report.all_passed);
        }
    }
}
