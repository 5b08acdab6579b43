//! Property tests for the serialization, overlap, scoring, and pairing
//! invariants.

use cofix::data::{line_overlap, load_dataset, serialize_dataset, Dataset, EditInstance, Problem, TestCase, TestProvenance};
use cofix::gateway::{Backend, MockBackend, ModelRole};
use cofix::pipeline::{build_preference_pair, FeedbackCandidate};
use proptest::prelude::*;

fn text_strategy() -> impl Strategy<Value = String> {
    proptest::string::string_regex("[a-z0-9 _\\n]{0,40}").unwrap()
}

fn problem_strategy(index: usize) -> impl Strategy<Value = Problem> {
    (text_strategy(), 1u8..=5, proptest::option::of(text_strategy())).prop_map(
        move |(description, difficulty, input_format)| Problem {
            id: format!("p{index}"),
            description,
            difficulty,
            input_format,
            test_cases: vec![TestCase {
                input: "1\n".into(),
                expected_output: "1\n".into(),
                provenance: TestProvenance::Synthetic,
            }],
            error_line_indices: None,
        },
    )
}

fn dataset_strategy() -> impl Strategy<Value = Dataset> {
    (1usize..4, 0usize..6).prop_flat_map(|(n_problems, n_instances)| {
        let problems: Vec<BoxedStrategy<Problem>> =
            (0..n_problems).map(|i| problem_strategy(i).boxed()).collect();
        let instances = proptest::collection::vec(
            (0..n_problems, text_strategy(), proptest::option::of(text_strategy())),
            n_instances,
        );
        (problems, instances).prop_map(|(problems, raw_instances)| {
            let instances = raw_instances
                .into_iter()
                .enumerate()
                .map(|(i, (p, body, feedback))| EditInstance {
                    problem_id: format!("p{p}"),
                    user_id: format!("u{}", i % 3),
                    submission_index: (i + 1) as u32,
                    wrong_code: format!("{body}\nwrong"),
                    correct_code: format!("{body}\ncorrect"),
                    feedback,
                })
                .collect();
            Dataset::new(problems, instances).expect("generated dataset is valid")
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn load_of_serialize_is_identity(dataset in dataset_strategy()) {
        let text = serialize_dataset(&dataset);
        let reloaded = load_dataset(text.as_bytes()).unwrap();
        prop_assert_eq!(&reloaded, &dataset);
        prop_assert_eq!(serialize_dataset(&reloaded), text);
    }

    #[test]
    fn overlap_fractions_bounded_and_monotone(
        train in proptest::collection::vec(text_strategy(), 1..5),
        bench_a in proptest::collection::vec(text_strategy(), 0..4),
        bench_b in proptest::collection::vec(text_strategy(), 0..4),
    ) {
        let small = line_overlap(&train, &bench_a);
        let mut grown = bench_a.clone();
        grown.extend(bench_b);
        let big = line_overlap(&train, &grown);
        for (s, b) in small.per_solution.iter().zip(&big.per_solution) {
            prop_assert!((0.0..=1.0).contains(&s.fraction));
            prop_assert!(b.fraction >= s.fraction);
            prop_assert!(s.repeated_lines <= s.total_lines);
        }
    }

    #[test]
    fn mock_scoring_decomposes_and_is_nonpositive(
        prompt in text_strategy(),
        continuation in text_strategy(),
        split in 0usize..40,
    ) {
        let mock = MockBackend::unscripted();
        let total = mock.score_continuation(ModelRole::Selector, &prompt, &continuation).unwrap();
        prop_assert!(total <= 0.0);
        let cut = continuation
            .char_indices()
            .map(|(i, _)| i)
            .chain([continuation.len()])
            .nth(split.min(continuation.chars().count()))
            .unwrap_or(continuation.len());
        let (prefix, suffix) = continuation.split_at(cut);
        let lp_prefix = mock.score_continuation(ModelRole::Selector, &prompt, prefix).unwrap();
        let joined = format!("{prompt}{prefix}");
        let lp_suffix = mock.score_continuation(ModelRole::Selector, &joined, suffix).unwrap();
        prop_assert!((total - (lp_prefix + lp_suffix)).abs() < 1e-9);
    }

    #[test]
    fn preference_pairs_always_have_strict_gaps(
        scores in proptest::collection::vec(0.0f64..=1.0, 1..8),
    ) {
        let candidates: Vec<FeedbackCandidate> = scores
            .iter()
            .enumerate()
            .map(|(i, s)| FeedbackCandidate {
                text: format!("fb{i}"),
                edited_code: None,
                score: Some(*s),
                candidate_index: i,
            })
            .collect();
        let pair = build_preference_pair("p", "w", &candidates, 0.0).unwrap();
        match pair {
            Some(p) => prop_assert!(p.chosen_score > p.rejected_score),
            None => {
                let max = scores.iter().cloned().fold(f64::MIN, f64::max);
                let min = scores.iter().cloned().fold(f64::MAX, f64::min);
                prop_assert_eq!(max, min);
            }
        }
    }
}
