//! Backend over a toy policy, for exact-scoring tests and demos.
//!
//! Text is tokenized by whitespace. Scoring is strict: any token outside
//! the policy vocabulary is an error. Generation is greedy and tops out
//! at `max_tokens`, ignoring prompt tokens that are not in-vocabulary.

use std::sync::Mutex;

use super::{Backend, Completion, FinishReason, ModelRole, SamplingConfig};
use crate::alignment::{sequence_logprob, ToyPolicy};
use crate::error::Result;

pub struct ToyBackend {
    policy: Mutex<ToyPolicy>,
}

impl ToyBackend {
    pub fn new(policy: ToyPolicy) -> Self {
        ToyBackend { policy: Mutex::new(policy) }
    }
}

fn tokens(text: &str) -> Vec<&str> {
    text.split_whitespace().collect()
}

impl Backend for ToyBackend {
    fn complete(&self, _role: ModelRole, prompt: &str, config: &SamplingConfig) -> Result<Completion> {
        let policy = self.policy.lock().unwrap();
        // Track the order-1 state through the in-vocabulary prompt tokens.
        let mut state = 0usize;
        for tok in tokens(prompt) {
            if let Ok(idx) = policy.token_index(tok) {
                state = idx + 1;
            }
        }
        let mut out: Vec<&str> = Vec::new();
        for _ in 0..config.max_tokens {
            let probs = policy.probs(state);
            let best = probs
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .map(|(i, _)| i)
                .unwrap_or(0);
            out.push(&policy.vocabulary()[best]);
            state = best + 1;
        }
        let text = out.join(" ");
        Ok(Completion { text, finish_reason: FinishReason::Length, token_logprobs: None })
    }

    fn score_continuation(&self, _role: ModelRole, prompt: &str, continuation: &str) -> Result<f64> {
        let policy = self.policy.lock().unwrap();
        sequence_logprob(&policy, &tokens(prompt), &tokens(continuation))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    fn vocab(tokens: &[&str]) -> Vec<String> {
        tokens.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn uniform_scoring_matches_analytic_value() {
        let backend = ToyBackend::new(ToyPolicy::uniform(vocab(&["a", "b", "c", "d"])).unwrap());
        let lp = backend.score_continuation(ModelRole::CriticSft, "", "a b c").unwrap();
        assert!((lp - (-4.1588830833596715)).abs() < 1e-12);
    }

    #[test]
    fn empty_continuation_scores_zero() {
        let backend = ToyBackend::new(ToyPolicy::uniform(vocab(&["a"])).unwrap());
        assert_eq!(backend.score_continuation(ModelRole::CriticSft, "a", "").unwrap(), 0.0);
    }

    #[test]
    fn unknown_token_in_continuation_errors() {
        let backend = ToyBackend::new(ToyPolicy::uniform(vocab(&["a"])).unwrap());
        assert!(matches!(
            backend.score_continuation(ModelRole::CriticSft, "a", "zz"),
            Err(Error::UnknownToken(_))
        ));
    }

    #[test]
    fn score_decomposes_over_prefix_and_suffix() {
        let policy = ToyPolicy::new(
            vocab(&["a", "b"]),
            vec![vec![0.2, -0.4], vec![1.0, -1.0], vec![0.5, 0.5]],
        )
        .unwrap();
        let backend = ToyBackend::new(policy);
        let full = backend.score_continuation(ModelRole::CriticSft, "a", "b a b").unwrap();
        let prefix = backend.score_continuation(ModelRole::CriticSft, "a", "b a").unwrap();
        let suffix = backend.score_continuation(ModelRole::CriticSft, "a b a", "b").unwrap();
        assert!((full - (prefix + suffix)).abs() < 1e-12);
    }

    #[test]
    fn greedy_generation_is_deterministic_and_length_capped() {
        let policy = ToyPolicy::new(
            vocab(&["a", "b"]),
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0]],
        )
        .unwrap();
        let backend = ToyBackend::new(policy);
        let cfg = SamplingConfig { max_tokens: 4, ..Default::default() };
        let out = backend.complete(ModelRole::CriticSft, "", &cfg).unwrap();
        // start -> a, a -> b, b -> a, a -> b
        assert_eq!(out.text, "a b a b");
        assert_eq!(out.finish_reason, FinishReason::Length);
    }
}
