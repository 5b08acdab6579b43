//! Feedback selection: score candidate feedback for a (problem, wrong
//! code) context and pick the argmax.
//!
//! Scoring is abstract so the selection mechanism works with a bound
//! model endpoint, a fixed mock, or a toy logistic classifier trainable
//! without model weights.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::gateway::{render_prompt, Gateway, ModelRole, PromptFields};
use crate::pipeline::PreferencePair;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectorLabel {
    Chosen,
    Rejected,
}

/// One labeled training example for the selector classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectorExample {
    /// Rendered (problem description, wrong code) context.
    pub context: String,
    pub feedback: String,
    pub label: SelectorLabel,
}

/// Render the selector's scoring context for a (description, wrong code)
/// pair.
pub fn selector_context(description: &str, wrong_code: &str) -> String {
    render_prompt(ModelRole::Selector, &PromptFields::Selector { description, wrong_code })
        .expect("selector template fields are total")
}

/// Expand preference pairs into balanced labeled examples: one chosen and
/// one rejected example per pair.
pub fn derive_selector_examples(dataset: &Dataset, pairs: &[PreferencePair]) -> Result<Vec<SelectorExample>> {
    let mut out = Vec::with_capacity(pairs.len() * 2);
    for pair in pairs {
        let problem = dataset.problem(&pair.problem_id).ok_or_else(|| {
            Error::Precondition(format!("pair references unknown problem '{}'", pair.problem_id))
        })?;
        let context = selector_context(&problem.description, &pair.wrong_code);
        out.push(SelectorExample {
            context: context.clone(),
            feedback: pair.chosen.clone(),
            label: SelectorLabel::Chosen,
        });
        out.push(SelectorExample {
            context,
            feedback: pair.rejected.clone(),
            label: SelectorLabel::Rejected,
        });
    }
    Ok(out)
}

/// Scores one feedback text for a context; higher is better. All
/// implementations are deterministic for fixed weights/inputs.
pub trait SelectorScorer: Send + Sync {
    fn score(&self, context: &str, feedback: &str) -> Result<f64>;
}

/// Scorer backed by the bound selector model: the continuation log-score
/// of the feedback under the selector role.
pub struct GatewayScorer<'a> {
    gateway: &'a Gateway,
}

impl<'a> GatewayScorer<'a> {
    pub fn new(gateway: &'a Gateway) -> Self {
        GatewayScorer { gateway }
    }
}

impl SelectorScorer for GatewayScorer<'_> {
    fn score(&self, context: &str, feedback: &str) -> Result<f64> {
        self.gateway.score_continuation(ModelRole::Selector, context, feedback)
    }
}

/// Fixed feedback-text -> score table for tests; unknown feedback scores
/// the configured default.
pub struct MockScorer {
    scores: BTreeMap<String, f64>,
    default: f64,
}

impl MockScorer {
    pub fn new(scores: &[(&str, f64)]) -> Self {
        MockScorer {
            scores: scores.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            default: f64::MIN,
        }
    }
}

impl SelectorScorer for MockScorer {
    fn score(&self, _context: &str, feedback: &str) -> Result<f64> {
        Ok(self.scores.get(feedback).copied().unwrap_or(self.default))
    }
}

/// Pick the highest-scoring candidate; ties go to the lowest index.
pub fn select_best<'a>(
    scorer: &dyn SelectorScorer,
    context: &str,
    candidates: &'a [String],
) -> Result<(usize, &'a str)> {
    if candidates.is_empty() {
        return Err(Error::Precondition("select_best requires at least one candidate".into()));
    }
    let mut best = 0usize;
    let mut best_score = scorer.score(context, &candidates[0])?;
    for (idx, candidate) in candidates.iter().enumerate().skip(1) {
        let score = scorer.score(context, candidate)?;
        if score > best_score {
            best = idx;
            best_score = score;
        }
    }
    Ok((best, &candidates[best]))
}

/// Logistic regression over bag-of-token features of (context, feedback).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ToyLogisticScorer {
    weights: BTreeMap<String, f64>,
    bias: f64,
}

fn features(context: &str, feedback: &str) -> BTreeMap<String, usize> {
    let mut bag = BTreeMap::new();
    for tok in context.split_whitespace().chain(feedback.split_whitespace()) {
        *bag.entry(tok.to_string()).or_insert(0) += 1;
    }
    bag
}

impl ToyLogisticScorer {
    fn raw_score(&self, context: &str, feedback: &str) -> f64 {
        let mut z = self.bias;
        for (tok, count) in features(context, feedback) {
            z += self.weights.get(&tok).copied().unwrap_or(0.0) * count as f64;
        }
        z
    }

    /// Positive-class probability for (context, feedback).
    pub fn probability(&self, context: &str, feedback: &str) -> f64 {
        1.0 / (1.0 + (-self.raw_score(context, feedback)).exp())
    }

    /// Fraction of examples classified correctly at the 0.5 threshold.
    pub fn accuracy(&self, examples: &[SelectorExample]) -> f64 {
        if examples.is_empty() {
            return 0.0;
        }
        let correct = examples
            .iter()
            .filter(|ex| {
                let predicted_chosen = self.raw_score(&ex.context, &ex.feedback) > 0.0;
                predicted_chosen == (ex.label == SelectorLabel::Chosen)
            })
            .count();
        correct as f64 / examples.len() as f64
    }

    /// Plain-table serialization: bias line, then `token weight` lines.
    pub fn to_table_str(&self) -> String {
        let mut out = format!("bias {:?}\n", self.bias);
        for (tok, w) in &self.weights {
            out.push_str(&format!("{tok} {w:?}\n"));
        }
        out
    }
}

impl SelectorScorer for ToyLogisticScorer {
    fn score(&self, context: &str, feedback: &str) -> Result<f64> {
        Ok(self.raw_score(context, feedback))
    }
}

/// Train the toy logistic scorer with plain gradient descent.
///
/// Requires both labels to be present; returns the scorer together with
/// its training accuracy.
pub fn train_toy_selector(
    examples: &[SelectorExample],
    epochs: usize,
    learning_rate: f64,
) -> Result<(ToyLogisticScorer, f64)> {
    let has = |label| examples.iter().any(|e| e.label == label);
    if !has(SelectorLabel::Chosen) || !has(SelectorLabel::Rejected) {
        return Err(Error::Precondition(
            "selector training needs both chosen and rejected examples".into(),
        ));
    }
    let mut scorer = ToyLogisticScorer::default();
    for _ in 0..epochs {
        for ex in examples {
            let target = if ex.label == SelectorLabel::Chosen { 1.0 } else { 0.0 };
            let p = scorer.probability(&ex.context, &ex.feedback);
            let err = p - target;
            scorer.bias -= learning_rate * err;
            for (tok, count) in features(&ex.context, &ex.feedback) {
                *scorer.weights.entry(tok).or_insert(0.0) -= learning_rate * err * count as f64;
            }
        }
    }
    let accuracy = scorer.accuracy(examples);
    Ok((scorer, accuracy))
}
