//! Order-1 categorical sequence policy over a small vocabulary.

use crate::error::{Error, Result};

/// Toy sequence model: the next-token distribution depends only on the
/// previous token (or the start state), given by a logit table of shape
/// `(V + 1) x V` — row 0 is the start state, row `i + 1` conditions on
/// token `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyPolicy {
    vocabulary: Vec<String>,
    /// Row-major `(V + 1) x V` logits.
    logits: Vec<f64>,
}

/// Gradient with the same index space as the policy's logit table.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientVector {
    pub(crate) n_states: usize,
    pub(crate) vocab_size: usize,
    pub(crate) data: Vec<f64>,
}

impl GradientVector {
    pub fn zeros(policy: &ToyPolicy) -> Self {
        GradientVector {
            n_states: policy.n_states(),
            vocab_size: policy.vocab_size(),
            data: vec![0.0; policy.logits.len()],
        }
    }

    pub fn get(&self, state: usize, token: usize) -> f64 {
        self.data[state * self.vocab_size + token]
    }

    pub(crate) fn add(&mut self, state: usize, token: usize, value: f64) {
        self.data[state * self.vocab_size + token] += value;
    }

    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.data {
            *v *= factor;
        }
    }

    pub fn add_assign(&mut self, other: &GradientVector) {
        debug_assert_eq!(self.data.len(), other.data.len());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    /// Sum over one state row; softmax shift invariance makes this 0 for
    /// exact gradients of shift-invariant objectives.
    pub fn row_sum(&self, state: usize) -> f64 {
        (0..self.vocab_size).map(|t| self.get(state, t)).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl ToyPolicy {
    /// Build from a vocabulary and a `(V + 1) x V` logit table.
    pub fn new(vocabulary: Vec<String>, logits: Vec<Vec<f64>>) -> Result<Self> {
        let v = vocabulary.len();
        if v == 0 {
            return Err(Error::Invariant("vocabulary must be non-empty".into()));
        }
        if logits.len() != v + 1 {
            return Err(Error::Invariant(format!(
                "expected {} logit rows (start + one per token), got {}",
                v + 1,
                logits.len()
            )));
        }
        let mut flat = Vec::with_capacity((v + 1) * v);
        for row in &logits {
            if row.len() != v {
                return Err(Error::Invariant(format!(
                    "logit row of width {}, expected {v}",
                    row.len()
                )));
            }
            if row.iter().any(|x| !x.is_finite()) {
                return Err(Error::Invariant("logits must be finite".into()));
            }
            flat.extend_from_slice(row);
        }
        Ok(ToyPolicy { vocabulary, logits: flat })
    }

    /// Uniform policy: all logits zero.
    pub fn uniform(vocabulary: Vec<String>) -> Result<Self> {
        let v = vocabulary.len();
        ToyPolicy::new(vocabulary, vec![vec![0.0; v]; v + 1])
    }

    pub fn vocab_size(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn n_states(&self) -> usize {
        self.vocabulary.len() + 1
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    pub fn token_index(&self, token: &str) -> Result<usize> {
        self.vocabulary
            .iter()
            .position(|t| t == token)
            .ok_or_else(|| Error::UnknownToken(token.to_string()))
    }

    pub fn same_vocabulary(&self, other: &ToyPolicy) -> bool {
        self.vocabulary == other.vocabulary
    }

    fn row(&self, state: usize) -> &[f64] {
        let v = self.vocab_size();
        &self.logits[state * v..(state + 1) * v]
    }

    /// Log-softmax over one state row.
    pub(crate) fn log_probs(&self, state: usize) -> Vec<f64> {
        let row = self.row(state);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let log_z = row.iter().map(|x| (x - max).exp()).sum::<f64>().ln() + max;
        row.iter().map(|x| x - log_z).collect()
    }

    /// Probabilities over one state row (softmax).
    pub(crate) fn probs(&self, state: usize) -> Vec<f64> {
        self.log_probs(state).into_iter().map(f64::exp).collect()
    }

    /// State reached after consuming `context`; start state when empty.
    /// Order-1 conditioning means only the final token matters.
    pub(crate) fn state_after(&self, context: &[&str]) -> Result<usize> {
        // Validate every context token even though only the last one
        // determines the state.
        let mut state = 0;
        for tok in context {
            state = self.token_index(tok)? + 1;
        }
        Ok(state)
    }

    pub fn logit(&self, state: usize, token: usize) -> f64 {
        self.logits[state * self.vocab_size() + token]
    }

    pub fn nudge_logit(&mut self, state: usize, token: usize, delta: f64) {
        let v = self.vocab_size();
        self.logits[state * v + token] += delta;
    }

    /// One gradient-descent step: `logits -= lr * grad`.
    pub fn apply_gradient(&mut self, grad: &GradientVector, lr: f64) {
        debug_assert_eq!(grad.data.len(), self.logits.len());
        for (l, g) in self.logits.iter_mut().zip(&grad.data) {
            *l -= lr * g;
        }
    }

    /// Plain table serialization: first line is the vocabulary, then one
    /// whitespace-separated logit row per state.
    pub fn to_table_str(&self) -> String {
        let mut out = self.vocabulary.join(" ");
        out.push('\n');
        for state in 0..self.n_states() {
            let row: Vec<String> = self.row(state).iter().map(|x| format!("{x:?}")).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_table_str(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let vocab: Vec<String> = lines
            .next()
            .ok_or_else(|| Error::Invariant("empty policy table".into()))?
            .split_whitespace()
            .map(String::from)
            .collect();
        let mut logits = Vec::new();
        for line in lines {
            let row: std::result::Result<Vec<f64>, _> =
                line.split_whitespace().map(str::parse::<f64>).collect();
            logits.push(row.map_err(|e| Error::Invariant(format!("bad logit: {e}")))?);
        }
        ToyPolicy::new(vocab, logits)
    }
}

/// Total log probability of `sequence` under the policy, conditioned on
/// `context` establishing the initial state. Empty sequences score 0.
pub fn sequence_logprob(policy: &ToyPolicy, context: &[&str], sequence: &[&str]) -> Result<f64> {
    let mut state = policy.state_after(context)?;
    let mut total = 0.0;
    for tok in sequence {
        let idx = policy.token_index(tok)?;
        total += policy.log_probs(state)[idx];
        state = idx + 1;
    }
    Ok(total)
}
