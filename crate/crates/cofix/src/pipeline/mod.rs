//! Pipeline orchestration: supervised-record export, preference-set
//! construction, and single-shot or iterative editing.
//!
//! Editing modes are interchangeable strategies behind
//! [`edit::EditStrategy`], registered by name and selected through
//! [`PipelineConfig::mode`].

pub mod edit;
mod prefs;
mod sft;

pub use edit::{edit_once, iterative_edit, EditContext, EditStrategy, StrategyRegistry};
pub use prefs::{
    build_preference_pair, build_preference_set, generate_scored_candidates, PreferenceSetOutcome,
};
pub use sft::{build_sft_records, SftRecord, SftRole};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gateway::SamplingConfig;
use crate::sandbox::{ExecutionLimits, JudgeReport};

/// One sampled feedback with its edit and score. `score` is populated
/// only after the edited code has been judged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackCandidate {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edited_code: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
    pub candidate_index: usize,
}

/// Highest- vs lowest-scoring feedback for one instance; the preference
/// training unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferencePair {
    pub problem_id: String,
    pub wrong_code: String,
    pub chosen: String,
    pub rejected: String,
    pub chosen_score: f64,
    pub rejected_score: f64,
}

/// Editing modes, from plain editing to preference-tuned feedback with
/// selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineMode {
    /// Editor alone, no feedback section in the prompt.
    NoFeedback,
    /// One feedback sample from the supervised critic.
    SftFeedback,
    /// One feedback sample from the preference-tuned critic.
    PrefFeedback,
    /// K samples from the preference-tuned critic, selector picks one.
    PrefFeedbackWithSelection,
}

impl PipelineMode {
    pub const ALL: [PipelineMode; 4] = [
        PipelineMode::NoFeedback,
        PipelineMode::SftFeedback,
        PipelineMode::PrefFeedback,
        PipelineMode::PrefFeedbackWithSelection,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            PipelineMode::NoFeedback => "no_feedback",
            PipelineMode::SftFeedback => "sft_feedback",
            PipelineMode::PrefFeedback => "pref_feedback",
            PipelineMode::PrefFeedbackWithSelection => "pref_feedback_with_selection",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == name)
            .ok_or_else(|| Error::Config(format!("unknown pipeline mode '{name}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Number of feedback candidates sampled per instance.
    pub k_candidates: usize,
    /// Critic sampling settings.
    pub sampling: SamplingConfig,
    /// Editor sampling settings; greedy by default.
    pub editor_sampling: SamplingConfig,
    pub limits: ExecutionLimits,
    pub mode: PipelineMode,
    /// Cap on editing rounds in the iterative setting.
    pub max_iterations: usize,
    /// A pair is emitted only when chosen minus rejected score exceeds
    /// this gap (exclusive).
    pub min_gap: f64,
    /// Instance-level parallelism for preference-set construction.
    pub workers: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            k_candidates: 5,
            sampling: SamplingConfig::default(),
            editor_sampling: SamplingConfig::greedy(),
            limits: ExecutionLimits::default(),
            mode: PipelineMode::PrefFeedbackWithSelection,
            max_iterations: 5,
            min_gap: 0.0,
            workers: 4,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_candidates < 1 {
            return Err(Error::Config("k_candidates must be >= 1".into()));
        }
        if self.max_iterations < 1 {
            return Err(Error::Config("max_iterations must be >= 1".into()));
        }
        if self.min_gap < 0.0 {
            return Err(Error::Config("min_gap must be >= 0".into()));
        }
        self.sampling.validate()?;
        self.editor_sampling.validate()
    }
}

/// Result of one editing round, with the candidate audit trail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EditOutcome {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected_feedback: Option<String>,
    pub edited_code: String,
    /// Verdict on the problem's hidden tests, when it has any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub judge_report: Option<JudgeReport>,
    pub candidates: Vec<FeedbackCandidate>,
}
