//! Preference-set construction: sample feedback candidates, edit, score
//! against hidden tests, and pair the best against the worst.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{FeedbackCandidate, PipelineConfig, PreferencePair};
use crate::data::{Dataset, Problem};
use crate::error::{Error, Result};
use crate::gateway::{render_prompt, Gateway, ModelRole, PromptFields};
use crate::sandbox::Sandbox;

/// Sample `k_candidates` feedbacks from `critic_role`, run each through
/// the editor, and judge every edit on the problem's hidden tests.
///
/// Candidate sampling is sequential so request ordinals stay stable
/// against scripted backends; exactly K candidates come back or the call
/// errors.
pub fn generate_scored_candidates(
    gateway: &Gateway,
    sandbox: &Sandbox,
    problem: &Problem,
    wrong_code: &str,
    config: &PipelineConfig,
    critic_role: ModelRole,
) -> Result<Vec<FeedbackCandidate>> {
    config.validate()?;
    if problem.test_cases.is_empty() {
        return Err(Error::Precondition(format!(
            "problem '{}' has no hidden tests to score against",
            problem.id
        )));
    }
    let critic_prompt = render_prompt(
        critic_role,
        &PromptFields::Critic { description: &problem.description, wrong_code },
    )?;
    let mut candidates = Vec::with_capacity(config.k_candidates);
    for index in 0..config.k_candidates {
        let step = (|| -> Result<FeedbackCandidate> {
            let feedback = gateway.complete(critic_role, &critic_prompt, &config.sampling)?.text;
            let editor_prompt = render_prompt(
                ModelRole::Editor,
                &PromptFields::Editor {
                    description: &problem.description,
                    wrong_code,
                    feedback: Some(&feedback),
                },
            )?;
            let edited = gateway
                .complete(ModelRole::Editor, &editor_prompt, &config.editor_sampling)?
                .text;
            let score = sandbox.preference_score(&edited, &problem.test_cases, &config.limits)?;
            Ok(FeedbackCandidate {
                text: feedback,
                edited_code: Some(edited),
                score: Some(score),
                candidate_index: index,
            })
        })();
        match step {
            Ok(candidate) => candidates.push(candidate),
            Err(source) => {
                return Err(Error::PartialCandidates {
                    completed: candidates.len(),
                    requested: config.k_candidates,
                    source: Box::new(source),
                })
            }
        }
    }
    Ok(candidates)
}

/// Pair the argmax-scored candidate against the argmin-scored one, ties
/// to the lowest index. Returns `None` when the score spread does not
/// exceed `min_gap` (no preference signal) or when both ends carry the
/// same feedback text.
pub fn build_preference_pair(
    problem_id: &str,
    wrong_code: &str,
    candidates: &[FeedbackCandidate],
    min_gap: f64,
) -> Result<Option<PreferencePair>> {
    if candidates.is_empty() {
        return Err(Error::Precondition("no candidates to pair".into()));
    }
    let scored: Vec<(usize, f64)> = candidates
        .iter()
        .map(|c| {
            c.score
                .map(|s| (c.candidate_index, s))
                .ok_or_else(|| Error::Precondition(format!(
                    "candidate {} is unscored",
                    c.candidate_index
                )))
        })
        .collect::<Result<_>>()?;
    let mut best = 0usize;
    let mut worst = 0usize;
    for i in 1..scored.len() {
        if scored[i].1 > scored[best].1 {
            best = i;
        }
        if scored[i].1 < scored[worst].1 {
            worst = i;
        }
    }
    let (chosen, rejected) = (&candidates[best], &candidates[worst]);
    let gap = scored[best].1 - scored[worst].1;
    if gap <= min_gap || chosen.text == rejected.text {
        return Ok(None);
    }
    Ok(Some(PreferencePair {
        problem_id: problem_id.to_string(),
        wrong_code: wrong_code.to_string(),
        chosen: chosen.text.clone(),
        rejected: rejected.text.clone(),
        chosen_score: scored[best].1,
        rejected_score: scored[worst].1,
    }))
}

/// Preference pairs plus construction diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceSetOutcome {
    pub pairs: Vec<PreferencePair>,
    /// Instances skipped for lack of a score spread.
    pub skipped: usize,
}

/// Map candidate generation and pairing over every instance.
///
/// Instances fan out over a bounded pool; candidate sampling within one
/// instance stays sequential, and outputs are gathered in instance order,
/// so runs are reproducible for any worker count.
pub fn build_preference_set(
    gateway: &Gateway,
    sandbox: &Sandbox,
    dataset: &Dataset,
    config: &PipelineConfig,
    critic_role: ModelRole,
) -> Result<PreferenceSetOutcome> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let results: Vec<Result<Option<PreferencePair>>> = pool.install(|| {
        dataset
            .instances()
            .par_iter()
            .map(|inst| {
                let problem = dataset.problem(&inst.problem_id).expect("referential integrity");
                let candidates = generate_scored_candidates(
                    gateway,
                    sandbox,
                    problem,
                    &inst.wrong_code,
                    config,
                    critic_role,
                )
                .map_err(|e| Error::AtInstance {
                    problem_id: inst.problem_id.clone(),
                    user_id: inst.user_id.clone(),
                    submission_index: inst.submission_index,
                    source: Box::new(e),
                })?;
                build_preference_pair(&inst.problem_id, &inst.wrong_code, &candidates, config.min_gap)
            })
            .collect()
    });
    let mut pairs = Vec::new();
    let mut skipped = 0usize;
    for result in results {
        match result? {
            Some(pair) => pairs.push(pair),
            None => skipped += 1,
        }
    }
    Ok(PreferenceSetOutcome { pairs, skipped })
}
