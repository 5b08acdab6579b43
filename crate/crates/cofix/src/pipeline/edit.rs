//! Editing strategies behind a name-indexed registry.
//!
//! Each pipeline mode is one strategy implementing [`EditStrategy`];
//! [`edit_once`] dispatches through the registry on the configured mode,
//! and [`iterative_edit`] wraps it in a sample-test-gated loop.

use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

use super::{EditOutcome, FeedbackCandidate, PipelineConfig, PipelineMode};
use crate::data::{Problem, TestCase};
use crate::error::{Error, Result};
use crate::gateway::{render_prompt, Gateway, ModelRole, PromptFields};
use crate::sandbox::{JudgeReport, Sandbox};
use crate::selector::{select_best, selector_context, SelectorScorer};

/// Everything one editing round needs.
#[derive(Clone, Copy)]
pub struct EditContext<'a> {
    pub gateway: &'a Gateway,
    pub sandbox: &'a Sandbox,
    /// Required by the selection strategy only.
    pub scorer: Option<&'a dyn SelectorScorer>,
    pub problem: &'a Problem,
    pub wrong_code: &'a str,
    pub config: &'a PipelineConfig,
}

impl EditContext<'_> {
    fn judge_hidden(&self, code: &str) -> Result<Option<JudgeReport>> {
        if self.problem.test_cases.is_empty() {
            return Ok(None);
        }
        Ok(Some(self.sandbox.judge(code, &self.problem.test_cases, &self.config.limits)?))
    }

    fn run_editor(&self, feedback: Option<&str>) -> Result<String> {
        let prompt = render_prompt(
            ModelRole::Editor,
            &PromptFields::Editor {
                description: &self.problem.description,
                wrong_code: self.wrong_code,
                feedback,
            },
        )?;
        Ok(self.gateway.complete(ModelRole::Editor, &prompt, &self.config.editor_sampling)?.text)
    }

    fn sample_feedback(&self, critic_role: ModelRole) -> Result<String> {
        let prompt = render_prompt(
            critic_role,
            &PromptFields::Critic {
                description: &self.problem.description,
                wrong_code: self.wrong_code,
            },
        )?;
        Ok(self.gateway.complete(critic_role, &prompt, &self.config.sampling)?.text)
    }
}

/// One editing algorithm variant.
pub trait EditStrategy: Send + Sync {
    fn name(&self) -> &'static str;
    fn run(&self, ctx: &EditContext<'_>) -> Result<EditOutcome>;
}

struct NoFeedback;

impl EditStrategy for NoFeedback {
    fn name(&self) -> &'static str {
        PipelineMode::NoFeedback.name()
    }

    fn run(&self, ctx: &EditContext<'_>) -> Result<EditOutcome> {
        let edited = ctx.run_editor(None)?;
        Ok(EditOutcome {
            selected_feedback: None,
            judge_report: ctx.judge_hidden(&edited)?,
            edited_code: edited,
            candidates: Vec::new(),
        })
    }
}

/// Single critic sample feeds the editor; used by both the supervised and
/// preference-tuned feedback modes, differing only in the critic role.
struct SingleFeedback {
    mode: PipelineMode,
    critic_role: ModelRole,
}

impl EditStrategy for SingleFeedback {
    fn name(&self) -> &'static str {
        self.mode.name()
    }

    fn run(&self, ctx: &EditContext<'_>) -> Result<EditOutcome> {
        let feedback = ctx.sample_feedback(self.critic_role)?;
        let edited = ctx.run_editor(Some(&feedback))?;
        let judge_report = ctx.judge_hidden(&edited)?;
        let candidate = FeedbackCandidate {
            text: feedback.clone(),
            edited_code: Some(edited.clone()),
            score: judge_report.as_ref().map(|r| r.pass_ratio),
            candidate_index: 0,
        };
        Ok(EditOutcome {
            selected_feedback: Some(feedback),
            edited_code: edited,
            judge_report,
            candidates: vec![candidate],
        })
    }
}

/// K samples from the preference-tuned critic; the selector picks one and
/// the editor runs once with it.
struct SelectedFeedback;

impl EditStrategy for SelectedFeedback {
    fn name(&self) -> &'static str {
        PipelineMode::PrefFeedbackWithSelection.name()
    }

    fn run(&self, ctx: &EditContext<'_>) -> Result<EditOutcome> {
        let scorer = ctx.scorer.ok_or_else(|| {
            Error::Config("mode pref_feedback_with_selection requires a selector scorer".into())
        })?;
        let mut texts = Vec::with_capacity(ctx.config.k_candidates);
        for _ in 0..ctx.config.k_candidates {
            texts.push(ctx.sample_feedback(ModelRole::CriticPref)?);
        }
        let context = selector_context(&ctx.problem.description, ctx.wrong_code);
        let (_, selected) = select_best(scorer, &context, &texts)?;
        let selected = selected.to_string();
        let edited = ctx.run_editor(Some(&selected))?;
        let candidates = texts
            .into_iter()
            .enumerate()
            .map(|(candidate_index, text)| FeedbackCandidate {
                text,
                edited_code: None,
                score: None,
                candidate_index,
            })
            .collect();
        Ok(EditOutcome {
            selected_feedback: Some(selected),
            judge_report: ctx.judge_hidden(&edited)?,
            edited_code: edited,
            candidates,
        })
    }
}

/// Strategies indexed by mode name.
pub struct StrategyRegistry {
    by_name: BTreeMap<&'static str, Arc<dyn EditStrategy>>,
}

impl StrategyRegistry {
    pub fn empty() -> Self {
        StrategyRegistry { by_name: BTreeMap::new() }
    }

    pub fn with_builtins() -> Self {
        let mut reg = Self::empty();
        reg.register(Arc::new(NoFeedback));
        reg.register(Arc::new(SingleFeedback {
            mode: PipelineMode::SftFeedback,
            critic_role: ModelRole::CriticSft,
        }));
        reg.register(Arc::new(SingleFeedback {
            mode: PipelineMode::PrefFeedback,
            critic_role: ModelRole::CriticPref,
        }));
        reg.register(Arc::new(SelectedFeedback));
        reg
    }

    pub fn register(&mut self, strategy: Arc<dyn EditStrategy>) {
        self.by_name.insert(strategy.name(), strategy);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.by_name.keys().copied()
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn EditStrategy>> {
        self.by_name.get(name).cloned().ok_or_else(|| {
            Error::Config(format!(
                "no edit strategy registered under '{name}'; known: {}",
                self.by_name.keys().copied().collect::<Vec<_>>().join(", ")
            ))
        })
    }
}

fn builtin_registry() -> &'static StrategyRegistry {
    static REGISTRY: OnceLock<StrategyRegistry> = OnceLock::new();
    REGISTRY.get_or_init(StrategyRegistry::with_builtins)
}

/// One editing round under the configured mode.
pub fn edit_once(ctx: &EditContext<'_>) -> Result<EditOutcome> {
    ctx.config.validate()?;
    builtin_registry().get(ctx.config.mode.name())?.run(ctx)
}

/// Sample-test-gated editing loop.
///
/// The current code is judged on `sample_tests` before every round; a
/// full pass stops the loop, otherwise another edit runs, up to
/// `max_iterations` rounds. Hidden-test verdicts ride along in each
/// outcome for final scoring. Sample tests must be disjoint from the
/// problem's hidden tests.
pub fn iterative_edit(
    ctx: &EditContext<'_>,
    sample_tests: &[TestCase],
) -> Result<Vec<EditOutcome>> {
    if sample_tests.is_empty() {
        return Err(Error::Precondition("iterative editing requires sample tests".into()));
    }
    let hidden: Vec<(&str, &str)> = ctx
        .problem
        .test_cases
        .iter()
        .map(|t| (t.input.as_str(), t.expected_output.as_str()))
        .collect();
    if sample_tests
        .iter()
        .any(|t| hidden.contains(&(t.input.as_str(), t.expected_output.as_str())))
    {
        return Err(Error::Precondition(
            "sample tests must be disjoint from the hidden tests".into(),
        ));
    }

    let mut outcomes: Vec<EditOutcome> = Vec::new();
    let mut current = ctx.wrong_code.to_string();
    loop {
        let samples_pass = ctx
            .sandbox
            .judge(&current, sample_tests, &ctx.config.limits)?
            .all_passed;
        if samples_pass || outcomes.len() >= ctx.config.max_iterations {
            return Ok(outcomes);
        }
        let round_ctx = EditContext { wrong_code: &current, ..*ctx };
        let outcome = edit_once(&round_ctx)?;
        current = outcome.edited_code.clone();
        outcomes.push(outcome);
    }
}
