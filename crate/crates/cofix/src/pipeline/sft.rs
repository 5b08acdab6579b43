//! Supervised fine-tuning record export.
//!
//! Each annotated instance yields one critic record (prompt on the
//! problem and wrong code, target is the feedback) and one editor record
//! (prompt additionally carrying the feedback, target is the correct
//! code). The emitted file is directly consumable by external
//! fine-tuning stacks.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::gateway::{render_prompt, ModelRole, PromptFields};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SftRole {
    Critic,
    Editor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SftRecord {
    pub role: SftRole,
    pub input_text: String,
    pub target_text: String,
}

/// Two records per instance, critic first. Instances must all carry
/// feedback (annotate before exporting).
pub fn build_sft_records(dataset: &Dataset) -> Result<Vec<SftRecord>> {
    let mut records = Vec::with_capacity(dataset.n_instances() * 2);
    for inst in dataset.instances() {
        let feedback = inst.feedback.as_deref().ok_or_else(|| {
            Error::Precondition(format!("instance {} has no feedback", inst.identity()))
        })?;
        let problem = dataset.problem(&inst.problem_id).expect("referential integrity");
        let critic_input = render_prompt(
            ModelRole::CriticSft,
            &PromptFields::Critic {
                description: &problem.description,
                wrong_code: &inst.wrong_code,
            },
        )?;
        records.push(SftRecord {
            role: SftRole::Critic,
            input_text: critic_input,
            target_text: feedback.to_string(),
        });
        let editor_input = render_prompt(
            ModelRole::Editor,
            &PromptFields::Editor {
                description: &problem.description,
                wrong_code: &inst.wrong_code,
                feedback: Some(feedback),
            },
        )?;
        records.push(SftRecord {
            role: SftRole::Editor,
            input_text: editor_input,
            target_text: inst.correct_code.clone(),
        });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{EditInstance, Problem};

    fn dataset(n: usize) -> Dataset {
        let problem = Problem {
            id: "p1".into(),
            description: "sum the ints".into(),
            difficulty: 1,
            input_format: None,
            test_cases: vec![],
            error_line_indices: None,
        };
        let instances = (0..n)
            .map(|i| EditInstance {
                problem_id: "p1".into(),
                user_id: format!("u{i}"),
                submission_index: 1,
                wrong_code: format!("wrong {i}\n"),
                correct_code: format!("correct {i}\n"),
                feedback: Some(format!("feedback {i}")),
            })
            .collect();
        Dataset::new(vec![problem], instances).unwrap()
    }

    #[test]
    fn three_instances_yield_six_records_three_per_role() {
        let records = build_sft_records(&dataset(3)).unwrap();
        assert_eq!(records.len(), 6);
        assert_eq!(records.iter().filter(|r| r.role == SftRole::Critic).count(), 3);
        assert_eq!(records.iter().filter(|r| r.role == SftRole::Editor).count(), 3);
    }

    #[test]
    fn critic_target_is_the_feedback_byte_exact() {
        let records = build_sft_records(&dataset(1)).unwrap();
        assert_eq!(records[0].role, SftRole::Critic);
        assert_eq!(records[0].target_text, "feedback 0");
    }

    #[test]
    fn editor_record_carries_feedback_section_and_correct_code() {
        let records = build_sft_records(&dataset(1)).unwrap();
        let editor = &records[1];
        assert_eq!(editor.role, SftRole::Editor);
        assert!(editor.input_text.contains("Feedback:\nfeedback 0"));
        assert_eq!(editor.target_text, "correct 0\n");
    }

    #[test]
    fn missing_feedback_names_the_instance() {
        let mut ds = dataset(2);
        ds = Dataset::new(
            ds.problems().cloned().collect(),
            ds.instances()
                .iter()
                .cloned()
                .map(|mut i| {
                    if i.user_id == "u1" {
                        i.feedback = None;
                    }
                    i
                })
                .collect(),
        )
        .unwrap();
        let err = build_sft_records(&ds).unwrap_err();
        assert!(err.to_string().contains("p1/u1#1"));
    }
}
