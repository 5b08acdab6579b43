//! Prompt templates for every model role.
//!
//! Rendering is deterministic plain-text substitution; the section
//! headers are part of the wire format consumed by trained models, so
//! they must not drift.

use super::ModelRole;
use crate::error::{Error, Result};

/// Role-specific template fields.
#[derive(Debug, Clone)]
pub enum PromptFields<'a> {
    Critic {
        description: &'a str,
        wrong_code: &'a str,
    },
    Editor {
        description: &'a str,
        wrong_code: &'a str,
        /// `None` renders the editor-without-feedback ablation variant.
        feedback: Option<&'a str>,
    },
    Annotator {
        description: &'a str,
        wrong_code: &'a str,
        correct_code: &'a str,
    },
    Testgen {
        input_format: &'a str,
        golden_code: &'a str,
    },
    /// Selector context: the problem description and wrong code
    /// concatenated, identical in shape to the critic prompt.
    Selector {
        description: &'a str,
        wrong_code: &'a str,
    },
}

impl PromptFields<'_> {
    pub fn role(&self) -> ModelRole {
        match self {
            PromptFields::Critic { .. } => ModelRole::CriticSft,
            PromptFields::Editor { .. } => ModelRole::Editor,
            PromptFields::Annotator { .. } => ModelRole::Annotator,
            PromptFields::Testgen { .. } => ModelRole::Testgen,
            PromptFields::Selector { .. } => ModelRole::Selector,
        }
    }
}

const CRITIC_HEADER: &str = "Provide feedback on the errors in the given code";
const EDITOR_HEADER: &str =
    "Provide feedback on the errors in the given code and suggest the correct code to address the described problem.";

/// In-context examples for feedback annotation. The third example slot is
/// filled with a locally authored example of the same shape as the first
/// two.
const ANNOTATOR_EXAMPLES: &str = r#"- Example 1 -
Problem Description: Tom is currently at point (x, y). The rectangle has sides parallel to the coordinate axes, with the bottom left vertex at (0, 0) and the top right vertex at (w, h). Write a program to find the minimum distance to the boundary of the rectangle.
Incorrect Code:
x, y, w, h = map(int, input().split())
if w-x < x or h-y < y:
    if w-x < h-y:
        print(w-x)
    else:
        print(h-y)
elif w-x > x or h-y > y:
    if x < y:
        print(x)
    else:
        print(y)
Correct Code:
x, y, w, h = map(int, input().split())
resultY = min(h -y, y)
resultX = min(w - x, x)
if resultX < resultY:
    print(resultX)
else:
    print(resultY)
Feedback for Refining the Code: The logic in your if-statements is flawed, as you need to first independently identify the smallest distances from point (x, y) to the lines x=0, y=0, w, and h, and then find the minimum amongst them.

- Example 2 -
Problem Description: Three integers A, B, and C are given. Write a program that prints the second largest integer.
Incorrect Code:
A, B, C = list(map(int,input().split()))
print(max(A,B,C)) - print(min(A,B,C))
Correct Code:
data = []
a,b,c = map(int,input().split())
data.append(a)
data.append(b)
data.append(c)
data.sort()
print(data[1])
Feedback for Refining the Code: Your current logic is incorrect because subtracting the smallest integer from the largest doesn't necessarily give you the second largest integer. Instead, you should add the three integers to a list, sort the list, and print the second element.

- Example 3 -
Problem Description: N integers are given on a single line. Write a program that prints their sum.
Incorrect Code:
nums = list(map(int, input().split()))
total = 1
for n in nums:
    total *= n
print(total)
Correct Code:
nums = list(map(int, input().split()))
total = 0
for n in nums:
    total += n
print(total)
Feedback for Refining the Code: Your loop multiplies the numbers together starting from 1 instead of adding them, so you should accumulate the values with addition starting from 0.
"#;

/// Render the prompt for `role`.
///
/// The fields variant must match the role (critic roles share the critic
/// template); a mismatch is a template error.
pub fn render_prompt(role: ModelRole, fields: &PromptFields) -> Result<String> {
    match (role, fields) {
        (ModelRole::CriticSft | ModelRole::CriticPref, PromptFields::Critic { description, wrong_code })
        | (ModelRole::Selector, PromptFields::Selector { description, wrong_code }) => Ok(format!(
            "{CRITIC_HEADER}\n\nProblem Description:\n{description}\n\nIncorrect Code:\n{wrong_code}\n\nFeedback:\n"
        )),
        (ModelRole::Editor, PromptFields::Editor { description, wrong_code, feedback }) => {
            let feedback_section = match feedback {
                Some(f) => format!("Feedback:\n{f}\n\n"),
                None => String::new(),
            };
            Ok(format!(
                "{EDITOR_HEADER}\n\nProblem Description:\n{description}\n\nIncorrect Code:\n{wrong_code}\n\n{feedback_section}Correct code:\n"
            ))
        }
        (ModelRole::Annotator, PromptFields::Annotator { description, wrong_code, correct_code }) => Ok(format!(
            "Generate feedback that guides the refinement from Incorrect Code to Correct Code. \
The feedback is not about the superficial style of the code, but about the internal logic of the code. \
So do not mention about the changes of variable names or the format of the code. \
Please point out the incorrect logic of the code and provide succinct, constructive feedback in one sentence. \
And please do not mention about the correct code in feedback.\n\n\
{ANNOTATOR_EXAMPLES}\n\
- Example 4 -\n\
Problem Description:\n{description}\n\
Incorrect Code:\n{wrong_code}\n\
Correct Code:\n{correct_code}\n\
Feedback for Refining the Code:\n"
        )),
        (ModelRole::Testgen, PromptFields::Testgen { input_format, golden_code }) => Ok(format!(
            "Given the input format and python code, please provide at least 30 challenging test input values to evaluate its functionality.\n\
For every start of samples, please attach <start> token to indicate that the input string has started.\n\
Also, for every end of samples, please attach <end> token to indicate that the input string has ended.\n\n\
input format:\n{input_format}\n\npython code:\n{golden_code}\n\nSample:\n"
        )),
        (role, fields) => Err(Error::Template(format!(
            "fields for role '{}' supplied to role '{}'",
            fields.role().name(),
            role.name()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn critic_prompt_layout() {
        let text = render_prompt(
            ModelRole::CriticSft,
            &PromptFields::Critic { description: "sum two ints", wrong_code: "print(1)" },
        )
        .unwrap();
        assert!(text.starts_with("Provide feedback on the errors in the given code"));
        assert!(text.contains("sum two ints"));
        assert!(text.contains("print(1)"));
        assert!(text.ends_with("Feedback:\n"));
    }

    #[test]
    fn critic_pref_uses_same_template() {
        let fields = PromptFields::Critic { description: "d", wrong_code: "w" };
        assert_eq!(
            render_prompt(ModelRole::CriticSft, &fields).unwrap(),
            render_prompt(ModelRole::CriticPref, &fields).unwrap()
        );
    }

    #[test]
    fn editor_prompt_section_order() {
        let text = render_prompt(
            ModelRole::Editor,
            &PromptFields::Editor {
                description: "the problem",
                wrong_code: "bad()",
                feedback: Some("fix the operator"),
            },
        )
        .unwrap();
        let d = text.find("Problem Description:").unwrap();
        let i = text.find("Incorrect Code:").unwrap();
        let f = text.find("Feedback:").unwrap();
        let c = text.find("Correct code:").unwrap();
        assert!(d < i && i < f && f < c);
        assert!(text.contains("fix the operator"));
    }

    #[test]
    fn editor_without_feedback_omits_section() {
        let text = render_prompt(
            ModelRole::Editor,
            &PromptFields::Editor { description: "d", wrong_code: "w", feedback: None },
        )
        .unwrap();
        assert!(!text.contains("Feedback:"));
        assert!(text.contains("Correct code:"));
    }

    #[test]
    fn testgen_prompt_mentions_delimiter_tokens() {
        let text = render_prompt(
            ModelRole::Testgen,
            &PromptFields::Testgen { input_format: "one int", golden_code: "print(input())" },
        )
        .unwrap();
        assert!(text.contains("attach <start> token to indicate that the input string has started"));
        assert!(text.contains("attach <end> token to indicate that the input string has ended"));
        assert!(text.contains("at least 30 challenging test input values"));
    }

    #[test]
    fn annotator_prompt_contains_three_examples_and_slots() {
        let text = render_prompt(
            ModelRole::Annotator,
            &PromptFields::Annotator { description: "D", wrong_code: "W", correct_code: "C" },
        )
        .unwrap();
        for marker in ["- Example 1 -", "- Example 2 -", "- Example 3 -", "- Example 4 -"] {
            assert!(text.contains(marker), "missing {marker}");
        }
        assert!(text.ends_with("Feedback for Refining the Code:\n"));
        assert!(text.contains("Problem Description:\nD\n"));
        assert!(text.contains("Incorrect Code:\nW\n"));
        assert!(text.contains("Correct Code:\nC\n"));
    }

    #[test]
    fn role_field_mismatch_is_template_error() {
        let err = render_prompt(
            ModelRole::Editor,
            &PromptFields::Critic { description: "d", wrong_code: "w" },
        )
        .unwrap_err();
        assert!(matches!(err, Error::Template(_)));
    }

    #[test]
    fn rendering_is_deterministic() {
        let fields = PromptFields::Critic { description: "a", wrong_code: "b" };
        assert_eq!(
            render_prompt(ModelRole::CriticSft, &fields).unwrap(),
            render_prompt(ModelRole::CriticSft, &fields).unwrap()
        );
    }

    #[test]
    fn distinct_plain_fields_render_distinct_prompts() {
        // Injectivity over field values that do not embed the section
        // headers themselves.
        let a = render_prompt(
            ModelRole::CriticSft,
            &PromptFields::Critic { description: "d1", wrong_code: "w" },
        )
        .unwrap();
        let b = render_prompt(
            ModelRole::CriticSft,
            &PromptFields::Critic { description: "d", wrong_code: "1w" },
        )
        .unwrap();
        assert_ne!(a, b);
    }
}
