use super::client::{ClientMode, Message, Part, Role};
use super::frames::FramePlan;
use super::EvalError;
use crate::generate::{option_letter, QuestionItem};
use std::collections::BTreeMap;

pub const QA_HEADER: &str = "Watch the video carefully and answer the following multiple choice question:";
pub const QA_INSTRUCTION: &str = "Please select the correct answer from the options. Answer with the letter directly.";
pub const QA_FOOTER: &str = "Your answer:";

pub const BLIND_TEMPLATE: &str = "You are answering multiple choice questions about video game footage.\n\nYou have NOT seen the video. Based only on the question and options provided, select the most likely answer.\n\nYou must respond with ONLY a single letter (A, B, C, or D).";

pub const JUDGE_TEMPLATE: &str = "You judge which option a model selected for a multiple choice question.

The question was:

<question>

Available options are: <options>

The model's response was:

<model_output>

Your task is to determine which option the model selected. Look for:
- Explicit mention of a letter (e.g., \"A\", \"B\", \"C\", \"D\")
- The model stating or implying a specific choice
- The response content matching one of the available options

If the model clearly selected one of the options, return the corresponding letter.

If the model's response is empty, an error, unclear, or does not make a definitive choice, return \"X\".";

/// "A. first\nB. second"
pub fn render_options<S: AsRef<str>>(options: &[S]) -> String {
    options
        .iter()
        .enumerate()
        .map(|(i, o)| format!("{}. {}", option_letter(i), o.as_ref()))
        .collect::<Vec<_>>()
        .join("\n")
}

fn option_texts(item: &QuestionItem) -> Vec<&str> {
    item.options.iter().map(|o| o.text.as_str()).collect()
}

fn push_text(parts: &mut Vec<Part>, s: &str) {
    if let Some(Part::Text { text }) = parts.last_mut() {
        text.push_str(s);
    } else {
        parts.push(Part::Text { text: s.to_string() });
    }
}

fn push_frames(parts: &mut Vec<Part>, plan: &FramePlan, mode: ClientMode) {
    match mode {
        ClientMode::VideoNative => parts.push(Part::Video {
            video_id: plan.video_id.clone(),
        }),
        _ => {
            for (k, t) in plan.presented().enumerate() {
                if k > 0 {
                    push_text(parts, " ");
                }
                parts.push(Part::Frame {
                    video_id: plan.video_id.clone(),
                    t_s: t,
                });
            }
        }
    }
}

/// Question-answering prompt. Multi-video items get one labelled frame block
/// per video in numbering order. Empty plans drop the frame blocks.
pub fn build_prompt(
    item: &QuestionItem,
    plans: &BTreeMap<String, FramePlan>,
    mode: ClientMode,
) -> Result<Vec<Message>, EvalError> {
    let mut parts = Vec::new();
    push_text(&mut parts, QA_HEADER);
    push_text(&mut parts, "\n\n");
    let visual = mode != ClientMode::TextOnly;
    let multi = item.videos.len() > 1;
    for v in &item.videos {
        let plan = plans
            .get(&v.video_id)
            .ok_or_else(|| EvalError::MissingPlan(v.video_id.clone()))?;
        let empty = plan.timestamps_s.is_empty() && mode != ClientMode::VideoNative;
        if !visual || empty {
            continue;
        }
        if multi {
            let label = match mode {
                ClientMode::VideoNative => format!("The following is the Video {}:\n\n", v.number),
                _ => format!(
                    "The following are {} frames of the Video {}:\n\n",
                    plan.timestamps_s.len(),
                    v.number
                ),
            };
            push_text(&mut parts, &label);
        }
        push_frames(&mut parts, plan, mode);
        push_text(&mut parts, "\n\n");
    }
    push_text(
        &mut parts,
        &format!(
            "Q: {}\n\n{}\n\n{QA_INSTRUCTION}\n\n{QA_FOOTER}",
            item.stem,
            render_options(&option_texts(item))
        ),
    );
    Ok(vec![Message { role: Role::User, parts }])
}

/// Text-only language-prior probe.
pub fn build_blind_prompt(item: &QuestionItem) -> Vec<Message> {
    vec![Message::user_text(format!(
        "{BLIND_TEMPLATE}\n\nQ: {}\n\n{}",
        item.stem,
        render_options(&option_texts(item))
    ))]
}

pub fn build_judge_prompt<S: AsRef<str>>(question: &str, options: &[S], raw_text: &str) -> Vec<Message> {
    let text = JUDGE_TEMPLATE
        .replacen("<question>", question, 1)
        .replacen("<options>", &render_options(options), 1);
    // substitute the response last so its text is never re-scanned
    let text = text.replacen("<model_output>", raw_text, 1);
    vec![Message::user_text(text)]
}
