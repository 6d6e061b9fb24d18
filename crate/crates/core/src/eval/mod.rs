//! Frame plans, prompts, model clients, answer extraction and eval runs.

pub mod client;
pub mod frames;
pub mod prompt;

pub use client::{
    messages_key, ClientError, ClientMode, FixedClient, HeuristicJudge, HttpClient, Message, ModelClient, Part, Role,
    Script, ScriptedClient,
};
pub use frames::{apply_ablation, frame_plan, per_video_cap, Alignment, FramePlan, FramePolicy};
pub use prompt::{build_blind_prompt, build_judge_prompt, build_prompt, render_options};

use crate::generate::QuestionItem;
use crate::parallel::bounded_map;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("duration must be positive, got {0}")]
    Duration(f64),
    #[error("invalid frame policy: {0}")]
    Policy(String),
    #[error("no frame plan for video {0}")]
    MissingPlan(String),
    #[error("unknown condition {0:?}")]
    UnknownCondition(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    #[default]
    Baseline,
    NoVideo,
    RandomFrame,
    ShuffledFrames,
}

impl Condition {
    pub const ALL: [Condition; 4] = [
        Condition::Baseline,
        Condition::NoVideo,
        Condition::RandomFrame,
        Condition::ShuffledFrames,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Condition::Baseline => "baseline",
            Condition::NoVideo => "no_video",
            Condition::RandomFrame => "random_frame",
            Condition::ShuffledFrames => "shuffled_frames",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Condition {
    type Err = EvalError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Condition::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| EvalError::UnknownCondition(s.to_string()))
    }
}

/// A selected option letter, or `X` for a non-answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Extracted {
    Letter(char),
    X,
}

impl Extracted {
    pub fn letter(self) -> Option<char> {
        match self {
            Extracted::Letter(c) => Some(c),
            Extracted::X => None,
        }
    }
}

impl fmt::Display for Extracted {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extracted::Letter(c) => write!(f, "{c}"),
            Extracted::X => f.write_str("X"),
        }
    }
}

impl Serialize for Extracted {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Extracted {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        let mut chars = s.chars();
        match (chars.next(), chars.next()) {
            (Some('X'), None) => Ok(Extracted::X),
            (Some(c), None) if c.is_ascii_uppercase() => Ok(Extracted::Letter(c)),
            _ => Err(serde::de::Error::custom(format!("not a letter or X: {s:?}"))),
        }
    }
}

/// Parse a bare letter reply: whitespace and punctuation trimmed, one letter
/// within the first `n_options` letters.
pub fn bare_letter(raw: &str, n_options: usize) -> Option<char> {
    let t = raw.trim_matches(|c: char| c.is_whitespace() || c.is_ascii_punctuation());
    let mut chars = t.chars();
    let c = chars.next()?.to_ascii_uppercase();
    if chars.next().is_some() || !c.is_ascii_uppercase() {
        return None;
    }
    let idx = (c as u8 - b'A') as usize;
    (idx < n_options).then_some(c)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub extracted: Extracted,
    pub judged: bool,
    pub error: Option<String>,
}

/// Map a free-form response to an option letter. Single letters skip the
/// judge; anything else goes through it and only a valid letter or X is
/// accepted back.
pub fn judge_extract<S: AsRef<str>>(
    stem: &str,
    options: &[S],
    raw_text: &str,
    judge: Option<&dyn ModelClient>,
) -> Extraction {
    let n = options.len();
    if let Some(c) = bare_letter(raw_text, n) {
        return Extraction {
            extracted: Extracted::Letter(c),
            judged: false,
            error: None,
        };
    }
    if raw_text.trim().is_empty() {
        return Extraction {
            extracted: Extracted::X,
            judged: false,
            error: None,
        };
    }
    let Some(judge) = judge else {
        return Extraction {
            extracted: Extracted::X,
            judged: false,
            error: Some("no judge configured".into()),
        };
    };
    match judge.complete(&build_judge_prompt(stem, options, raw_text)) {
        Ok(verdict) => Extraction {
            extracted: bare_letter(&verdict, n).map_or(Extracted::X, Extracted::Letter),
            judged: true,
            error: None,
        },
        Err(e) => Extraction {
            extracted: Extracted::X,
            judged: true,
            error: Some(format!("judge: {e}")),
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub condition: Condition,
    pub concurrency: usize,
    pub seed: u64,
    pub policy: FramePolicy,
    pub max_retries: u32,
    pub backoff_ms: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            condition: Condition::Baseline,
            concurrency: 4,
            seed: 0,
            policy: FramePolicy::default(),
            max_retries: 3,
            backoff_ms: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub question_id: String,
    pub model_id: String,
    pub condition: Condition,
    pub raw_text: String,
    pub extracted: Extracted,
    pub answer: char,
    pub correct: bool,
    pub latency_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Frame plans for every video of an item under a condition, with the
/// model's total cap split evenly across videos.
pub fn plans_for_item(
    item: &QuestionItem,
    policy: &FramePolicy,
    model_cap: Option<usize>,
    condition: Condition,
    seed: u64,
) -> Result<BTreeMap<String, FramePlan>, EvalError> {
    let policy = FramePolicy {
        max_frames: per_video_cap(policy.max_frames, model_cap, item.videos.len()),
        ..*policy
    };
    let mut out = BTreeMap::new();
    for v in &item.videos {
        let plan = frame_plan(&v.video_id, v.duration_s, &policy)?;
        out.insert(v.video_id.clone(), apply_ablation(&plan, condition, seed, &item.id));
    }
    Ok(out)
}

fn call_with_retries(
    client: &dyn ModelClient,
    messages: &[Message],
    cfg: &EvalConfig,
) -> Result<String, ClientError> {
    let mut attempt = 0;
    loop {
        match client.complete(messages) {
            Err(e) if e.is_transient() && attempt < cfg.max_retries => {
                let wait = cfg.backoff_ms.saturating_mul(1 << attempt.min(6));
                log::warn!("transient failure ({e}), retry {} in {wait} ms", attempt + 1);
                std::thread::sleep(Duration::from_millis(wait));
                attempt += 1;
            }
            r => return r,
        }
    }
}

pub fn eval_item(
    item: &QuestionItem,
    model: &dyn ModelClient,
    judge: Option<&dyn ModelClient>,
    cfg: &EvalConfig,
) -> EvalRecord {
    let answer = item.answer_letter();
    let mut record = EvalRecord {
        question_id: item.id.clone(),
        model_id: model.model_id().to_string(),
        condition: cfg.condition,
        raw_text: String::new(),
        extracted: Extracted::X,
        answer,
        correct: false,
        latency_s: 0.0,
        error: None,
    };
    let messages = plans_for_item(item, &cfg.policy, model.frame_cap(), cfg.condition, cfg.seed)
        .and_then(|plans| build_prompt(item, &plans, model.mode()));
    let messages = match messages {
        Ok(m) => m,
        Err(e) => {
            record.error = Some(e.to_string());
            return record;
        }
    };
    let started = Instant::now();
    let reply = call_with_retries(model, &messages, cfg);
    if model.reports_latency() {
        record.latency_s = (started.elapsed().as_secs_f64() * 1000.0).round() / 1000.0;
    }
    match reply {
        Ok(text) => {
            let options: Vec<&str> = item.options.iter().map(|o| o.text.as_str()).collect();
            let ex = judge_extract(&item.stem, &options, &text, judge);
            record.raw_text = text;
            record.extracted = ex.extracted;
            record.error = ex.error;
        }
        Err(e) => record.error = Some(e.to_string()),
    }
    record.correct = record.extracted == Extracted::Letter(answer);
    record
}

/// One record per item, sorted by question id.
pub fn run_eval(
    items: &[QuestionItem],
    model: &dyn ModelClient,
    judge: Option<&dyn ModelClient>,
    cfg: &EvalConfig,
) -> Vec<EvalRecord> {
    let mut records = bounded_map(items, cfg.concurrency, |item| eval_item(item, model, judge, cfg));
    records.sort_by(|a, b| a.question_id.cmp(&b.question_id));
    records
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::{synth_instance, SynthParams};
    use crate::generate::{generate_all, GenConfig};
    use crate::taxonomy::TemplateRegistry;
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn items() -> Vec<QuestionItem> {
        let inst = synth_instance(&SynthParams::small(3, 2)).unwrap();
        generate_all(&inst, &GenConfig::default(), &TemplateRegistry::builtin())
            .unwrap()
            .items
    }

    #[test]
    fn fast_path_and_x() {
        let o = ["a", "b", "c", "d"];
        let j = HeuristicJudge;
        assert_eq!(judge_extract("q", &o, " B. ", Some(&j)).extracted, Extracted::Letter('B'));
        assert!(!judge_extract("q", &o, "b", None).judged);
        assert_eq!(judge_extract("q", &o, "", Some(&j)).extracted, Extracted::X);
        assert_eq!(judge_extract("q", &o, "E", None).extracted, Extracted::X);
        let r = judge_extract("q", &o, "I believe the second option is right", Some(&j));
        assert_eq!((r.extracted, r.judged), (Extracted::Letter('B'), true));
        let bad = FixedClient {
            id: "j".into(),
            text: "maybe".into(),
            mode: ClientMode::TextOnly,
        };
        assert_eq!(judge_extract("q", &o, "hmm", Some(&bad)).extracted, Extracted::X);
    }

    #[test]
    fn fixed_a_and_correct_clients() {
        let items = items();
        let recs = run_eval(&items, &FixedClient::letter('A'), None, &EvalConfig::default());
        assert_eq!(recs.len(), items.len());
        let want = items.iter().filter(|i| i.answer_index == 0).count();
        assert_eq!(recs.iter().filter(|r| r.correct).count(), want);
        assert!(recs.windows(2).all(|w| w[0].question_id < w[1].question_id));
    }

    #[test]
    fn concurrency_independent() {
        let items = items();
        let script = Script {
            default: "the first one".into(),
            ..Default::default()
        };
        let c = ScriptedClient::new(script);
        let run = |n| {
            run_eval(
                &items,
                &c,
                Some(&HeuristicJudge),
                &EvalConfig {
                    concurrency: n,
                    ..Default::default()
                },
            )
        };
        assert_eq!(run(1), run(8));
    }

    struct Flaky {
        fails: AtomicUsize,
        transient: bool,
    }
    impl ModelClient for Flaky {
        fn model_id(&self) -> &str {
            "flaky"
        }
        fn complete(&self, _: &[Message]) -> Result<String, ClientError> {
            if self.fails.fetch_update(Ordering::SeqCst, Ordering::SeqCst, |n| n.checked_sub(1)).is_ok() {
                Err(ClientError::Transport {
                    message: "reset".into(),
                    transient: self.transient,
                })
            } else {
                Ok("A".into())
            }
        }
    }

    #[test]
    fn retries_then_x() {
        let item = &items()[0];
        let cfg = EvalConfig {
            backoff_ms: 1,
            max_retries: 2,
            ..Default::default()
        };
        let ok = Flaky {
            fails: AtomicUsize::new(2),
            transient: true,
        };
        assert_eq!(eval_item(item, &ok, None, &cfg).extracted, Extracted::Letter('A'));
        let gone = Flaky {
            fails: AtomicUsize::new(1),
            transient: false,
        };
        let r = eval_item(item, &gone, None, &cfg);
        assert_eq!(r.extracted, Extracted::X);
        assert!(!r.correct && r.error.is_some());
    }

    #[test]
    fn multi_video_blocks_in_order() {
        let items = items();
        let item = items.iter().find(|i| i.videos.len() == 2).expect("a multi-video item");
        let policy = FramePolicy::default();
        let plans = plans_for_item(item, &policy, Some(30), Condition::Baseline, 0).unwrap();
        assert!(plans.values().all(|p| p.timestamps_s.len() == 15));
        let m = build_prompt(item, &plans, ClientMode::Frames).unwrap();
        let t = m[0].text();
        let a = t.find("The following are 15 frames of the Video 1:").unwrap();
        let b = t.find("The following are 15 frames of the Video 2:").unwrap();
        assert!(a < b);
        assert_eq!(m, build_prompt(item, &plans, ClientMode::Frames).unwrap());
    }

    #[test]
    fn extracted_serde() {
        assert_eq!(serde_json::to_string(&Extracted::Letter('C')).unwrap(), "\"C\"");
        assert_eq!(serde_json::from_str::<Extracted>("\"X\"").unwrap(), Extracted::X);
        assert!(serde_json::from_str::<Extracted>("\"AB\"").is_err());
    }
}
