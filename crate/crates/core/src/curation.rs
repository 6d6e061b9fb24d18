//! Balanced downsampling, blind language-prior filtering, paraphrasing and
//! review export.

use crate::eval::{bare_letter, build_blind_prompt, prompt::render_options, Extracted, Message, ModelClient};
use crate::generate::QuestionItem;
use crate::parallel::bounded_map;
use crate::rng::stream;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CurationError {
    #[error("invalid curation config: {0}")]
    Config(String),
    #[error("verdict for unknown question {0}")]
    UnknownQuestion(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurationConfig {
    pub target_n: usize,
    pub seed: u64,
    pub filter_k: u32,
    /// Defaults to `filter_k`.
    pub remove_threshold: Option<u32>,
    pub review_threshold: u32,
    pub paraphrase_enabled: bool,
    pub concurrency: usize,
}

impl Default for CurationConfig {
    fn default() -> Self {
        CurationConfig {
            target_n: 4000,
            seed: 0,
            filter_k: 3,
            remove_threshold: None,
            review_threshold: 2,
            paraphrase_enabled: false,
            concurrency: 4,
        }
    }
}

impl CurationConfig {
    pub fn remove_at(&self) -> u32 {
        self.remove_threshold.unwrap_or(self.filter_k)
    }

    pub fn validate(&self) -> Result<(), CurationError> {
        let (rv, rm, k) = (self.review_threshold, self.remove_at(), self.filter_k);
        if !(1 <= rv && rv <= rm && rm <= k) {
            return Err(CurationError::Config(format!(
                "need 1 <= review_threshold ({rv}) <= remove_threshold ({rm}) <= filter_k ({k})"
            )));
        }
        if self.target_n == 0 {
            return Err(CurationError::Config("target_n must be at least 1".into()));
        }
        Ok(())
    }
}

/// Per-code counts: an equal quota first, then the remainder one at a time
/// to the code with the fewest picks that still has items (ties by code).
pub fn downsample_schedule(available: &BTreeMap<String, usize>, target_n: usize) -> BTreeMap<String, usize> {
    if available.is_empty() {
        return BTreeMap::new();
    }
    let q = target_n / available.len();
    let mut take: BTreeMap<String, usize> = available.iter().map(|(c, &a)| (c.clone(), a.min(q))).collect();
    let mut left = target_n.saturating_sub(take.values().sum());
    while left > 0 {
        let next = take
            .iter()
            .filter(|(c, &t)| t < available[*c])
            .min_by_key(|(c, &t)| (t, (*c).clone()))
            .map(|(c, _)| c.clone());
        let Some(c) = next else { break };
        *take.get_mut(&c).expect("present") += 1;
        left -= 1;
    }
    take
}

/// Balanced, seeded subset of at most `target_n` items, returned in id order.
pub fn stratified_downsample(items: &[QuestionItem], target_n: usize, seed: u64) -> Vec<QuestionItem> {
    let mut by_code: BTreeMap<String, Vec<&QuestionItem>> = BTreeMap::new();
    for it in items {
        by_code.entry(it.code.raw.clone()).or_default().push(it);
    }
    let available = by_code.iter().map(|(c, v)| (c.clone(), v.len())).collect();
    let schedule = downsample_schedule(&available, target_n);
    let mut out = Vec::new();
    for (code, mut group) in by_code {
        group.sort_by(|a, b| a.id.cmp(&b.id));
        group.shuffle(&mut stream(seed, &["downsample", &code]));
        out.extend(group.into_iter().take(schedule[&code]).cloned());
    }
    out.sort_by(|a, b| a.id.cmp(&b.id));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Disposition {
    Keep,
    Review,
    Remove,
}

impl Disposition {
    pub fn as_str(self) -> &'static str {
        match self {
            Disposition::Keep => "keep",
            Disposition::Review => "review",
            Disposition::Remove => "remove",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trial {
    pub extracted: Extracted,
    pub correct: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterVerdict {
    pub question_id: String,
    pub code: String,
    pub n_options: usize,
    pub trials: Vec<Trial>,
    pub disposition: Disposition,
}

impl FilterVerdict {
    pub fn correct_count(&self) -> u32 {
        self.trials.iter().filter(|t| t.correct).count() as u32
    }
}

pub fn disposition(correct: u32, cfg: &CurationConfig) -> Disposition {
    if correct >= cfg.remove_at() {
        Disposition::Remove
    } else if correct >= cfg.review_threshold {
        Disposition::Review
    } else {
        Disposition::Keep
    }
}

fn filter_item(item: &QuestionItem, client: &dyn ModelClient, cfg: &CurationConfig) -> FilterVerdict {
    let messages = build_blind_prompt(item);
    let answer = item.answer_letter();
    let trials: Vec<Trial> = (0..cfg.filter_k)
        .map(|_| match client.complete(&messages) {
            Ok(text) => {
                let extracted = bare_letter(&text, item.options.len()).map_or(Extracted::X, Extracted::Letter);
                Trial {
                    extracted,
                    correct: extracted == Extracted::Letter(answer),
                    error: None,
                }
            }
            Err(e) => Trial {
                extracted: Extracted::X,
                correct: false,
                error: Some(e.to_string()),
            },
        })
        .collect();
    let correct = trials.iter().filter(|t| t.correct).count() as u32;
    FilterVerdict {
        question_id: item.id.clone(),
        code: item.code.raw.clone(),
        n_options: item.options.len(),
        trials,
        disposition: disposition(correct, cfg),
    }
}

/// Ask a text-only client each question `filter_k` times without video.
pub fn blind_filter(
    items: &[QuestionItem],
    client: &dyn ModelClient,
    cfg: &CurationConfig,
) -> Result<Vec<FilterVerdict>, CurationError> {
    cfg.validate()?;
    let mut out = bounded_map(items, cfg.concurrency, |it| filter_item(it, client, cfg));
    out.sort_by(|a, b| a.question_id.cmp(&b.question_id));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterBucket {
    pub n_items: usize,
    pub trials: usize,
    pub correct: usize,
    pub trial_accuracy: f64,
    pub chance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSummary {
    pub keep: usize,
    pub review: usize,
    pub remove: usize,
    /// Keyed by option count, so Yes/No and four-way items read against their
    /// own chance rate.
    pub by_options: BTreeMap<usize, FilterBucket>,
}

pub fn summarize(verdicts: &[FilterVerdict]) -> FilterSummary {
    let mut s = FilterSummary {
        keep: 0,
        review: 0,
        remove: 0,
        by_options: BTreeMap::new(),
    };
    for v in verdicts {
        match v.disposition {
            Disposition::Keep => s.keep += 1,
            Disposition::Review => s.review += 1,
            Disposition::Remove => s.remove += 1,
        }
        let b = s.by_options.entry(v.n_options).or_insert(FilterBucket {
            n_items: 0,
            trials: 0,
            correct: 0,
            trial_accuracy: 0.0,
            chance: 1.0 / v.n_options as f64,
        });
        b.n_items += 1;
        b.trials += v.trials.len();
        b.correct += v.correct_count() as usize;
    }
    for b in s.by_options.values_mut() {
        if b.trials > 0 {
            b.trial_accuracy = b.correct as f64 / b.trials as f64;
        }
    }
    s
}

/// Drop removed items. Review items stay in the set; their verdicts flag them.
pub fn apply_verdicts(items: &[QuestionItem], verdicts: &[FilterVerdict]) -> Result<Vec<QuestionItem>, CurationError> {
    let by_id: BTreeMap<&str, Disposition> = verdicts.iter().map(|v| (v.question_id.as_str(), v.disposition)).collect();
    let ids: std::collections::HashSet<&str> = items.iter().map(|i| i.id.as_str()).collect();
    if let Some(v) = verdicts.iter().find(|v| !ids.contains(v.question_id.as_str())) {
        return Err(CurationError::UnknownQuestion(v.question_id.clone()));
    }
    Ok(items
        .iter()
        .filter(|i| by_id.get(i.id.as_str()) != Some(&Disposition::Remove))
        .cloned()
        .collect())
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParaphraseStats {
    pub rewritten: usize,
    pub unchanged: usize,
    pub rejected: usize,
    pub failed: usize,
}

pub fn paraphrase_prompt(item: &QuestionItem) -> Vec<Message> {
    vec![Message::user_text(format!(
        "Reword the following multiple choice question without changing its meaning. Keep every quoted phrase, name, video number and timestamp exactly as written. Reply with the reworded question only.\n\nQuestion type: {}\n\nQuestion: {}\n\nOptions:\n{}",
        item.code.raw,
        item.stem,
        render_options(&item.options.iter().map(|o| o.text.as_str()).collect::<Vec<_>>())
    ))]
}

/// True when every bound slot value survives in `rewrite`.
pub fn paraphrase_keeps_bindings(item: &QuestionItem, rewrite: &str) -> bool {
    if rewrite.trim().is_empty() {
        return false;
    }
    item.bindings.iter().all(|(k, v)| match k.as_str() {
        "v1" | "v2" => rewrite.contains(&format!("POV{v}")),
        _ => rewrite.contains(v.as_str()),
    })
}

/// Optional rewording pass. Only the stem can change; a rewrite that loses a
/// bound value is rejected and the template stem kept.
pub fn paraphrase(
    items: &[QuestionItem],
    client: Option<&dyn ModelClient>,
    concurrency: usize,
) -> (Vec<QuestionItem>, ParaphraseStats) {
    let Some(client) = client else {
        return (
            items.to_vec(),
            ParaphraseStats {
                unchanged: items.len(),
                ..Default::default()
            },
        );
    };
    let results = bounded_map(items, concurrency, |it| match client.complete(&paraphrase_prompt(it)) {
        Ok(text) => {
            let text = text.trim().to_string();
            if text == it.stem {
                (it.clone(), 0)
            } else if paraphrase_keeps_bindings(it, &text) {
                let mut out = it.clone();
                out.stem = text;
                (out, 1)
            } else {
                log::warn!("paraphrase for {} dropped a bound value; keeping template stem", it.id);
                (it.clone(), 2)
            }
        }
        Err(e) => {
            log::warn!("paraphrase for {} failed: {e}; keeping template stem", it.id);
            (it.clone(), 3)
        }
    });
    let mut stats = ParaphraseStats::default();
    let items = results
        .into_iter()
        .map(|(it, k)| {
            match k {
                0 => stats.unchanged += 1,
                1 => stats.rewritten += 1,
                2 => stats.rejected += 1,
                _ => stats.failed += 1,
            }
            it
        })
        .collect();
    (items, stats)
}

/// Tab-separated sheet for manual review, one row per item.
pub fn export_review(items: &[QuestionItem], verdicts: &[FilterVerdict]) -> Result<String, csv::Error> {
    let by_id: BTreeMap<&str, &FilterVerdict> = verdicts.iter().map(|v| (v.question_id.as_str(), v)).collect();
    let mut w = csv::WriterBuilder::new().delimiter(b'\t').from_writer(Vec::new());
    w.write_record([
        "id", "code", "level", "videos", "window", "question", "options", "answer", "blind", "rating", "notes",
    ])?;
    for it in items {
        let videos: Vec<String> = it.videos.iter().map(|v| format!("{}={}", v.number, v.video_id)).collect();
        let options = render_options(&it.options.iter().map(|o| o.text.as_str()).collect::<Vec<_>>()).replace('\n', " | ");
        let blind = by_id
            .get(it.id.as_str())
            .map(|v| format!("{}/{} {}", v.correct_count(), v.trials.len(), v.disposition.as_str()))
            .unwrap_or_default();
        w.write_record([
            it.id.as_str(),
            it.code.raw.as_str(),
            &format!("L{}", it.code.level),
            &videos.join(" "),
            &it.context_window.map(|t| t.render_timestamp()).unwrap_or_default(),
            it.stem.as_str(),
            &options,
            &it.answer_letter().to_string(),
            &blind,
            "",
            "",
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("utf8 input"))
}
