//! Combinatorial question generation from an annotation instance.

mod context;
mod forms;

pub use context::{build_context_window, eligible_pool, Candidate};

use crate::annotation::{validate_instance, AnnotationInstance, TimeInterval, VideoMeta};
use crate::error::GenerateError;
use crate::parallel::bounded_map;
use crate::taxonomy::{all_codes, parse_code, QuestionCode, QuestionForm, TemplateRegistry};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistractorSubtype {
    Lexical,
    Scene,
    Temporal,
    Role,
    CrossVideo,
    CountOffset,
    Permutation,
    VideoIndex,
    TimeWindow,
}

impl DistractorSubtype {
    pub const ALL: [DistractorSubtype; 9] = [
        DistractorSubtype::Lexical,
        DistractorSubtype::Scene,
        DistractorSubtype::Temporal,
        DistractorSubtype::Role,
        DistractorSubtype::CrossVideo,
        DistractorSubtype::CountOffset,
        DistractorSubtype::Permutation,
        DistractorSubtype::VideoIndex,
        DistractorSubtype::TimeWindow,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DistractorSubtype::Lexical => "lexical",
            DistractorSubtype::Scene => "scene",
            DistractorSubtype::Temporal => "temporal",
            DistractorSubtype::Role => "role",
            DistractorSubtype::CrossVideo => "cross_video",
            DistractorSubtype::CountOffset => "count_offset",
            DistractorSubtype::Permutation => "permutation",
            DistractorSubtype::VideoIndex => "video_index",
            DistractorSubtype::TimeWindow => "time_window",
        }
    }

    /// Subtypes drawn from label pools (as opposed to synthesized counts,
    /// windows, orders and video numbers).
    pub fn is_label_pool(self) -> bool {
        matches!(
            self,
            DistractorSubtype::Lexical
                | DistractorSubtype::Scene
                | DistractorSubtype::Temporal
                | DistractorSubtype::Role
                | DistractorSubtype::CrossVideo
        )
    }
}

/// Where an option's text came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Provenance {
    TrueLabel,
    Intent,
    Distractor(DistractorSubtype),
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::TrueLabel => "true_label",
            Provenance::Intent => "intent",
            Provenance::Distractor(s) => s.as_str(),
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Provenance {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "true_label" => Ok(Provenance::TrueLabel),
            "intent" => Ok(Provenance::Intent),
            _ => DistractorSubtype::ALL
                .into_iter()
                .find(|d| d.as_str() == s)
                .map(Provenance::Distractor)
                .ok_or_else(|| format!("unknown provenance {s:?}")),
        }
    }
}

impl Serialize for Provenance {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Provenance {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptionEntry {
    pub text: String,
    pub is_correct: bool,
    pub provenance: Provenance,
    #[serde(default)]
    pub source_ids: Vec<String>,
}

/// A video the question is asked over. `number` is the 1-based position
/// used in prompts ("Video 2") and in multi-video stems ("POV2").
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoRef {
    pub video_id: String,
    pub number: u32,
    pub pov_index: u32,
    pub game: String,
    pub duration_s: f64,
    pub sync_offset_s: f64,
}

impl VideoRef {
    fn from_meta(v: &VideoMeta, number: u32) -> Self {
        Self {
            video_id: v.video_id.clone(),
            number,
            pov_index: v.pov_index,
            game: v.game.clone(),
            duration_s: v.duration_s,
            sync_offset_s: v.sync_offset_s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionItem {
    pub id: String,
    pub instance_id: String,
    pub code: QuestionCode,
    pub videos: Vec<VideoRef>,
    /// Shared-clock window for windowed codes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context_window: Option<TimeInterval>,
    pub stem: String,
    pub options: Vec<OptionEntry>,
    pub answer_index: usize,
    /// Variant behind an EXIST or ABSENT answer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subtype: Option<Provenance>,
    /// Slot values substituted into the stem.
    #[serde(default)]
    pub bindings: BTreeMap<String, String>,
    pub seed_path: String,
}

impl QuestionItem {
    pub fn answer(&self) -> &OptionEntry {
        &self.options[self.answer_index]
    }

    pub fn answer_letter(&self) -> char {
        option_letter(self.answer_index)
    }

    pub fn total_duration_s(&self) -> f64 {
        self.videos.iter().map(|v| v.duration_s).sum()
    }
}

pub fn option_letter(i: usize) -> char {
    (b'A' + i as u8) as char
}

pub fn default_subtype_mix() -> BTreeMap<QuestionForm, Vec<DistractorSubtype>> {
    use DistractorSubtype::*;
    let pools = vec![Lexical, Scene, Temporal, Role, CrossVideo];
    [QuestionForm::Ident, QuestionForm::Exist, QuestionForm::Absent]
        .into_iter()
        .map(|f| (f, pools.clone()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    pub min_overlap_s: f64,
    pub temporal_margin_eps_s: f64,
    pub order_gap_delta_s: f64,
    pub options_per_question: usize,
    pub subtype_mix: BTreeMap<QuestionForm, Vec<DistractorSubtype>>,
    pub max_per_code: Option<usize>,
    /// Restrict generation to these codes.
    pub codes: Option<Vec<String>>,
    pub seed: u64,
    /// Worker threads; output does not depend on it.
    #[serde(skip)]
    pub workers: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            min_overlap_s: 0.1,
            temporal_margin_eps_s: 1.0,
            order_gap_delta_s: 0.5,
            options_per_question: 4,
            subtype_mix: default_subtype_mix(),
            max_per_code: None,
            codes: None,
            seed: 0,
            workers: 1,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), GenerateError> {
        for (name, v) in [
            ("min_overlap_s", self.min_overlap_s),
            ("temporal_margin_eps_s", self.temporal_margin_eps_s),
            ("order_gap_delta_s", self.order_gap_delta_s),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(GenerateError::Config(format!("{name} must be finite and non-negative")));
            }
        }
        if !(2..=23).contains(&self.options_per_question) {
            return Err(GenerateError::Config("options_per_question must be in 2..=23 (X is reserved)".into()));
        }
        Ok(())
    }

    pub(crate) fn n_wrong(&self) -> usize {
        self.options_per_question - 1
    }

    pub(crate) fn mix(&self, form: QuestionForm) -> &[DistractorSubtype] {
        self.subtype_mix.get(&form).map(Vec::as_slice).unwrap_or(&[])
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CodeStats {
    pub enumerated: usize,
    pub emitted: usize,
    pub skipped: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub enumerated: usize,
    pub emitted: usize,
    pub skipped: usize,
    pub per_code: BTreeMap<String, CodeStats>,
}

impl GenerationStats {
    pub fn merge(&mut self, other: &GenerationStats) {
        self.enumerated += other.enumerated;
        self.emitted += other.emitted;
        self.skipped += other.skipped;
        for (code, s) in &other.per_code {
            let e = self.per_code.entry(code.clone()).or_default();
            e.enumerated += s.enumerated;
            e.emitted += s.emitted;
            for (r, n) in &s.skipped {
                *e.skipped.entry(r.clone()).or_default() += n;
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Generation {
    pub items: Vec<QuestionItem>,
    pub stats: GenerationStats,
}

/// One enumerated combination: an item or the reason it was dropped.
pub(crate) enum Outcome {
    Item(Box<QuestionItem>),
    Skip(&'static str),
}

/// Enumerate every admissible (code, combination, variant) and emit the
/// items whose preconditions hold. Items come back sorted by id.
pub fn generate_all(
    inst: &AnnotationInstance,
    cfg: &GenConfig,
    registry: &TemplateRegistry,
) -> Result<Generation, GenerateError> {
    cfg.validate()?;
    let violations = validate_instance(inst);
    if !violations.is_empty() {
        return Err(GenerateError::InvalidInstance(violations));
    }
    let codes: Vec<QuestionCode> = match &cfg.codes {
        None => all_codes(),
        Some(list) => list.iter().map(|c| parse_code(c)).collect::<Result<_, _>>()?,
    };
    for c in &codes {
        registry.template(c)?;
    }

    let per_code = bounded_map(&codes, cfg.workers.max(1), |code| {
        forms::run_code(inst, code, cfg, registry)
    });

    let mut gen = Generation::default();
    for (code, outcomes) in codes.iter().zip(per_code) {
        let stats = gen.stats.per_code.entry(code.raw.clone()).or_default();
        let mut items = Vec::new();
        for o in outcomes {
            stats.enumerated += 1;
            match o {
                Outcome::Item(item) => items.push(*item),
                Outcome::Skip(reason) => *stats.skipped.entry(reason.to_string()).or_default() += 1,
            }
        }
        items.sort_by(|a, b| a.id.cmp(&b.id));
        if let Some(cap) = cfg.max_per_code {
            if items.len() > cap {
                *stats.skipped.entry("max_per_code".into()).or_default() += items.len() - cap;
                items.truncate(cap);
            }
        }
        stats.emitted += items.len();
        gen.stats.enumerated += stats.enumerated;
        gen.stats.emitted += items.len();
        gen.stats.skipped += stats.enumerated - items.len();
        gen.items.extend(items);
    }
    gen.items.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(gen)
}
