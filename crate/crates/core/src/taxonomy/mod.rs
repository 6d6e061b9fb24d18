//! Question codes, the fifteen task categories and stem templates.

mod templates;

pub use templates::{StemSlots, TemplateRegistry, PLACEHOLDERS};

use crate::annotation::EntityKind;
use crate::error::TaxonomyError;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum QuestionForm {
    Ident,
    Exist,
    Absent,
    Count,
    Intent,
    Time,
    Order,
    PovId,
}

impl QuestionForm {
    pub fn as_str(self) -> &'static str {
        match self {
            QuestionForm::Ident => "IDENT",
            QuestionForm::Exist => "EXIST",
            QuestionForm::Absent => "ABSENT",
            QuestionForm::Count => "COUNT",
            QuestionForm::Intent => "INTENT",
            QuestionForm::Time => "TIME",
            QuestionForm::Order => "ORDER",
            QuestionForm::PovId => "POV_ID",
        }
    }

    /// Forms that take a cross-entity, timestamp or sync reference.
    fn referable(s: &str) -> Option<QuestionForm> {
        match s {
            "IDENT" => Some(QuestionForm::Ident),
            "EXIST" => Some(QuestionForm::Exist),
            "ABSENT" => Some(QuestionForm::Absent),
            _ => None,
        }
    }
}

impl fmt::Display for QuestionForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What a windowed question is anchored on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RefKind {
    Entity(EntityKind),
    Timestamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AnswerKind {
    Entity(EntityKind),
    Mix,
}

impl AnswerKind {
    pub fn entity(self) -> Option<EntityKind> {
        match self {
            AnswerKind::Entity(k) => Some(k),
            AnswerKind::Mix => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AnswerKind::Entity(k) => k.as_str(),
            AnswerKind::Mix => "MIX",
        }
    }
}

/// A parsed question code such as `WO2SA-EXIST` or `V1-SA2V2-OA-IDENT`.
/// Serializes as its raw text.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QuestionCode {
    pub raw: String,
    pub level: u8,
    pub form: QuestionForm,
    pub ref_kind: Option<RefKind>,
    pub ans_kind: AnswerKind,
    pub multi_video: bool,
}

impl QuestionCode {
    fn new(form: QuestionForm, ref_kind: Option<RefKind>, ans_kind: AnswerKind, multi_video: bool) -> Self {
        let raw = render_raw(form, ref_kind, ans_kind, multi_video);
        let level = level_of(form, ref_kind, ans_kind, multi_video);
        Self {
            raw,
            level,
            form,
            ref_kind,
            ans_kind,
            multi_video,
        }
    }

    pub fn as_str(&self) -> &str {
        &self.raw
    }

    /// Cross-entity reference within one video (`REF2ANS-*`).
    pub fn is_cross_entity(&self) -> bool {
        matches!(self.ref_kind, Some(RefKind::Entity(_))) && !self.multi_video
    }

    pub fn is_timestamp_ref(&self) -> bool {
        self.ref_kind == Some(RefKind::Timestamp)
    }

    /// `V1-REF2V2-ANS-*`.
    pub fn is_sync_ref(&self) -> bool {
        matches!(self.ref_kind, Some(RefKind::Entity(_))) && self.multi_video
    }

    pub fn ref_entity(&self) -> Option<EntityKind> {
        match self.ref_kind {
            Some(RefKind::Entity(k)) => Some(k),
            _ => None,
        }
    }

    /// Items of this code carry a context window on the shared clock.
    pub fn is_windowed(&self) -> bool {
        self.ref_kind.is_some() || self.form == QuestionForm::Time
    }

    pub fn category(&self) -> TaskCategory {
        code_category(self)
    }
}

impl fmt::Display for QuestionCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.raw)
    }
}

impl FromStr for QuestionCode {
    type Err = TaxonomyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_code(s)
    }
}

impl PartialOrd for QuestionCode {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QuestionCode {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.raw.cmp(&other.raw)
    }
}

impl Serialize for QuestionCode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.raw)
    }
}

impl<'de> Deserialize<'de> for QuestionCode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        parse_code(&raw).map_err(serde::de::Error::custom)
    }
}

fn render_raw(form: QuestionForm, ref_kind: Option<RefKind>, ans: AnswerKind, multi: bool) -> String {
    match (form, ref_kind) {
        (QuestionForm::PovId, _) => format!("{}-POV-ID", ans.as_str()),
        (QuestionForm::Order, _) if multi => format!("{}-ORDER-MV", ans.as_str()),
        (_, Some(RefKind::Timestamp)) => format!("TR2{}-{form}", ans.as_str()),
        (_, Some(RefKind::Entity(r))) if multi => format!("V1-{r}2V2-{}-{form}", ans.as_str()),
        (_, Some(RefKind::Entity(r))) => format!("{r}2{}-{form}", ans.as_str()),
        (_, None) => format!("{}-{form}", ans.as_str()),
    }
}

fn level_of(form: QuestionForm, ref_kind: Option<RefKind>, ans: AnswerKind, multi: bool) -> u8 {
    if multi {
        return 3;
    }
    if ref_kind.is_some() {
        return 2;
    }
    match form {
        QuestionForm::Ident | QuestionForm::Exist => 1,
        QuestionForm::Count if ans == AnswerKind::Entity(EntityKind::WO) => 1,
        _ => 2,
    }
}

fn simple_kinds(form: QuestionForm) -> &'static [EntityKind] {
    use EntityKind::*;
    match form {
        QuestionForm::Ident | QuestionForm::Exist | QuestionForm::Absent | QuestionForm::Time => &EntityKind::ALL,
        QuestionForm::Count => &[SA, OA, WO, WE],
        QuestionForm::Intent => &[SA, OA],
        QuestionForm::Order => &[SA, OA],
        QuestionForm::PovId => &EntityKind::ALL,
    }
}

/// Parse the textual code grammar. The structured result renders back to
/// the same text.
pub fn parse_code(raw: &str) -> Result<QuestionCode, TaxonomyError> {
    let err = || TaxonomyError::UnknownCode(raw.to_string());
    let kind = |s: &str| s.parse::<EntityKind>().map_err(|_| err());

    if let Some(rest) = raw.strip_prefix("V1-") {
        // V1-REF2V2-ANS-FORM
        let (r, rest) = rest.split_once("2V2-").ok_or_else(err)?;
        let (a, f) = rest.split_once('-').ok_or_else(err)?;
        let form = match f {
            "IDENT" => QuestionForm::Ident,
            "EXIST" => QuestionForm::Exist,
            _ => return Err(err()),
        };
        return Ok(QuestionCode::new(
            form,
            Some(RefKind::Entity(kind(r)?)),
            AnswerKind::Entity(kind(a)?),
            true,
        ));
    }

    let (head, tail) = raw.split_once('-').ok_or_else(err)?;
    let ans_of = |s: &str| -> Result<AnswerKind, TaxonomyError> {
        if s == "MIX" {
            Ok(AnswerKind::Mix)
        } else {
            kind(s).map(AnswerKind::Entity)
        }
    };

    if let Some((r, a)) = head.split_once('2') {
        let form = QuestionForm::referable(tail).ok_or_else(err)?;
        let ans = kind(a)?;
        let ref_kind = if r == "TR" {
            RefKind::Timestamp
        } else {
            let r = kind(r)?;
            if r == ans {
                return Err(err());
            }
            RefKind::Entity(r)
        };
        return Ok(QuestionCode::new(form, Some(ref_kind), AnswerKind::Entity(ans), false));
    }

    let ans = ans_of(head)?;
    let code = match tail {
        "POV-ID" => match ans {
            AnswerKind::Entity(_) => QuestionCode::new(QuestionForm::PovId, None, ans, true),
            AnswerKind::Mix => return Err(err()),
        },
        "ORDER-MV" | "ORDER" => QuestionCode::new(QuestionForm::Order, None, ans, tail == "ORDER-MV"),
        _ => {
            let form = match tail {
                "IDENT" => QuestionForm::Ident,
                "EXIST" => QuestionForm::Exist,
                "ABSENT" => QuestionForm::Absent,
                "COUNT" => QuestionForm::Count,
                "INTENT" => QuestionForm::Intent,
                "TIME" => QuestionForm::Time,
                _ => return Err(err()),
            };
            let k = ans.entity().ok_or_else(err)?;
            if !simple_kinds(form).contains(&k) {
                return Err(err());
            }
            QuestionCode::new(form, None, ans, false)
        }
    };
    if code.form == QuestionForm::Order {
        if let AnswerKind::Entity(k) = code.ans_kind {
            if !simple_kinds(QuestionForm::Order).contains(&k) {
                return Err(err());
            }
        }
    }
    Ok(code)
}

/// Every code in the taxonomy, in a fixed order: single-reference forms,
/// cross-entity, timestamp, then multi-video codes.
pub fn all_codes() -> Vec<QuestionCode> {
    use QuestionForm::*;
    let mut out = Vec::new();
    for form in [Ident, Exist, Absent, Count, Intent, Time] {
        for &k in simple_kinds(form) {
            out.push(QuestionCode::new(form, None, AnswerKind::Entity(k), false));
        }
    }
    for ans in [
        AnswerKind::Entity(EntityKind::SA),
        AnswerKind::Entity(EntityKind::OA),
        AnswerKind::Mix,
    ] {
        out.push(QuestionCode::new(Order, None, ans, false));
    }
    for form in [Ident, Exist, Absent] {
        for r in EntityKind::ALL {
            for a in EntityKind::ALL {
                if r != a {
                    out.push(QuestionCode::new(form, Some(RefKind::Entity(r)), AnswerKind::Entity(a), false));
                }
            }
        }
    }
    for form in [Ident, Exist, Absent] {
        for a in EntityKind::ALL {
            out.push(QuestionCode::new(form, Some(RefKind::Timestamp), AnswerKind::Entity(a), false));
        }
    }
    for form in [Ident, Exist] {
        for r in EntityKind::ALL {
            for a in EntityKind::ALL {
                out.push(QuestionCode::new(form, Some(RefKind::Entity(r)), AnswerKind::Entity(a), true));
            }
        }
    }
    for k in EntityKind::ALL {
        out.push(QuestionCode::new(PovId, None, AnswerKind::Entity(k), true));
    }
    for ans in [
        AnswerKind::Entity(EntityKind::SA),
        AnswerKind::Entity(EntityKind::OA),
        AnswerKind::Mix,
    ] {
        out.push(QuestionCode::new(Order, None, ans, true));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TaskCategory {
    ActionRecognition,
    StateRecognition,
    ObjectRecognition,
    EventRecognition,
    StaticObjectCount,
    CrossEntityReferring,
    TimestampReferring,
    TimeLocalization,
    AbsenceRecognition,
    OccurrenceCount,
    Ordering,
    IntentIdentification,
    SyncReferring,
    CrossVideoOrdering,
    PovIdentification,
}

impl TaskCategory {
    pub const ALL: [TaskCategory; 15] = [
        TaskCategory::ActionRecognition,
        TaskCategory::StateRecognition,
        TaskCategory::ObjectRecognition,
        TaskCategory::EventRecognition,
        TaskCategory::StaticObjectCount,
        TaskCategory::CrossEntityReferring,
        TaskCategory::TimestampReferring,
        TaskCategory::TimeLocalization,
        TaskCategory::AbsenceRecognition,
        TaskCategory::OccurrenceCount,
        TaskCategory::Ordering,
        TaskCategory::IntentIdentification,
        TaskCategory::SyncReferring,
        TaskCategory::CrossVideoOrdering,
        TaskCategory::PovIdentification,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TaskCategory::ActionRecognition => "Action Recognition",
            TaskCategory::StateRecognition => "State Recognition",
            TaskCategory::ObjectRecognition => "Object Recognition",
            TaskCategory::EventRecognition => "Event Recognition",
            TaskCategory::StaticObjectCount => "Static Object Count",
            TaskCategory::CrossEntityReferring => "Cross-Entity Referring",
            TaskCategory::TimestampReferring => "Timestamp Referring",
            TaskCategory::TimeLocalization => "Time Localization",
            TaskCategory::AbsenceRecognition => "Absence Recognition",
            TaskCategory::OccurrenceCount => "Occurrence Count",
            TaskCategory::Ordering => "Ordering",
            TaskCategory::IntentIdentification => "Intent Identification",
            TaskCategory::SyncReferring => "Sync-Referring",
            TaskCategory::CrossVideoOrdering => "Cross-Video Ordering",
            TaskCategory::PovIdentification => "POV Identification",
        }
    }

    pub fn level(self) -> u8 {
        use TaskCategory::*;
        match self {
            ActionRecognition | StateRecognition | ObjectRecognition | EventRecognition | StaticObjectCount => 1,
            SyncReferring | CrossVideoOrdering | PovIdentification => 3,
            _ => 2,
        }
    }
}

impl fmt::Display for TaskCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for TaskCategory {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

pub fn code_category(code: &QuestionCode) -> TaskCategory {
    use EntityKind::*;
    use TaskCategory::*;
    if code.is_sync_ref() {
        return SyncReferring;
    }
    if code.is_cross_entity() {
        return CrossEntityReferring;
    }
    if code.is_timestamp_ref() {
        return TimestampReferring;
    }
    match code.form {
        QuestionForm::PovId => PovIdentification,
        QuestionForm::Order if code.multi_video => CrossVideoOrdering,
        QuestionForm::Order => Ordering,
        QuestionForm::Absent => AbsenceRecognition,
        QuestionForm::Time => TimeLocalization,
        QuestionForm::Intent => IntentIdentification,
        QuestionForm::Count if code.ans_kind == AnswerKind::Entity(WO) => StaticObjectCount,
        QuestionForm::Count => OccurrenceCount,
        QuestionForm::Ident | QuestionForm::Exist => match code.ans_kind {
            AnswerKind::Entity(SA | OA) => ActionRecognition,
            AnswerKind::Entity(SS | OS) => StateRecognition,
            AnswerKind::Entity(WO) => ObjectRecognition,
            AnswerKind::Entity(WE) | AnswerKind::Mix => EventRecognition,
        },
    }
}
