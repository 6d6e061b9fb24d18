use super::{all_codes, parse_code, AnswerKind, QuestionCode, QuestionForm, RefKind};
use crate::annotation::{EntityKind, TimeInterval};
use crate::error::TaxonomyError;
use std::collections::BTreeMap;

pub const PLACEHOLDERS: [&str; 7] = ["caption", "refCaption", "other", "refOther", "timestamp", "v1", "v2"];

/// Templates listed verbatim in the reference taxonomy tables.
const LISTED: &[(&str, &str)] = &[
    ("SA-IDENT", "Which of the following actions did the POV player perform during the video?"),
    ("SS-IDENT", "Which of the following best describes the POV player's state in the video?"),
    ("OA-IDENT", "Which of the following actions did {other} perform during the video?"),
    ("OS-IDENT", "Which of the following best describes {other}'s state in the video?"),
    ("WO-IDENT", "Which of the following objects appeared in the video?"),
    ("WE-IDENT", "Which of the following event occurred in the video?"),
    ("SA-EXIST", "Did the POV player perform the action: \"{caption}\"?"),
    ("SS-EXIST", "Can you describe the POV player's state as: \"{caption}\"?"),
    ("OA-EXIST", "Did the {other} perform the action: \"{caption}\"?"),
    ("OS-EXIST", "Can you describe the {other}'s state as: \"{caption}\"?"),
    ("WO-EXIST", "Did the object \"{caption}\" appear in the video?"),
    ("WE-EXIST", "Did the event \"{caption}\" occur in the video?"),
    ("SA-ABSENT", "Which action did the POV player NOT perform?"),
    ("SS-ABSENT", "Which of the following states does not describe the POV player's state?"),
    ("OA-ABSENT", "Which action did the {other} NOT perform?"),
    ("OS-ABSENT", "Which of the following does not describe the {other}'s state?"),
    ("WO-ABSENT", "Which objects is NOT present in the scene?"),
    ("WE-ABSENT", "Which of the following events did NOT occur in the video?"),
    ("SA-COUNT", "How many times did the POV player perform the action: \"{caption}\"?"),
    ("OA-COUNT", "How many times did the {other} perform the action: \"{caption}\"?"),
    ("WO-COUNT", "How many {caption} are there in the scene?"),
    ("WE-COUNT", "How many times did the event \"{caption}\" occur in the video?"),
    ("SA-INTENT", "Why did the POV player perform the action: \"{caption}\"?"),
    ("OA-INTENT", "Why did the {other} perform the action: \"{caption}\"?"),
    ("SA2SS-IDENT", "When the POV player was performing the action: \"{refCaption}\", which of the following best describes their state?"),
    ("SA2OA-IDENT", "When the POV player was performing the action: \"{refCaption}\", which of the following actions did {other} perform?"),
    ("SS2SA-IDENT", "When the POV player's \"{refCaption}\", which of the following actions did they perform?"),
    ("OA2SS-IDENT", "When {other} was performing the action: \"{refCaption}\", which of the following best describes the POV player's state?"),
    ("WO2SA-IDENT", "At the moment when the object \"{refCaption}\" appeared, which of the following actions did the POV player perform?"),
    ("WE2OA-IDENT", "At the moment when the event \"{refCaption}\" occurred, which of the following actions did {other} perform?"),
    ("SA2SS-EXIST", "When the POV player was performing the action: \"{refCaption}\", can you describe their state as: \"{caption}\"?"),
    ("SA2OA-EXIST", "When the POV player was performing the action: \"{refCaption}\", did {other} perform the action: \"{caption}\"?"),
    ("SS2SA-EXIST", "When the POV player's \"{refCaption}\", did they perform the action: \"{caption}\"?"),
    ("OA2SS-EXIST", "When {other} was performing the action: \"{refCaption}\", can you describe the POV player's state as: \"{caption}\"?"),
    ("WO2SA-EXIST", "At the moment when the object \"{refCaption}\" appeared, did the POV player perform the action: \"{caption}\"?"),
    ("WE2OA-EXIST", "At the moment when the event \"{refCaption}\" occurred, did {other} perform the action: \"{caption}\"?"),
    ("SA2SS-ABSENT", "When the POV player was performing the action: \"{refCaption}\", which of the following does NOT describe their state?"),
    ("SA2OA-ABSENT", "When the POV player was performing the action: \"{refCaption}\", which action did {other} NOT perform?"),
    ("SS2SA-ABSENT", "When the POV player's \"{refCaption}\", which action did they NOT perform?"),
    ("OA2SS-ABSENT", "When {other} was performing the action: \"{refCaption}\", which of the following does NOT describe the POV player's state?"),
    ("WO2SA-ABSENT", "At the moment when the object \"{refCaption}\" appeared, which action did the POV player NOT perform?"),
    ("WE2OA-ABSENT", "At the moment when the event \"{refCaption}\" occurred, which action did {other} NOT perform?"),
    ("TR2SA-IDENT", "During {timestamp}, which of the following actions did the POV player perform?"),
    ("TR2SS-IDENT", "During {timestamp}, which of the following best describes the POV player's state?"),
    ("TR2OA-IDENT", "During {timestamp}, which of the following actions did {other} perform?"),
    ("TR2OS-IDENT", "During {timestamp}, which of the following best describes {other}'s state?"),
    ("TR2WO-IDENT", "During {timestamp}, which of the following objects appeared?"),
    ("TR2WE-IDENT", "During {timestamp}, which of the following events occurred?"),
    ("TR2SA-EXIST", "During {timestamp}, did the POV player perform the action: \"{caption}\"?"),
    ("TR2SS-EXIST", "During {timestamp}, can you describe the POV player's state as: \"{caption}\"?"),
    ("TR2OA-EXIST", "During {timestamp}, did {other} perform the action: \"{caption}\"?"),
    ("TR2OS-EXIST", "During {timestamp}, can you describe {other}'s state as: \"{caption}\"?"),
    ("TR2WO-EXIST", "During {timestamp}, did the object \"{caption}\" appear?"),
    ("TR2WE-EXIST", "During {timestamp}, did the event \"{caption}\" occur?"),
    ("TR2SA-ABSENT", "During {timestamp}, which action did the POV player NOT perform?"),
    ("TR2SS-ABSENT", "During {timestamp}, which of the following does NOT describe the POV player's state?"),
    ("TR2OA-ABSENT", "During {timestamp}, which action did {other} NOT perform?"),
    ("TR2OS-ABSENT", "During {timestamp}, which of the following does NOT describe {other}'s state?"),
    ("TR2WO-ABSENT", "During {timestamp}, which object did NOT appear?"),
    ("TR2WE-ABSENT", "During {timestamp}, which of the following events did NOT occur?"),
    ("V1-SA2V2-SA-IDENT", "When POV{v1} player was performing the action: \"{refCaption}\", which of the following actions did POV{v2} player perform at the same time?"),
    ("V1-SA2V2-SS-IDENT", "When POV{v1} player was performing the action: \"{refCaption}\", which of the following best describes POV{v2} player's state at the same time?"),
    ("V1-OA2V2-SA-IDENT", "When {refOther} was performing the action: \"{refCaption}\" in POV{v1}, which of the following actions did POV{v2} player perform at the same time?"),
    ("V1-WE2V2-WO-IDENT", "At the moment when the event \"{refCaption}\" occurred in POV{v1}, which of the following objects appeared in POV{v2} at the same time?"),
    ("V1-SA2V2-SA-EXIST", "When POV{v1} player was performing the action: \"{refCaption}\", did POV{v2} player perform the action: \"{caption}\" at the same time?"),
    ("V1-SA2V2-OA-EXIST", "When POV{v1} player was performing the action: \"{refCaption}\", did {other} perform the action: \"{caption}\" in POV{v2} at the same time?"),
    ("V1-OS2V2-WE-EXIST", "When {refOther}'s \"{refCaption}\" in POV{v1}, did the event \"{caption}\" occur in POV{v2} at the same time?"),
    ("V1-WO2V2-SS-EXIST", "When the object \"{refCaption}\" appeared in POV{v1}, was POV{v2} player's \"{caption}\" at the same time?"),
    ("SA-POV-ID", "Which video corresponds to the player who performed the action: \"{caption}\"?"),
    ("SS-POV-ID", "Which video corresponds to the player whose \"{caption}\"?"),
    ("OA-POV-ID", "Which video shows {other} performing the action: \"{caption}\"?"),
    ("OS-POV-ID", "Which video shows {other} whose \"{caption}\"?"),
    ("WO-POV-ID", "Which video shows the object \"{caption}\"?"),
    ("WE-POV-ID", "Which video shows the event \"{caption}\"?"),
    ("SA-ORDER", "Which of the following actions happened first?"),
];

fn time_stem(k: EntityKind) -> &'static str {
    match k {
        EntityKind::SA => "At what time did the POV player perform the action: \"{caption}\"?",
        EntityKind::SS => "At what time did the POV player have the state: \"{caption}\"?",
        EntityKind::OA => "At what time did the {other} perform the action: \"{caption}\"?",
        EntityKind::OS => "At what time did the {other} have the state: \"{caption}\"?",
        EntityKind::WO => "At what time did the object \"{caption}\" appear?",
        EntityKind::WE => "At what time did the event \"{caption}\" occur?",
    }
}

/// Opening clause of a single-video cross-entity stem. `actor` is the
/// placeholder naming the reference agent.
fn ref_prefix(r: EntityKind, actor: &str) -> String {
    match r {
        EntityKind::SA => "When the POV player was performing the action: \"{refCaption}\", ".into(),
        EntityKind::SS => "When the POV player's \"{refCaption}\", ".into(),
        EntityKind::OA => format!("When {{{actor}}} was performing the action: \"{{refCaption}}\", "),
        EntityKind::OS => format!("When {{{actor}}}'s \"{{refCaption}}\", "),
        EntityKind::WO => "At the moment when the object \"{refCaption}\" appeared, ".into(),
        EntityKind::WE => "At the moment when the event \"{refCaption}\" occurred, ".into(),
    }
}

/// Answer clause for windowed single-video stems. `they` is used when the
/// POV player is also the reference agent.
fn answer_clause(form: QuestionForm, a: EntityKind, they: bool) -> String {
    let player = if they { "they" } else { "the POV player" };
    let state = if they { "their state" } else { "the POV player's state" };
    match (form, a) {
        (QuestionForm::Ident, EntityKind::SA) => format!("which of the following actions did {player} perform?"),
        (QuestionForm::Ident, EntityKind::SS) => format!("which of the following best describes {state}?"),
        (QuestionForm::Ident, EntityKind::OA) => "which of the following actions did {other} perform?".into(),
        (QuestionForm::Ident, EntityKind::OS) => "which of the following best describes {other}'s state?".into(),
        (QuestionForm::Ident, EntityKind::WO) => "which of the following objects appeared?".into(),
        (QuestionForm::Ident, EntityKind::WE) => "which of the following events occurred?".into(),
        (QuestionForm::Exist, EntityKind::SA) => format!("did {player} perform the action: \"{{caption}}\"?"),
        (QuestionForm::Exist, EntityKind::SS) => format!("can you describe {state} as: \"{{caption}}\"?"),
        (QuestionForm::Exist, EntityKind::OA) => "did {other} perform the action: \"{caption}\"?".into(),
        (QuestionForm::Exist, EntityKind::OS) => "can you describe {other}'s state as: \"{caption}\"?".into(),
        (QuestionForm::Exist, EntityKind::WO) => "did the object \"{caption}\" appear?".into(),
        (QuestionForm::Exist, EntityKind::WE) => "did the event \"{caption}\" occur?".into(),
        (_, EntityKind::SA) => format!("which action did {player} NOT perform?"),
        (_, EntityKind::SS) => format!("which of the following does NOT describe {state}?"),
        (_, EntityKind::OA) => "which action did {other} NOT perform?".into(),
        (_, EntityKind::OS) => "which of the following does NOT describe {other}'s state?".into(),
        (_, EntityKind::WO) => "which object did NOT appear?".into(),
        (_, EntityKind::WE) => "which of the following events did NOT occur?".into(),
    }
}

fn sync_prefix(r: EntityKind) -> &'static str {
    match r {
        EntityKind::SA => "When POV{v1} player was performing the action: \"{refCaption}\", ",
        EntityKind::SS => "When POV{v1} player's \"{refCaption}\", ",
        EntityKind::OA => "When {refOther} was performing the action: \"{refCaption}\" in POV{v1}, ",
        EntityKind::OS => "When {refOther}'s \"{refCaption}\" in POV{v1}, ",
        EntityKind::WO => "When the object \"{refCaption}\" appeared in POV{v1}, ",
        EntityKind::WE => "At the moment when the event \"{refCaption}\" occurred in POV{v1}, ",
    }
}

fn sync_clause(form: QuestionForm, a: EntityKind) -> &'static str {
    match (form, a) {
        (QuestionForm::Ident, EntityKind::SA) => "which of the following actions did POV{v2} player perform at the same time?",
        (QuestionForm::Ident, EntityKind::SS) => "which of the following best describes POV{v2} player's state at the same time?",
        (QuestionForm::Ident, EntityKind::OA) => "which of the following actions did {other} perform in POV{v2} at the same time?",
        (QuestionForm::Ident, EntityKind::OS) => "which of the following best describes {other}'s state in POV{v2} at the same time?",
        (QuestionForm::Ident, EntityKind::WO) => "which of the following objects appeared in POV{v2} at the same time?",
        (QuestionForm::Ident, EntityKind::WE) => "which of the following events occurred in POV{v2} at the same time?",
        (_, EntityKind::SA) => "did POV{v2} player perform the action: \"{caption}\" at the same time?",
        (_, EntityKind::SS) => "was POV{v2} player's \"{caption}\" at the same time?",
        (_, EntityKind::OA) => "did {other} perform the action: \"{caption}\" in POV{v2} at the same time?",
        (_, EntityKind::OS) => "can you describe {other}'s state as: \"{caption}\" in POV{v2} at the same time?",
        (_, EntityKind::WO) => "did the object \"{caption}\" appear in POV{v2} at the same time?",
        (_, EntityKind::WE) => "did the event \"{caption}\" occur in POV{v2} at the same time?",
    }
}

/// Template for codes without a listed stem, following the listed pattern.
fn composed(code: &QuestionCode) -> String {
    match (code.form, code.ref_kind, code.ans_kind) {
        (QuestionForm::Time, None, AnswerKind::Entity(k)) => time_stem(k).into(),
        (QuestionForm::Order, None, AnswerKind::Mix) => "Which of the following events happened first?".into(),
        (QuestionForm::Order, None, _) => "Which of the following actions happened first?".into(),
        (_, Some(RefKind::Entity(r)), AnswerKind::Entity(a)) if code.multi_video => {
            format!("{}{}", sync_prefix(r), sync_clause(code.form, a))
        }
        (_, Some(RefKind::Entity(r)), AnswerKind::Entity(a)) => {
            // When both sides name another agent the reference one takes refOther.
            let actor = if a.needs_actor() { "refOther" } else { "other" };
            format!("{}{}", ref_prefix(r, actor), answer_clause(code.form, a, r.is_self() && a.is_self()))
        }
        (_, Some(RefKind::Timestamp), AnswerKind::Entity(a)) => {
            format!("During {{timestamp}}, {}", answer_clause(code.form, a, false))
        }
        _ => unreachable!("every remaining code has a listed template: {}", code.raw),
    }
}

/// Values substituted into a stem template.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StemSlots {
    pub caption: Option<String>,
    pub ref_caption: Option<String>,
    pub other: Option<String>,
    pub ref_other: Option<String>,
    pub timestamp: Option<TimeInterval>,
    /// POV indices of the reference and answer videos.
    pub video_indices: Option<(u32, u32)>,
}

impl StemSlots {
    fn get(&self, name: &str) -> Option<String> {
        match name {
            "caption" => self.caption.clone(),
            "refCaption" => self.ref_caption.clone(),
            "other" => self.other.clone(),
            "refOther" => self.ref_other.clone(),
            "timestamp" => self.timestamp.map(|t| t.render_timestamp()),
            "v1" => self.video_indices.map(|v| v.0.to_string()),
            "v2" => self.video_indices.map(|v| v.1.to_string()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemplateRegistry {
    templates: BTreeMap<String, String>,
}

impl Default for TemplateRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

impl TemplateRegistry {
    /// One template per code in the taxonomy.
    pub fn builtin() -> Self {
        let listed: BTreeMap<&str, &str> = LISTED.iter().copied().collect();
        let templates = all_codes()
            .into_iter()
            .map(|c| {
                let t = match listed.get(c.as_str()) {
                    Some(t) => t.to_string(),
                    None => composed(&c),
                };
                (c.raw, t)
            })
            .collect();
        Self { templates }
    }

    /// Replace or add templates keyed by code text.
    pub fn with_overrides(mut self, overrides: &BTreeMap<String, String>) -> Result<Self, TaxonomyError> {
        for (code, template) in overrides {
            let parsed = parse_code(code)?;
            for name in placeholders(template) {
                if !PLACEHOLDERS.contains(&name) {
                    return Err(TaxonomyError::UnknownPlaceholder {
                        code: parsed.raw.clone(),
                        placeholder: name.to_string(),
                    });
                }
            }
            self.templates.insert(parsed.raw, template.clone());
        }
        Ok(self)
    }

    pub fn template(&self, code: &QuestionCode) -> Result<&str, TaxonomyError> {
        self.templates
            .get(code.as_str())
            .map(String::as_str)
            .ok_or_else(|| TaxonomyError::NoTemplate(code.raw.clone()))
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    /// Substitute every placeholder in one pass, so slot values that look
    /// like placeholders are left alone.
    pub fn render_stem(&self, code: &QuestionCode, slots: &StemSlots) -> Result<String, TaxonomyError> {
        let template = self.template(code)?;
        let mut out = String::with_capacity(template.len() + 32);
        let mut rest = template;
        while let Some(open) = rest.find('{') {
            out.push_str(&rest[..open]);
            let after = &rest[open + 1..];
            match after.find('}') {
                Some(close) if PLACEHOLDERS.contains(&&after[..close]) => {
                    let name = &after[..close];
                    let value = slots.get(name).ok_or_else(|| TaxonomyError::MissingSlot {
                        code: code.raw.clone(),
                        placeholder: name.to_string(),
                    })?;
                    out.push_str(&value);
                    rest = &after[close + 1..];
                }
                _ => {
                    out.push('{');
                    rest = after;
                }
            }
        }
        out.push_str(rest);
        Ok(out)
    }
}

/// Placeholder names used by a template, in order of appearance.
pub fn placeholders(template: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        let after = &rest[open + 1..];
        match after.find('}') {
            Some(close) => {
                out.push(&after[..close]);
                rest = &after[close + 1..];
            }
            None => break,
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code(s: &str) -> QuestionCode {
        parse_code(s).unwrap()
    }

    #[test]
    fn renders_examples() {
        let reg = TemplateRegistry::builtin();
        let slots = StemSlots {
            caption: Some("reloads the rifle".into()),
            ..Default::default()
        };
        assert_eq!(
            reg.render_stem(&code("SA-EXIST"), &slots).unwrap(),
            "Did the POV player perform the action: \"reloads the rifle\"?"
        );
        let slots = StemSlots {
            caption: Some("explosion".into()),
            timestamp: Some(TimeInterval::new(1.0, 12.0)),
            ..Default::default()
        };
        assert_eq!(
            reg.render_stem(&code("TR2WE-EXIST"), &slots).unwrap(),
            "During [00:01 to 00:12], did the event \"explosion\" occur?"
        );
    }

    #[test]
    fn missing_slot_is_named() {
        let reg = TemplateRegistry::builtin();
        let err = reg.render_stem(&code("SA-INTENT"), &StemSlots::default()).unwrap_err();
        assert_eq!(
            err,
            TaxonomyError::MissingSlot {
                code: "SA-INTENT".into(),
                placeholder: "caption".into()
            }
        );
    }

    #[test]
    fn composition_reproduces_listed_templates() {
        for (raw, listed) in LISTED {
            let c = code(raw);
            if c.ref_kind.is_some() {
                assert_eq!(&composed(&c), listed, "{raw}");
            }
        }
    }

    #[test]
    fn every_code_has_one_template_with_unique_placeholders() {
        let reg = TemplateRegistry::builtin();
        assert_eq!(reg.len(), 222);
        for c in all_codes() {
            let t = reg.template(&c).unwrap();
            let names = placeholders(t);
            for n in &names {
                assert!(PLACEHOLDERS.contains(n), "{}: {n}", c.raw);
                assert_eq!(names.iter().filter(|m| *m == n).count(), 1, "{}: {t}", c.raw);
            }
            let has = |p: &str| names.contains(&p);
            assert_eq!(has("timestamp"), c.is_timestamp_ref(), "{}", c.raw);
            assert_eq!(has("refCaption"), c.ref_entity().is_some(), "{}", c.raw);
            assert_eq!(has("v1") && has("v2"), c.is_sync_ref(), "{}", c.raw);
            assert!(!t.contains('\u{201c}') && !t.contains('\u{201d}'));
        }
    }

    #[test]
    fn slot_values_are_not_reexpanded() {
        let reg = TemplateRegistry::builtin();
        let slots = StemSlots {
            caption: Some("{other}".into()),
            other: Some("enemy".into()),
            ..Default::default()
        };
        assert_eq!(
            reg.render_stem(&code("OA-EXIST"), &slots).unwrap(),
            "Did the enemy perform the action: \"{other}\"?"
        );
    }

    #[test]
    fn overrides() {
        let mut o = BTreeMap::new();
        o.insert("SA-IDENT".to_string(), "What did the player do?".to_string());
        let reg = TemplateRegistry::builtin().with_overrides(&o).unwrap();
        assert_eq!(reg.template(&code("SA-IDENT")).unwrap(), "What did the player do?");
        o.insert("SA-EXIST".to_string(), "Did {who} act?".to_string());
        assert!(matches!(
            TemplateRegistry::builtin().with_overrides(&o),
            Err(TaxonomyError::UnknownPlaceholder { .. })
        ));
    }

    #[test]
    fn distinct_bindings_give_distinct_stems() {
        let reg = TemplateRegistry::builtin();
        for c in all_codes() {
            let names = placeholders(reg.template(&c).unwrap());
            if names.is_empty() {
                continue;
            }
            let mk = |tag: &str, t: f64| StemSlots {
                caption: Some(format!("cap {tag}")),
                ref_caption: Some(format!("ref {tag}")),
                other: Some(format!("other {tag}")),
                ref_other: Some(format!("refother {tag}")),
                timestamp: Some(TimeInterval::new(t, t + 3.0)),
                video_indices: Some((1, if tag == "a" { 2 } else { 3 })),
            };
            let a = reg.render_stem(&c, &mk("a", 1.0)).unwrap();
            let b = reg.render_stem(&c, &mk("b", 20.0)).unwrap();
            assert_ne!(a, b, "{}", c.raw);
        }
    }
}
