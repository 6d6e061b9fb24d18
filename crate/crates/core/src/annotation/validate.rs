use super::{captions_equal, AnnotationInstance, DistractorSource, TimeInterval};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};

// Slack for float round-off when comparing interval ends to durations.
const DURATION_SLACK_S: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// Check every structural and semantic invariant of an instance. Returns
/// violations ordered by path (array indices compared numerically).
pub fn validate_instance(inst: &AnnotationInstance) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |path: String, message: String| out.push(Violation { path, message });

    if inst.instance_id.trim().is_empty() {
        push("instance_id".into(), "must not be empty".into());
    }
    if inst.videos.is_empty() {
        push("videos".into(), "at least one video is required".into());
    }
    if inst.videos.len() > 1 && !inst.synced {
        push("synced".into(), "multi-video instances must be synchronized".into());
    }

    let mut durations: HashMap<&str, f64> = HashMap::new();
    let mut povs = HashSet::new();
    for (i, v) in inst.videos.iter().enumerate() {
        let p = format!("videos[{i}]");
        if v.video_id.trim().is_empty() {
            push(format!("{p}.video_id"), "must not be empty".into());
        }
        if durations.insert(v.video_id.as_str(), v.duration_s).is_some() {
            push(format!("{p}.video_id"), format!("duplicate video id {:?}", v.video_id));
        }
        if !(v.duration_s.is_finite() && v.duration_s > 0.0) {
            push(format!("{p}.duration_s"), "must be finite and positive".into());
        }
        if v.pov_index < 1 {
            push(format!("{p}.pov_index"), "must be at least 1".into());
        } else if !povs.insert(v.pov_index) {
            push(format!("{p}.pov_index"), format!("duplicate pov index {}", v.pov_index));
        }
        if !v.sync_offset_s.is_finite() {
            push(format!("{p}.sync_offset_s"), "must be finite".into());
        }
    }

    let mut ids = HashSet::new();
    let check_interval = |push: &mut dyn FnMut(String, String), p: &str, video: &str, iv: &TimeInterval| {
        if !(iv.start_s.is_finite() && iv.end_s.is_finite()) {
            push(format!("{p}.interval"), "bounds must be finite".into());
            return;
        }
        if iv.start_s < 0.0 {
            push(format!("{p}.interval.start_s"), "must be non-negative".into());
        }
        if iv.start_s > iv.end_s {
            push(format!("{p}.interval"), "start_s exceeds end_s".into());
        }
        if let Some(d) = durations.get(video) {
            if iv.end_s > d + DURATION_SLACK_S {
                push(
                    format!("{p}.interval.end_s"),
                    format!("{} exceeds video duration {}", iv.end_s, d),
                );
            }
        }
    };

    for (i, l) in inst.true_labels.iter().enumerate() {
        let p = format!("true_labels[{i}]");
        if !ids.insert(l.id.as_str()) {
            push(format!("{p}.id"), format!("duplicate label id {:?}", l.id));
        }
        if !durations.contains_key(l.video_id.as_str()) {
            push(format!("{p}.video_id"), format!("unknown video {:?}", l.video_id));
        }
        if l.caption.trim().is_empty() {
            push(format!("{p}.caption"), "must not be empty".into());
        }
        check_interval(&mut push, &p, &l.video_id, &l.interval);
        if l.kind.needs_actor() && l.actor.as_deref().is_none_or(|a| a.trim().is_empty()) {
            push(format!("{p}.actor"), format!("required for {} labels", l.kind));
        }
        if let Some(q) = l.quantity {
            if l.kind != super::EntityKind::WO {
                push(format!("{p}.quantity"), "only world-object labels carry a quantity".into());
            }
            if q < 1 {
                push(format!("{p}.quantity"), "must be at least 1".into());
            }
        }
    }

    for (i, d) in inst.distractor_labels.iter().enumerate() {
        let p = format!("distractor_labels[{i}]");
        if !ids.insert(d.id.as_str()) {
            push(format!("{p}.id"), format!("duplicate label id {:?}", d.id));
        }
        if !durations.contains_key(d.video_id.as_str()) {
            push(format!("{p}.video_id"), format!("unknown video {:?}", d.video_id));
        }
        if d.caption.trim().is_empty() {
            push(format!("{p}.caption"), "must not be empty".into());
        }
        if let Some(src) = &d.source_label {
            if inst.true_label(src).is_none() {
                push(format!("{p}.source_label"), format!("unknown true label {src:?}"));
            }
        }
        match (d.subtype, &d.interval) {
            (DistractorSource::Lexical, None) => {
                push(format!("{p}.interval"), "required for lexical distractors".into());
            }
            (DistractorSource::Scene, Some(_)) => {
                push(format!("{p}.interval"), "scene distractors span the whole video".into());
            }
            (_, Some(iv)) => check_interval(&mut push, &p, &d.video_id, iv),
            _ => {}
        }
        let collision = inst.true_labels.iter().find(|t| {
            t.video_id == d.video_id
                && t.kind == d.kind
                && captions_equal(&t.caption, &d.caption)
                && match (d.subtype, &d.interval) {
                    (DistractorSource::Lexical, Some(iv)) => t.interval.intersects(iv),
                    _ => true,
                }
        });
        if let Some(t) = collision {
            push(
                format!("{p}.caption"),
                format!("matches true label {:?} within its scope", t.id),
            );
        }
    }

    out.sort_by(|a, b| path_cmp(&a.path, &b.path));
    out
}

#[derive(PartialEq, Eq, PartialOrd, Ord)]
enum Seg<'a> {
    Text(&'a str),
    Index(u64),
}

fn segments(path: &str) -> Vec<Seg<'_>> {
    let mut out = Vec::new();
    for part in path.split(['.', '[', ']']).filter(|s| !s.is_empty()) {
        match part.parse::<u64>() {
            Ok(n) => out.push(Seg::Index(n)),
            Err(_) => out.push(Seg::Text(part)),
        }
    }
    out
}

fn path_cmp(a: &str, b: &str) -> Ordering {
    segments(a).cmp(&segments(b))
}
