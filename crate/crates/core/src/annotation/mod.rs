//! Multi-track timeline annotations: six entity tracks per video, true
//! labels asserting occurrences, distractor labels asserting
//! non-occurrences, and a shared clock across synchronized videos.

mod density;
mod document;
mod interval;
mod synth;
mod validate;

pub use density::{decision_density, decision_density_many, label_distribution, DensityMode, DensityStats, KindShare};
pub use document::{parse_document, parse_instance, serialize_instance, ParsedDocument};
pub use interval::{interval_overlap, matches_window, TimeInterval, POINT_EPS_S};
pub use synth::{synth_instance, DistractorCounts, SynthError, SynthParams, CORPUS_KIND_COUNTS};
pub use validate::{validate_instance, Violation};

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// The six label tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EntityKind {
    SA,
    SS,
    OA,
    OS,
    WO,
    WE,
}

impl EntityKind {
    pub const ALL: [EntityKind; 6] = [
        EntityKind::SA,
        EntityKind::SS,
        EntityKind::OA,
        EntityKind::OS,
        EntityKind::WO,
        EntityKind::WE,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::SA => "SA",
            EntityKind::SS => "SS",
            EntityKind::OA => "OA",
            EntityKind::OS => "OS",
            EntityKind::WO => "WO",
            EntityKind::WE => "WE",
        }
    }

    /// Other-agent tracks carry an actor.
    pub fn needs_actor(self) -> bool {
        matches!(self, EntityKind::OA | EntityKind::OS)
    }

    pub fn is_self(self) -> bool {
        matches!(self, EntityKind::SA | EntityKind::SS)
    }

    /// Agent-attribution swap used by role distractors. World tracks have
    /// no agent and therefore no swap partner.
    pub fn role_swap(self) -> Option<EntityKind> {
        match self {
            EntityKind::SA => Some(EntityKind::OA),
            EntityKind::OA => Some(EntityKind::SA),
            EntityKind::SS => Some(EntityKind::OS),
            EntityKind::OS => Some(EntityKind::SS),
            EntityKind::WO | EntityKind::WE => None,
        }
    }
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EntityKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EntityKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown entity kind {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueLabel {
    pub id: String,
    pub video_id: String,
    pub kind: EntityKind,
    pub caption: String,
    pub interval: TimeInterval,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actor: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quantity: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intent: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub intent_distractors: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group_key: Option<String>,
}

impl TrueLabel {
    /// Key that groups recurrences of the same event for counting.
    pub fn recurrence_key(&self) -> String {
        match &self.group_key {
            Some(k) => format!("key:{k}"),
            None => format!("caption:{}", normalize_caption(&self.caption)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistractorSource {
    /// Text variant of a real label; asserts non-occurrence over its interval.
    Lexical,
    /// Plausible event that never happens anywhere in the video.
    Scene,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistractorLabel {
    pub id: String,
    pub video_id: String,
    pub kind: EntityKind,
    pub caption: String,
    pub subtype: DistractorSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<TimeInterval>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoMeta {
    pub video_id: String,
    pub game: String,
    pub duration_s: f64,
    pub pov_index: u32,
    #[serde(default)]
    pub sync_offset_s: f64,
}

impl VideoMeta {
    pub fn full_span(&self) -> TimeInterval {
        TimeInterval::new(0.0, self.duration_s)
    }

    pub fn to_shared(&self, local: &TimeInterval) -> TimeInterval {
        local.shift(self.sync_offset_s)
    }

    pub fn to_local(&self, shared: &TimeInterval) -> TimeInterval {
        shared.shift(-self.sync_offset_s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationInstance {
    pub instance_id: String,
    pub synced: bool,
    pub videos: Vec<VideoMeta>,
    #[serde(default)]
    pub true_labels: Vec<TrueLabel>,
    #[serde(default)]
    pub distractor_labels: Vec<DistractorLabel>,
}

impl AnnotationInstance {
    pub fn video(&self, video_id: &str) -> Option<&VideoMeta> {
        self.videos.iter().find(|v| v.video_id == video_id)
    }

    /// True labels of one kind on one video, in (start, id) order.
    pub fn track(&self, video_id: &str, kind: EntityKind) -> Vec<&TrueLabel> {
        let mut out: Vec<&TrueLabel> = self
            .true_labels
            .iter()
            .filter(|l| l.video_id == video_id && l.kind == kind)
            .collect();
        out.sort_by(|a, b| {
            a.interval
                .start_s
                .total_cmp(&b.interval.start_s)
                .then_with(|| a.id.cmp(&b.id))
        });
        out
    }

    pub fn true_label(&self, id: &str) -> Option<&TrueLabel> {
        self.true_labels.iter().find(|l| l.id == id)
    }

    pub fn distractor(&self, id: &str) -> Option<&DistractorLabel> {
        self.distractor_labels.iter().find(|d| d.id == id)
    }

    /// Videos ordered by POV index.
    pub fn videos_by_pov(&self) -> Vec<&VideoMeta> {
        let mut v: Vec<&VideoMeta> = self.videos.iter().collect();
        v.sort_by_key(|v| v.pov_index);
        v
    }

    /// True labels of `kind` on `video_id` matching `window` (local time),
    /// sorted by start then id.
    pub fn labels_in_window(
        &self,
        video_id: &str,
        kind: EntityKind,
        window: &TimeInterval,
        min_overlap: f64,
    ) -> Result<Vec<&TrueLabel>, UnknownVideo> {
        if self.video(video_id).is_none() {
            return Err(UnknownVideo(video_id.to_string()));
        }
        Ok(self
            .track(video_id, kind)
            .into_iter()
            .filter(|l| matches_window(&l.interval, window, min_overlap))
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown video id {0:?}")]
pub struct UnknownVideo(pub String);

/// Case-insensitive, whitespace-collapsed caption key.
pub fn normalize_caption(s: &str) -> String {
    s.split_whitespace()
        .map(|w| w.to_lowercase())
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn captions_equal(a: &str, b: &str) -> bool {
    normalize_caption(a) == normalize_caption(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn inst_with(labels: Vec<TrueLabel>) -> AnnotationInstance {
        AnnotationInstance {
            instance_id: "t".into(),
            synced: false,
            videos: vec![VideoMeta {
                video_id: "v".into(),
                game: "g".into(),
                duration_s: 100.0,
                pov_index: 1,
                sync_offset_s: 0.0,
            }],
            true_labels: labels,
            distractor_labels: vec![],
        }
    }

    fn label(id: &str, kind: EntityKind, s: f64, e: f64) -> TrueLabel {
        TrueLabel {
            id: id.into(),
            video_id: "v".into(),
            kind,
            caption: format!("cap {id}"),
            interval: TimeInterval::new(s, e),
            actor: kind.needs_actor().then(|| "enemy".to_string()),
            quantity: None,
            intent: None,
            intent_distractors: vec![],
            group_key: None,
        }
    }

    #[test]
    fn caption_normalization() {
        assert!(captions_equal("Reloads  the Rifle", " reloads the rifle"));
        assert!(!captions_equal("reloads the rifle", "reloads a rifle"));
    }

    #[test]
    fn window_queries() {
        let inst = inst_with(vec![
            label("b", EntityKind::SA, 5.0, 8.0),
            label("a", EntityKind::SA, 1.0, 2.0),
            label("c", EntityKind::SS, 1.0, 2.0),
        ]);
        let all = inst
            .labels_in_window("v", EntityKind::SA, &TimeInterval::new(0.0, 100.0), 0.0)
            .unwrap();
        assert_eq!(all.iter().map(|l| l.id.as_str()).collect::<Vec<_>>(), ["a", "b"]);
        let none = inst
            .labels_in_window("v", EntityKind::SA, &TimeInterval::new(20.0, 30.0), 0.0)
            .unwrap();
        assert!(none.is_empty());
        assert_eq!(
            inst.labels_in_window("nope", EntityKind::SA, &TimeInterval::new(0.0, 1.0), 0.0),
            Err(UnknownVideo("nope".into()))
        );
    }

    proptest! {
        #[test]
        fn window_matches_exhaustive_filter(
            spans in prop::collection::vec((0.0f64..90.0, 0.0f64..6.0, 0usize..6), 20),
            w0 in 0.0f64..90.0, wl in 0.0f64..30.0, min_overlap in 0.0f64..2.0,
        ) {
            let labels: Vec<TrueLabel> = spans.iter().enumerate()
                .map(|(i, (s, l, k))| label(&format!("l{i:02}"), EntityKind::ALL[*k], *s, s + l))
                .collect();
            let inst = inst_with(labels.clone());
            let window = TimeInterval::new(w0, w0 + wl);
            for kind in EntityKind::ALL {
                let got: Vec<&str> = inst.labels_in_window("v", kind, &window, min_overlap).unwrap()
                    .iter().map(|l| l.id.as_str()).collect();
                let mut want: Vec<&TrueLabel> = labels.iter().filter(|l| {
                    l.kind == kind && if l.interval.end_s - l.interval.start_s < 0.2 {
                        let m = (l.interval.start_s + l.interval.end_s) / 2.0;
                        window.start_s <= m && m <= window.end_s
                    } else {
                        let lo = l.interval.start_s.max(window.start_s);
                        let hi = l.interval.end_s.min(window.end_s);
                        lo <= hi && hi - lo >= min_overlap
                    }
                }).collect();
                want.sort_by(|a, b| a.interval.start_s.total_cmp(&b.interval.start_s).then(a.id.cmp(&b.id)));
                let want: Vec<&str> = want.iter().map(|l| l.id.as_str()).collect();
                prop_assert_eq!(got, want);
            }
        }
    }
}
