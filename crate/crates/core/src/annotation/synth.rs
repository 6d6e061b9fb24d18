//! Seeded synthetic instances for tests, demos and calibration. Output is
//! always valid and depends only on the parameters.

use super::{
    AnnotationInstance, DistractorLabel, DistractorSource, EntityKind, TimeInterval, TrueLabel, VideoMeta,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Per-kind label counts of the released gameplay corpus, in
/// `EntityKind::ALL` order (SA, SS, OA, OS, WO, WE).
pub const CORPUS_KIND_COUNTS: [usize; 6] = [658, 729, 160, 190, 555, 417];

const MIN_LABEL_S: f64 = 0.25;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DistractorCounts {
    pub lexical: [usize; 6],
    pub scene: [usize; 6],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub instance_id: String,
    pub game: String,
    pub n_videos: usize,
    pub duration_s: f64,
    /// True labels per video, indexed like `EntityKind::ALL`.
    pub per_kind_counts: [usize; 6],
    /// Distractors per video.
    pub distractor_counts: DistractorCounts,
    /// 0 gives short labels with little cross-track overlap, 1 gives labels
    /// that fill most of their slot.
    pub overlap_bias: f64,
    /// Caption pairs that recur (SA, OA, WE tracks) to back count questions.
    pub recurring_groups: usize,
    /// World-event captions repeated on every video of a synced set.
    pub shared_captions: usize,
    pub intent_rate: f64,
    pub quantity_rate: f64,
    pub point_rate: f64,
    pub seed: u64,
}

impl SynthParams {
    /// A compact instance that exercises every question form.
    pub fn small(seed: u64, n_videos: usize) -> Self {
        Self {
            instance_id: format!("synth-{seed}"),
            game: "Synthetic".into(),
            n_videos,
            duration_s: 40.0,
            per_kind_counts: [4, 4, 3, 3, 3, 3],
            distractor_counts: DistractorCounts {
                lexical: [2; 6],
                scene: [2; 6],
            },
            overlap_bias: 0.5,
            recurring_groups: 1,
            shared_captions: 1,
            intent_rate: 0.5,
            quantity_rate: 0.5,
            point_rate: 0.05,
            seed,
        }
    }

    /// Counts chosen so the instance has density `rho`, split across kinds
    /// in the corpus proportions by largest remainder.
    pub fn with_density(rho: f64, duration_s: f64, n_videos: usize, seed: u64) -> Self {
        let per_video = (rho * duration_s).round().max(0.0) as usize;
        Self {
            per_kind_counts: split_by_weights(per_video, &CORPUS_KIND_COUNTS),
            distractor_counts: DistractorCounts::default(),
            recurring_groups: 0,
            shared_captions: 0,
            duration_s,
            ..Self::small(seed, n_videos)
        }
    }
}

fn split_by_weights(total: usize, weights: &[usize; 6]) -> [usize; 6] {
    let wsum: usize = weights.iter().sum();
    let mut out = [0usize; 6];
    let mut rems: Vec<(usize, usize)> = Vec::new();
    let mut assigned = 0;
    for (i, w) in weights.iter().enumerate() {
        let exact = total * w;
        out[i] = exact / wsum;
        assigned += out[i];
        rems.push((exact % wsum, i));
    }
    rems.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for (_, i) in rems.into_iter().take(total - assigned) {
        out[i] += 1;
    }
    out
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthError {
    #[error("duration must be positive and finite, got {0}")]
    NonPositiveDuration(f64),
    #[error("at least one video is required")]
    NoVideos,
    #[error("{count} {kind} labels do not fit in {duration_s} s without overlap")]
    Infeasible {
        kind: EntityKind,
        count: usize,
        duration_s: f64,
    },
    #[error("parameter {0} must lie in [0, 1]")]
    OutOfRange(&'static str),
}

fn phrase(kind: EntityKind) -> &'static str {
    match kind {
        EntityKind::SA => "performs action",
        EntityKind::SS => "has status",
        EntityKind::OA => "makes move",
        EntityKind::OS => "shows condition",
        EntityKind::WO => "object",
        EntityKind::WE => "event",
    }
}

fn ceil_ms(x: f64) -> f64 {
    (x * 1000.0).ceil() / 1000.0
}

fn floor_ms(x: f64) -> f64 {
    (x * 1000.0).floor() / 1000.0
}

fn round_ms(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

pub fn synth_instance(p: &SynthParams) -> Result<AnnotationInstance, SynthError> {
    if !(p.duration_s.is_finite() && p.duration_s > 0.0) {
        return Err(SynthError::NonPositiveDuration(p.duration_s));
    }
    if p.n_videos == 0 {
        return Err(SynthError::NoVideos);
    }
    for (name, v) in [
        ("overlap_bias", p.overlap_bias),
        ("intent_rate", p.intent_rate),
        ("quantity_rate", p.quantity_rate),
        ("point_rate", p.point_rate),
    ] {
        if !(0.0..=1.0).contains(&v) {
            return Err(SynthError::OutOfRange(name));
        }
    }
    for (i, &count) in p.per_kind_counts.iter().enumerate() {
        if count as f64 * MIN_LABEL_S > p.duration_s {
            return Err(SynthError::Infeasible {
                kind: EntityKind::ALL[i],
                count,
                duration_s: p.duration_s,
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let duration = floor_ms(p.duration_s);
    let mut inst = AnnotationInstance {
        instance_id: p.instance_id.clone(),
        synced: p.n_videos > 1,
        videos: Vec::new(),
        true_labels: Vec::new(),
        distractor_labels: Vec::new(),
    };

    for v in 0..p.n_videos {
        let pov = v as u32 + 1;
        let video_id = format!("{}-pov{pov}", p.instance_id);
        let offset = if v == 0 { 0.0 } else { round_ms(rng.gen_range(0.0..5.0)) };
        inst.videos.push(VideoMeta {
            video_id: video_id.clone(),
            game: p.game.clone(),
            duration_s: duration,
            pov_index: pov,
            sync_offset_s: offset,
        });

        for (ki, kind) in EntityKind::ALL.into_iter().enumerate() {
            let count = p.per_kind_counts[ki];
            let first_new = inst.true_labels.len();
            let slot = duration / count.max(1) as f64;
            let recurring = matches!(kind, EntityKind::SA | EntityKind::OA | EntityKind::WE);
            for i in 0..count {
                let slot_start = i as f64 * slot;
                let frac = rng.gen_range(0.3..=(0.3 + 0.65 * p.overlap_bias));
                let len = (slot * frac).max(MIN_LABEL_S.min(slot)).min(slot);
                let start = slot_start + rng.gen_range(0.0..=(slot - len));
                let point = rng.gen_bool(p.point_rate);
                let s = ceil_ms(start).min(floor_ms(slot_start + slot));
                let e = if point { s } else { floor_ms(start + len).max(s) };

                let caption_idx = if recurring && i < 2 * p.recurring_groups { (i / 2) * 2 } else { i };
                let shared = kind == EntityKind::WE
                    && p.n_videos > 1
                    && i >= 2 * p.recurring_groups
                    && i < 2 * p.recurring_groups + p.shared_captions;
                let caption = if shared {
                    format!("event shared-{i}")
                } else {
                    format!("{} {pov}-{caption_idx}", phrase(kind))
                };
                let actor = kind
                    .needs_actor()
                    .then(|| ["teammate", "enemy"].choose(&mut rng).expect("non-empty").to_string());
                let quantity = (kind == EntityKind::WO && rng.gen_bool(p.quantity_rate)).then(|| rng.gen_range(1..=6));
                let with_intent = matches!(kind, EntityKind::SA | EntityKind::OA) && rng.gen_bool(p.intent_rate);
                inst.true_labels.push(TrueLabel {
                    id: format!("v{pov}-{kind}-{i:03}"),
                    video_id: video_id.clone(),
                    kind,
                    caption,
                    interval: TimeInterval::new(s, e),
                    actor,
                    quantity,
                    intent: with_intent.then(|| format!("to reach goal {pov}-{i}")),
                    intent_distractors: if with_intent {
                        (0..3).map(|j| format!("to pursue aim {pov}-{i}-{j}")).collect()
                    } else {
                        Vec::new()
                    },
                    group_key: None,
                });
            }

            let sources: Vec<(String, TimeInterval)> = inst.true_labels[first_new..]
                .iter()
                .map(|l| (l.id.clone(), l.interval))
                .collect();
            for j in 0..p.distractor_counts.lexical[ki] {
                let (source_label, interval) = match sources.choose(&mut rng) {
                    Some((id, iv)) => (Some(id.clone()), *iv),
                    None => {
                        let s = round_ms(rng.gen_range(0.0..(duration - MIN_LABEL_S).max(0.0)));
                        (None, TimeInterval::new(s, floor_ms((s + 2.0).min(duration))))
                    }
                };
                inst.distractor_labels.push(DistractorLabel {
                    id: format!("v{pov}-{kind}-lex-{j:02}"),
                    video_id: video_id.clone(),
                    kind,
                    caption: format!("{} {pov}-{j} altered", phrase(kind)),
                    subtype: DistractorSource::Lexical,
                    interval: Some(interval),
                    source_label,
                });
            }
            for j in 0..p.distractor_counts.scene[ki] {
                inst.distractor_labels.push(DistractorLabel {
                    id: format!("v{pov}-{kind}-scn-{j:02}"),
                    video_id: video_id.clone(),
                    kind,
                    caption: format!("{} {pov}-{j} unseen", phrase(kind)),
                    subtype: DistractorSource::Scene,
                    interval: None,
                    source_label: None,
                });
            }
        }
    }
    Ok(inst)
}
