use super::{DistractorSubtype, GenConfig};
use crate::annotation::{
    captions_equal, matches_window, normalize_caption, AnnotationInstance, DistractorSource, EntityKind, TimeInterval,
    TrueLabel, VideoMeta,
};
use crate::taxonomy::{QuestionCode, RefKind};
use std::collections::{BTreeMap, HashSet};

fn round_ms(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

/// Map a reference span onto the shared clock, optionally widened to whole
/// seconds first (timestamp-referring codes). Bounds are kept on a
/// millisecond grid so they survive canonical serialization unchanged.
pub fn build_context_window(interval: &TimeInterval, video: &VideoMeta, round_outward: bool) -> TimeInterval {
    let local = if round_outward { interval.round_outward() } else { *interval };
    let shared = video.to_shared(&local);
    TimeInterval::new(round_ms(shared.start_s), round_ms(shared.end_s))
}

/// Where a question looks: the answer video and a window on its clock.
pub(crate) struct Ctx<'a> {
    pub video: &'a VideoMeta,
    /// Window on the answer video's local clock, derived from `shared`.
    pub local: TimeInterval,
    pub shared: Option<TimeInterval>,
    pub reference: Option<&'a TrueLabel>,
    pub ref_video: Option<&'a VideoMeta>,
    /// Rendered span for timestamp codes, local time.
    pub timestamp: Option<TimeInterval>,
    pub multi: bool,
    pub key: String,
}

impl Ctx<'_> {
    pub fn windowed(&self) -> bool {
        self.shared.is_some()
    }
}

fn windowed_ctx<'a>(
    video: &'a VideoMeta,
    shared: TimeInterval,
    reference: Option<&'a TrueLabel>,
    ref_video: Option<&'a VideoMeta>,
    timestamp: Option<TimeInterval>,
    multi: bool,
    key: String,
) -> Ctx<'a> {
    Ctx {
        video,
        local: video.to_local(&shared),
        shared: Some(shared),
        reference,
        ref_video,
        timestamp,
        multi,
        key,
    }
}

/// A reference label is ambiguous when its caption recurs on its track.
fn ambiguous_ref(inst: &AnnotationInstance, r: &TrueLabel) -> bool {
    inst.track(&r.video_id, r.kind)
        .iter()
        .any(|o| o.id != r.id && captions_equal(&o.caption, &r.caption))
}

/// Contexts for one code; `Err` marks a context dropped before any
/// combination could be formed.
pub(crate) fn contexts<'a>(inst: &'a AnnotationInstance, code: &QuestionCode) -> Vec<Result<Ctx<'a>, &'static str>> {
    let ans = code.ans_kind.entity();
    let mut out = Vec::new();
    match code.ref_kind {
        None => {
            for v in inst.videos_by_pov() {
                out.push(Ok(Ctx {
                    video: v,
                    local: v.full_span(),
                    shared: None,
                    reference: None,
                    ref_video: None,
                    timestamp: None,
                    multi: false,
                    key: v.video_id.clone(),
                }));
            }
        }
        Some(RefKind::Timestamp) => {
            let Some(ans) = ans else { return out };
            for v in inst.videos_by_pov() {
                let mut seen = HashSet::new();
                for l in inst.track(&v.video_id, ans) {
                    let w = l.interval.round_outward();
                    if !seen.insert((w.start_s.to_bits(), w.end_s.to_bits())) {
                        continue;
                    }
                    let shared = build_context_window(&l.interval, v, true);
                    let key = format!("{}@{}-{}", v.video_id, w.start_s, w.end_s);
                    out.push(Ok(windowed_ctx(v, shared, None, None, Some(w), false, key)));
                }
            }
        }
        Some(RefKind::Entity(rk)) if !code.multi_video => {
            for v in inst.videos_by_pov() {
                for r in inst.track(&v.video_id, rk) {
                    if ambiguous_ref(inst, r) {
                        out.push(Err("ambiguous_reference"));
                        continue;
                    }
                    let shared = build_context_window(&r.interval, v, false);
                    out.push(Ok(windowed_ctx(v, shared, Some(r), Some(v), None, false, r.id.clone())));
                }
            }
        }
        Some(RefKind::Entity(rk)) => {
            if !inst.synced || inst.videos.len() < 2 {
                return out;
            }
            let videos = inst.videos_by_pov();
            for a in &videos {
                for r in inst.track(&a.video_id, rk) {
                    for b in &videos {
                        if b.video_id == a.video_id {
                            continue;
                        }
                        if ambiguous_ref(inst, r) {
                            out.push(Err("ambiguous_reference"));
                            continue;
                        }
                        let shared = build_context_window(&r.interval, a, false);
                        let key = format!("{}>{}", r.id, b.video_id);
                        out.push(Ok(windowed_ctx(b, shared, Some(r), Some(a), None, true, key)));
                    }
                }
            }
        }
    }
    out
}

/// A same-kind true label with this caption touches the window.
pub(crate) fn occurs(inst: &AnnotationInstance, video_id: &str, kind: EntityKind, caption: &str, window: &TimeInterval) -> bool {
    inst.true_labels.iter().any(|l| {
        l.video_id == video_id && l.kind == kind && captions_equal(&l.caption, caption) && l.interval.intersects(window)
    })
}

/// Answer candidates: labels of `kind` matching the window, one per
/// (caption, actor), in track order.
pub(crate) fn candidates<'a>(inst: &'a AnnotationInstance, ctx: &Ctx, kind: EntityKind, cfg: &GenConfig) -> Vec<&'a TrueLabel> {
    let mut seen = HashSet::new();
    inst.track(&ctx.video.video_id, kind)
        .into_iter()
        .filter(|l| matches_window(&l.interval, &ctx.local, cfg.min_overlap_s))
        .filter(|l| seen.insert((normalize_caption(&l.caption), l.actor.clone())))
        .collect()
}

/// A distractor option drawn from a label pool.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub text: String,
    pub source_ids: Vec<String>,
    pub actor: Option<String>,
    pub subtype: DistractorSubtype,
}

pub(crate) fn applicable(ctx: &Ctx, kind: EntityKind, subtype: DistractorSubtype) -> bool {
    match subtype {
        DistractorSubtype::Lexical | DistractorSubtype::Scene => true,
        DistractorSubtype::Temporal => ctx.windowed(),
        DistractorSubtype::Role => ctx.windowed() && kind.role_swap().is_some(),
        DistractorSubtype::CrossVideo => ctx.multi,
        _ => false,
    }
}

/// Eligible wrong options of one subtype for answers of `kind` in a
/// context, one per caption, sorted by caption key then source id.
pub(crate) fn pool(
    inst: &AnnotationInstance,
    ctx: &Ctx,
    kind: EntityKind,
    subtype: DistractorSubtype,
    cfg: &GenConfig,
) -> Vec<Candidate> {
    if !applicable(ctx, kind, subtype) {
        return Vec::new();
    }
    let vid = ctx.video.video_id.as_str();
    let absent = |caption: &str| !occurs(inst, vid, kind, caption, &ctx.local);
    let mut raw: Vec<Candidate> = Vec::new();
    match subtype {
        DistractorSubtype::Lexical | DistractorSubtype::Scene => {
            let want = if subtype == DistractorSubtype::Lexical {
                DistractorSource::Lexical
            } else {
                DistractorSource::Scene
            };
            for d in &inst.distractor_labels {
                if d.video_id != vid || d.kind != kind || d.subtype != want || !absent(&d.caption) {
                    continue;
                }
                if let Some(iv) = &d.interval {
                    if !matches_window(iv, &ctx.local, cfg.min_overlap_s) {
                        continue;
                    }
                }
                let actor = d
                    .source_label
                    .as_deref()
                    .and_then(|s| inst.true_label(s))
                    .and_then(|l| l.actor.clone());
                raw.push(Candidate {
                    text: d.caption.clone(),
                    source_ids: vec![d.id.clone()],
                    actor,
                    subtype,
                });
            }
        }
        DistractorSubtype::Temporal => {
            for l in inst.track(vid, kind) {
                if l.interval.gap(&ctx.local) >= cfg.temporal_margin_eps_s && absent(&l.caption) {
                    raw.push(label_candidate(l, subtype));
                }
            }
        }
        DistractorSubtype::Role => {
            let swapped = kind.role_swap().expect("checked by applicable");
            for l in inst.track(vid, swapped) {
                if matches_window(&l.interval, &ctx.local, cfg.min_overlap_s) && absent(&l.caption) {
                    raw.push(label_candidate(l, subtype));
                }
            }
        }
        DistractorSubtype::CrossVideo => {
            let shared = ctx.shared.expect("multi-video contexts are windowed");
            let answer_track = inst.track(vid, kind);
            for w in inst.videos_by_pov() {
                if w.video_id == vid {
                    continue;
                }
                let local = w.to_local(&shared);
                for l in inst.track(&w.video_id, kind) {
                    if matches_window(&l.interval, &local, cfg.min_overlap_s)
                        && !answer_track.iter().any(|a| captions_equal(&a.caption, &l.caption))
                    {
                        raw.push(label_candidate(l, subtype));
                    }
                }
            }
        }
        _ => {}
    }
    dedupe(raw)
}

fn label_candidate(l: &TrueLabel, subtype: DistractorSubtype) -> Candidate {
    Candidate {
        text: l.caption.clone(),
        source_ids: vec![l.id.clone()],
        actor: l.actor.clone(),
        subtype,
    }
}

fn dedupe(raw: Vec<Candidate>) -> Vec<Candidate> {
    let mut by_key: BTreeMap<(String, String), Candidate> = BTreeMap::new();
    for c in raw {
        let key = (normalize_caption(&c.text), c.source_ids.join(","));
        by_key.entry(key).or_insert(c);
    }
    let mut seen = HashSet::new();
    by_key
        .into_values()
        .filter(|c| seen.insert(normalize_caption(&c.text)))
        .collect()
}

/// Union of the pools named by `mix`, in mix order; a caption keeps the
/// first subtype that admits it.
pub(crate) fn mixed_pool(
    inst: &AnnotationInstance,
    ctx: &Ctx,
    kind: EntityKind,
    mix: &[DistractorSubtype],
    cfg: &GenConfig,
) -> Vec<Candidate> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for &s in mix {
        for c in pool(inst, ctx, kind, s, cfg) {
            if seen.insert(normalize_caption(&c.text)) {
                out.push(c);
            }
        }
    }
    out
}

/// Public view of a pool for one subtype, for audits and tests.
pub fn eligible_pool(
    inst: &AnnotationInstance,
    code: &QuestionCode,
    context_key: &str,
    subtype: DistractorSubtype,
    cfg: &GenConfig,
) -> Option<Vec<Candidate>> {
    let kind = code.ans_kind.entity()?;
    contexts(inst, code)
        .into_iter()
        .flatten()
        .find(|c| c.key == context_key)
        .map(|ctx| pool(inst, &ctx, kind, subtype, cfg))
}

/// Most frequent actor on a track, ties broken alphabetically.
pub(crate) fn fallback_actor(inst: &AnnotationInstance, video_id: &str, kind: EntityKind) -> Option<String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for l in inst.track(video_id, kind) {
        if let Some(a) = &l.actor {
            *counts.entry(a.as_str()).or_default() += 1;
        }
    }
    let best = counts.values().copied().max()?;
    counts.into_iter().find(|(_, n)| *n == best).map(|(a, _)| a.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn video(offset: f64) -> VideoMeta {
        VideoMeta {
            video_id: "v".into(),
            game: "g".into(),
            duration_s: 60.0,
            pov_index: 1,
            sync_offset_s: offset,
        }
    }

    #[test]
    fn window_shift_and_rounding() {
        let r = TimeInterval::new(3.2, 5.8);
        assert_eq!(build_context_window(&r, &video(0.0), false), r);
        assert_eq!(
            build_context_window(&TimeInterval::new(3.0, 5.0), &video(10.0), false),
            TimeInterval::new(13.0, 15.0)
        );
        assert_eq!(build_context_window(&r, &video(0.0), true), TimeInterval::new(3.0, 6.0));
    }

    #[test]
    fn temporal_margin_rule() {
        // gap of 3 s passes, gap of 0.5 s fails, with eps = 1
        let w = TimeInterval::new(0.0, 2.0);
        assert!(TimeInterval::new(5.0, 8.0).gap(&w) >= 1.0);
        assert!(TimeInterval::new(2.5, 4.0).gap(&w) < 1.0);
    }
}
