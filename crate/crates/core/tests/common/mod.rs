//! Brute-force answer checker written against raw labels only. It shares no
//! code with the generator beyond the data types.
#![allow(dead_code)]

use benchforge_core::annotation::{
    synth_instance, AnnotationInstance, DistractorCounts, DistractorSource, EntityKind, SynthParams, TimeInterval,
    TrueLabel, VideoMeta,
};
use benchforge_core::generate::{DistractorSubtype, GenConfig, Provenance, QuestionItem};
use benchforge_core::taxonomy::{AnswerKind, QuestionForm, RefKind};

/// Instances for the soundness and contract suites: three shapes cycled over
/// seeds so every form and distractor subtype shows up.
pub fn suite(n: u64) -> Vec<AnnotationInstance> {
    (0..n)
        .map(|seed| {
            let n_videos = 1 + (seed % 3) as usize;
            let p = match seed % 4 {
                0 | 1 => SynthParams::small(seed, n_videos),
                2 => SynthParams {
                    overlap_bias: 1.0,
                    per_kind_counts: [7, 7, 5, 5, 5, 5],
                    duration_s: 45.0,
                    ..SynthParams::small(seed, n_videos)
                },
                _ => SynthParams {
                    duration_s: 75.0,
                    per_kind_counts: [9, 9, 6, 6, 7, 6],
                    distractor_counts: DistractorCounts {
                        lexical: [3; 6],
                        scene: [1; 6],
                    },
                    recurring_groups: 2,
                    point_rate: 0.15,
                    ..SynthParams::small(seed, n_videos)
                },
            };
            synth_instance(&p).expect("valid synth params")
        })
        .collect()
}

pub fn key(s: &str) -> String {
    s.split_whitespace().map(str::to_lowercase).collect::<Vec<_>>().join(" ")
}

fn closed_hit(a: &TimeInterval, b: &TimeInterval) -> bool {
    a.start_s <= b.end_s && b.start_s <= a.end_s
}

fn common_len(a: &TimeInterval, b: &TimeInterval) -> f64 {
    (a.end_s.min(b.end_s) - a.start_s.max(b.start_s)).max(0.0)
}

/// Clean membership: short labels by midpoint, others by overlap length.
pub fn strict(iv: &TimeInterval, w: &TimeInterval, min_overlap: f64) -> bool {
    if iv.end_s - iv.start_s < 0.2 {
        let m = 0.5 * (iv.start_s + iv.end_s);
        w.start_s <= m && m <= w.end_s
    } else {
        closed_hit(iv, w) && common_len(iv, w) >= min_overlap
    }
}

pub fn separation(a: &TimeInterval, b: &TimeInterval) -> f64 {
    (a.start_s - b.end_s).max(b.start_s - a.end_s)
}

pub fn parse_stamp(s: &str) -> Option<TimeInterval> {
    let inner = s.strip_prefix('[')?.strip_suffix(']')?;
    let (a, b) = inner.split_once(" to ")?;
    let secs = |t: &str| -> Option<f64> {
        let (m, s) = t.split_once(':')?;
        Some(m.parse::<f64>().ok()? * 60.0 + s.parse::<f64>().ok()?)
    };
    Some(TimeInterval::new(secs(a)?, secs(b)?))
}

pub struct Oracle<'a> {
    pub inst: &'a AnnotationInstance,
    pub min_overlap: f64,
    pub eps: f64,
    pub delta: f64,
}

impl<'a> Oracle<'a> {
    pub fn new(inst: &'a AnnotationInstance, cfg: &GenConfig) -> Self {
        Oracle {
            inst,
            min_overlap: cfg.min_overlap_s,
            eps: cfg.temporal_margin_eps_s,
            delta: cfg.order_gap_delta_s,
        }
    }

    fn video(&self, id: &str) -> &'a VideoMeta {
        self.inst.videos.iter().find(|v| v.video_id == id).expect("item video in instance")
    }

    fn labels(&self, video_id: &str, kind: EntityKind) -> Vec<&'a TrueLabel> {
        self.inst
            .true_labels
            .iter()
            .filter(|l| l.video_id == video_id && l.kind == kind)
            .collect()
    }

    pub fn answer_video(&self, item: &QuestionItem) -> &'a VideoMeta {
        let n: usize = item.bindings.get("v2").map_or(1, |v| v.parse().expect("numeric v2"));
        self.video(&item.videos[n - 1].video_id)
    }

    pub fn ref_video(&self, item: &QuestionItem) -> &'a VideoMeta {
        let n: usize = item.bindings.get("v1").map_or(1, |v| v.parse().expect("numeric v1"));
        self.video(&item.videos[n - 1].video_id)
    }

    /// Local window on the answer video.
    pub fn window(&self, item: &QuestionItem) -> TimeInterval {
        let v = self.answer_video(item);
        match item.context_window {
            Some(w) => TimeInterval::new(w.start_s - v.sync_offset_s, w.end_s - v.sync_offset_s),
            None => TimeInterval::new(0.0, v.duration_s),
        }
    }

    fn ans_kind(item: &QuestionItem) -> Option<EntityKind> {
        match item.code.ans_kind {
            AnswerKind::Entity(k) => Some(k),
            AnswerKind::Mix => None,
        }
    }

    fn actor(item: &QuestionItem, kind: EntityKind) -> Option<&str> {
        kind.needs_actor().then(|| item.bindings.get("other").map(String::as_str)).flatten()
    }

    fn touches(&self, vid: &str, kind: EntityKind, caption: &str, w: &TimeInterval) -> bool {
        self.labels(vid, kind)
            .iter()
            .any(|l| key(&l.caption) == key(caption) && closed_hit(&l.interval, w))
    }

    fn cleanly_in(&self, vid: &str, kind: EntityKind, caption: &str, actor: Option<&str>, w: &TimeInterval) -> bool {
        self.labels(vid, kind).iter().any(|l| {
            key(&l.caption) == key(caption)
                && (actor.is_none() || l.actor.as_deref() == actor)
                && strict(&l.interval, w, self.min_overlap)
        })
    }

    /// Empty when the designated answer is the unique correct option.
    pub fn check(&self, item: &QuestionItem) -> Vec<String> {
        let mut errs = Vec::new();
        if item.options.iter().filter(|o| o.is_correct).count() != 1 || !item.options[item.answer_index].is_correct {
            errs.push("answer flag mismatch".into());
        }
        let form = item.code.form;
        match form {
            QuestionForm::Ident | QuestionForm::Exist | QuestionForm::Absent => self.check_window_form(item, &mut errs),
            QuestionForm::Count => self.check_count(item, &mut errs),
            QuestionForm::Intent => self.check_intent(item, &mut errs),
            QuestionForm::Time => self.check_time(item, &mut errs),
            QuestionForm::Order => self.check_order(item, &mut errs),
            QuestionForm::PovId => self.check_pov(item, &mut errs),
        }
        if item.code.ref_kind.is_some() {
            self.check_reference(item, &mut errs);
        }
        errs.into_iter().map(|e| format!("{} {}: {e}", item.code.raw, item.id)).collect()
    }

    fn check_reference(&self, item: &QuestionItem, errs: &mut Vec<String>) {
        let w = item.context_window.expect("referenced items carry a window");
        match item.code.ref_kind {
            Some(RefKind::Timestamp) => {
                let v = self.answer_video(item);
                let local = TimeInterval::new(w.start_s - v.sync_offset_s, w.end_s - v.sync_offset_s);
                let stamp = item.bindings.get("timestamp").map(String::as_str);
                let want = parse_stamp(stamp.unwrap_or(""));
                if want.map(|t| (t.start_s - local.start_s).abs() > 1e-6 || (t.end_s - local.end_s).abs() > 1e-6) != Some(false) {
                    errs.push(format!("window {local:?} is not the stated timestamp {stamp:?}"));
                }
            }
            Some(RefKind::Entity(rk)) => {
                let rv = self.ref_video(item);
                let cap = item.bindings.get("refCaption").cloned().unwrap_or_default();
                let hits: Vec<_> = self
                    .labels(&rv.video_id, rk)
                    .into_iter()
                    .filter(|l| key(&l.caption) == key(&cap))
                    .collect();
                if hits.len() != 1 {
                    errs.push(format!("reference {cap:?} occurs {} times", hits.len()));
                    return;
                }
                let s = hits[0].interval.start_s + rv.sync_offset_s;
                let e = hits[0].interval.end_s + rv.sync_offset_s;
                if (w.start_s - s).abs() > 0.0011 || (w.end_s - e).abs() > 0.0011 {
                    errs.push("window does not follow the reference label".into());
                }
                if rk.needs_actor() {
                    let named = if item.bindings.contains_key("refOther") {
                        item.bindings.get("refOther")
                    } else {
                        item.bindings.get("other")
                    };
                    if named != hits[0].actor.as_ref() {
                        errs.push("reference actor differs from the stem".into());
                    }
                }
            }
            None => {}
        }
    }

    fn check_window_form(&self, item: &QuestionItem, errs: &mut Vec<String>) {
        let kind = Self::ans_kind(item).expect("entity answer");
        let v = self.answer_video(item);
        let w = self.window(item);
        let actor = Self::actor(item, kind);
        match item.code.form {
            QuestionForm::Exist => {
                let cap = item.bindings.get("caption").cloned().unwrap_or_default();
                let yes = item.options[item.answer_index].text == "Yes";
                if yes && !self.cleanly_in(&v.video_id, kind, &cap, actor, &w) {
                    errs.push(format!("Yes but {cap:?} by {actor:?} not in window"));
                }
                if !yes && self.touches(&v.video_id, kind, &cap, &w) {
                    errs.push(format!("No but {cap:?} touches the window"));
                }
            }
            QuestionForm::Ident => {
                let present: Vec<usize> = (0..item.options.len())
                    .filter(|&i| self.touches(&v.video_id, kind, &item.options[i].text, &w))
                    .collect();
                if present != [item.answer_index] {
                    errs.push(format!("options present in window: {present:?}"));
                }
                if !self.cleanly_in(&v.video_id, kind, &item.answer().text, actor, &w) {
                    errs.push("answer not cleanly in window".into());
                }
            }
            _ => {
                let missing: Vec<usize> = (0..item.options.len())
                    .filter(|&i| !self.touches(&v.video_id, kind, &item.options[i].text, &w))
                    .collect();
                if missing != [item.answer_index] {
                    errs.push(format!("options absent from window: {missing:?}"));
                }
                for (i, o) in item.options.iter().enumerate() {
                    if i != item.answer_index && !self.cleanly_in(&v.video_id, kind, &o.text, actor, &w) {
                        errs.push(format!("true option {:?} not cleanly in window", o.text));
                    }
                }
            }
        }
    }

    fn matching(&self, item: &QuestionItem) -> (EntityKind, Vec<&'a TrueLabel>) {
        let kind = Self::ans_kind(item).expect("entity answer");
        let v = self.answer_video(item);
        let cap = item.bindings.get("caption").cloned().unwrap_or_default();
        let actor = Self::actor(item, kind);
        let ls = self
            .labels(&v.video_id, kind)
            .into_iter()
            .filter(|l| key(&l.caption) == key(&cap) && (actor.is_none() || l.actor.as_deref() == actor))
            .collect();
        (kind, ls)
    }

    fn check_count(&self, item: &QuestionItem, errs: &mut Vec<String>) {
        let (kind, ls) = self.matching(item);
        let n: u32 = item.answer().text.parse().expect("numeric count");
        if kind == EntityKind::WO {
            if ls.is_empty() || ls.iter().any(|l| l.quantity != Some(n)) {
                errs.push(format!("quantity is not uniformly {n}"));
            }
        } else {
            if ls.len() as u32 != n {
                errs.push(format!("counted {} occurrences, answer {n}", ls.len()));
            }
            for (i, a) in ls.iter().enumerate() {
                for b in &ls[i + 1..] {
                    if closed_hit(&a.interval, &b.interval) {
                        errs.push("occurrences overlap".into());
                    }
                }
            }
        }
        for (i, o) in item.options.iter().enumerate() {
            if i != item.answer_index && o.text == item.answer().text {
                errs.push("duplicate count option".into());
            }
        }
    }

    fn check_intent(&self, item: &QuestionItem, errs: &mut Vec<String>) {
        let (_, ls) = self.matching(item);
        let want = key(&item.answer().text);
        if ls.is_empty() || ls.iter().any(|l| l.intent.as_deref().map(key) != Some(want.clone())) {
            errs.push("answer is not the labelled intent".into());
        }
        for (i, o) in item.options.iter().enumerate() {
            if i != item.answer_index && key(&o.text) == want {
                errs.push("a wrong option restates the intent".into());
            }
        }
    }

    fn check_time(&self, item: &QuestionItem, errs: &mut Vec<String>) {
        let (kind, ls) = self.matching(item);
        let v = self.answer_video(item);
        let ans = parse_stamp(&item.answer().text).expect("timestamp answer");
        let hit = ls.iter().any(|l| {
            (l.interval.start_s.floor() - ans.start_s).abs() < 1e-9
                && (l.interval.end_s.ceil().max(l.interval.start_s.floor() + 1.0) - ans.end_s).abs() < 1e-9
        });
        if !hit {
            errs.push("answer window is not an occurrence".into());
        }
        let cap = item.bindings.get("caption").cloned().unwrap_or_default();
        let all: Vec<_> = self
            .labels(&v.video_id, kind)
            .into_iter()
            .filter(|l| key(&l.caption) == key(&cap))
            .collect();
        for (i, o) in item.options.iter().enumerate() {
            if i == item.answer_index {
                continue;
            }
            let d = parse_stamp(&o.text).expect("timestamp option");
            if d.start_s < 0.0 || d.end_s > v.duration_s {
                errs.push(format!("decoy {} leaves the video", o.text));
            }
            if closed_hit(&d, &ans) {
                errs.push(format!("decoy {} touches the answer", o.text));
            }
            for l in &all {
                if separation(&d, &l.interval) < self.eps {
                    errs.push(format!("decoy {} within margin of an occurrence", o.text));
                }
            }
        }
    }

    fn check_order(&self, item: &QuestionItem, errs: &mut Vec<String>) {
        let kinds: Vec<EntityKind> = match Self::ans_kind(item) {
            Some(k) => vec![k],
            None => vec![EntityKind::SA, EntityKind::OA, EntityKind::WE],
        };
        let multi = item.code.multi_video;
        let first = |text: &str| -> Option<f64> {
            let (v, cap) = if multi {
                let rest = text.strip_prefix("In Video ")?;
                let (n, cap) = rest.split_once(": ")?;
                let n: usize = n.parse().ok()?;
                (self.video(&item.videos.get(n - 1)?.video_id), cap)
            } else {
                (self.video(&item.videos[0].video_id), text)
            };
            let off = if multi { v.sync_offset_s } else { 0.0 };
            kinds
                .iter()
                .flat_map(|&k| self.labels(&v.video_id, k))
                .filter(|l| key(&l.caption) == key(cap))
                .map(|l| l.interval.start_s + off)
                .min_by(f64::total_cmp)
        };
        let starts: Vec<Option<f64>> = item.options.iter().map(|o| first(&o.text)).collect();
        let Some(a) = starts[item.answer_index] else {
            errs.push("answer event not found".into());
            return;
        };
        for (i, s) in starts.iter().enumerate() {
            match s {
                None => errs.push(format!("option {i} not found")),
                Some(s) if i != item.answer_index && *s < a + self.delta - 1e-9 => {
                    errs.push(format!("option {i} starts at {s}, answer at {a}"))
                }
                _ => {}
            }
        }
    }

    fn check_pov(&self, item: &QuestionItem, errs: &mut Vec<String>) {
        let kind = Self::ans_kind(item).expect("entity answer");
        let cap = item.bindings.get("caption").cloned().unwrap_or_default();
        let holders: Vec<usize> = item
            .videos
            .iter()
            .enumerate()
            .filter(|(_, v)| {
                self.labels(&v.video_id, kind)
                    .iter()
                    .any(|l| key(&l.caption) == key(&cap))
            })
            .map(|(i, _)| i)
            .collect();
        if holders != [item.answer_index] {
            errs.push(format!("caption held by videos {holders:?}"));
        }
    }

    /// Distractor and answer contracts for window forms, keyed by the
    /// subtype that produced each wrong option.
    pub fn contracts(&self, item: &QuestionItem) -> Vec<String> {
        let mut errs = Vec::new();
        let form = item.code.form;
        if !matches!(form, QuestionForm::Ident | QuestionForm::Exist | QuestionForm::Absent) {
            return errs;
        }
        let kind = Self::ans_kind(item).expect("entity answer");
        let v = self.answer_video(item);
        let w = self.window(item);
        let shared = item.context_window;
        // (caption, provenance, source ids) for every distractor-driven option
        let mut driven: Vec<(String, Provenance, Vec<String>)> = Vec::new();
        for o in &item.options {
            match (form, o.provenance) {
                (QuestionForm::Exist, p @ Provenance::Distractor(_)) if o.text == "No" && o.is_correct => driven.push((
                    item.bindings.get("caption").cloned().unwrap_or_default(),
                    p,
                    o.source_ids.clone(),
                )),
                (QuestionForm::Exist, _) => {}
                (_, p @ Provenance::Distractor(_)) => driven.push((o.text.clone(), p, o.source_ids.clone())),
                (_, Provenance::TrueLabel) => {
                    let l = o.source_ids.first().and_then(|id| self.inst.true_label(id));
                    match l {
                        Some(l) if l.video_id == v.video_id && strict(&l.interval, &w, self.min_overlap) => {
                            if l.interval.end_s - l.interval.start_s >= 0.2 && common_len(&l.interval, &w) < self.min_overlap {
                                errs.push("true option overlap below minimum".into());
                            }
                        }
                        _ => errs.push(format!("true option {:?} lacks an in-window source", o.text)),
                    }
                }
                _ => errs.push(format!("unexpected provenance {:?}", o.provenance)),
            }
        }
        for (cap, p, ids) in driven {
            let Provenance::Distractor(sub) = p else { unreachable!() };
            let tag = format!("{} {} {:?}", sub.as_str(), item.id, cap);
            if self.touches(&v.video_id, kind, &cap, &w) {
                errs.push(format!("{tag}: collides with the answer track"));
            }
            let src = ids.first().map(String::as_str).unwrap_or("");
            match sub {
                DistractorSubtype::Lexical | DistractorSubtype::Scene => {
                    let want = if sub == DistractorSubtype::Lexical {
                        DistractorSource::Lexical
                    } else {
                        DistractorSource::Scene
                    };
                    match self.inst.distractor(src) {
                        Some(d) if d.video_id == v.video_id && d.kind == kind && d.subtype == want && key(&d.caption) == key(&cap) => {}
                        _ => errs.push(format!("{tag}: bad source {src}")),
                    }
                }
                DistractorSubtype::Temporal => match self.inst.true_label(src) {
                    Some(l) if l.video_id == v.video_id && l.kind == kind && key(&l.caption) == key(&cap) => {
                        if separation(&l.interval, &w) < self.eps {
                            errs.push(format!("{tag}: only {} s from the window", separation(&l.interval, &w)));
                        }
                    }
                    _ => errs.push(format!("{tag}: bad source {src}")),
                },
                DistractorSubtype::Role => match self.inst.true_label(src) {
                    Some(l) if l.video_id == v.video_id && Some(l.kind) == kind.role_swap() && key(&l.caption) == key(&cap) => {
                        if !strict(&l.interval, &w, self.min_overlap) {
                            errs.push(format!("{tag}: swapped label outside the window"));
                        }
                    }
                    _ => errs.push(format!("{tag}: bad source {src}")),
                },
                DistractorSubtype::CrossVideo => match self.inst.true_label(src) {
                    Some(l) if l.video_id != v.video_id && l.kind == kind && key(&l.caption) == key(&cap) => {
                        if self.labels(&v.video_id, kind).iter().any(|a| key(&a.caption) == key(&cap)) {
                            errs.push(format!("{tag}: also on the answer video"));
                        }
                        let other = self.video(&l.video_id);
                        let sw = shared.expect("cross-video items are windowed");
                        let local = TimeInterval::new(sw.start_s - other.sync_offset_s, sw.end_s - other.sync_offset_s);
                        if !strict(&l.interval, &local, self.min_overlap) {
                            errs.push(format!("{tag}: source not concurrent"));
                        }
                    }
                    _ => errs.push(format!("{tag}: bad source {src}")),
                },
                _ => errs.push(format!("{tag}: unexpected subtype")),
            }
        }
        errs
    }
}
