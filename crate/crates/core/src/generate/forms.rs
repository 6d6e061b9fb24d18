use super::context::{candidates, contexts, fallback_actor, mixed_pool, pool, Candidate, Ctx};
use super::{DistractorSubtype, GenConfig, OptionEntry, Outcome, Provenance, QuestionItem, VideoRef};
use crate::annotation::{captions_equal, normalize_caption, AnnotationInstance, EntityKind, TimeInterval, TrueLabel};
use crate::generate::build_context_window;
use crate::rng::{digest_hex, stream};
use crate::taxonomy::{AnswerKind, QuestionCode, QuestionForm, StemSlots, TemplateRegistry};
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, HashSet};

pub(crate) fn run_code(
    inst: &AnnotationInstance,
    code: &QuestionCode,
    cfg: &GenConfig,
    registry: &TemplateRegistry,
) -> Vec<Outcome> {
    let g = Gen {
        inst,
        code,
        cfg,
        registry,
    };
    match code.form {
        QuestionForm::Ident => g.ident(),
        QuestionForm::Absent => g.absent(),
        QuestionForm::Exist => g.exist(),
        QuestionForm::Count => g.count(),
        QuestionForm::Intent => g.intent(),
        QuestionForm::Time => g.time(),
        QuestionForm::Order => g.order(),
        QuestionForm::PovId => g.pov_id(),
    }
}

struct Draft {
    videos: Vec<VideoRef>,
    context_window: Option<TimeInterval>,
    slots: StemSlots,
    options: Vec<OptionEntry>,
    answer_index: usize,
    subtype: Option<Provenance>,
    combo: String,
}

struct Gen<'a> {
    inst: &'a AnnotationInstance,
    code: &'a QuestionCode,
    cfg: &'a GenConfig,
    registry: &'a TemplateRegistry,
}

fn option(text: &str, is_correct: bool, provenance: Provenance, source_ids: Vec<String>) -> OptionEntry {
    OptionEntry {
        text: text.to_string(),
        is_correct,
        provenance,
        source_ids,
    }
}

fn wrong_from(c: &Candidate) -> OptionEntry {
    option(&c.text, false, Provenance::Distractor(c.subtype), c.source_ids.clone())
}

/// Shuffle the correct option in among the wrong ones.
fn shuffled(correct: OptionEntry, wrong: Vec<OptionEntry>, rng: &mut ChaCha8Rng) -> (Vec<OptionEntry>, usize) {
    let mut options = Vec::with_capacity(wrong.len() + 1);
    options.push(correct);
    options.extend(wrong);
    options.shuffle(rng);
    let idx = options.iter().position(|o| o.is_correct).expect("one correct option");
    (options, idx)
}

/// Distractor counts in preference order: nearest neighbours first, never
/// below one.
pub(crate) fn count_distractors(c: u32, n: usize) -> Vec<u32> {
    let c = c as i64;
    let mut prefs = vec![c - 1, c + 1, c - 2, c + 2, c + 3];
    prefs.extend((4..).map(|k| c + k).take(n));
    prefs.into_iter().filter(|&x| x >= 1).take(n).map(|x| x as u32).collect()
}

impl<'a> Gen<'a> {
    fn ans(&self) -> EntityKind {
        self.code.ans_kind.entity().expect("entity answer kind")
    }

    fn rng(&self, combo: &str) -> ChaCha8Rng {
        stream(self.cfg.seed, &[&self.inst.instance_id, &self.code.raw, combo])
    }

    fn number_of(&self, video_id: &str) -> u32 {
        self.inst
            .videos_by_pov()
            .iter()
            .position(|v| v.video_id == video_id)
            .map(|p| p as u32 + 1)
            .unwrap_or(0)
    }

    fn all_videos(&self) -> Vec<VideoRef> {
        self.inst
            .videos_by_pov()
            .into_iter()
            .enumerate()
            .map(|(i, v)| VideoRef::from_meta(v, i as u32 + 1))
            .collect()
    }

    fn ctx_videos(&self, ctx: &Ctx) -> Vec<VideoRef> {
        if ctx.multi {
            self.all_videos()
        } else {
            vec![VideoRef::from_meta(ctx.video, 1)]
        }
    }

    fn slots(&self, ctx: &Ctx, caption: Option<&str>, ans_actor: Option<&str>) -> StemSlots {
        let mut s = StemSlots {
            caption: caption.map(str::to_string),
            timestamp: ctx.timestamp,
            ..Default::default()
        };
        let ans_needs_actor = self.ans().needs_actor();
        if ans_needs_actor {
            s.other = ans_actor.map(str::to_string);
        }
        if let Some(r) = ctx.reference {
            s.ref_caption = Some(r.caption.clone());
            if r.kind.needs_actor() {
                if self.code.multi_video || ans_needs_actor {
                    s.ref_other = r.actor.clone();
                } else {
                    s.other = r.actor.clone();
                }
            }
        }
        if let (true, Some(a)) = (ctx.multi, ctx.ref_video) {
            s.video_indices = Some((self.number_of(&a.video_id), self.number_of(&ctx.video.video_id)));
        }
        s
    }

    fn finish(&self, d: Draft) -> Outcome {
        let mut seen = HashSet::new();
        if !d.options.iter().all(|o| seen.insert(normalize_caption(&o.text))) {
            return Outcome::Skip("duplicate_option");
        }
        let stem = match self.registry.render_stem(self.code, &d.slots) {
            Ok(s) => s,
            Err(_) => return Outcome::Skip("missing_slot"),
        };
        let subtype = d.subtype.map(|s| s.as_str()).unwrap_or("-");
        let seed = self.cfg.seed.to_string();
        let id = digest_hex(&[&self.inst.instance_id, &self.code.raw, &d.combo, subtype, &seed])[..20].to_string();
        let mut bindings = BTreeMap::new();
        let s = &d.slots;
        for (k, v) in [
            ("caption", s.caption.clone()),
            ("refCaption", s.ref_caption.clone()),
            ("other", s.other.clone()),
            ("refOther", s.ref_other.clone()),
            ("timestamp", s.timestamp.map(|t| t.render_timestamp())),
            ("v1", s.video_indices.map(|v| v.0.to_string())),
            ("v2", s.video_indices.map(|v| v.1.to_string())),
        ] {
            if let Some(v) = v {
                bindings.insert(k.to_string(), v);
            }
        }
        Outcome::Item(Box::new(QuestionItem {
            id,
            instance_id: self.inst.instance_id.clone(),
            code: self.code.clone(),
            videos: d.videos,
            context_window: d.context_window,
            stem,
            options: d.options,
            answer_index: d.answer_index,
            subtype: d.subtype,
            bindings,
            seed_path: format!("{}/{}/{}/{}", self.cfg.seed, self.inst.instance_id, self.code.raw, d.combo),
        }))
    }

    fn ident(&self) -> Vec<Outcome> {
        let kind = self.ans();
        let n = self.cfg.n_wrong();
        let mut out = Vec::new();
        for ctx in contexts(self.inst, self.code) {
            let ctx = match ctx {
                Ok(c) => c,
                Err(r) => {
                    out.push(Outcome::Skip(r));
                    continue;
                }
            };
            let cands = candidates(self.inst, &ctx, kind, self.cfg);
            if cands.is_empty() {
                out.push(Outcome::Skip("no_answer"));
                continue;
            }
            let pool = mixed_pool(self.inst, &ctx, kind, self.cfg.mix(QuestionForm::Ident), self.cfg);
            for a in cands {
                let combo = format!("{}|{}", ctx.key, a.id);
                if pool.len() < n {
                    out.push(Outcome::Skip("insufficient_distractors"));
                    continue;
                }
                let mut rng = self.rng(&combo);
                let wrong: Vec<OptionEntry> = pool.choose_multiple(&mut rng, n).map(wrong_from).collect();
                let correct = option(&a.caption, true, Provenance::TrueLabel, vec![a.id.clone()]);
                let (options, answer_index) = shuffled(correct, wrong, &mut rng);
                out.push(self.finish(Draft {
                    videos: self.ctx_videos(&ctx),
                    context_window: ctx.shared,
                    slots: self.slots(&ctx, None, a.actor.as_deref()),
                    options,
                    answer_index,
                    subtype: None,
                    combo,
                }));
            }
        }
        out
    }

    fn absent(&self) -> Vec<Outcome> {
        let kind = self.ans();
        let n = self.cfg.n_wrong();
        let mut out = Vec::new();
        for ctx in contexts(self.inst, self.code) {
            let ctx = match ctx {
                Ok(c) => c,
                Err(r) => {
                    out.push(Outcome::Skip(r));
                    continue;
                }
            };
            let cands = candidates(self.inst, &ctx, kind, self.cfg);
            if cands.is_empty() {
                out.push(Outcome::Skip("no_answer"));
                continue;
            }
            // True options for agent tracks all belong to the agent the stem names.
            let mut groups: BTreeMap<Option<String>, Vec<&TrueLabel>> = BTreeMap::new();
            for c in cands {
                groups.entry(c.actor.clone()).or_default().push(c);
            }
            let pool = mixed_pool(self.inst, &ctx, kind, self.cfg.mix(QuestionForm::Absent), self.cfg);
            for (actor, trues) in &groups {
                if pool.is_empty() {
                    out.push(Outcome::Skip("no_distractor"));
                    continue;
                }
                for d in &pool {
                    let combo = format!(
                        "{}|{}|{}",
                        ctx.key,
                        actor.as_deref().unwrap_or("-"),
                        d.source_ids.join(",")
                    );
                    if trues.len() < n {
                        out.push(Outcome::Skip("insufficient_true_options"));
                        continue;
                    }
                    let mut rng = self.rng(&combo);
                    let wrong: Vec<OptionEntry> = trues
                        .choose_multiple(&mut rng, n)
                        .map(|l| option(&l.caption, false, Provenance::TrueLabel, vec![l.id.clone()]))
                        .collect();
                    let correct = option(&d.text, true, Provenance::Distractor(d.subtype), d.source_ids.clone());
                    let (options, answer_index) = shuffled(correct, wrong, &mut rng);
                    out.push(self.finish(Draft {
                        videos: self.ctx_videos(&ctx),
                        context_window: ctx.shared,
                        slots: self.slots(&ctx, None, actor.as_deref()),
                        options,
                        answer_index,
                        subtype: Some(Provenance::Distractor(d.subtype)),
                        combo,
                    }));
                }
            }
        }
        out
    }

    fn exist(&self) -> Vec<Outcome> {
        let kind = self.ans();
        let mut out = Vec::new();
        for ctx in contexts(self.inst, self.code) {
            let ctx = match ctx {
                Ok(c) => c,
                Err(r) => {
                    out.push(Outcome::Skip(r));
                    continue;
                }
            };
            let before = out.len();
            for a in candidates(self.inst, &ctx, kind, self.cfg) {
                let variant = Provenance::TrueLabel;
                out.push(self.finish(Draft {
                    videos: self.ctx_videos(&ctx),
                    context_window: ctx.shared,
                    slots: self.slots(&ctx, Some(&a.caption), a.actor.as_deref()),
                    options: vec![
                        option("Yes", true, variant, vec![a.id.clone()]),
                        option("No", false, variant, Vec::new()),
                    ],
                    answer_index: 0,
                    subtype: Some(variant),
                    combo: format!("{}|true|{}", ctx.key, a.id),
                }));
            }
            for &subtype in self.cfg.mix(QuestionForm::Exist) {
                for d in pool(self.inst, &ctx, kind, subtype, self.cfg) {
                    let actor = if kind.needs_actor() {
                        match d.actor.clone().or_else(|| fallback_actor(self.inst, &ctx.video.video_id, kind)) {
                            Some(a) => Some(a),
                            None => {
                                out.push(Outcome::Skip("no_actor"));
                                continue;
                            }
                        }
                    } else {
                        None
                    };
                    let variant = Provenance::Distractor(subtype);
                    out.push(self.finish(Draft {
                        videos: self.ctx_videos(&ctx),
                        context_window: ctx.shared,
                        slots: self.slots(&ctx, Some(&d.text), actor.as_deref()),
                        options: vec![
                            option("Yes", false, variant, Vec::new()),
                            option("No", true, variant, d.source_ids.clone()),
                        ],
                        answer_index: 1,
                        subtype: Some(variant),
                        combo: format!("{}|{}|{}", ctx.key, subtype.as_str(), d.source_ids.join(",")),
                    }));
                }
            }
            if out.len() == before {
                out.push(Outcome::Skip("empty_context"));
            }
        }
        out
    }

    fn count(&self) -> Vec<Outcome> {
        let kind = self.ans();
        let n = self.cfg.n_wrong();
        let mut out = Vec::new();
        for v in self.inst.videos_by_pov() {
            let track = self.inst.track(&v.video_id, kind);
            let mut found: Vec<(String, u32, Vec<&TrueLabel>)> = Vec::new();
            if kind == EntityKind::WO {
                let mut groups: BTreeMap<String, Vec<&TrueLabel>> = BTreeMap::new();
                for l in &track {
                    groups.entry(normalize_caption(&l.caption)).or_default().push(l);
                }
                for (cap, g) in groups {
                    if g.iter().all(|l| l.quantity.is_none()) {
                        continue;
                    }
                    let combo = format!("{}|{}", v.video_id, cap);
                    let q = g[0].quantity;
                    if g.iter().any(|l| l.quantity != q) {
                        out.push(Outcome::Skip("ambiguous"));
                        continue;
                    }
                    found.push((combo, q.expect("checked"), g));
                }
            } else {
                let mut groups: BTreeMap<(String, Option<String>), Vec<&TrueLabel>> = BTreeMap::new();
                for l in &track {
                    groups.entry((l.recurrence_key(), l.actor.clone())).or_default().push(l);
                }
                for ((key, actor), g) in groups {
                    if g.len() < 2 {
                        continue;
                    }
                    let combo = format!("{}|{}|{}", v.video_id, key, actor.as_deref().unwrap_or("-"));
                    let caption = &g[0].caption;
                    let members: HashSet<&str> = g.iter().map(|l| l.id.as_str()).collect();
                    let stray = track.iter().any(|l| {
                        !members.contains(l.id.as_str()) && l.actor == actor && captions_equal(&l.caption, caption)
                    });
                    if stray || g.iter().any(|l| !captions_equal(&l.caption, caption)) {
                        out.push(Outcome::Skip("ambiguous"));
                        continue;
                    }
                    // `g` is in track order, so neighbours suffice.
                    if g.windows(2).any(|w| w[1].interval.start_s <= w[0].interval.end_s) {
                        out.push(Outcome::Skip("overlapping_segments"));
                        continue;
                    }
                    found.push((combo, g.len() as u32, g));
                }
            }
            for (combo, c, g) in found {
                let mut rng = self.rng(&combo);
                let ids: Vec<String> = g.iter().map(|l| l.id.clone()).collect();
                let wrong = count_distractors(c, n)
                    .into_iter()
                    .map(|x| {
                        option(
                            &x.to_string(),
                            false,
                            Provenance::Distractor(DistractorSubtype::CountOffset),
                            Vec::new(),
                        )
                    })
                    .collect();
                let correct = option(&c.to_string(), true, Provenance::TrueLabel, ids);
                let (options, answer_index) = shuffled(correct, wrong, &mut rng);
                let ctx_slots = StemSlots {
                    caption: Some(g[0].caption.clone()),
                    other: g[0].actor.clone().filter(|_| kind.needs_actor()),
                    ..Default::default()
                };
                out.push(self.finish(Draft {
                    videos: vec![VideoRef::from_meta(v, 1)],
                    context_window: None,
                    slots: ctx_slots,
                    options,
                    answer_index,
                    subtype: None,
                    combo,
                }));
            }
        }
        out
    }

    fn intent(&self) -> Vec<Outcome> {
        let kind = self.ans();
        let n = self.cfg.n_wrong();
        let mut out = Vec::new();
        for v in self.inst.videos_by_pov() {
            let track = self.inst.track(&v.video_id, kind);
            for (i, l) in track.iter().enumerate() {
                let Some(intent) = &l.intent else { continue };
                let same = |o: &&&TrueLabel| o.actor == l.actor && captions_equal(&o.caption, &l.caption);
                let others: Vec<&&TrueLabel> = track.iter().filter(|o| o.id != l.id).filter(same).collect();
                if others
                    .iter()
                    .any(|o| o.intent.as_deref().is_none_or(|x| !captions_equal(x, intent)))
                {
                    out.push(Outcome::Skip("ambiguous"));
                    continue;
                }
                if track[..i].iter().any(|o| same(&o)) {
                    out.push(Outcome::Skip("duplicate"));
                    continue;
                }
                let mut seen = HashSet::from([normalize_caption(intent)]);
                let pool: Vec<&String> = l
                    .intent_distractors
                    .iter()
                    .filter(|d| seen.insert(normalize_caption(d)))
                    .collect();
                if pool.len() < n {
                    out.push(Outcome::Skip("insufficient_intent_distractors"));
                    continue;
                }
                let combo = l.id.clone();
                let mut rng = self.rng(&combo);
                let wrong = pool
                    .choose_multiple(&mut rng, n)
                    .map(|d| option(d, false, Provenance::Intent, vec![l.id.clone()]))
                    .collect();
                let correct = option(intent, true, Provenance::TrueLabel, vec![l.id.clone()]);
                let (options, answer_index) = shuffled(correct, wrong, &mut rng);
                out.push(self.finish(Draft {
                    videos: vec![VideoRef::from_meta(v, 1)],
                    context_window: None,
                    slots: StemSlots {
                        caption: Some(l.caption.clone()),
                        other: l.actor.clone().filter(|_| kind.needs_actor()),
                        ..Default::default()
                    },
                    options,
                    answer_index,
                    subtype: None,
                    combo,
                }));
            }
        }
        out
    }

    fn time(&self) -> Vec<Outcome> {
        let kind = self.ans();
        let n = self.cfg.n_wrong();
        let eps = self.cfg.temporal_margin_eps_s;
        let mut out = Vec::new();
        for v in self.inst.videos_by_pov() {
            let track = self.inst.track(&v.video_id, kind);
            let mut seen = HashSet::new();
            for l in &track {
                let w = l.interval.round_outward();
                let key = (normalize_caption(&l.caption), l.actor.clone(), w.start_s.to_bits(), w.end_s.to_bits());
                if !seen.insert(key) {
                    out.push(Outcome::Skip("duplicate"));
                    continue;
                }
                let occurrences: Vec<TimeInterval> = track
                    .iter()
                    .filter(|o| captions_equal(&o.caption, &l.caption))
                    .map(|o| o.interval)
                    .collect();
                let width = w.len();
                let last = (v.duration_s - width).floor();
                let mut starts: Vec<f64> = Vec::new();
                let mut s = 0.0;
                while s <= last {
                    let d = TimeInterval::new(s, s + width);
                    let clear = occurrences.iter().all(|o| d.gap(o) >= eps);
                    if clear && (d.end_s < w.start_s || d.start_s > w.end_s) {
                        starts.push(s);
                    }
                    s += 1.0;
                }
                let combo = l.id.clone();
                let mut rng = self.rng(&combo);
                starts.shuffle(&mut rng);
                let mut picked: Vec<TimeInterval> = Vec::new();
                for s in starts {
                    if picked.len() == n {
                        break;
                    }
                    let d = TimeInterval::new(s, s + width);
                    if picked.iter().all(|p| d.end_s < p.start_s || d.start_s > p.end_s) {
                        picked.push(d);
                    }
                }
                if picked.len() < n {
                    out.push(Outcome::Skip("no_decoy_room"));
                    continue;
                }
                let wrong = picked
                    .iter()
                    .map(|d| {
                        option(
                            &d.render_timestamp(),
                            false,
                            Provenance::Distractor(DistractorSubtype::TimeWindow),
                            Vec::new(),
                        )
                    })
                    .collect();
                let correct = option(&w.render_timestamp(), true, Provenance::TrueLabel, vec![l.id.clone()]);
                let (options, answer_index) = shuffled(correct, wrong, &mut rng);
                out.push(self.finish(Draft {
                    videos: vec![VideoRef::from_meta(v, 1)],
                    context_window: Some(build_context_window(&l.interval, v, true)),
                    slots: StemSlots {
                        caption: Some(l.caption.clone()),
                        other: l.actor.clone().filter(|_| kind.needs_actor()),
                        ..Default::default()
                    },
                    options,
                    answer_index,
                    subtype: None,
                    combo,
                }));
            }
        }
        out
    }

    fn order(&self) -> Vec<Outcome> {
        let kinds: Vec<EntityKind> = match self.code.ans_kind {
            AnswerKind::Entity(k) => vec![k],
            AnswerKind::Mix => vec![EntityKind::SA, EntityKind::OA, EntityKind::WE],
        };
        let multi = self.code.multi_video;
        if multi && (!self.inst.synced || self.inst.videos.len() < 2) {
            return Vec::new();
        }
        let videos = self.inst.videos_by_pov();
        let groups: Vec<Vec<_>> = if multi {
            vec![videos.clone()]
        } else {
            videos.iter().map(|v| vec![*v]).collect()
        };
        let n = self.cfg.n_wrong();
        let delta = self.cfg.order_gap_delta_s;
        let mut out = Vec::new();
        for group in groups {
            // First occurrence of each caption per video, on the shared clock.
            let mut firsts: BTreeMap<(u32, String), (f64, &TrueLabel)> = BTreeMap::new();
            for v in &group {
                let number = self.number_of(&v.video_id);
                for &k in &kinds {
                    for l in self.inst.track(&v.video_id, k) {
                        let start = v.to_shared(&l.interval).start_s;
                        let e = firsts.entry((number, normalize_caption(&l.caption))).or_insert((start, l));
                        if (start, &l.id) < (e.0, &e.1.id) {
                            *e = (start, l);
                        }
                    }
                }
            }
            let mut events: Vec<(f64, u32, &TrueLabel)> =
                firsts.into_iter().map(|((num, _), (s, l))| (s, num, l)).collect();
            events.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.2.id.cmp(&b.2.id)));
            for (i, &(s0, num0, a)) in events.iter().enumerate() {
                let combo = a.id.clone();
                let mut rng = self.rng(&combo);
                let mut later: Vec<&(f64, u32, &TrueLabel)> =
                    events[i + 1..].iter().filter(|e| e.0 >= s0 + delta).collect();
                later.shuffle(&mut rng);
                let mut picked: Vec<&(f64, u32, &TrueLabel)> = Vec::new();
                if multi {
                    match later.iter().find(|e| e.1 != num0) {
                        Some(e) => picked.push(e),
                        None => {
                            out.push(Outcome::Skip("single_video_events"));
                            continue;
                        }
                    }
                }
                for e in &later {
                    if picked.len() == n {
                        break;
                    }
                    if picked.iter().all(|p| (p.0 - e.0).abs() >= delta && p.2.id != e.2.id) {
                        picked.push(e);
                    }
                }
                if picked.len() < n {
                    out.push(Outcome::Skip("insufficient_events"));
                    continue;
                }
                let text = |num: u32, l: &TrueLabel| {
                    if multi {
                        format!("In Video {num}: {}", l.caption)
                    } else {
                        l.caption.clone()
                    }
                };
                let wrong = picked
                    .iter()
                    .map(|e| {
                        option(
                            &text(e.1, e.2),
                            false,
                            Provenance::Distractor(DistractorSubtype::Permutation),
                            vec![e.2.id.clone()],
                        )
                    })
                    .collect();
                let correct = option(&text(num0, a), true, Provenance::TrueLabel, vec![a.id.clone()]);
                let (options, answer_index) = shuffled(correct, wrong, &mut rng);
                let videos = if multi {
                    self.all_videos()
                } else {
                    vec![VideoRef::from_meta(group[0], 1)]
                };
                out.push(self.finish(Draft {
                    videos,
                    context_window: None,
                    slots: StemSlots::default(),
                    options,
                    answer_index,
                    subtype: None,
                    combo,
                }));
            }
        }
        out
    }

    fn pov_id(&self) -> Vec<Outcome> {
        let kind = self.ans();
        if !self.inst.synced || self.inst.videos.len() < 2 {
            return Vec::new();
        }
        let videos = self.inst.videos_by_pov();
        let mut out = Vec::new();
        for (vi, v) in videos.iter().enumerate() {
            let mut seen = HashSet::new();
            for l in self.inst.track(&v.video_id, kind) {
                let elsewhere = videos.iter().filter(|w| w.video_id != v.video_id).any(|w| {
                    self.inst
                        .track(&w.video_id, kind)
                        .iter()
                        .any(|o| captions_equal(&o.caption, &l.caption))
                });
                if elsewhere {
                    out.push(Outcome::Skip("ambiguous_caption"));
                    continue;
                }
                if !seen.insert((normalize_caption(&l.caption), l.actor.clone())) {
                    out.push(Outcome::Skip("duplicate"));
                    continue;
                }
                let options = (0..videos.len())
                    .map(|k| {
                        if k == vi {
                            option(&format!("Video {}", k + 1), true, Provenance::TrueLabel, vec![l.id.clone()])
                        } else {
                            option(
                                &format!("Video {}", k + 1),
                                false,
                                Provenance::Distractor(DistractorSubtype::VideoIndex),
                                Vec::new(),
                            )
                        }
                    })
                    .collect();
                out.push(self.finish(Draft {
                    videos: self.all_videos(),
                    context_window: None,
                    slots: StemSlots {
                        caption: Some(l.caption.clone()),
                        other: l.actor.clone().filter(|_| kind.needs_actor()),
                        ..Default::default()
                    },
                    options,
                    answer_index: vi,
                    subtype: None,
                    combo: l.id.clone(),
                }));
            }
        }
        out
    }
}
