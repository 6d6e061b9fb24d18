//! Accuracy scoring and faceted breakdowns.

use crate::eval::{Condition, EvalRecord};
use crate::generate::{DistractorSubtype, Provenance, QuestionItem};
use crate::taxonomy::{all_codes, QuestionForm, RefKind, TaskCategory};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReportError {
    #[error("duplicate record for question {question_id} / model {model_id} / condition {condition}")]
    Duplicate {
        question_id: String,
        model_id: String,
        condition: String,
    },
    #[error("record references unknown question {0}")]
    Unresolved(String),
    #[error("unknown facet {0:?}")]
    UnknownFacet(String),
    #[error("tabular report line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Facet {
    Code,
    Category,
    Level,
    Entity,
    Game,
    DistractorSubtype,
    VideoLengthBucket,
    NVideos,
    Condition,
}

impl Facet {
    pub const ALL: [Facet; 9] = [
        Facet::Code,
        Facet::Category,
        Facet::Level,
        Facet::Entity,
        Facet::Game,
        Facet::DistractorSubtype,
        Facet::VideoLengthBucket,
        Facet::NVideos,
        Facet::Condition,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Facet::Code => "code",
            Facet::Category => "category",
            Facet::Level => "level",
            Facet::Entity => "entity",
            Facet::Game => "game",
            Facet::DistractorSubtype => "distractor_subtype",
            Facet::VideoLengthBucket => "video_length_bucket",
            Facet::NVideos => "n_videos",
            Facet::Condition => "condition",
        }
    }

    /// Facets whose buckets partition the records exactly.
    pub fn is_partition(self) -> bool {
        !matches!(self, Facet::DistractorSubtype | Facet::Entity)
    }
}

impl fmt::Display for Facet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Facet {
    type Err = ReportError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Facet::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| ReportError::UnknownFacet(s.to_string()))
    }
}

pub const LENGTH_BUCKETS: [(f64, f64, &str); 4] = [
    (0.0, 15.0, "[0,15)"),
    (15.0, 30.0, "[15,30)"),
    (30.0, 60.0, "[30,60)"),
    (60.0, f64::INFINITY, "[60,inf)"),
];

pub fn length_bucket(seconds: f64) -> &'static str {
    LENGTH_BUCKETS
        .iter()
        .find(|(lo, hi, _)| seconds >= *lo && seconds < *hi)
        .map(|b| b.2)
        .unwrap_or(LENGTH_BUCKETS[0].2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub n: usize,
    pub correct: usize,
    pub accuracy: f64,
    /// "question|model|condition" -> correct
    pub per_question: BTreeMap<String, bool>,
}

fn record_key(r: &EvalRecord) -> String {
    format!("{}|{}|{}", r.question_id, r.model_id, r.condition)
}

pub fn score_records(records: &[EvalRecord]) -> Result<Score, ReportError> {
    let mut per_question = BTreeMap::new();
    for r in records {
        // a stored `correct` flag is not trusted: X never scores
        let ok = r.extracted.letter() == Some(r.answer);
        if per_question.insert(record_key(r), ok).is_some() {
            return Err(ReportError::Duplicate {
                question_id: r.question_id.clone(),
                model_id: r.model_id.clone(),
                condition: r.condition.to_string(),
            });
        }
    }
    let n = per_question.len();
    let correct = per_question.values().filter(|&&c| c).count();
    Ok(Score {
        n,
        correct,
        accuracy: ratio(correct, n),
        per_question,
    })
}

fn ratio(correct: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        correct as f64 / n as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub bucket: String,
    pub n: usize,
    pub correct: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FacetTable {
    pub facet: Facet,
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FacetOptions {
    /// Count cross-entity questions under every kind they involve.
    pub entity_all_involved: bool,
}

/// Buckets an item falls into, each paired with a sort rank.
fn buckets(item: &QuestionItem, record: &EvalRecord, facet: Facet, opts: FacetOptions) -> Vec<(usize, String)> {
    let code = &item.code;
    match facet {
        Facet::Code => {
            let rank = all_codes().iter().position(|c| c.raw == code.raw).unwrap_or(usize::MAX);
            vec![(rank, code.raw.clone())]
        }
        Facet::Category => {
            let c = code.category();
            let rank = TaskCategory::ALL.iter().position(|x| *x == c).unwrap_or(usize::MAX);
            vec![(rank, c.name().to_string())]
        }
        Facet::Level => vec![(code.level as usize, format!("L{}", code.level))],
        Facet::Entity => {
            const ORDER: [&str; 7] = ["SA", "SS", "OA", "OS", "WO", "WE", "MIX"];
            let mut kinds = vec![code.ans_kind.as_str().to_string()];
            if opts.entity_all_involved {
                if let Some(RefKind::Entity(k)) = code.ref_kind {
                    if !kinds.contains(&k.as_str().to_string()) {
                        kinds.push(k.as_str().to_string());
                    }
                }
            }
            kinds
                .into_iter()
                .map(|k| (ORDER.iter().position(|o| *o == k).unwrap_or(usize::MAX), k))
                .collect()
        }
        Facet::Game => {
            let mut games: Vec<&str> = item.videos.iter().map(|v| v.game.as_str()).collect();
            games.sort();
            games.dedup();
            vec![(0, games.join("+"))]
        }
        Facet::DistractorSubtype => {
            if code.form != QuestionForm::Exist {
                return Vec::new();
            }
            match item.subtype {
                Some(Provenance::TrueLabel) | None => vec![(0, "true_label".to_string())],
                Some(p) => {
                    let rank = DistractorSubtype::ALL
                        .iter()
                        .position(|s| Provenance::Distractor(*s) == p)
                        .map_or(usize::MAX, |i| i + 1);
                    vec![(rank, p.as_str().to_string())]
                }
            }
        }
        Facet::VideoLengthBucket => {
            let b = length_bucket(item.total_duration_s());
            let rank = LENGTH_BUCKETS.iter().position(|x| x.2 == b).unwrap_or(usize::MAX);
            vec![(rank, b.to_string())]
        }
        Facet::NVideos => vec![(item.videos.len(), item.videos.len().to_string())],
        Facet::Condition => {
            let rank = Condition::ALL.iter().position(|c| *c == record.condition).unwrap_or(usize::MAX);
            vec![(rank, record.condition.to_string())]
        }
    }
}

pub fn facet_accuracy(
    records: &[EvalRecord],
    items: &HashMap<&str, &QuestionItem>,
    facet: Facet,
    opts: FacetOptions,
) -> Result<FacetTable, ReportError> {
    // Games sort by name; everything else by its fixed rank.
    let mut acc: BTreeMap<(usize, String), (usize, usize)> = BTreeMap::new();
    for r in records {
        let item = items
            .get(r.question_id.as_str())
            .ok_or_else(|| ReportError::Unresolved(r.question_id.clone()))?;
        let ok = r.extracted.letter() == Some(r.answer);
        for key in buckets(item, r, facet, opts) {
            let e = acc.entry(key).or_default();
            e.0 += 1;
            e.1 += ok as usize;
        }
    }
    let rows = acc
        .into_iter()
        .map(|((_, bucket), (n, correct))| Row {
            bucket,
            n,
            correct,
            accuracy: ratio(correct, n),
        })
        .collect();
    Ok(FacetTable { facet, rows })
}

pub const EMPTY_CAVEAT: &str = "no records: accuracies are undefined and shown as 0.0";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub model_id: String,
    pub n: usize,
    pub correct: usize,
    pub accuracy: f64,
    pub facets: Vec<FacetTable>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caveat: Option<String>,
}

/// One report per model id, models in name order.
pub fn build_reports(
    records: &[EvalRecord],
    items: &[QuestionItem],
    facets: &[Facet],
    opts: FacetOptions,
) -> Result<Vec<Report>, ReportError> {
    score_records(records)?;
    let index: HashMap<&str, &QuestionItem> = items.iter().map(|i| (i.id.as_str(), i)).collect();
    let mut by_model: BTreeMap<&str, Vec<EvalRecord>> = BTreeMap::new();
    for r in records {
        by_model.entry(r.model_id.as_str()).or_default().push(r.clone());
    }
    if by_model.is_empty() {
        return Ok(vec![Report {
            model_id: String::new(),
            n: 0,
            correct: 0,
            accuracy: 0.0,
            facets: facets.iter().map(|&f| FacetTable { facet: f, rows: Vec::new() }).collect(),
            caveat: Some(EMPTY_CAVEAT.into()),
        }]);
    }
    let mut out = Vec::new();
    for (model, recs) in by_model {
        let score = score_records(&recs)?;
        let tables = facets
            .iter()
            .map(|&f| facet_accuracy(&recs, &index, f, opts))
            .collect::<Result<Vec<_>, _>>()?;
        out.push(Report {
            model_id: model.to_string(),
            n: score.n,
            correct: score.correct,
            accuracy: score.accuracy,
            facets: tables,
            caveat: None,
        });
    }
    Ok(out)
}

fn pct(x: f64) -> String {
    format!("{:.1}", x * 100.0)
}

const TSV_HEADER: &str = "model_id\tfacet\tbucket\tn\tcorrect\taccuracy_pct";

/// Stable tab-separated form. Overall rows use facet "overall".
pub fn to_tsv(reports: &[Report]) -> String {
    let mut s = String::new();
    s.push_str(TSV_HEADER);
    s.push('\n');
    for r in reports {
        if let Some(c) = &r.caveat {
            let _ = writeln!(s, "# {c}");
        }
        let _ = writeln!(s, "{}\toverall\tall\t{}\t{}\t{}", r.model_id, r.n, r.correct, pct(r.accuracy));
        for t in &r.facets {
            if t.rows.is_empty() {
                let _ = writeln!(s, "{}\t{}\t\t0\t0\t", r.model_id, t.facet);
            }
            for row in &t.rows {
                let _ = writeln!(
                    s,
                    "{}\t{}\t{}\t{}\t{}\t{}",
                    r.model_id,
                    t.facet,
                    row.bucket,
                    row.n,
                    row.correct,
                    pct(row.accuracy)
                );
            }
        }
    }
    s
}

/// Inverse of [`to_tsv`]. Accuracy is recomputed from the counts.
pub fn from_tsv(text: &str) -> Result<Vec<Report>, ReportError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == TSV_HEADER => {}
        _ => {
            return Err(ReportError::Parse {
                line: 1,
                message: "missing header".into(),
            })
        }
    }
    let mut out: Vec<Report> = Vec::new();
    let mut caveat = None;
    for (i, line) in lines {
        let err = |m: &str| ReportError::Parse {
            line: i + 1,
            message: m.to_string(),
        };
        if let Some(c) = line.strip_prefix("# ") {
            caveat = Some(c.to_string());
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 6 {
            return Err(err("expected 6 fields"));
        }
        let n: usize = f[3].parse().map_err(|_| err("bad n"))?;
        let correct: usize = f[4].parse().map_err(|_| err("bad correct"))?;
        if f[1] == "overall" {
            out.push(Report {
                model_id: f[0].to_string(),
                n,
                correct,
                accuracy: ratio(correct, n),
                facets: Vec::new(),
                caveat: caveat.take(),
            });
            continue;
        }
        let facet: Facet = f[1].parse()?;
        let report = out.last_mut().ok_or_else(|| err("facet row before overall row"))?;
        if report.facets.last().map(|t| t.facet) != Some(facet) {
            report.facets.push(FacetTable { facet, rows: Vec::new() });
        }
        if f[2].is_empty() && n == 0 {
            continue;
        }
        report.facets.last_mut().expect("pushed").rows.push(Row {
            bucket: f[2].to_string(),
            n,
            correct,
            accuracy: ratio(correct, n),
        });
    }
    Ok(out)
}

pub fn to_json(reports: &[Report]) -> String {
    let v = serde_json::to_value(reports).expect("reports serialize");
    crate::canonical::to_canonical_string(&v, true).expect("canonical json")
}

pub fn to_text(reports: &[Report]) -> String {
    let mut s = String::new();
    for r in reports {
        let name = if r.model_id.is_empty() { "(none)" } else { r.model_id.as_str() };
        let _ = writeln!(s, "model {name}: {}% ({}/{})", pct(r.accuracy), r.correct, r.n);
        if let Some(c) = &r.caveat {
            let _ = writeln!(s, "  note: {c}");
        }
        for t in &r.facets {
            let _ = writeln!(s, "  by {}:", t.facet);
            let width = t.rows.iter().map(|r| r.bucket.len()).max().unwrap_or(0);
            for row in &t.rows {
                let _ = writeln!(
                    s,
                    "    {:<width$}  {:>6}%  n={}",
                    row.bucket,
                    pct(row.accuracy),
                    row.n
                );
            }
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::{synth_instance, SynthParams};
    use crate::eval::Extracted;
    use crate::generate::{generate_all, GenConfig};
    use crate::taxonomy::TemplateRegistry;

    fn items() -> Vec<QuestionItem> {
        let inst = synth_instance(&SynthParams::small(9, 2)).unwrap();
        generate_all(&inst, &GenConfig::default(), &TemplateRegistry::builtin())
            .unwrap()
            .items
    }

    fn rec(item: &QuestionItem, ok: bool) -> EvalRecord {
        let a = item.answer_letter();
        EvalRecord {
            question_id: item.id.clone(),
            model_id: "m".into(),
            condition: Condition::Baseline,
            raw_text: String::new(),
            extracted: if ok { Extracted::Letter(a) } else { Extracted::X },
            answer: a,
            correct: ok,
            latency_s: 0.0,
            error: None,
        }
    }

    #[test]
    fn score_basics() {
        let items = items();
        let recs: Vec<_> = items[..4].iter().enumerate().map(|(i, it)| rec(it, i < 3)).collect();
        assert_eq!(score_records(&recs).unwrap().accuracy, 0.75);
        let xs: Vec<_> = items[..4].iter().map(|it| rec(it, false)).collect();
        assert_eq!(score_records(&xs).unwrap().accuracy, 0.0);
        let dup = vec![recs[0].clone(), recs[0].clone()];
        assert!(matches!(score_records(&dup), Err(ReportError::Duplicate { .. })));
    }

    #[test]
    fn partitions_sum_and_mean() {
        let items = items();
        let recs: Vec<_> = items.iter().enumerate().map(|(i, it)| rec(it, i % 3 == 0)).collect();
        let reports = build_reports(&recs, &items, &Facet::ALL, FacetOptions::default()).unwrap();
        let r = &reports[0];
        for t in r.facets.iter().filter(|t| t.facet.is_partition()) {
            assert_eq!(t.rows.iter().map(|x| x.n).sum::<usize>(), r.n, "{}", t.facet);
            let mean: f64 = t.rows.iter().map(|x| x.accuracy * x.n as f64).sum::<f64>() / r.n as f64;
            assert!((mean - r.accuracy).abs() < 1e-9);
        }
        let entity = r.facets.iter().find(|t| t.facet == Facet::Entity).unwrap();
        assert_eq!(entity.rows.iter().map(|x| x.n).sum::<usize>(), r.n);
    }

    #[test]
    fn entity_uses_answer_kind() {
        let items = items();
        let it = items.iter().find(|i| i.code.raw == "WO2SA-EXIST").expect("WO2SA-EXIST item");
        let recs = vec![rec(it, true)];
        let t = facet_accuracy(
            &recs,
            &HashMap::from([(it.id.as_str(), it)]),
            Facet::Entity,
            FacetOptions::default(),
        )
        .unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.rows[0].bucket, "SA");
        let t = facet_accuracy(
            &recs,
            &HashMap::from([(it.id.as_str(), it)]),
            Facet::Entity,
            FacetOptions {
                entity_all_involved: true,
            },
        )
        .unwrap();
        let b: Vec<&str> = t.rows.iter().map(|r| r.bucket.as_str()).collect();
        assert_eq!(b, ["SA", "WO"]);
    }

    #[test]
    fn emit_round_trip_and_empty() {
        let items = items();
        let recs: Vec<_> = items.iter().enumerate().map(|(i, it)| rec(it, i % 2 == 0)).collect();
        let reports = build_reports(&recs, &items, &Facet::ALL, FacetOptions::default()).unwrap();
        assert_eq!(from_tsv(&to_tsv(&reports)).unwrap(), reports);
        assert_eq!(to_json(&reports), to_json(&reports));
        let empty = build_reports(&[], &items, &[Facet::Level], FacetOptions::default()).unwrap();
        assert_eq!(empty[0].n, 0);
        assert!(to_text(&empty).contains(EMPTY_CAVEAT));
        assert_eq!(from_tsv(&to_tsv(&empty)).unwrap(), empty);
    }

    #[test]
    fn unresolved_id() {
        let items = items();
        let mut r = rec(&items[0], true);
        r.question_id = "nope".into();
        assert!(matches!(
            build_reports(&[r], &items, &[Facet::Level], FacetOptions::default()),
            Err(ReportError::Unresolved(_))
        ));
    }

    #[test]
    fn length_edges() {
        assert_eq!(length_bucket(0.0), "[0,15)");
        assert_eq!(length_bucket(15.0), "[15,30)");
        assert_eq!(length_bucket(59.999), "[30,60)");
        assert_eq!(length_bucket(600.0), "[60,inf)");
    }
}
