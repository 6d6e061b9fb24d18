mod clients;
mod config;
mod io;

use anyhow::{anyhow, bail, Context, Result};
use benchforge_core::annotation::{
    decision_density_many, serialize_instance, synth_instance, validate_instance, DensityMode, SynthParams,
};
use benchforge_core::canonical::{to_canonical_string, to_jsonl};
use benchforge_core::curation::{
    apply_verdicts, blind_filter, export_review, paraphrase, stratified_downsample, summarize, FilterVerdict,
};
use benchforge_core::eval::{judge_extract, run_eval, Condition, EvalRecord, Extracted};
use benchforge_core::generate::{generate_all, GenerationStats, QuestionItem};
use benchforge_core::report::{build_reports, to_json, to_text, to_tsv, Facet, FacetOptions};
use benchforge_core::taxonomy::TemplateRegistry;
use clap::{Args, Parser, Subcommand};
use config::{env_layer, read_file_layer, resolve, set_path, PipelineConfig};
use io::{to_value, Inputs, Manifest};
use serde_json::{json, Map, Value};
use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Build diagnostic multiple-choice video QA benchmarks from timeline
/// annotations, curate them and score models.
///
/// Settings are layered: defaults < BENCHFORGE_* environment < flags <
/// --config file. API keys are only read from the environment.
#[derive(Parser, Debug)]
#[command(name = "benchforge", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Args, Debug, Clone, Default)]
struct Global {
    /// Input file (instance document, directory of them, or record stream)
    #[arg(short = 'i', long = "instances", global = true)]
    instances: Option<PathBuf>,
    /// Output file; a `<out>.manifest.json` is written next to it
    #[arg(short = 'o', long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// TOML or JSON config file; its values win over flags
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long = "target-n", global = true)]
    target_n: Option<usize>,
    /// Blind-filter trials per item
    #[arg(long, global = true)]
    k: Option<u32>,
    #[arg(long, global = true)]
    model: Option<String>,
    /// mock:fixed:<text>, mock:script:<path>, heuristic or an http(s) URL
    #[arg(long, global = true)]
    endpoint: Option<String>,
    /// baseline, no_video, random_frame or shuffled_frames
    #[arg(long, global = true)]
    condition: Option<String>,
    /// Comma-separated facet names
    #[arg(long, global = true)]
    facets: Option<String>,
    #[arg(long = "max-frames", global = true)]
    max_frames: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check instance documents and list violations
    Validate,
    /// Decision density and label distribution
    Density {
        /// sum_durations or max_per_sync_group
        #[arg(long)]
        mode: Option<String>,
    },
    /// Write a synthetic instance document
    Synth {
        #[arg(long)]
        videos: Option<usize>,
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Generate question items from instances
    Generate,
    /// Per-code balanced downsample
    Sample,
    /// Blind (no-video) filter; writes kept items and verdicts
    Filter {
        /// Verdict records; defaults to `<out>.verdicts.jsonl`
        #[arg(long)]
        verdicts: Option<PathBuf>,
    },
    /// Optional stem rewording that keeps options and answers
    Paraphrase,
    /// Run a model over items
    Evaluate {
        /// Extraction judge endpoint, or `none`
        #[arg(long)]
        judge: Option<String>,
    },
    /// Re-extract answers of eval records with a judge
    Judge {
        /// Item stream the records refer to
        #[arg(long)]
        items: PathBuf,
        #[arg(long)]
        judge: Option<String>,
    },
    /// Faceted accuracy reports (.tsv, .json, else text)
    Analyze {
        #[arg(long)]
        items: PathBuf,
    },
    /// Tab-separated sheet for manual review
    ExportReview {
        #[arg(long)]
        verdicts: Option<PathBuf>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Density { .. } => "density",
            Command::Synth { .. } => "synth",
            Command::Generate => "generate",
            Command::Sample => "sample",
            Command::Filter { .. } => "filter",
            Command::Paraphrase => "paraphrase",
            Command::Evaluate { .. } => "evaluate",
            Command::Judge { .. } => "judge",
            Command::Analyze { .. } => "analyze",
            Command::ExportReview { .. } => "export-review",
        }
    }
}

/// Bad invocation that clap cannot catch; exits 2.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(Usage(msg.into()))
}

fn flag_layer(g: &Global, cmd: &Command) -> Result<Value> {
    let mut v = json!({});
    if let Some(s) = g.seed {
        set_path(&mut v, "seed", json!(s));
    }
    if let Some(p) = &g.instances {
        set_path(&mut v, "instances", json!(p));
    }
    if let Some(p) = &g.out {
        set_path(&mut v, "out", json!(p));
    }
    if let Some(n) = g.target_n {
        set_path(&mut v, "curation.target_n", json!(n));
    }
    if let Some(k) = g.k {
        set_path(&mut v, "curation.filter_k", json!(k));
    }
    if let Some(m) = &g.model {
        set_path(&mut v, "model.model", json!(m));
    }
    if let Some(e) = &g.endpoint {
        set_path(&mut v, "model.endpoint", json!(e));
    }
    if let Some(c) = &g.condition {
        let c: Condition = c.parse().map_err(|e| usage(format!("{e}")))?;
        set_path(&mut v, "eval.condition", json!(c));
    }
    if let Some(f) = &g.facets {
        let facets = f
            .split(',')
            .map(|s| s.trim().parse::<Facet>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| usage(format!("{e}")))?;
        set_path(&mut v, "analyze.facets", json!(facets));
    }
    if let Some(m) = g.max_frames {
        set_path(&mut v, "eval.policy.max_frames", json!(m));
    }
    match cmd {
        Command::Density { mode: Some(m) } => {
            let mode: DensityMode =
                serde_json::from_value(json!(m)).map_err(|_| usage(format!("unknown density mode {m:?}")))?;
            set_path(&mut v, "density.mode", json!(mode));
        }
        Command::Synth { videos, duration } => {
            if let Some(n) = videos {
                set_path(&mut v, "synth.n_videos", json!(n));
            }
            if let Some(d) = duration {
                set_path(&mut v, "synth.duration_s", json!(d));
            }
        }
        Command::Evaluate { judge: Some(j) } | Command::Judge { judge: Some(j), .. } => {
            set_path(&mut v, "judge.endpoint", json!(j));
        }
        _ => {}
    }
    Ok(v)
}

struct Ctx {
    cfg: PipelineConfig,
    hash: String,
    command: &'static str,
}

impl Ctx {
    fn input(&self) -> Result<&Path> {
        self.cfg
            .instances
            .as_deref()
            .ok_or_else(|| usage(format!("{} needs an input (-i)", self.command)))
    }

    fn out(&self) -> Result<&Path> {
        self.cfg
            .out
            .as_deref()
            .ok_or_else(|| usage(format!("{} needs an output (-o)", self.command)))
    }

    fn write(&self, out: &Path, body: &str, inputs: &Inputs, extra: Map<String, Value>) -> Result<()> {
        io::write_output(
            out,
            body,
            inputs,
            Manifest {
                command: self.command,
                seed: self.cfg.seed,
                config_hash: &self.hash,
                extra,
            },
        )
    }

    fn client(&self) -> Result<Box<dyn benchforge_core::eval::ModelClient>> {
        clients::build(&self.cfg.model, |k| std::env::var(k).ok())?
            .ok_or_else(|| anyhow!("a model endpoint is required; `none` only applies to judges"))
    }

    fn judge(&self) -> Result<Option<Box<dyn benchforge_core::eval::ModelClient>>> {
        clients::build(&self.cfg.judge, |k| std::env::var(k).ok())
    }
}

fn extra(pairs: &[(&str, Value)]) -> Map<String, Value> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn stdout_or_file(ctx: &Ctx, body: &str, inputs: &Inputs) -> Result<()> {
    match &ctx.cfg.out {
        Some(out) => ctx.write(out, body, inputs, Map::new()),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let env = env_layer(std::env::vars());
    let flags = flag_layer(&cli.global, &cli.command)?;
    let file = cli.global.config.as_deref().map(read_file_layer).transpose()?;
    let mut cfg = resolve(env, flags, file)?;
    cfg.generate.workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let hash = cfg.hash()?;
    let ctx = Ctx {
        cfg,
        hash,
        command: cli.command.name(),
    };
    let mut inputs = Inputs::default();
    match &cli.command {
        Command::Validate => {
            let insts = inputs.read_instances(ctx.input()?)?;
            let mut total = 0;
            for inst in &insts {
                let v = validate_instance(inst);
                for x in &v {
                    println!("{}: {x}", inst.instance_id);
                }
                total += v.len();
            }
            println!("{total} violations");
            if total > 0 {
                bail!("{total} violations in {} instance(s)", insts.len());
            }
        }
        Command::Density { .. } => {
            let insts = inputs.read_instances(ctx.input()?)?;
            let stats = decision_density_many(&insts, ctx.cfg.density.mode)?;
            stdout_or_file(&ctx, &to_canonical_string(&stats, true)?, &inputs)?;
        }
        Command::Synth { .. } => {
            let n = ctx.cfg.synth.get("n_videos").and_then(Value::as_u64).unwrap_or(1) as usize;
            let mut p = serde_json::to_value(SynthParams::small(ctx.cfg.seed, n))?;
            config::merge(&mut p, Value::Object(ctx.cfg.synth.clone()));
            let params: SynthParams = serde_json::from_value(p).context("invalid synth parameters")?;
            let inst = synth_instance(&params)?;
            ctx.write(ctx.out()?, &serialize_instance(&inst), &inputs, extra(&[("synth", to_value(&params))]))?;
        }
        Command::Generate => {
            let insts = inputs.read_instances(ctx.input()?)?;
            let reg = TemplateRegistry::builtin().with_overrides(&ctx.cfg.templates)?;
            let mut items: Vec<QuestionItem> = Vec::new();
            let mut stats = GenerationStats::default();
            for inst in &insts {
                let g = generate_all(inst, &ctx.cfg.generate, &reg)
                    .with_context(|| format!("generating from {}", inst.instance_id))?;
                stats.merge(&g.stats);
                items.extend(g.items);
            }
            items.sort_by(|a, b| a.id.cmp(&b.id));
            log::info!("{} items emitted, {} combinations skipped", stats.emitted, stats.skipped);
            let summary = json!({"enumerated": stats.enumerated, "emitted": stats.emitted, "skipped": stats.skipped});
            ctx.write(ctx.out()?, &to_jsonl(&items)?, &inputs, extra(&[("stats", summary)]))?;
        }
        Command::Sample => {
            let items: Vec<QuestionItem> = inputs.read_jsonl(ctx.input()?)?;
            let out = stratified_downsample(&items, ctx.cfg.curation.target_n, ctx.cfg.curation.seed);
            let info = json!({"available": items.len(), "sampled": out.len(), "target_n": ctx.cfg.curation.target_n});
            ctx.write(ctx.out()?, &to_jsonl(&out)?, &inputs, extra(&[("sample", info)]))?;
        }
        Command::Filter { verdicts } => {
            let items: Vec<QuestionItem> = inputs.read_jsonl(ctx.input()?)?;
            let out = ctx.out()?;
            let client = ctx.client()?;
            let v = blind_filter(&items, client.as_ref(), &ctx.cfg.curation)?;
            let kept = apply_verdicts(&items, &v)?;
            let summary = to_value(&summarize(&v));
            let vpath = verdicts.clone().unwrap_or_else(|| {
                let mut s = out.as_os_str().to_os_string();
                s.push(".verdicts.jsonl");
                PathBuf::from(s)
            });
            ctx.write(&vpath, &to_jsonl(&v)?, &inputs, extra(&[("summary", summary.clone())]))?;
            ctx.write(out, &to_jsonl(&kept)?, &inputs, extra(&[("summary", summary)]))?;
        }
        Command::Paraphrase => {
            let items: Vec<QuestionItem> = inputs.read_jsonl(ctx.input()?)?;
            let client = ctx.client()?;
            let (out, stats) = paraphrase(&items, Some(client.as_ref()), ctx.cfg.curation.concurrency);
            ctx.write(ctx.out()?, &to_jsonl(&out)?, &inputs, extra(&[("paraphrase", to_value(&stats))]))?;
        }
        Command::Evaluate { .. } => {
            let items: Vec<QuestionItem> = inputs.read_jsonl(ctx.input()?)?;
            let out = ctx.out()?;
            let model = ctx.client()?;
            let judge = ctx.judge()?;
            let recs = run_eval(&items, model.as_ref(), judge.as_deref(), &ctx.cfg.eval);
            let correct = recs.iter().filter(|r| r.correct).count();
            let info = json!({"model_id": model.model_id(), "n": recs.len(), "correct": correct});
            ctx.write(out, &to_jsonl(&recs)?, &inputs, extra(&[("eval", info)]))?;
        }
        Command::Judge { items, .. } => {
            let recs: Vec<EvalRecord> = inputs.read_jsonl(ctx.input()?)?;
            let items: Vec<QuestionItem> = inputs.read_jsonl(items)?;
            let index: HashMap<&str, &QuestionItem> = items.iter().map(|i| (i.id.as_str(), i)).collect();
            let judge = ctx.judge()?;
            let mut out = Vec::with_capacity(recs.len());
            for mut r in recs {
                let it = index
                    .get(r.question_id.as_str())
                    .ok_or_else(|| anyhow!("record for unknown question {}", r.question_id))?;
                let options: Vec<&str> = it.options.iter().map(|o| o.text.as_str()).collect();
                let ex = judge_extract(&it.stem, &options, &r.raw_text, judge.as_deref());
                r.extracted = ex.extracted;
                r.correct = ex.extracted == Extracted::Letter(r.answer);
                if ex.error.is_some() {
                    r.error = ex.error;
                }
                out.push(r);
            }
            ctx.write(ctx.out()?, &to_jsonl(&out)?, &inputs, Map::new())?;
        }
        Command::Analyze { items } => {
            let recs: Vec<EvalRecord> = inputs.read_jsonl(ctx.input()?)?;
            let items: Vec<QuestionItem> = inputs.read_jsonl(items)?;
            let opts = FacetOptions {
                entity_all_involved: ctx.cfg.analyze.entity_all_involved,
            };
            let reports = build_reports(&recs, &items, &ctx.cfg.analyze.facets, opts)?;
            let body = match ctx.cfg.out.as_deref().and_then(|p| p.extension()).and_then(|e| e.to_str()) {
                Some("tsv") => to_tsv(&reports),
                Some("json") => to_json(&reports),
                _ => to_text(&reports),
            };
            stdout_or_file(&ctx, &body, &inputs)?;
        }
        Command::ExportReview { verdicts } => {
            let items: Vec<QuestionItem> = inputs.read_jsonl(ctx.input()?)?;
            let v: Vec<FilterVerdict> = match verdicts {
                Some(p) => inputs.read_jsonl(p)?,
                None => Vec::new(),
            };
            let body = export_review(&items, &v)?;
            ctx.write(ctx.out()?, &body, &inputs, Map::new())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let command = cli.command.name();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = if e.downcast_ref::<Usage>().is_some() { 2 } else { 1 };
            let chain: Vec<String> = e.chain().map(|c| c.to_string()).collect();
            let record = json!({
                "command": command,
                "error": chain.join(": "),
                "kind": if code == 2 { "usage" } else { "runtime" },
                "exit_code": code,
            });
            eprintln!("{record}");
            ExitCode::from(code)
        }
    }
}
