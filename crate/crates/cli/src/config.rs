//! Run configuration. Layers, lowest first: built-in defaults, environment,
//! command-line flags, config file. Each layer is a JSON tree merged over
//! the previous one and the result is deserialized strictly.

use anyhow::{Context, Result};
use benchforge_core::annotation::DensityMode;
use benchforge_core::curation::CurationConfig;
use benchforge_core::eval::{ClientMode, EvalConfig};
use benchforge_core::generate::GenConfig;
use benchforge_core::report::Facet;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub const ENV_PREFIX: &str = "BENCHFORGE_";
pub const DEFAULT_KEY_ENV: &str = "BENCHFORGE_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSettings {
    /// `mock:fixed:<text>`, `mock:script:<path>`, `heuristic` or an http(s) URL.
    pub endpoint: String,
    pub model: Option<String>,
    pub mode: ClientMode,
    pub frame_cap: Option<usize>,
    pub frame_root: Option<PathBuf>,
    pub timeout_s: u64,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
}

impl Default for ModelSettings {
    fn default() -> Self {
        ModelSettings {
            endpoint: "mock:fixed:A".into(),
            model: None,
            mode: ClientMode::Frames,
            frame_cap: None,
            frame_root: None,
            timeout_s: 120,
            api_key_env: DEFAULT_KEY_ENV.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyzeSettings {
    pub facets: Vec<Facet>,
    pub entity_all_involved: bool,
}

impl Default for AnalyzeSettings {
    fn default() -> Self {
        AnalyzeSettings {
            facets: Facet::ALL.to_vec(),
            entity_all_involved: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensitySettings {
    pub mode: DensityMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub instances: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub generate: GenConfig,
    pub curation: CurationConfig,
    pub eval: EvalConfig,
    pub model: ModelSettings,
    /// Extraction judge; same endpoint syntax as `model`, or `none`.
    pub judge: ModelSettings,
    pub analyze: AnalyzeSettings,
    pub density: DensitySettings,
    /// Partial synthesis parameters laid over the small default instance.
    pub synth: Map<String, Value>,
    /// Stem template overrides keyed by code.
    pub templates: BTreeMap<String, String>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            instances: None,
            out: None,
            generate: GenConfig::default(),
            curation: CurationConfig::default(),
            eval: EvalConfig::default(),
            model: ModelSettings::default(),
            judge: ModelSettings {
                endpoint: "heuristic".into(),
                ..ModelSettings::default()
            },
            analyze: AnalyzeSettings::default(),
            density: DensitySettings::default(),
            synth: Map::new(),
            templates: BTreeMap::new(),
        }
    }
}

impl PipelineConfig {
    /// Hash of everything that shapes outputs. Paths are left out so the same
    /// settings hash the same wherever files live.
    pub fn hash(&self) -> Result<String> {
        let mut v = serde_json::to_value(self)?;
        if let Some(m) = v.as_object_mut() {
            m.remove("instances");
            m.remove("out");
        }
        let text = benchforge_core::canonical::to_canonical_string(&v, false)?;
        Ok(hex::encode(Sha256::digest(text.as_bytes())))
    }
}

/// Overlay `top` onto `base`. Objects merge key by key, anything else is
/// replaced.
pub fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Set `a.b.c` in a JSON tree, creating objects on the way.
pub fn set_path(root: &mut Value, path: &str, value: Value) {
    let mut cur = root;
    let mut parts = path.split('.').peekable();
    while let Some(p) = parts.next() {
        if !cur.is_object() {
            *cur = Value::Object(Map::new());
        }
        let obj = cur.as_object_mut().expect("object");
        if parts.peek().is_none() {
            obj.insert(p.to_string(), value);
            return;
        }
        cur = obj.entry(p.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
}

/// A top-level seed reaches every section that does not set its own.
fn spread_seed(layer: &mut Value) {
    let Some(seed) = layer.get("seed").cloned() else { return };
    for section in ["generate", "curation", "eval"] {
        let has = layer.get(section).and_then(|s| s.get("seed")).is_some();
        if !has {
            set_path(layer, &format!("{section}.seed"), seed.clone());
        }
    }
}

pub fn env_layer(vars: impl Iterator<Item = (String, String)>) -> Value {
    let mut layer = json!({});
    for (k, v) in vars {
        let Some(name) = k.strip_prefix(ENV_PREFIX) else { continue };
        match name {
            "SEED" => {
                if let Ok(n) = v.parse::<u64>() {
                    set_path(&mut layer, "seed", json!(n));
                }
            }
            "ENDPOINT" => set_path(&mut layer, "model.endpoint", json!(v)),
            "MODEL" => set_path(&mut layer, "model.model", json!(v)),
            "JUDGE_ENDPOINT" => set_path(&mut layer, "judge.endpoint", json!(v)),
            "JUDGE_MODEL" => set_path(&mut layer, "judge.model", json!(v)),
            _ => {}
        }
    }
    spread_seed(&mut layer);
    layer
}

pub fn read_file_layer(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let mut v: Value = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?
    } else {
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?
    };
    spread_seed(&mut v);
    Ok(v)
}

pub fn resolve(env: Value, mut flags: Value, file: Option<Value>) -> Result<PipelineConfig> {
    spread_seed(&mut flags);
    let mut v = serde_json::to_value(PipelineConfig::default())?;
    merge(&mut v, env);
    merge(&mut v, flags);
    if let Some(f) = file {
        merge(&mut v, f);
    }
    serde_json::from_value(v).context("invalid configuration")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_file_over_flags_over_env() {
        let env = env_layer(
            [
                ("BENCHFORGE_ENDPOINT".to_string(), "mock:fixed:B".to_string()),
                ("BENCHFORGE_SEED".to_string(), "3".to_string()),
                ("HOME".to_string(), "/x".to_string()),
            ]
            .into_iter(),
        );
        let c = resolve(env.clone(), json!({}), None).unwrap();
        assert_eq!(c.model.endpoint, "mock:fixed:B");
        assert_eq!((c.seed, c.generate.seed, c.eval.seed), (3, 3, 3));

        let flags = json!({"seed": 5, "model": {"endpoint": "mock:fixed:C"}});
        let c = resolve(env.clone(), flags.clone(), None).unwrap();
        assert_eq!((c.seed, c.curation.seed, c.model.endpoint.as_str()), (5, 5, "mock:fixed:C"));

        let file = json!({"seed": 9, "generate": {"seed": 11}, "model": {"endpoint": "mock:fixed:D"}});
        let mut file = file;
        spread_seed(&mut file);
        let c = resolve(env, flags, Some(file)).unwrap();
        assert_eq!((c.seed, c.generate.seed, c.curation.seed), (9, 11, 9));
        assert_eq!(c.model.endpoint, "mock:fixed:D");
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(resolve(json!({}), json!({}), Some(json!({"generate": {"min_overlap": 1.0}}))).is_err());
        assert!(resolve(json!({}), json!({}), Some(json!({"bogus": 1}))).is_err());
    }

    #[test]
    fn hash_ignores_paths() {
        let a = PipelineConfig::default();
        let b = PipelineConfig {
            out: Some("x.jsonl".into()),
            ..PipelineConfig::default()
        };
        assert_eq!(a.hash().unwrap(), b.hash().unwrap());
        let c = PipelineConfig {
            seed: 1,
            ..PipelineConfig::default()
        };
        assert_ne!(a.hash().unwrap(), c.hash().unwrap());
    }

    #[test]
    fn toml_file() {
        let dir = std::env::temp_dir().join(format!("bf-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("c.toml");
        std::fs::write(&p, "seed = 4\n[curation]\ntarget_n = 10\n[eval.policy]\nmax_frames = 8\n").unwrap();
        let c = resolve(json!({}), json!({}), Some(read_file_layer(&p).unwrap())).unwrap();
        assert_eq!((c.seed, c.curation.target_n, c.eval.policy.max_frames, c.eval.seed), (4, 10, 8, 4));
    }
}
