use anyhow::{bail, Context, Result};
use benchforge_core::annotation::{parse_document, AnnotationInstance};
use benchforge_core::canonical::{from_jsonl, to_canonical_string};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

pub const MANIFEST_SUFFIX: &str = ".manifest.json";

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Files read by a command, remembered for the manifest.
#[derive(Debug, Default)]
pub struct Inputs {
    seen: Vec<(PathBuf, String)>,
}

impl Inputs {
    pub fn read(&mut self, path: &Path) -> Result<Vec<u8>> {
        let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.seen.push((path.to_path_buf(), sha256_hex(&bytes)));
        Ok(bytes)
    }

    pub fn read_jsonl<T: DeserializeOwned>(&mut self, path: &Path) -> Result<Vec<T>> {
        let bytes = self.read(path)?;
        let text = String::from_utf8(bytes).with_context(|| format!("{} is not UTF-8", path.display()))?;
        from_jsonl(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// One instance file, or every `*.json` in a directory (manifests
    /// excluded) in name order.
    pub fn read_instances(&mut self, path: &Path) -> Result<Vec<AnnotationInstance>> {
        let files = if path.is_dir() {
            let mut v: Vec<PathBuf> = std::fs::read_dir(path)
                .with_context(|| format!("listing {}", path.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| {
                    let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
                    name.ends_with(".json") && !name.ends_with(MANIFEST_SUFFIX)
                })
                .collect();
            v.sort();
            if v.is_empty() {
                bail!("no instance documents in {}", path.display());
            }
            v
        } else {
            vec![path.to_path_buf()]
        };
        let mut out = Vec::new();
        for f in files {
            let doc = parse_document(&self.read(&f)?).with_context(|| format!("parsing {}", f.display()))?;
            for field in &doc.ignored_fields {
                log::warn!("{}: ignored unknown field {field}", f.display());
            }
            out.push(doc.instance);
        }
        Ok(out)
    }

    fn refuse_overwrite(&self, out: &Path) -> Result<()> {
        let target = std::fs::canonicalize(out).ok();
        for (p, _) in &self.seen {
            if target.is_some() && std::fs::canonicalize(p).ok() == target {
                bail!("refusing to overwrite input file {}", p.display());
            }
        }
        Ok(())
    }
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_os_string();
    s.push(MANIFEST_SUFFIX);
    PathBuf::from(s)
}

/// Provenance written next to every output file.
pub struct Manifest<'a> {
    pub command: &'a str,
    pub seed: u64,
    pub config_hash: &'a str,
    pub extra: Map<String, Value>,
}

pub fn write_output(out: &Path, body: &str, inputs: &Inputs, manifest: Manifest<'_>) -> Result<()> {
    inputs.refuse_overwrite(out)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(out, body).with_context(|| format!("writing {}", out.display()))?;
    let mut m = Map::new();
    m.insert("tool".into(), Value::from("benchforge"));
    m.insert("version".into(), Value::from(env!("CARGO_PKG_VERSION")));
    m.insert("command".into(), Value::from(manifest.command));
    m.insert("seed".into(), Value::from(manifest.seed));
    m.insert("config_hash".into(), Value::from(manifest.config_hash));
    m.insert(
        "inputs".into(),
        inputs
            .seen
            .iter()
            .map(|(p, h)| serde_json::json!({"path": p.display().to_string(), "sha256": h}))
            .collect(),
    );
    m.insert("output_sha256".into(), Value::from(sha256_hex(body.as_bytes())));
    m.extend(manifest.extra);
    let text = to_canonical_string(&m, true)?;
    let mp = manifest_path(out);
    std::fs::write(&mp, text).with_context(|| format!("writing {}", mp.display()))?;
    Ok(())
}

pub fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}
