use crate::config::ModelSettings;
use anyhow::{bail, Context, Result};
use benchforge_core::eval::{FixedClient, HeuristicJudge, HttpClient, ModelClient, Script, ScriptedClient};
use std::time::Duration;

/// Build a client from an endpoint spec. `None` for a judge spec of `none`.
pub fn build(settings: &ModelSettings, key_lookup: impl Fn(&str) -> Option<String>) -> Result<Option<Box<dyn ModelClient>>> {
    let ep = settings.endpoint.trim();
    if ep == "none" {
        return Ok(None);
    }
    if ep == "heuristic" {
        return Ok(Some(Box::new(HeuristicJudge)));
    }
    if let Some(text) = ep.strip_prefix("mock:fixed:") {
        return Ok(Some(Box::new(FixedClient {
            id: settings.model.clone().unwrap_or_else(|| ep.to_string()),
            text: text.to_string(),
            mode: settings.mode,
        })));
    }
    if let Some(path) = ep.strip_prefix("mock:script:") {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading script {path}"))?;
        let mut script: Script = serde_json::from_str(&text).with_context(|| format!("parsing script {path}"))?;
        if script.model_id.is_none() {
            script.model_id = settings.model.clone();
        }
        return Ok(Some(Box::new(ScriptedClient::new(script))));
    }
    if ep.starts_with("http://") || ep.starts_with("https://") {
        let Some(model) = &settings.model else {
            bail!("endpoint {ep} needs a model name (--model)");
        };
        let mut c = HttpClient::new(ep, model.clone());
        c.api_key = key_lookup(&settings.api_key_env);
        c.mode = settings.mode;
        c.frame_cap = settings.frame_cap;
        c.frame_root = settings.frame_root.clone();
        c.timeout = Duration::from_secs(settings.timeout_s);
        return Ok(Some(Box::new(c)));
    }
    bail!("unknown endpoint {ep:?}: expected mock:fixed:<text>, mock:script:<path>, heuristic, none or an http(s) URL")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings(ep: &str) -> ModelSettings {
        ModelSettings {
            endpoint: ep.into(),
            ..ModelSettings::default()
        }
    }

    #[test]
    fn specs() {
        let none = |_: &str| None;
        assert!(build(&settings("none"), none).unwrap().is_none());
        let f = build(&settings("mock:fixed:B"), none).unwrap().unwrap();
        assert_eq!(f.complete(&[]).unwrap(), "B");
        assert_eq!(f.model_id(), "mock:fixed:B");
        assert_eq!(build(&settings("heuristic"), none).unwrap().unwrap().model_id(), "heuristic-judge");
        assert!(build(&settings("ftp://x"), none).is_err());
        assert!(build(&settings("http://localhost:1"), none).is_err());
    }

    #[test]
    fn http_reads_key_from_env_lookup() {
        let s = ModelSettings {
            model: Some("m".into()),
            ..settings("http://localhost:1/v1/chat/completions")
        };
        let c = build(&s, |name| (name == "BENCHFORGE_API_KEY").then(|| "k".to_string())).unwrap();
        assert_eq!(c.unwrap().model_id(), "m");
    }
}
