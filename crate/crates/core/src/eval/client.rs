use base64::Engine;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::sync::Mutex;
use std::time::Duration;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    System,
    User,
}

/// One element of a prompt. Frames are references; pixels are resolved by the
/// client that sends them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Part {
    Text { text: String },
    Frame { video_id: String, t_s: f64 },
    Video { video_id: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub parts: Vec<Part>,
}

impl Message {
    pub fn user_text(text: impl Into<String>) -> Self {
        Message {
            role: Role::User,
            parts: vec![Part::Text { text: text.into() }],
        }
    }

    /// Concatenated text parts, frames elided.
    pub fn text(&self) -> String {
        self.parts
            .iter()
            .filter_map(|p| match p {
                Part::Text { text } => Some(text.as_str()),
                _ => None,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClientMode {
    TextOnly,
    Frames,
    VideoNative,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClientError {
    #[error("transport failure: {message}")]
    Transport { message: String, transient: bool },
    #[error("model refused: {0}")]
    Refused(String),
    #[error("permanent client error: {0}")]
    Permanent(String),
}

impl ClientError {
    pub fn is_transient(&self) -> bool {
        matches!(self, ClientError::Transport { transient: true, .. })
    }
}

pub trait ModelClient: Send + Sync {
    fn model_id(&self) -> &str;

    fn mode(&self) -> ClientMode {
        ClientMode::Frames
    }

    /// Total frames the model accepts per request, split across videos.
    fn frame_cap(&self) -> Option<usize> {
        None
    }

    /// Whether wall-clock latency is meaningful. Mocks return false so their
    /// records stay byte-stable.
    fn reports_latency(&self) -> bool {
        true
    }

    fn complete(&self, messages: &[Message]) -> Result<String, ClientError>;
}

/// Stable key for a message sequence: sha256 of its canonical JSON.
pub fn messages_key(messages: &[Message]) -> String {
    let v = serde_json::to_value(messages).expect("messages serialize");
    let text = crate::canonical::to_canonical_string(&v, false).expect("canonical json");
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Always answers the same text.
#[derive(Debug, Clone)]
pub struct FixedClient {
    pub id: String,
    pub text: String,
    pub mode: ClientMode,
}

impl FixedClient {
    pub fn letter(letter: char) -> Self {
        FixedClient {
            id: format!("mock:fixed:{letter}"),
            text: letter.to_string(),
            mode: ClientMode::Frames,
        }
    }
}

impl ModelClient for FixedClient {
    fn model_id(&self) -> &str {
        &self.id
    }
    fn mode(&self) -> ClientMode {
        self.mode
    }
    fn reports_latency(&self) -> bool {
        false
    }
    fn complete(&self, _: &[Message]) -> Result<String, ClientError> {
        Ok(self.text.clone())
    }
}

/// Script file layout for [`ScriptedClient`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Script {
    #[serde(default)]
    pub model_id: Option<String>,
    #[serde(default)]
    pub mode: Option<ClientMode>,
    pub default: String,
    /// messages_key -> successive responses, cycled per call.
    #[serde(default)]
    pub responses: BTreeMap<String, Vec<String>>,
}

/// Deterministic mock: hashes the messages and looks the key up in a table.
/// A key with several responses returns them in call order, so repeated
/// trials of one prompt can differ.
#[derive(Debug)]
pub struct ScriptedClient {
    id: String,
    mode: ClientMode,
    script: Script,
    calls: Mutex<HashMap<String, usize>>,
}

impl ScriptedClient {
    pub fn new(script: Script) -> Self {
        ScriptedClient {
            id: script.model_id.clone().unwrap_or_else(|| "mock:script".into()),
            mode: script.mode.unwrap_or(ClientMode::Frames),
            script,
            calls: Mutex::new(HashMap::new()),
        }
    }
}

impl ModelClient for ScriptedClient {
    fn model_id(&self) -> &str {
        &self.id
    }
    fn mode(&self) -> ClientMode {
        self.mode
    }
    fn reports_latency(&self) -> bool {
        false
    }
    fn complete(&self, messages: &[Message]) -> Result<String, ClientError> {
        let key = messages_key(messages);
        let Some(seq) = self.script.responses.get(&key).filter(|s| !s.is_empty()) else {
            return Ok(self.script.default.clone());
        };
        let mut calls = self.calls.lock().expect("call table poisoned");
        let n = calls.entry(key).or_insert(0);
        let out = seq[*n % seq.len()].clone();
        *n += 1;
        Ok(out)
    }
}

const REFUSALS: [&str; 7] = [
    "i cannot",
    "i can't",
    "i am unable",
    "i'm unable",
    "unable to determine",
    "sorry",
    "i'm not able",
];

const ORDINALS: [&str; 8] = ["first", "second", "third", "fourth", "fifth", "sixth", "seventh", "eighth"];

/// Rule-based stand-in for an LLM judge. It reads the model response and the
/// options out of the judge prompt and applies a fixed rule table.
#[derive(Debug, Clone, Default)]
pub struct HeuristicJudge;

impl HeuristicJudge {
    pub fn decide(response: &str, options: &[(char, String)]) -> char {
        let r = response.trim();
        let lower = r.to_lowercase();
        if r.is_empty() || REFUSALS.iter().any(|p| lower.contains(p)) {
            return 'X';
        }
        let valid: Vec<char> = options.iter().map(|(l, _)| *l).collect();
        let mut found: Vec<char> = Vec::new();
        let add = |found: &mut Vec<char>, c: char| {
            if valid.contains(&c) && !found.contains(&c) {
                found.push(c);
            }
        };
        let words: Vec<&str> = r
            .split(|c: char| c.is_whitespace() || c == ',' || c == ';' || c == ':')
            .filter(|w| !w.is_empty())
            .collect();
        for (i, w) in words.iter().enumerate() {
            let core = w.trim_matches(|c: char| !c.is_alphanumeric());
            let single = core.len() == 1 && core.chars().all(|c| c.is_ascii_uppercase());
            let wrapped = w.starts_with('(') || w.ends_with(')') || w.ends_with('.');
            // A leading bare "A" is usually the article.
            let article = i == 0
                && !wrapped
                && words.get(1).is_some_and(|n| {
                    n.starts_with(|c: char| c.is_lowercase()) && !matches!(*n, "or" | "and" | "is")
                });
            if single && core != "I" && !article {
                add(&mut found, core.chars().next().expect("one char"));
            }
        }
        if found.is_empty() {
            for (k, o) in ORDINALS.iter().enumerate() {
                let hit = lower
                    .split(|c: char| !c.is_alphanumeric())
                    .any(|w| w == *o);
                if hit {
                    add(&mut found, (b'A' + k as u8) as char);
                }
            }
        }
        if found.is_empty() {
            for (l, text) in options {
                if !text.is_empty() && lower.contains(&text.to_lowercase()) {
                    add(&mut found, *l);
                }
            }
        }
        match found.as_slice() {
            [c] => *c,
            _ => 'X',
        }
    }

    /// Pull (response, options) back out of a judge prompt.
    pub fn parse_prompt(prompt: &str) -> Option<(String, Vec<(char, String)>)> {
        let (_, rest) = prompt.split_once("The model's response was:\n\n")?;
        let (response, _) = rest.split_once("\n\nYour task is to determine")?;
        let (_, opt) = prompt.split_once("Available options are: ")?;
        let (opt, _) = opt.split_once("\n\nThe model's response was:")?;
        let options = opt
            .split('\n')
            .filter_map(|line| {
                let (l, t) = line.split_once(". ")?;
                let c = l.chars().next().filter(|_| l.len() == 1)?;
                Some((c, t.to_string()))
            })
            .collect();
        Some((response.to_string(), options))
    }
}

impl ModelClient for HeuristicJudge {
    fn model_id(&self) -> &str {
        "heuristic-judge"
    }
    fn mode(&self) -> ClientMode {
        ClientMode::TextOnly
    }
    fn reports_latency(&self) -> bool {
        false
    }
    fn complete(&self, messages: &[Message]) -> Result<String, ClientError> {
        let prompt: String = messages.iter().map(Message::text).collect();
        let (response, options) = HeuristicJudge::parse_prompt(&prompt)
            .ok_or_else(|| ClientError::Permanent("not a judge prompt".into()))?;
        Ok(HeuristicJudge::decide(&response, &options).to_string())
    }
}

/// Chat-completions style HTTP client.
#[derive(Debug, Clone)]
pub struct HttpClient {
    pub endpoint: String,
    pub model: String,
    pub api_key: Option<String>,
    pub mode: ClientMode,
    pub frame_cap: Option<usize>,
    /// Frame images are read from `<frame_root>/<video_id>/<ms>.jpg`.
    pub frame_root: Option<PathBuf>,
    pub timeout: Duration,
}

impl HttpClient {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        HttpClient {
            endpoint: endpoint.into(),
            model: model.into(),
            api_key: None,
            mode: ClientMode::Frames,
            frame_cap: None,
            frame_root: None,
            timeout: Duration::from_secs(120),
        }
    }

    fn frame_path(&self, video_id: &str, t_s: f64) -> Option<PathBuf> {
        let ms = (t_s * 1000.0).round() as u64;
        self.frame_root.as_ref().map(|r| r.join(video_id).join(format!("{ms}.jpg")))
    }

    pub fn request_body(&self, messages: &[Message]) -> Result<Value, ClientError> {
        let mut out = Vec::new();
        for m in messages {
            let mut content = Vec::new();
            for p in &m.parts {
                content.push(match p {
                    Part::Text { text } => json!({"type": "text", "text": text}),
                    Part::Frame { video_id, t_s } => {
                        let path = self
                            .frame_path(video_id, *t_s)
                            .ok_or_else(|| ClientError::Permanent("no frame root configured".into()))?;
                        let bytes = std::fs::read(&path)
                            .map_err(|e| ClientError::Permanent(format!("{}: {e}", path.display())))?;
                        let b64 = base64::engine::general_purpose::STANDARD.encode(bytes);
                        json!({"type": "image_url", "image_url": {"url": format!("data:image/jpeg;base64,{b64}")}})
                    }
                    Part::Video { video_id } => json!({"type": "video_url", "video_url": {"url": video_id}}),
                });
            }
            let role = match m.role {
                Role::System => "system",
                Role::User => "user",
            };
            out.push(json!({"role": role, "content": content}));
        }
        Ok(json!({"model": self.model, "messages": out, "temperature": 0}))
    }
}

impl ModelClient for HttpClient {
    fn model_id(&self) -> &str {
        &self.model
    }
    fn mode(&self) -> ClientMode {
        self.mode
    }
    fn frame_cap(&self) -> Option<usize> {
        self.frame_cap
    }
    fn complete(&self, messages: &[Message]) -> Result<String, ClientError> {
        let body = self.request_body(messages)?;
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(self.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let mut req = agent.post(&self.endpoint);
        if let Some(k) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {k}"));
        }
        let mut resp = req.send_json(&body).map_err(|e| ClientError::Transport {
            message: e.to_string(),
            transient: true,
        })?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| ClientError::Transport {
            message: e.to_string(),
            transient: true,
        })?;
        if status == 429 || status >= 500 {
            return Err(ClientError::Transport {
                message: format!("http {status}"),
                transient: true,
            });
        }
        if status >= 400 {
            return Err(ClientError::Permanent(format!("http {status}: {text}")));
        }
        let v: Value =
            serde_json::from_str(&text).map_err(|e| ClientError::Permanent(format!("bad response body: {e}")))?;
        let choice = &v["choices"][0];
        if choice["finish_reason"] == "content_filter" {
            return Err(ClientError::Refused("content_filter".into()));
        }
        if let Some(r) = choice["message"]["refusal"].as_str() {
            return Err(ClientError::Refused(r.to_string()));
        }
        choice["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| ClientError::Permanent("response has no message content".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;

    fn opts(n: usize) -> Vec<(char, String)> {
        ["reloads", "jumps", "crouches", "sprints"][..n]
            .iter()
            .enumerate()
            .map(|(i, t)| ((b'A' + i as u8) as char, t.to_string()))
            .collect()
    }

    #[test]
    fn heuristic_rules() {
        let o = opts(4);
        assert_eq!(HeuristicJudge::decide("The answer is C.", &o), 'C');
        assert_eq!(HeuristicJudge::decide("I believe the second option is right", &o), 'B');
        assert_eq!(HeuristicJudge::decide("The player jumps over the wall", &o), 'B');
        assert_eq!(HeuristicJudge::decide("", &o), 'X');
        assert_eq!(HeuristicJudge::decide("Sorry, I cannot help", &o), 'X');
        assert_eq!(HeuristicJudge::decide("Either A or B", &o), 'X');
        assert_eq!(HeuristicJudge::decide("I think E.", &o), 'X');
    }

    #[test]
    fn scripted_keys_and_cycles() {
        let m = vec![Message::user_text("hello")];
        let key = messages_key(&m);
        let script = Script {
            default: "Z".into(),
            responses: BTreeMap::from([(key, vec!["A".into(), "B".into()])]),
            ..Default::default()
        };
        let c = ScriptedClient::new(script);
        assert_eq!(c.complete(&m).unwrap(), "A");
        assert_eq!(c.complete(&m).unwrap(), "B");
        assert_eq!(c.complete(&m).unwrap(), "A");
        assert_eq!(c.complete(&[Message::user_text("other")]).unwrap(), "Z");
    }

    /// Loopback server answering with the request body as message content.
    fn echo_server(status: u16) -> (String, std::thread::JoinHandle<()>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let h = std::thread::spawn(move || {
            let (mut s, _) = listener.accept().unwrap();
            let mut r = BufReader::new(s.try_clone().unwrap());
            let mut len = 0;
            loop {
                let mut line = String::new();
                r.read_line(&mut line).unwrap();
                if line == "\r\n" {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
            }
            let mut body = vec![0; len];
            r.read_exact(&mut body).unwrap();
            let reply = json!({"choices": [{"message": {"content": String::from_utf8(body).unwrap()}}]}).to_string();
            write!(
                s,
                "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{reply}",
                reply.len()
            )
            .unwrap();
        });
        (format!("http://{addr}/v1/chat/completions"), h)
    }

    #[test]
    fn http_round_trip_reproduces_body() {
        let (url, h) = echo_server(200);
        let c = HttpClient::new(url, "m1");
        let msgs = vec![Message::user_text("Q: which?")];
        let out = c.complete(&msgs).unwrap();
        h.join().unwrap();
        let sent: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(sent, c.request_body(&msgs).unwrap());
        assert_eq!(sent["messages"][0]["content"][0]["text"], "Q: which?");
    }

    #[test]
    fn http_status_classes() {
        let (url, h) = echo_server(503);
        let err = HttpClient::new(url, "m").complete(&[Message::user_text("x")]).unwrap_err();
        h.join().unwrap();
        assert!(err.is_transient());
        let (url, h) = echo_server(401);
        let err = HttpClient::new(url, "m").complete(&[Message::user_text("x")]).unwrap_err();
        h.join().unwrap();
        assert!(matches!(err, ClientError::Permanent(_)));
    }

    #[test]
    fn frames_need_assets() {
        let c = HttpClient::new("http://127.0.0.1:9", "m");
        let m = Message {
            role: Role::User,
            parts: vec![Part::Frame {
                video_id: "v".into(),
                t_s: 1.0,
            }],
        };
        assert!(matches!(c.request_body(&[m]), Err(ClientError::Permanent(_))));
    }
}
