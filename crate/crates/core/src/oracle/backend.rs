use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use parking_lot::Mutex;
use serde::{Deserialize, Serialize};

use super::{OracleError, Transcript};

/// A completion provider. Implementations must return `sampling.n`
/// completions or an error.
pub trait Backend: Send + Sync {
    /// Identifier recorded in run manifests.
    fn id(&self) -> String;
    fn complete(&self, transcript: &Transcript) -> Result<Vec<String>, OracleError>;
}

/// Backend built from a closure, mainly for tests.
pub struct FnBackend<F> {
    name: String,
    f: F,
}

impl<F> FnBackend<F>
where
    F: Fn(&Transcript) -> Result<Vec<String>, OracleError> + Send + Sync,
{
    pub fn new(name: impl Into<String>, f: F) -> Self {
        Self {
            name: name.into(),
            f,
        }
    }
}

impl<F> Backend for FnBackend<F>
where
    F: Fn(&Transcript) -> Result<Vec<String>, OracleError> + Send + Sync,
{
    fn id(&self) -> String {
        format!("fn:{}", self.name)
    }

    fn complete(&self, transcript: &Transcript) -> Result<Vec<String>, OracleError> {
        (self.f)(transcript)
    }
}

/// Serves only what is already in the completion cache. Every request that
/// reaches it is a miss.
pub struct ReplayBackend;

impl Backend for ReplayBackend {
    fn id(&self) -> String {
        "replay".into()
    }

    fn complete(&self, transcript: &Transcript) -> Result<Vec<String>, OracleError> {
        Err(OracleError::ReplayMiss {
            key: transcript.key(),
        })
    }
}

/// One scripted reply rule. All present conditions must hold for the last
/// message of the transcript.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Rule {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equals: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub contains: Vec<String>,
    /// Exact transcript cache key.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key: Option<String>,
    pub completions: Vec<String>,
}

impl Rule {
    pub fn contains<I, S>(needles: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            contains: needles.into_iter().map(Into::into).collect(),
            ..Self::default()
        }
    }

    pub fn equals(text: impl Into<String>) -> Self {
        Self {
            equals: Some(text.into()),
            ..Self::default()
        }
    }

    pub fn reply<I, S>(mut self, completions: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.completions = completions.into_iter().map(Into::into).collect();
        self
    }

    fn matches(&self, transcript: &Transcript, key: &str) -> bool {
        let last = transcript.last_content();
        self.equals.as_deref().is_none_or(|e| e == last)
            && self.contains.iter().all(|n| last.contains(n.as_str()))
            && self.key.as_deref().is_none_or(|k| k == key)
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Script {
    #[serde(default)]
    pub name: Option<String>,
    pub rules: Vec<Rule>,
    /// Reply used when no rule matches; absent means an error.
    #[serde(default)]
    pub fallback: Option<Vec<String>>,
}

/// Deterministic backend answering from an ordered rule list. The first
/// matching rule wins; its completions are cycled to fill `n`.
pub struct ScriptedBackend {
    name: String,
    rules: Vec<Rule>,
    fallback: Option<Vec<String>>,
    hits: Vec<AtomicUsize>,
    log: Mutex<Vec<Transcript>>,
}

impl ScriptedBackend {
    pub fn new(script: Script) -> Self {
        let hits = script.rules.iter().map(|_| AtomicUsize::new(0)).collect();
        Self {
            name: script.name.unwrap_or_else(|| "script".into()),
            rules: script.rules,
            fallback: script.fallback,
            hits,
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn from_rules(rules: Vec<Rule>) -> Self {
        Self::new(Script {
            name: None,
            rules,
            fallback: None,
        })
    }

    pub fn from_json_file(path: &Path) -> Result<Self, OracleError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| OracleError::Unavailable(format!("{}: {e}", path.display())))?;
        let script: Script = serde_json::from_str(&text)
            .map_err(|e| OracleError::Unavailable(format!("{}: {e}", path.display())))?;
        Ok(Self::new(script))
    }

    pub fn with_fallback<I, S>(mut self, completions: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.fallback = Some(completions.into_iter().map(Into::into).collect());
        self
    }

    /// Times each rule has fired, in rule order.
    pub fn hit_counts(&self) -> Vec<usize> {
        self.hits
            .iter()
            .map(|h| h.load(Ordering::Relaxed))
            .collect()
    }

    /// Every transcript received, in arrival order.
    pub fn received(&self) -> Vec<Transcript> {
        self.log.lock().clone()
    }
}

fn cycle(completions: &[String], n: usize) -> Vec<String> {
    completions.iter().cycle().take(n).cloned().collect()
}

impl Backend for ScriptedBackend {
    fn id(&self) -> String {
        format!("scripted:{}", self.name)
    }

    fn complete(&self, transcript: &Transcript) -> Result<Vec<String>, OracleError> {
        self.log.lock().push(transcript.clone());
        let key = transcript.key();
        let n = transcript.sampling.n as usize;
        for (rule, hits) in self.rules.iter().zip(&self.hits) {
            if rule.matches(transcript, &key) && !rule.completions.is_empty() {
                hits.fetch_add(1, Ordering::Relaxed);
                return Ok(cycle(&rule.completions, n));
            }
        }
        match &self.fallback {
            Some(f) if !f.is_empty() => Ok(cycle(f, n)),
            _ => {
                let mut preview: String = transcript.last_content().chars().take(120).collect();
                if preview.len() < transcript.last_content().len() {
                    preview.push_str("...");
                }
                Err(OracleError::Unscripted(preview))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HttpConfig {
    pub endpoint: String,
    #[serde(default, skip_serializing)]
    pub api_key: Option<String>,
    pub model: String,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
}

fn default_timeout_secs() -> u64 {
    120
}

impl HttpConfig {
    /// Reads `ORACLE_ENDPOINT`, `ORACLE_API_KEY` and `ORACLE_MODEL`.
    pub fn from_env() -> Option<Self> {
        let endpoint = std::env::var("ORACLE_ENDPOINT").ok()?;
        Some(Self {
            endpoint,
            api_key: std::env::var("ORACLE_API_KEY").ok(),
            model: std::env::var("ORACLE_MODEL").unwrap_or_else(|_| "gpt-3.5-turbo".into()),
            timeout_secs: default_timeout_secs(),
        })
    }
}

/// OpenAI-compatible chat-completions client.
pub struct HttpBackend {
    config: HttpConfig,
    agent: ureq::Agent,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: &'a [super::Message],
    temperature: f64,
    n: u32,
    max_tokens: u32,
    #[serde(skip_serializing_if = "<[String]>::is_empty")]
    stop: &'a [String],
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    #[serde(default)]
    content: Option<String>,
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .build()
            .into();
        Self { config, agent }
    }

    fn request(&self, transcript: &Transcript, n: u32) -> Result<Vec<String>, OracleError> {
        let body = ChatRequest {
            model: &self.config.model,
            messages: &transcript.messages,
            temperature: transcript.sampling.temperature,
            n,
            max_tokens: transcript.sampling.max_tokens,
            stop: &transcript.sampling.stop,
        };
        let mut req = self
            .agent
            .post(&self.config.endpoint)
            .header("Content-Type", "application/json");
        if let Some(key) = &self.config.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = match req.send_json(&body) {
            Ok(r) => r,
            Err(ureq::Error::StatusCode(code)) if code == 429 || code >= 500 => {
                return Err(OracleError::Transient(format!("HTTP {code}")))
            }
            Err(ureq::Error::StatusCode(code)) => {
                return Err(OracleError::Unavailable(format!("HTTP {code}")))
            }
            Err(ureq::Error::Io(e)) => return Err(OracleError::Transient(e.to_string())),
            Err(ureq::Error::Timeout(t)) => {
                return Err(OracleError::Transient(format!("timeout: {t}")))
            }
            Err(e) => return Err(OracleError::Unavailable(e.to_string())),
        };
        let parsed: ChatResponse = resp
            .body_mut()
            .read_json()
            .map_err(|e| OracleError::Transient(format!("malformed response: {e}")))?;
        Ok(parsed
            .choices
            .into_iter()
            .map(|c| c.message.content.unwrap_or_default())
            .collect())
    }
}

impl Backend for HttpBackend {
    fn id(&self) -> String {
        format!("http:{}@{}", self.config.model, self.config.endpoint)
    }

    fn complete(&self, transcript: &Transcript) -> Result<Vec<String>, OracleError> {
        let n = transcript.sampling.n;
        let mut out = self.request(transcript, n)?;
        // Some servers ignore `n`; top up with further requests.
        let mut rounds = 0;
        while (out.len() as u32) < n && rounds < n {
            let more = self.request(transcript, n - out.len() as u32)?;
            if more.is_empty() {
                break;
            }
            out.extend(more);
            rounds += 1;
        }
        Ok(out)
    }
}
