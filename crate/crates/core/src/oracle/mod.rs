//! Chat-completion oracle: prompt templates, transcripts, backends, caching
//! and output parsing.

mod answer;
mod backend;
mod cache;
mod similarity;
mod templates;

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use parking_lot::{Condvar, Mutex};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use answer::{extract_final_answer, Answer, AnswerKind, AnswerMode};
pub use backend::{
    Backend, FnBackend, HttpBackend, HttpConfig, ReplayBackend, Rule, Script, ScriptedBackend,
};
pub use cache::{CacheRecord, CompletionCache};
pub use similarity::{EmbeddingSimilarity, LexicalSimilarity, Similarity};
pub use templates::{render, TaskId};

/// Temperature for the K sampled chains of thought and program samples.
pub const SAMPLING_TEMPERATURE: f64 = 0.7;
/// Token cap for short retrieval paragraphs.
pub const PARAGRAPH_MAX_TOKENS: u32 = 512;
pub const DEFAULT_MAX_TOKENS: u32 = 1024;

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("oracle unavailable: {0}")]
    Unavailable(String),
    #[error("transient oracle failure: {0}")]
    Transient(String),
    #[error("replay miss for transcript {key}")]
    ReplayMiss { key: String },
    #[error("no scripted reply for: {0}")]
    Unscripted(String),
    #[error("invalid transcript: {0}")]
    InvalidTranscript(String),
    #[error("template render error: {0}")]
    Render(String),
    #[error("cache error: {0}")]
    Cache(String),
}

impl OracleError {
    /// Failures that mean the configured backend cannot serve requests at all.
    pub fn is_unavailable(&self) -> bool {
        matches!(
            self,
            OracleError::Unavailable(_) | OracleError::ReplayMiss { .. }
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: Role::System,
            content: content.into(),
        }
    }
    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }
    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sampling {
    pub temperature: f64,
    pub n: u32,
    pub max_tokens: u32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stop: Vec<String>,
}

impl Sampling {
    /// Single greedy completion.
    pub fn deterministic() -> Self {
        Self {
            temperature: 0.0,
            n: 1,
            max_tokens: DEFAULT_MAX_TOKENS,
            stop: Vec::new(),
        }
    }

    /// `n` samples at [`SAMPLING_TEMPERATURE`].
    pub fn sampled(n: u32) -> Self {
        Self {
            temperature: SAMPLING_TEMPERATURE,
            n,
            max_tokens: DEFAULT_MAX_TOKENS,
            stop: Vec::new(),
        }
    }

    pub fn with_max_tokens(mut self, max_tokens: u32) -> Self {
        self.max_tokens = max_tokens;
        self
    }
}

impl Default for Sampling {
    fn default() -> Self {
        Self::deterministic()
    }
}

/// One unit of LLM interaction: ordered messages plus sampling settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub messages: Vec<Message>,
    pub sampling: Sampling,
}

impl Transcript {
    pub fn new(messages: Vec<Message>, sampling: Sampling) -> Self {
        Self { messages, sampling }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self::new(vec![Message::user(content)], Sampling::deterministic())
    }

    pub fn with_sampling(mut self, sampling: Sampling) -> Self {
        self.sampling = sampling;
        self
    }

    pub fn last_content(&self) -> &str {
        self.messages
            .last()
            .map(|m| m.content.as_str())
            .unwrap_or("")
    }

    pub fn validate(&self) -> Result<(), OracleError> {
        if self.sampling.n == 0 {
            return Err(OracleError::InvalidTranscript(
                "sample count n must be at least 1".into(),
            ));
        }
        if self.messages.is_empty() {
            return Err(OracleError::InvalidTranscript("no messages".into()));
        }
        if self.messages.iter().skip(1).any(|m| m.role == Role::System) {
            return Err(OracleError::InvalidTranscript(
                "system message allowed only in leading position".into(),
            ));
        }
        if self.messages.last().map(|m| m.role) == Some(Role::Assistant) {
            return Err(OracleError::InvalidTranscript(
                "transcript ends with an assistant turn".into(),
            ));
        }
        Ok(())
    }

    /// Stable cache key over messages and sampling settings.
    pub fn key(&self) -> String {
        let canonical = serde_json::to_string(self).expect("transcript serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}

/// Counting semaphore bounding in-flight backend requests.
struct Permits {
    available: Mutex<usize>,
    freed: Condvar,
}

impl Permits {
    fn new(n: usize) -> Self {
        Self {
            available: Mutex::new(n.max(1)),
            freed: Condvar::new(),
        }
    }

    fn acquire(&self) -> PermitGuard<'_> {
        let mut n = self.available.lock();
        while *n == 0 {
            self.freed.wait(&mut n);
        }
        *n -= 1;
        PermitGuard(self)
    }
}

struct PermitGuard<'a>(&'a Permits);

impl Drop for PermitGuard<'_> {
    fn drop(&mut self) {
        *self.0.available.lock() += 1;
        self.0.freed.notify_one();
    }
}

/// Thread-safe oracle client: cache lookup, bounded concurrency, retries.
pub struct Oracle {
    backend: Arc<dyn Backend>,
    cache: Arc<CompletionCache>,
    permits: Permits,
    retries: u32,
    retry_backoff: Duration,
    requests: AtomicU64,
    backend_requests: AtomicU64,
}

impl Oracle {
    pub fn new(backend: Arc<dyn Backend>) -> Self {
        Self {
            backend,
            cache: Arc::new(CompletionCache::in_memory()),
            permits: Permits::new(8),
            retries: 3,
            retry_backoff: Duration::from_millis(250),
            requests: AtomicU64::new(0),
            backend_requests: AtomicU64::new(0),
        }
    }

    pub fn with_cache(mut self, cache: Arc<CompletionCache>) -> Self {
        self.cache = cache;
        self
    }

    pub fn with_concurrency(mut self, limit: usize) -> Self {
        self.permits = Permits::new(limit);
        self
    }

    pub fn with_retries(mut self, retries: u32, backoff: Duration) -> Self {
        self.retries = retries;
        self.retry_backoff = backoff;
        self
    }

    pub fn backend_id(&self) -> String {
        self.backend.id()
    }

    pub fn cache(&self) -> &CompletionCache {
        &self.cache
    }

    /// Total `complete` calls, including cache hits.
    pub fn request_count(&self) -> u64 {
        self.requests.load(Ordering::Relaxed)
    }

    /// Calls that reached the backend.
    pub fn backend_request_count(&self) -> u64 {
        self.backend_requests.load(Ordering::Relaxed)
    }

    /// Returns exactly `transcript.sampling.n` completions.
    pub fn complete(&self, transcript: &Transcript) -> Result<Vec<String>, OracleError> {
        transcript.validate()?;
        self.requests.fetch_add(1, Ordering::Relaxed);
        let key = transcript.key();
        if let Some(hit) = self.cache.get(&key) {
            return Ok(hit);
        }
        let n = transcript.sampling.n as usize;
        let mut attempt = 0;
        let completions = loop {
            let result = {
                let _permit = self.permits.acquire();
                self.backend_requests.fetch_add(1, Ordering::Relaxed);
                self.backend.complete(transcript)
            };
            match result {
                Ok(c) => break c,
                Err(OracleError::Transient(msg)) => {
                    if attempt >= self.retries {
                        return Err(OracleError::Unavailable(format!(
                            "giving up after {} attempts: {msg}",
                            attempt + 1
                        )));
                    }
                    tracing::warn!(attempt, %msg, "retrying oracle request");
                    std::thread::sleep(self.retry_backoff * 2u32.pow(attempt));
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        };
        if completions.len() < n {
            return Err(OracleError::Unavailable(format!(
                "backend returned {} of {n} completions",
                completions.len()
            )));
        }
        let completions: Vec<String> = completions.into_iter().take(n).collect();
        self.cache.put(&key, transcript, &completions)?;
        Ok(completions)
    }

    pub fn complete_one(&self, transcript: &Transcript) -> Result<String, OracleError> {
        let mut out = self.complete(transcript)?;
        Ok(out.swap_remove(0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::AtomicUsize;

    #[test]
    fn transcript_invariants() {
        let mut t = Transcript::user("hi");
        assert!(t.validate().is_ok());
        t.sampling.n = 0;
        assert!(t.validate().is_err());
        let t = Transcript::new(
            vec![Message::user("a"), Message::system("late")],
            Sampling::deterministic(),
        );
        assert!(t.validate().is_err());
    }

    #[test]
    fn key_depends_on_sampling() {
        let a = Transcript::user("q");
        let b = Transcript::user("q").with_sampling(Sampling::sampled(10));
        assert_ne!(a.key(), b.key());
        assert_eq!(a.key(), Transcript::user("q").key());
    }

    #[test]
    fn cache_hits_skip_backend() {
        let calls = Arc::new(AtomicUsize::new(0));
        let c = calls.clone();
        let backend = FnBackend::new("count", move |t: &Transcript| {
            c.fetch_add(1, Ordering::SeqCst);
            Ok(vec![format!("echo {}", t.last_content())])
        });
        let oracle = Oracle::new(Arc::new(backend));
        let t = Transcript::user("same");
        let first = oracle.complete(&t).unwrap();
        let second = oracle.complete(&t).unwrap();
        assert_eq!(first, second);
        assert_eq!(calls.load(Ordering::SeqCst), 1);
        assert_eq!(oracle.request_count(), 2);
        assert_eq!(oracle.backend_request_count(), 1);
    }

    #[test]
    fn transient_failures_are_retried_then_give_up() {
        let calls = Arc::new(AtomicUsize::new(0));
        let c = calls.clone();
        let flaky = FnBackend::new("flaky", move |_: &Transcript| {
            if c.fetch_add(1, Ordering::SeqCst) < 2 {
                Err(OracleError::Transient("503".into()))
            } else {
                Ok(vec!["ok".into()])
            }
        });
        let oracle = Oracle::new(Arc::new(flaky)).with_retries(3, Duration::ZERO);
        assert_eq!(oracle.complete_one(&Transcript::user("x")).unwrap(), "ok");

        let dead = FnBackend::new("dead", |_: &Transcript| {
            Err(OracleError::Transient("down".into()))
        });
        let oracle = Oracle::new(Arc::new(dead)).with_retries(2, Duration::ZERO);
        let err = oracle.complete(&Transcript::user("x")).unwrap_err();
        assert!(err.is_unavailable());
    }

    #[test]
    fn short_completion_lists_are_rejected() {
        let backend = FnBackend::new("one", |_: &Transcript| Ok(vec!["a".into()]));
        let oracle = Oracle::new(Arc::new(backend));
        let t = Transcript::user("x").with_sampling(Sampling::sampled(3));
        assert!(oracle.complete(&t).is_err());
    }

    #[test]
    fn concurrency_is_bounded() {
        let in_flight = Arc::new(AtomicUsize::new(0));
        let peak = Arc::new(AtomicUsize::new(0));
        let (f, p) = (in_flight.clone(), peak.clone());
        let backend = FnBackend::new("slow", move |t: &Transcript| {
            let now = f.fetch_add(1, Ordering::SeqCst) + 1;
            p.fetch_max(now, Ordering::SeqCst);
            std::thread::sleep(Duration::from_millis(5));
            f.fetch_sub(1, Ordering::SeqCst);
            Ok(vec![t.last_content().to_string()])
        });
        let oracle = Arc::new(Oracle::new(Arc::new(backend)).with_concurrency(2));
        let handles: Vec<_> = (0..8)
            .map(|i| {
                let o = oracle.clone();
                std::thread::spawn(move || {
                    o.complete_one(&Transcript::user(format!("q{i}"))).unwrap()
                })
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
        assert!(peak.load(Ordering::SeqCst) <= 2);
    }
}
