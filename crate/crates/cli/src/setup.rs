//! Configuration loading, backend wiring and run manifests.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use analogy_core::config::{BackendKind, OracleConfig, SimilarityKind};
use analogy_core::oracle::{
    Backend, CompletionCache, EmbeddingSimilarity, HttpBackend, HttpConfig, LexicalSimilarity,
    Oracle, ReplayBackend, ScriptedBackend, Similarity,
};
use analogy_core::{Error, RunConfig};
use anyhow::{Context as _, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;

const RETRY_BACKOFF: Duration = Duration::from_millis(500);

/// Parses a lowercase enum name through its serde representation.
pub fn serde_enum<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

pub fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    let Some(path) = path else {
        return Ok(RunConfig::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
        .map_err(Into::into)
}

fn http_config(cfg: &OracleConfig) -> Result<HttpConfig> {
    let env = HttpConfig::from_env();
    let endpoint = cfg
        .endpoint
        .clone()
        .or_else(|| env.as_ref().map(|h| h.endpoint.clone()))
        .ok_or_else(|| {
            Error::Config("http backend needs oracle.endpoint or ORACLE_ENDPOINT".into())
        })?;
    let model = cfg
        .model
        .clone()
        .or_else(|| env.as_ref().map(|h| h.model.clone()))
        .unwrap_or_else(|| "gpt-3.5-turbo".into());
    Ok(HttpConfig {
        endpoint,
        api_key: std::env::var("ORACLE_API_KEY").ok(),
        model,
        timeout_secs: 120,
    })
}

pub fn build_oracle(cfg: &OracleConfig) -> Result<Oracle> {
    let backend: Arc<dyn Backend> = match cfg.backend {
        BackendKind::Http => Arc::new(HttpBackend::new(http_config(cfg)?)),
        BackendKind::Replay => Arc::new(ReplayBackend),
        BackendKind::Scripted => {
            let script = cfg.script.as_deref().expect("validated");
            Arc::new(
                ScriptedBackend::from_json_file(script)
                    .map_err(|e| Error::Config(format!("{}: {e}", script.display())))?,
            )
        }
    };
    let mut oracle = Oracle::new(backend)
        .with_concurrency(cfg.concurrency)
        .with_retries(cfg.retries, RETRY_BACKOFF);
    if let Some(path) = &cfg.cache {
        if cfg.backend == BackendKind::Replay && !path.exists() {
            return Err(
                Error::Config(format!("replay cache {} does not exist", path.display())).into(),
            );
        }
        let cache = CompletionCache::open(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        oracle = oracle.with_cache(Arc::new(cache));
    }
    Ok(oracle)
}

pub fn build_similarity(cfg: &OracleConfig) -> Result<Box<dyn Similarity>> {
    Ok(match cfg.similarity {
        SimilarityKind::Lexical => Box::new(LexicalSimilarity),
        SimilarityKind::Embedding => {
            let endpoint = cfg.embedding_endpoint.clone().ok_or_else(|| {
                Error::Config("embedding similarity needs oracle.embedding_endpoint".into())
            })?;
            let model = cfg
                .embedding_model
                .clone()
                .unwrap_or_else(|| "text-embedding-3-small".into());
            Box::new(EmbeddingSimilarity::new(
                endpoint,
                model,
                std::env::var("ORACLE_API_KEY").ok(),
            ))
        }
    })
}

/// Record of one command invocation, written next to its outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: &'static str,
    pub config_hash: String,
    pub config: RunConfig,
    pub backend_ids: Vec<String>,
    pub counts: BTreeMap<String, usize>,
    pub outputs: Vec<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub details: Option<serde_json::Value>,
}

impl RunManifest {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION"),
            config_hash: config.hash(),
            config: config.clone(),
            backend_ids: Vec::new(),
            counts: BTreeMap::new(),
            outputs: Vec::new(),
            details: None,
        }
    }

    pub fn count(&mut self, key: &str, n: usize) -> &mut Self {
        self.counts.insert(key.to_string(), n);
        self
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json + "\n")
            .with_context(|| format!("writing manifest {}", path.display()))
    }
}

/// `<anchor>.manifest.json` unless an explicit path was given.
pub fn manifest_path(explicit: Option<&Path>, anchor: &Path) -> PathBuf {
    explicit.map(Path::to_path_buf).unwrap_or_else(|| {
        let mut s = anchor.as_os_str().to_os_string();
        s.push(".manifest.json");
        PathBuf::from(s)
    })
}

pub fn require<'a>(value: Option<&'a PathBuf>, what: &str) -> Result<&'a PathBuf> {
    value.ok_or_else(|| {
        Error::Config(format!(
            "missing {what}; pass the flag or set it under [paths]"
        ))
        .into()
    })
}
