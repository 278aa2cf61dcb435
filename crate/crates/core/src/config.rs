//! Run configuration with the default operating point and range checks.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::program::Limits;

/// Conceptualization sampling and selection thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionConfig {
    /// Similar questions requested per abstraction.
    pub n: usize,
    /// CoT samples per similar question.
    pub k: usize,
    /// Agreeing samples required to admit a silver label.
    pub x: usize,
    pub high_threshold_floor: usize,
    pub high_threshold_frac: f64,
    pub low_threshold: usize,
    pub sim_cutoff: f64,
    pub max_error_questions: usize,
    pub min_oracle_calls: usize,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            n: 20,
            k: 10,
            x: 9,
            high_threshold_floor: 3,
            high_threshold_frac: 0.75,
            low_threshold: 2,
            sim_cutoff: 0.95,
            max_error_questions: 2,
            min_oracle_calls: 2,
        }
    }
}

impl SelectionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("selection.n must be at least 1".into()));
        }
        if self.x == 0 || self.x > self.k {
            return Err(Error::Config(format!(
                "selection.x must satisfy 1 <= x <= k (x={}, k={})",
                self.x, self.k
            )));
        }
        if !(self.high_threshold_frac > 0.0 && self.high_threshold_frac <= 1.0) {
            return Err(Error::Config(
                "selection.high_threshold_frac must be in (0, 1]".into(),
            ));
        }
        if !(self.sim_cutoff > 0.0 && self.sim_cutoff <= 1.0) {
            return Err(Error::Config(
                "selection.sim_cutoff must be in (0, 1]".into(),
            ));
        }
        Ok(())
    }

    /// `max(floor, frac * m)` without rounding.
    pub fn high_threshold(&self, m: usize) -> f64 {
        (self.high_threshold_floor as f64).max(self.high_threshold_frac * m as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimplifyConfig {
    pub sample_count: usize,
    pub quota: usize,
    pub max_iters: usize,
}

impl Default for SimplifyConfig {
    fn default() -> Self {
        Self {
            sample_count: 10,
            quota: 9,
            max_iters: 5,
        }
    }
}

impl SimplifyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.quota == 0 || self.quota > self.sample_count {
            return Err(Error::Config(format!(
                "simplification.quota must satisfy 1 <= quota <= sample_count (quota={}, sample_count={})",
                self.quota, self.sample_count
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InferenceConfig {
    pub k: usize,
    pub rag: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub no_repeat: Option<f64>,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        Self {
            k: 10,
            rag: false,
            no_repeat: None,
        }
    }
}

impl InferenceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("inference.k must be at least 1".into()));
        }
        if let Some(c) = self.no_repeat {
            check_cutoff(c)?;
        }
        Ok(())
    }
}

pub(crate) fn check_cutoff(cutoff: f64) -> Result<()> {
    if cutoff > 0.0 && cutoff <= 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "similarity cutoff {cutoff} is outside (0, 1]"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Http,
    Replay,
    Scripted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimilarityKind {
    Lexical,
    Embedding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub backend: BackendKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub script: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cache: Option<PathBuf>,
    pub concurrency: usize,
    pub retries: u32,
    pub similarity: SimilarityKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub embedding_endpoint: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub embedding_model: Option<String>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            backend: BackendKind::Http,
            endpoint: None,
            model: None,
            script: None,
            cache: None,
            concurrency: 8,
            retries: 3,
            similarity: SimilarityKind::Lexical,
            embedding_endpoint: None,
            embedding_model: None,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.concurrency == 0 {
            return Err(Error::Config(
                "oracle.concurrency must be at least 1".into(),
            ));
        }
        match self.backend {
            BackendKind::Scripted if self.script.is_none() => Err(Error::Config(
                "scripted backend requires oracle.script".into(),
            )),
            BackendKind::Replay if self.cache.is_none() => {
                Err(Error::Config("replay backend requires oracle.cache".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub journal: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub selection: SelectionConfig,
    pub simplification: SimplifyConfig,
    pub inference: InferenceConfig,
    pub oracle: OracleConfig,
    pub limits: Limits,
    pub paths: PathsConfig,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.selection.validate()?;
        self.simplification.validate()?;
        self.inference.validate()?;
        self.oracle.validate()?;
        if self.limits.max_steps == 0 {
            return Err(Error::Config("limits.max_steps must be at least 1".into()));
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON form, excluding concurrency and retry
    /// settings.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.oracle.concurrency = 0;
        canonical.oracle.retries = 0;
        let json = serde_json::to_string(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}
