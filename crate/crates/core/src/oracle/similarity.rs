use std::collections::{HashMap, HashSet};
use std::time::Duration;

use parking_lot::Mutex;
use serde::Deserialize;

use super::OracleError;

/// Text similarity in [0, 1] used by the similarity filter and the
/// no-repeat selection.
pub trait Similarity: Send + Sync {
    fn id(&self) -> String;
    fn score(&self, a: &str, b: &str) -> Result<f64, OracleError>;
}

/// Jaccard overlap of lowercased alphanumeric tokens.
#[derive(Debug, Clone, Copy, Default)]
pub struct LexicalSimilarity;

fn tokens(s: &str) -> HashSet<String> {
    s.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

impl Similarity for LexicalSimilarity {
    fn id(&self) -> String {
        "lexical-jaccard".into()
    }

    fn score(&self, a: &str, b: &str) -> Result<f64, OracleError> {
        let (ta, tb) = (tokens(a), tokens(b));
        if ta.is_empty() || tb.is_empty() {
            return Ok(if a.trim() == b.trim() { 1.0 } else { 0.0 });
        }
        let inter = ta.intersection(&tb).count() as f64;
        let union = ta.union(&tb).count() as f64;
        Ok(inter / union)
    }
}

/// Cosine similarity of embeddings from an OpenAI-compatible endpoint.
pub struct EmbeddingSimilarity {
    endpoint: String,
    model: String,
    api_key: Option<String>,
    agent: ureq::Agent,
    memo: Mutex<HashMap<String, Vec<f64>>>,
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingItem>,
}

#[derive(Deserialize)]
struct EmbeddingItem {
    embedding: Vec<f64>,
}

impl EmbeddingSimilarity {
    pub fn new(
        endpoint: impl Into<String>,
        model: impl Into<String>,
        api_key: Option<String>,
    ) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(60)))
            .build()
            .into();
        Self {
            endpoint: endpoint.into(),
            model: model.into(),
            api_key,
            agent,
            memo: Mutex::new(HashMap::new()),
        }
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, OracleError> {
        if let Some(v) = self.memo.lock().get(text) {
            return Ok(v.clone());
        }
        let mut req = self.agent.post(&self.endpoint);
        if let Some(k) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {k}"));
        }
        let body = serde_json::json!({ "model": self.model, "input": text });
        let mut resp = req
            .send_json(&body)
            .map_err(|e| OracleError::Unavailable(format!("embedding request: {e}")))?;
        let parsed: EmbeddingResponse = resp
            .body_mut()
            .read_json()
            .map_err(|e| OracleError::Unavailable(format!("embedding response: {e}")))?;
        let v = parsed
            .data
            .into_iter()
            .next()
            .map(|d| d.embedding)
            .ok_or_else(|| OracleError::Unavailable("empty embedding response".into()))?;
        self.memo.lock().insert(text.to_string(), v.clone());
        Ok(v)
    }
}

pub(crate) fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).clamp(0.0, 1.0)
    }
}

impl Similarity for EmbeddingSimilarity {
    fn id(&self) -> String {
        format!("embedding:{}", self.model)
    }

    fn score(&self, a: &str, b: &str) -> Result<f64, OracleError> {
        Ok(cosine(&self.embed(a)?, &self.embed(b)?))
    }
}
