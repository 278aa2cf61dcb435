use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};

use super::{Message, OracleError, Sampling, Transcript};

/// One line of the on-disk cache.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheRecord {
    pub key: String,
    pub transcript: Vec<Message>,
    pub sampling: Sampling,
    pub completions: Vec<String>,
}

/// Transcript-keyed completion store, optionally persisted as append-only
/// JSON lines. Later lines win on load.
pub struct CompletionCache {
    entries: RwLock<HashMap<String, Vec<String>>>,
    file: Option<Mutex<File>>,
    path: Option<PathBuf>,
}

impl CompletionCache {
    pub fn in_memory() -> Self {
        Self {
            entries: RwLock::new(HashMap::new()),
            file: None,
            path: None,
        }
    }

    /// Loads `path` if it exists and appends new entries to it.
    pub fn open(path: &Path) -> Result<Self, OracleError> {
        let io = |e: std::io::Error| OracleError::Cache(format!("{}: {e}", path.display()));
        let mut entries = HashMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(path).map_err(io)?);
            for (i, line) in reader.lines().enumerate() {
                let line = line.map_err(io)?;
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<CacheRecord>(&line) {
                    Ok(r) => {
                        entries.insert(r.key, r.completions);
                    }
                    Err(e) => {
                        tracing::warn!(line = i + 1, error = %e, "skipping malformed cache line")
                    }
                }
            }
        } else if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent).map_err(io)?;
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(io)?;
        Ok(Self {
            entries: RwLock::new(entries),
            file: Some(Mutex::new(file)),
            path: Some(path.to_path_buf()),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn get(&self, key: &str) -> Option<Vec<String>> {
        self.entries.read().get(key).cloned()
    }

    pub fn put(
        &self,
        key: &str,
        transcript: &Transcript,
        completions: &[String],
    ) -> Result<(), OracleError> {
        if let Some(file) = &self.file {
            let record = CacheRecord {
                key: key.to_string(),
                transcript: transcript.messages.clone(),
                sampling: transcript.sampling.clone(),
                completions: completions.to_vec(),
            };
            let mut line =
                serde_json::to_string(&record).map_err(|e| OracleError::Cache(e.to_string()))?;
            line.push('\n');
            let mut f = file.lock();
            f.write_all(line.as_bytes())
                .and_then(|_| f.flush())
                .map_err(|e| OracleError::Cache(e.to_string()))?;
        }
        self.entries
            .write()
            .insert(key.to_string(), completions.to_vec());
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.read().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
