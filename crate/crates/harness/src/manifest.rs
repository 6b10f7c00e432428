//! Run manifest and the partial manifest used to resume interrupted scans.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::output::{sha256_hex, write_atomic};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const PARTIAL_FILE: &str = "manifest.partial.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTime {
    pub stage: String,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheHit {
    pub kind: String,
    pub key: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputDigest {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: u32,
    pub tool_version: String,
    pub experiment: String,
    pub config_hash: String,
    pub seed: u64,
    pub threads: usize,
    pub stages: Vec<StageTime>,
    pub cache_hits: Vec<CacheHit>,
    pub resumed_rows: usize,
    pub outputs: Vec<OutputDigest>,
}

impl RunManifest {
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| HarnessError::io("reading manifest", &path, e))?;
        serde_json::from_str(&text).map_err(|e| HarnessError::Validation(format!("{}: {e}", path.display())))
    }

    pub fn digest(&self, file: &str) -> Option<&str> {
        self.outputs.iter().find(|o| o.file == file).map(|o| o.sha256.as_str())
    }
}

/// Mutable run state: stage timers, cache hits and written outputs.
#[derive(Debug)]
pub struct Recorder {
    pub out_dir: PathBuf,
    stages: Vec<StageTime>,
    cache_hits: Vec<CacheHit>,
    outputs: Vec<OutputDigest>,
    written: Vec<PathBuf>,
    pub resumed_rows: usize,
}

impl Recorder {
    pub fn new(out_dir: PathBuf) -> Self {
        Self {
            out_dir,
            stages: Vec::new(),
            cache_hits: Vec::new(),
            outputs: Vec::new(),
            written: Vec::new(),
            resumed_rows: 0,
        }
    }

    pub fn stage<T>(&mut self, name: &str, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f(self);
        self.stages.push(StageTime {
            stage: name.to_string(),
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });
        out
    }

    pub fn cache_hit(&mut self, kind: &str, key: impl Into<String>) {
        self.cache_hits.push(CacheHit {
            kind: kind.to_string(),
            key: key.into(),
        });
    }

    /// Writes an output file and records its digest.
    pub fn write(&mut self, file: &str, bytes: &[u8]) -> Result<()> {
        let path = self.out_dir.join(file);
        write_atomic(&path, bytes)?;
        self.written.push(path);
        self.outputs.push(OutputDigest {
            file: file.to_string(),
            bytes: bytes.len(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    /// Removes every output written so far.
    pub fn discard(&mut self) {
        for p in self.written.drain(..) {
            let _ = fs::remove_file(p);
        }
        self.outputs.clear();
    }

    pub fn finish(self, experiment: &str, config_hash: String, seed: u64) -> RunManifest {
        RunManifest {
            schema: crate::config::SCHEMA_VERSION,
            tool_version: crate::VERSION.to_string(),
            experiment: experiment.to_string(),
            config_hash,
            seed,
            threads: rayon::current_num_threads(),
            stages: self.stages,
            cache_hits: self.cache_hits,
            resumed_rows: self.resumed_rows,
            outputs: self.outputs,
        }
    }
}

/// Completed rows of an unfinished scan, valid only for the same config and version.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub config_hash: String,
    pub tool_version: String,
    pub rows: BTreeMap<String, Vec<String>>,
}

impl Checkpoint {
    pub fn path(dir: &Path) -> PathBuf {
        dir.join(PARTIAL_FILE)
    }

    /// Loads a matching checkpoint; a stale or unreadable one is ignored.
    pub fn resume(dir: &Path, config_hash: &str) -> Self {
        let fresh = Self {
            config_hash: config_hash.to_string(),
            tool_version: crate::VERSION.to_string(),
            rows: BTreeMap::new(),
        };
        let Ok(text) = fs::read_to_string(Self::path(dir)) else {
            return fresh;
        };
        match serde_json::from_str::<Self>(&text) {
            Ok(cp) if cp.config_hash == fresh.config_hash && cp.tool_version == fresh.tool_version => cp,
            _ => {
                tracing::warn!(dir = %dir.display(), "ignoring a partial manifest from a different config or version");
                fresh
            }
        }
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let bytes = serde_json::to_vec(self).expect("checkpoint serializes");
        write_atomic(&Self::path(dir), &bytes)
    }

    pub fn remove(dir: &Path) {
        let _ = fs::remove_file(Self::path(dir));
    }
}
