//! On-disk spectrum cache keyed by manifold and cutoff.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use tracing::warn;

use sclab_core::manifolds::spectrum::{read_jsonl, write_jsonl};
use sclab_core::manifolds::{enumerate_interval, EigenIndex, ManifoldModel};
use sclab_core::numerics::format_sig17;

use crate::error::{HarnessError, Result};

/// A materialized spectrum `{λ_j ≤ λ_max}` and where it came from.
#[derive(Debug, Clone)]
pub struct SpectrumCache {
    pub key: String,
    pub path: PathBuf,
    pub hit: bool,
    pub indices: Vec<EigenIndex>,
}

pub fn cache_key(model: &ManifoldModel, lambda_max: f64) -> String {
    let desc = serde_json::to_string(model.descriptor()).expect("descriptor serializes");
    let digest = Sha256::digest(format!("{desc}|{}", format_sig17(lambda_max)).as_bytes());
    format!("{digest:x}")[..24].to_string()
}

fn digest_of(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

fn load(path: &Path, sidecar: &Path) -> Option<Vec<EigenIndex>> {
    let bytes = fs::read(path).ok()?;
    let expected = fs::read_to_string(sidecar).ok()?;
    if expected.trim() != digest_of(&bytes) {
        return None;
    }
    read_jsonl(bytes.as_slice()).ok()
}

/// Returns the spectrum with frequency `≤ λ_max`, reading it from `dir` when
/// a verified copy exists and rebuilding (with a warning) when the copy is
/// unreadable or fails its digest. `λ_max = 0` gives an empty spectrum.
pub fn cache_spectrum(model: &ManifoldModel, lambda_max: f64, dir: &Path) -> Result<SpectrumCache> {
    if !(lambda_max.is_finite() && lambda_max >= 0.0) {
        return Err(HarnessError::Validation(format!("λ_max must be finite and ≥ 0, got {lambda_max}")));
    }
    let key = cache_key(model, lambda_max);
    let path = dir.join(format!("spectrum-{key}.jsonl"));
    let sidecar = dir.join(format!("spectrum-{key}.sha256"));
    if path.exists() {
        if let Some(indices) = load(&path, &sidecar) {
            return Ok(SpectrumCache {
                key,
                path,
                hit: true,
                indices,
            });
        }
        warn!(path = %path.display(), "spectrum cache is corrupt; rebuilding");
    }
    let indices = if lambda_max == 0.0 {
        Vec::new()
    } else {
        enumerate_interval(model, 0.0, lambda_max)
            .map_err(|e| HarnessError::stage("spectrum", format!("{model}, λ_max = {lambda_max}"), e))?
    };
    let mut bytes = Vec::new();
    write_jsonl(&mut bytes, &indices).map_err(|e| HarnessError::io("serializing spectrum", &path, e))?;
    fs::create_dir_all(dir).map_err(|e| HarnessError::io("creating cache directory", dir, e))?;
    crate::output::write_atomic(&path, &bytes)?;
    crate::output::write_atomic(&sidecar, digest_of(&bytes).as_bytes())?;
    Ok(SpectrumCache {
        key,
        path,
        hit: false,
        indices,
    })
}
