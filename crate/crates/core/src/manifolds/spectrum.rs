//! JSON-lines spectrum records: one `{"label": …, "freq": …}` object per line.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{EigenIndex, Label};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumRecord {
    pub label: Label,
    pub freq: f64,
}

impl From<&EigenIndex> for SpectrumRecord {
    fn from(e: &EigenIndex) -> Self {
        Self {
            label: e.label.clone(),
            freq: e.freq,
        }
    }
}

impl From<SpectrumRecord> for EigenIndex {
    fn from(r: SpectrumRecord) -> Self {
        Self {
            label: r.label,
            freq: r.freq,
        }
    }
}

pub fn write_jsonl<W: Write>(mut w: W, indices: &[EigenIndex]) -> io::Result<()> {
    for e in indices {
        serde_json::to_writer(&mut w, &SpectrumRecord::from(e))?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

/// Parses records; any malformed line is an `InvalidData` error.
pub fn read_jsonl<R: BufRead>(r: R) -> io::Result<Vec<EigenIndex>> {
    let mut out = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: SpectrumRecord = serde_json::from_str(&line).map_err(|e| {
            io::Error::new(io::ErrorKind::InvalidData, format!("line {}: {e}", lineno + 1))
        })?;
        out.push(rec.into());
    }
    Ok(out)
}
