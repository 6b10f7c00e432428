//! CSV tables, atomic writes and file digests.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use sclab_core::numerics::format_sig17;

use crate::config::DataSource;
use crate::error::{HarnessError, Result};

/// Writes through a temporary sibling and renames, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    fs::write(&tmp, bytes).map_err(|e| HarnessError::io("writing", &tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| HarnessError::io("renaming", path, e))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Float cell with 17 significant digits.
pub fn num(x: f64) -> String {
    format_sig17(x)
}

/// A CSV table assembled in memory; rows are keyed so scans can resume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }
}

/// Loads `(λ, N)` pairs from inline points or a CSV column, in file order.
pub fn read_points(src: &DataSource) -> Result<Vec<(f64, f64)>> {
    if let Some(points) = &src.points {
        return Ok(points.iter().map(|p| (p[0], p[1])).collect());
    }
    let path = src.csv.as_ref().expect("validated source");
    let value_column = src.value_column.as_deref().expect("validated source");
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| HarnessError::Validation(format!("{} has no column `{name}`", path.display())))
    };
    let li = find(&src.lambda_column)?;
    let vi = find(value_column)?;
    let filter = match &src.filter {
        Some(f) => Some((find(&f.column)?, f.equals.as_str())),
        None => None,
    };
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        if let Some((fi, want)) = filter {
            if &rec[fi] != want {
                continue;
            }
        }
        let parse = |i: usize| {
            rec[i]
                .parse::<f64>()
                .map_err(|_| HarnessError::Validation(format!("{}: `{}` is not a number", path.display(), &rec[i])))
        };
        out.push((parse(li)?, parse(vi)?));
    }
    Ok(out)
}

fn csv_error(path: &Path, e: csv::Error) -> HarnessError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => HarnessError::io("reading CSV", path, io),
        other => HarnessError::Validation(format!("{}: malformed CSV: {other:?}", path.display())),
    }
}
