//! CSV and JSON sidecar output.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::config::ExperimentConfig;
use crate::error::Result;

/// Serialises `rows` as CSV with a header row.
pub fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| crate::error::Error::Io(e.into_error()))
}

/// Writes `rows` to `path` through a temporary file, so a failed run never
/// leaves a truncated CSV behind.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    write_atomic(path, &csv_bytes(rows)?)
}

#[derive(Serialize)]
struct Sidecar<'a> {
    config: &'a ExperimentConfig,
    outputs: &'a [String],
    version: &'static str,
}

/// Resolved configuration (including the master seed) next to the outputs.
pub fn write_sidecar(path: &Path, config: &ExperimentConfig, outputs: &[String]) -> Result<()> {
    let mut json = serde_json::to_vec_pretty(&Sidecar {
        config,
        outputs,
        version: env!("CARGO_PKG_VERSION"),
    })?;
    json.push(b'\n');
    write_atomic(path, &json)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("partial");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}
