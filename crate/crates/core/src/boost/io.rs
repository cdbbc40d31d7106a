//! Ensemble persistence: JSON for stumps, vote weights and errors, and a
//! little-endian f64 sidecar holding the `rounds × n` round distributions.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{BoostEnsemble, BoostError};

#[derive(Serialize, Deserialize)]
struct EnsembleFile {
    format: String,
    n: usize,
    distributions_file: String,
    #[serde(flatten)]
    ensemble: BoostEnsemble,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> BoostError + '_ {
    move |source| BoostError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes `<path>` and `<stem>.dist.bin`; returns the sidecar path.
pub fn write_ensemble(e: &BoostEnsemble, json_path: &Path) -> Result<PathBuf, BoostError> {
    let bin = json_path.with_extension("dist.bin");
    let n = e.round_distributions.first().map_or(0, Vec::len);
    let file = EnsembleFile {
        format: "phaselab-ensemble-v1".into(),
        n,
        distributions_file: bin
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
        ensemble: e.clone(),
    };
    std::fs::write(json_path, serde_json::to_vec_pretty(&file)?).map_err(io_err(json_path))?;
    let mut bytes = Vec::with_capacity(8 * n * e.rounds());
    for row in &e.round_distributions {
        for v in row {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    std::fs::write(&bin, bytes).map_err(io_err(&bin))?;
    Ok(bin)
}

pub fn read_ensemble(json_path: &Path) -> Result<BoostEnsemble, BoostError> {
    let raw = std::fs::read(json_path).map_err(io_err(json_path))?;
    let file: EnsembleFile = serde_json::from_slice(&raw)?;
    let bin = json_path.with_file_name(&file.distributions_file);
    let bytes = std::fs::read(&bin).map_err(io_err(&bin))?;
    let mut e = file.ensemble;
    let expected = 8 * file.n * e.rounds();
    if bytes.len() != expected {
        return Err(BoostError::Format(format!(
            "{} holds {} bytes, expected {expected}",
            bin.display(),
            bytes.len()
        )));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    e.round_distributions = if file.n == 0 {
        vec![Vec::new(); e.rounds()]
    } else {
        values.chunks(file.n).map(<[f64]>::to_vec).collect()
    };
    Ok(e)
}
