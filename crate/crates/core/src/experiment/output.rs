use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ExperimentError;

pub const MANIFEST_FILE: &str = "manifest.json";

/// What a command wrote: stages in completion order, every file with its
/// sha256, and the error that stopped the run if any. No timestamps.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub command: String,
    pub stages_completed: Vec<String>,
    pub failure: Option<String>,
    /// Relative path (with `/`) → lowercase hex sha256.
    pub files: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// One run directory.
pub struct RunDir {
    root: PathBuf,
    manifest_name: String,
    manifest: Manifest,
}

impl RunDir {
    pub fn create(root: &Path, command: &str) -> Result<Self, ExperimentError> {
        std::fs::create_dir_all(root).map_err(io_err(root))?;
        Ok(Self {
            root: root.to_path_buf(),
            manifest_name: MANIFEST_FILE.into(),
            manifest: Manifest {
                command: command.into(),
                ..Manifest::default()
            },
        })
    }

    pub fn with_manifest_name(mut self, name: &str) -> Self {
        self.manifest_name = name.into();
        self
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub fn ensure_dir(&self, rel: &str) -> Result<PathBuf, ExperimentError> {
        let p = self.path(rel);
        std::fs::create_dir_all(&p).map_err(io_err(&p))?;
        Ok(p)
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<(), ExperimentError> {
        let p = self.path(rel);
        if let Some(parent) = p.parent() {
            std::fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        std::fs::write(&p, bytes).map_err(io_err(&p))?;
        self.manifest
            .files
            .insert(rel.to_string(), sha256_hex(bytes));
        Ok(())
    }

    pub fn write_json<T: Serialize>(
        &mut self,
        rel: &str,
        value: &T,
    ) -> Result<(), ExperimentError> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(rel, &bytes)
    }

    /// Hashes a file some other writer already produced under the root.
    pub fn record(&mut self, rel: &str) -> Result<(), ExperimentError> {
        let p = self.path(rel);
        let bytes = std::fs::read(&p).map_err(io_err(&p))?;
        self.manifest
            .files
            .insert(rel.to_string(), sha256_hex(&bytes));
        Ok(())
    }

    pub fn stage_done(&mut self, stage: &str) {
        self.manifest.stages_completed.push(stage.to_string());
    }

    /// Writes the manifest, recording `failure` if the run stopped early.
    pub fn finish(
        mut self,
        failure: Option<&ExperimentError>,
    ) -> Result<Manifest, ExperimentError> {
        self.manifest.failure = failure.map(|e| e.to_string());
        let p = self.root.join(&self.manifest_name);
        let mut bytes = serde_json::to_vec_pretty(&self.manifest)?;
        bytes.push(b'\n');
        std::fs::write(&p, bytes).map_err(io_err(&p))?;
        Ok(self.manifest)
    }
}

pub(super) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Plain CSV of a matrix with a leading label column.
pub fn matrix_csv(
    corner: &str,
    col_labels: &[String],
    row_labels: &[String],
    m: &[Vec<f64>],
) -> String {
    let mut out = String::new();
    out.push_str(corner);
    for c in col_labels {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    for (label, row) in row_labels.iter().zip(m) {
        out.push_str(label);
        for v in row {
            out.push(',');
            out.push_str(&format_cell(Some(*v)));
        }
        out.push('\n');
    }
    out
}

/// Shortest round-trip representation; empty for missing values.
pub fn format_cell(v: Option<f64>) -> String {
    match v {
        Some(v) if v.is_finite() => format!("{v:?}"),
        Some(v) => format!("{v}"),
        None => String::new(),
    }
}
