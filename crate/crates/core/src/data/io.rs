//! Dataset persistence: features as CSV, metadata as a JSON sidecar.
//!
//! CSV columns are `label, x0 .. x{d-1}` plus a trailing `weight` column when
//! the dataset carries a distribution. Floats are written in shortest
//! round-trip form, so a write/read cycle is exact.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{DataError, Dataset, DatasetMeta};

#[derive(Serialize, Deserialize)]
struct Sidecar {
    n: usize,
    d: usize,
    weighted: bool,
    meta: DatasetMeta,
}

fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta.json")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DataError + '_ {
    move |source| DataError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes `<path>` (CSV) and `<path stem>.meta.json`; returns both paths.
pub fn write_dataset(ds: &Dataset, csv_path: &Path) -> Result<(PathBuf, PathBuf), DataError> {
    let mut w = csv::Writer::from_path(csv_path)?;
    let mut header = vec!["label".to_string()];
    header.extend((0..ds.dim()).map(|j| format!("x{j}")));
    if ds.weights().is_some() {
        header.push("weight".into());
    }
    w.write_record(&header)?;
    for i in 0..ds.len() {
        let mut rec = vec![ds.label(i).to_string()];
        rec.extend(ds.row(i).iter().map(|v| v.to_string()));
        if let Some(wt) = ds.weights() {
            rec.push(wt[i].to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(io_err(csv_path))?;

    let side = sidecar_path(csv_path);
    let sidecar = Sidecar {
        n: ds.len(),
        d: ds.dim(),
        weighted: ds.weights().is_some(),
        meta: ds.meta().clone(),
    };
    std::fs::write(&side, serde_json::to_vec_pretty(&sidecar)?).map_err(io_err(&side))?;
    Ok((csv_path.to_path_buf(), side))
}

pub fn read_dataset(csv_path: &Path) -> Result<Dataset, DataError> {
    let side = sidecar_path(csv_path);
    let bytes = std::fs::read(&side).map_err(io_err(&side))?;
    let sidecar: Sidecar = serde_json::from_slice(&bytes)?;
    let mut r = csv::Reader::from_path(csv_path)?;
    let mut features = Vec::with_capacity(sidecar.n * sidecar.d);
    let mut labels = Vec::with_capacity(sidecar.n);
    let mut weights = Vec::new();
    let width = 1 + sidecar.d + usize::from(sidecar.weighted);
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() != width {
            return Err(DataError::Format(format!(
                "row {row} has {} columns, expected {width}",
                rec.len()
            )));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| DataError::Format(format!("row {row}: bad number {s:?}")))
        };
        labels.push(
            rec[0]
                .parse::<i8>()
                .map_err(|_| DataError::Format(format!("row {row}: bad label {:?}", &rec[0])))?,
        );
        for j in 0..sidecar.d {
            features.push(num(&rec[1 + j])?);
        }
        if sidecar.weighted {
            weights.push(num(&rec[1 + sidecar.d])?);
        }
    }
    if labels.len() != sidecar.n {
        return Err(DataError::Format(format!(
            "{} rows, sidecar declares {}",
            labels.len(),
            sidecar.n
        )));
    }
    let ds = Dataset::new(features, sidecar.d, labels, sidecar.meta)?;
    if sidecar.weighted {
        ds.with_weights(weights)
    } else {
        Ok(ds)
    }
}
