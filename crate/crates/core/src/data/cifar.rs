//! CIFAR-10 binary batches: 3073-byte records (label byte, then 3072 pixel
//! bytes in channel-major order).

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{DataError, Dataset, DatasetMeta};

pub const CIFAR_IMAGE_BYTES: usize = 3072;
pub const CIFAR_RECORD_BYTES: usize = CIFAR_IMAGE_BYTES + 1;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CifarRecord {
    pub label: u8,
    pub pixels: Vec<u8>,
}

/// Which of the ten classes map to label +1; the rest map to −1.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassPartition {
    pub positive: Vec<u8>,
}

impl Default for ClassPartition {
    /// Classes 0..=4 versus 5..=9.
    fn default() -> Self {
        Self {
            positive: (0..5).collect(),
        }
    }
}

impl ClassPartition {
    pub fn label_of(&self, class: u8) -> i8 {
        if self.positive.contains(&class) {
            1
        } else {
            -1
        }
    }
}

pub fn parse_cifar10_records(bytes: &[u8]) -> Result<Vec<CifarRecord>, DataError> {
    if !bytes.len().is_multiple_of(CIFAR_RECORD_BYTES) {
        return Err(DataError::Format(format!(
            "length {} is not a multiple of {CIFAR_RECORD_BYTES}",
            bytes.len()
        )));
    }
    bytes
        .chunks_exact(CIFAR_RECORD_BYTES)
        .enumerate()
        .map(|(record, chunk)| {
            let label = chunk[0];
            if label > 9 {
                return Err(DataError::CorruptLabel { record, label });
            }
            Ok(CifarRecord {
                label,
                pixels: chunk[1..].to_vec(),
            })
        })
        .collect()
}

pub fn serialize_cifar10_records(records: &[CifarRecord]) -> Vec<u8> {
    let mut out = Vec::with_capacity(records.len() * CIFAR_RECORD_BYTES);
    for r in records {
        out.push(r.label);
        out.extend_from_slice(&r.pixels);
    }
    out
}

/// Pixels scaled to `[0, 1]`, record order preserved.
pub fn records_to_dataset(
    records: &[CifarRecord],
    partition: &ClassPartition,
    meta: DatasetMeta,
) -> Result<Dataset, DataError> {
    let mut features = Vec::with_capacity(records.len() * CIFAR_IMAGE_BYTES);
    let mut labels = Vec::with_capacity(records.len());
    for r in records {
        features.extend(r.pixels.iter().map(|&p| f64::from(p) / 255.0));
        labels.push(partition.label_of(r.label));
    }
    Dataset::new(features, CIFAR_IMAGE_BYTES, labels, meta)
}

/// Reads and concatenates the given batch files.
pub fn load_cifar10_binary<P: AsRef<Path>>(
    paths: &[P],
    partition: &ClassPartition,
) -> Result<Dataset, DataError> {
    let mut records = Vec::new();
    for p in paths {
        let path = p.as_ref();
        let bytes = std::fs::read(path).map_err(|source| DataError::Io {
            path: path.display().to_string(),
            source,
        })?;
        records.extend(parse_cifar10_records(&bytes).map_err(|e| match e {
            DataError::Format(m) => DataError::Format(format!("{}: {m}", path.display())),
            other => other,
        })?);
    }
    let mut meta = DatasetMeta::new("cifar10_binary");
    meta.params.insert(
        "files".into(),
        json!(paths
            .iter()
            .map(|p| p.as_ref().display().to_string())
            .collect::<Vec<_>>()),
    );
    meta.params
        .insert("positive_classes".into(), json!(partition.positive));
    records_to_dataset(&records, partition, meta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(label: u8, fill: u8) -> CifarRecord {
        CifarRecord {
            label,
            pixels: (0..CIFAR_IMAGE_BYTES)
                .map(|i| fill.wrapping_add(i as u8))
                .collect(),
        }
    }

    #[test]
    fn two_records_map_to_partition_labels() {
        let bytes = serialize_cifar10_records(&[record(0, 0), record(9, 255)]);
        let recs = parse_cifar10_records(&bytes).unwrap();
        let ds =
            records_to_dataset(&recs, &ClassPartition::default(), DatasetMeta::default()).unwrap();
        assert_eq!(ds.labels(), &[1, -1]);
        assert_eq!(ds.row(0)[0], 0.0);
        assert_eq!(ds.row(1)[0], 1.0);
        assert!(ds.features().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn truncated_and_corrupt_inputs_fail() {
        assert!(matches!(
            parse_cifar10_records(&[0u8; 3072]),
            Err(DataError::Format(_))
        ));
        let mut bytes = serialize_cifar10_records(&[record(3, 1), record(4, 2)]);
        bytes[CIFAR_RECORD_BYTES] = 10;
        assert!(matches!(
            parse_cifar10_records(&bytes),
            Err(DataError::CorruptLabel {
                record: 1,
                label: 10
            })
        ));
    }

    #[test]
    fn parse_then_serialize_is_identity() {
        let bytes = serialize_cifar10_records(&[record(1, 7), record(8, 200), record(5, 3)]);
        let back = serialize_cifar10_records(&parse_cifar10_records(&bytes).unwrap());
        assert_eq!(bytes, back);
    }
}
