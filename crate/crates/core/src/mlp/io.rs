//! Checkpoint files and loss-curve CSV.
//!
//! A checkpoint file is an 8-byte little-endian header length, a JSON header,
//! then the parameters as little-endian f64: `w` row-major (one row per
//! hidden unit) followed by `v`.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Checkpoint, CheckpointSeries, MlpError, MlpModel};

const FORMAT: &str = "phaselab-checkpoint-v1";

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    input_dim: usize,
    hidden: usize,
    step: usize,
    phase: usize,
    seed: u64,
    /// Decimal string; the position is a 128-bit counter.
    rng_word_pos: String,
    layout: String,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> MlpError + '_ {
    move |source| MlpError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn checkpoint_to_bytes(ckpt: &Checkpoint, seed: u64) -> Result<Vec<u8>, MlpError> {
    let m = &ckpt.model;
    let header = serde_json::to_vec(&Header {
        format: FORMAT.into(),
        input_dim: m.input_dim(),
        hidden: m.hidden(),
        step: ckpt.step,
        phase: ckpt.phase,
        seed,
        rng_word_pos: ckpt.rng_word_pos.to_string(),
        layout: "w_row_major_then_v_f64_le".into(),
    })?;
    let params = m.hidden_weights().len() + m.output_weights().len();
    let mut out = Vec::with_capacity(8 + header.len() + 8 * params);
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    for p in m.hidden_weights().iter().chain(m.output_weights()) {
        out.extend_from_slice(&p.to_le_bytes());
    }
    Ok(out)
}

/// Parses a checkpoint, returning it with the run seed from its header.
pub fn checkpoint_from_bytes(bytes: &[u8]) -> Result<(Checkpoint, u64), MlpError> {
    let fmt = |m: &str| MlpError::Format(m.to_string());
    let len_bytes: [u8; 8] = bytes
        .get(..8)
        .ok_or_else(|| fmt("missing header length"))?
        .try_into()
        .expect("8 bytes");
    let hlen = u64::from_le_bytes(len_bytes) as usize;
    let header_end = 8usize
        .checked_add(hlen)
        .filter(|&e| e <= bytes.len())
        .ok_or_else(|| fmt("header length exceeds file"))?;
    let h: Header = serde_json::from_slice(&bytes[8..header_end])?;
    if h.format != FORMAT {
        return Err(MlpError::Format(format!(
            "unknown checkpoint format {:?}",
            h.format
        )));
    }
    let body = &bytes[header_end..];
    let count = h.hidden * h.input_dim + h.hidden;
    if body.len() != 8 * count {
        return Err(MlpError::Format(format!(
            "parameter block holds {} bytes, expected {}",
            body.len(),
            8 * count
        )));
    }
    let mut values: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let v = values.split_off(h.hidden * h.input_dim);
    let model = MlpModel::from_parts(h.input_dim, h.hidden, values, v)?;
    let rng_word_pos = h
        .rng_word_pos
        .parse()
        .map_err(|_| fmt("rng_word_pos is not an integer"))?;
    Ok((
        Checkpoint {
            step: h.step,
            phase: h.phase,
            model,
            rng_word_pos,
        },
        h.seed,
    ))
}

pub fn write_checkpoint(path: &Path, ckpt: &Checkpoint, seed: u64) -> Result<(), MlpError> {
    std::fs::write(path, checkpoint_to_bytes(ckpt, seed)?).map_err(io_err(path))
}

pub fn read_checkpoint(path: &Path) -> Result<(Checkpoint, u64), MlpError> {
    checkpoint_from_bytes(&std::fs::read(path).map_err(io_err(path))?)
}

/// `step,phase,train_loss,test_loss,train_acc,test_acc`; test columns are
/// empty when no evaluation set was given.
pub fn loss_curve_csv(series: &CheckpointSeries) -> String {
    let mut out = String::from("step,phase,train_loss,test_loss,train_acc,test_acc\n");
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for p in &series.curve {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            p.step,
            p.phase,
            p.train_loss,
            opt(p.test_loss),
            p.train_acc,
            opt(p.test_acc)
        ));
    }
    out
}

pub fn write_loss_curve(path: &Path, series: &CheckpointSeries) -> Result<(), MlpError> {
    let mut f = std::fs::File::create(path).map_err(io_err(path))?;
    f.write_all(loss_curve_csv(series).as_bytes())
        .map_err(io_err(path))
}
