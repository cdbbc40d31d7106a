use serde::{Deserialize, Serialize};

use super::{MlpError, MlpModel};
use crate::compensated_sum;

/// Which output the loss is taken on while a sub-network trains.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubnetObjective {
    /// The full network output `f(x)`.
    #[default]
    Full,
    /// The sub-network's own output `f^J(x)`.
    Own,
}

/// A set of hidden units `J`; the sub-network output is
/// `f^J(x) = Σ_{j∈J} v_j ReLU(⟨w_j, x⟩)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubnetworkSpec {
    units: Vec<usize>,
    /// Adaboost round (0-based) whose distribution feeds this sub-network;
    /// `None` samples uniformly.
    pub assigned_round: Option<usize>,
}

impl SubnetworkSpec {
    pub fn new(mut units: Vec<usize>, assigned_round: Option<usize>) -> Result<Self, MlpError> {
        if units.is_empty() {
            return Err(MlpError::Subnetwork("unit set must be non-empty".into()));
        }
        units.sort_unstable();
        if units.windows(2).any(|w| w[0] == w[1]) {
            return Err(MlpError::Subnetwork(format!("duplicate unit in {units:?}")));
        }
        Ok(Self {
            units,
            assigned_round,
        })
    }

    /// `count` contiguous, disjoint, near-equal blocks covering `0..hidden`,
    /// block `i` assigned to round `i`.
    pub fn disjoint_blocks(hidden: usize, count: usize) -> Result<Vec<Self>, MlpError> {
        if count == 0 || count > hidden {
            return Err(MlpError::Subnetwork(format!(
                "cannot cut {hidden} units into {count} non-empty blocks"
            )));
        }
        (0..count)
            .map(|i| {
                let lo = i * hidden / count;
                let hi = (i + 1) * hidden / count;
                Self::new((lo..hi).collect(), Some(i))
            })
            .collect()
    }

    pub fn units(&self) -> &[usize] {
        &self.units
    }

    pub fn contains(&self, unit: usize) -> bool {
        self.units.binary_search(&unit).is_ok()
    }

    pub fn overlap(&self, other: &Self) -> usize {
        self.units.iter().filter(|&&u| other.contains(u)).count()
    }
}

/// Checks unit ranges and that every pair shares at most `overlap_cap` units.
pub fn validate_specs(
    specs: &[SubnetworkSpec],
    hidden: usize,
    overlap_cap: usize,
) -> Result<(), MlpError> {
    if specs.is_empty() {
        return Err(MlpError::Subnetwork("need at least one sub-network".into()));
    }
    for (a, sa) in specs.iter().enumerate() {
        if let Some(&u) = sa.units.last() {
            if u >= hidden {
                return Err(MlpError::Subnetwork(format!(
                    "sub-network {a} uses unit {u}, model has {hidden}"
                )));
            }
        }
        for (b, sb) in specs.iter().enumerate().skip(a + 1) {
            let shared = sa.overlap(sb);
            if shared > overlap_cap {
                return Err(MlpError::Subnetwork(format!(
                    "sub-networks {a} and {b} share {shared} units (cap {overlap_cap})"
                )));
            }
        }
    }
    Ok(())
}

pub fn subnetwork_predict(m: &MlpModel, spec: &SubnetworkSpec, x: &[f64]) -> Result<f64, MlpError> {
    if let Some(&u) = spec.units.last() {
        if u >= m.hidden() {
            return Err(MlpError::Subnetwork(format!(
                "unit {u} out of range for {} hidden units",
                m.hidden()
            )));
        }
    }
    let hidden = m.embed(x)?;
    let v = m.output_weights();
    Ok(compensated_sum(
        spec.units.iter().map(|&j| v[j] * hidden[j]),
    ))
}
