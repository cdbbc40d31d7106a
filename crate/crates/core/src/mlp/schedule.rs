use serde::{Deserialize, Serialize};

use super::{Loss, MlpError};
use crate::boost::BoostEnsemble;
use crate::data::validate_distribution;

/// Step-size and bookkeeping settings shared by every phase.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SgdSettings {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub loss: Loss,
    /// A checkpoint is taken every this many steps, and at every phase
    /// boundary.
    pub checkpoint_every: usize,
    /// Keep the output weights `v` fixed.
    pub freeze_output: bool,
}

/// Where a phase draws its minibatch indices from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Sampling {
    Uniform,
    /// The distribution Adaboost fit stump `round` (0-based) on.
    BoostRound {
        round: usize,
        #[serde(skip)]
        weights: Vec<f64>,
    },
}

/// Phase boundaries `T_0 = 0 < T_1 < … < T_J` in SGD steps, with the
/// sampling distribution of each phase `[T_{i-1}, T_i)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseSchedule {
    pub boundaries: Vec<usize>,
    pub phases: Vec<Sampling>,
    pub sgd: SgdSettings,
}

impl PhaseSchedule {
    /// One uniform phase of `steps` steps.
    pub fn uniform(steps: usize, sgd: SgdSettings) -> Self {
        Self {
            boundaries: vec![0, steps],
            phases: vec![Sampling::Uniform],
            sgd,
        }
    }

    /// `phases` phases of `steps_per_phase` steps; phase `i` samples from
    /// the ensemble's round-`i` distribution.
    pub fn boosting_aligned(
        ensemble: &BoostEnsemble,
        phases: usize,
        steps_per_phase: usize,
        sgd: SgdSettings,
    ) -> Result<Self, MlpError> {
        if phases == 0 || phases > ensemble.rounds() {
            return Err(MlpError::Schedule(format!(
                "boosting-aligned schedule needs 1..={} phases, got {phases}",
                ensemble.rounds()
            )));
        }
        Ok(Self {
            boundaries: (0..=phases).map(|i| i * steps_per_phase).collect(),
            phases: ensemble.round_distributions()[..phases]
                .iter()
                .enumerate()
                .map(|(round, w)| Sampling::BoostRound {
                    round,
                    weights: w.clone(),
                })
                .collect(),
            sgd,
        })
    }

    pub fn total_steps(&self) -> usize {
        *self.boundaries.last().unwrap_or(&0)
    }

    pub fn phase_count(&self) -> usize {
        self.phases.len()
    }

    /// Phase containing SGD step `step` (steps at or past the end belong to
    /// the last phase).
    pub fn phase_of_step(&self, step: usize) -> usize {
        self.boundaries[1..]
            .iter()
            .position(|&t| step < t)
            .unwrap_or(self.phases.len() - 1)
    }

    /// Label of a checkpoint taken after `step` updates: the number of
    /// boundaries `T_1..T_J` already reached, so the snapshot at `T_i` is
    /// phase `i`.
    pub fn checkpoint_phase(&self, step: usize) -> usize {
        self.boundaries[1..].iter().filter(|&&t| t <= step).count()
    }

    pub fn is_checkpoint_step(&self, step: usize) -> bool {
        step.is_multiple_of(self.sgd.checkpoint_every) || self.boundaries.contains(&step)
    }

    /// Checks internal consistency and that every distribution covers `n`
    /// training examples.
    pub fn validate(&self, n: usize) -> Result<(), MlpError> {
        let bad = |m: String| Err(MlpError::Schedule(m));
        if self.boundaries.len() < 2 || self.boundaries[0] != 0 {
            return bad("boundaries must start at 0 and contain at least one phase".into());
        }
        if self.boundaries.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!(
                "boundaries must be strictly increasing: {:?}",
                self.boundaries
            ));
        }
        if self.phases.len() != self.boundaries.len() - 1 {
            return bad(format!(
                "{} boundaries need {} phases, got {}",
                self.boundaries.len(),
                self.boundaries.len() - 1,
                self.phases.len()
            ));
        }
        for p in &self.phases {
            if let Sampling::BoostRound { round, weights } = p {
                validate_distribution(weights, n, 1e-10)
                    .map_err(|e| MlpError::Schedule(format!("round {round} distribution: {e}")))?;
            }
        }
        let s = &self.sgd;
        if !(s.learning_rate.is_finite() && s.learning_rate >= 0.0) {
            return bad(format!(
                "learning_rate must be finite and >= 0, got {}",
                s.learning_rate
            ));
        }
        if s.batch_size == 0 {
            return bad("batch_size must be >= 1".into());
        }
        if s.checkpoint_every == 0 {
            return bad("checkpoint_every must be >= 1".into());
        }
        Ok(())
    }
}
