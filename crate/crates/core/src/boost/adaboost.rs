use serde::{Deserialize, Serialize};

use super::{fit_stump, BoostError, Stump};
use crate::data::Dataset;
use crate::{sign, Label};

/// Why a run stopped before the requested number of rounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StopReason {
    /// The best stump under the current distribution had weighted error
    /// ≥ 0.5; the round was rejected.
    NoBetterThanChance { round: usize, error: f64 },
}

/// A fitted Adaboost run: stumps and vote weights in order, the distribution
/// each stump was fit on, and its weighted error.
///
/// Stage `i` (1-based) refers to the prefix made of the first `i` stumps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoostEnsemble {
    pub(super) requested_rounds: usize,
    pub(super) stumps: Vec<Stump>,
    pub(super) alphas: Vec<f64>,
    pub(super) round_errors: Vec<f64>,
    /// Rounds whose zero error forced the vote weight onto the floor value.
    pub(super) capped: Vec<bool>,
    #[serde(skip)]
    pub(super) round_distributions: Vec<Vec<f64>>,
    pub(super) stop_reason: Option<StopReason>,
}

fn vote_weight(error: f64) -> f64 {
    0.5 * ((1.0 - error) / error).ln()
}

/// Classical Adaboost: `D_1` uniform, then per round fit the ERM stump on
/// `D_t`, set `α_t = ½ ln((1−ε_t)/ε_t)` and reweight
/// `D_{t+1}(i) ∝ D_t(i)·exp(−α_t y_i h_t(x_i))`.
///
/// A round with `ε_t = 0` uses `ε = 1/(2n)` for its vote weight; a round with
/// `ε_t ≥ 0.5` is rejected and ends the run.
pub fn run_adaboost(ds: &Dataset, rounds: usize) -> Result<BoostEnsemble, BoostError> {
    if rounds == 0 {
        return Err(BoostError::NoRounds);
    }
    let n = ds.len();
    let floor = 1.0 / (2.0 * n as f64);
    let mut dist = vec![1.0 / n as f64; n];
    let mut ens = BoostEnsemble {
        requested_rounds: rounds,
        stumps: Vec::with_capacity(rounds),
        alphas: Vec::with_capacity(rounds),
        round_errors: Vec::with_capacity(rounds),
        capped: Vec::with_capacity(rounds),
        round_distributions: Vec::with_capacity(rounds),
        stop_reason: None,
    };
    for round in 0..rounds {
        let (stump, error) = fit_stump(ds, &dist)?;
        if error >= 0.5 {
            ens.stop_reason = Some(StopReason::NoBetterThanChance { round, error });
            break;
        }
        let capped = error <= 0.0;
        let alpha = vote_weight(if capped { floor } else { error });

        let mut next: Vec<f64> = dist
            .iter()
            .zip(ds.rows().zip(ds.labels()))
            .map(|(&w, (x, &y))| w * (-alpha * f64::from(y * stump.predict(x))).exp())
            .collect();
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|w| *w /= total);

        ens.stumps.push(stump);
        ens.alphas.push(alpha);
        ens.round_errors.push(error);
        ens.capped.push(capped);
        ens.round_distributions
            .push(std::mem::replace(&mut dist, next));
    }
    Ok(ens)
}

impl BoostEnsemble {
    /// Number of accepted rounds.
    pub fn rounds(&self) -> usize {
        self.stumps.len()
    }

    pub fn requested_rounds(&self) -> usize {
        self.requested_rounds
    }

    pub fn stumps(&self) -> &[Stump] {
        &self.stumps
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn round_errors(&self) -> &[f64] {
        &self.round_errors
    }

    pub fn capped_rounds(&self) -> &[bool] {
        &self.capped
    }

    /// `D_t` for each accepted round, i.e. the distribution stump `t` was
    /// fit on.
    pub fn round_distributions(&self) -> &[Vec<f64>] {
        &self.round_distributions
    }

    pub fn stop_reason(&self) -> Option<&StopReason> {
        self.stop_reason.as_ref()
    }

    fn check_stage(&self, stage: usize) -> Result<(), BoostError> {
        if stage == 0 || stage > self.rounds() {
            return Err(BoostError::StageOutOfRange {
                stage,
                rounds: self.rounds(),
            });
        }
        Ok(())
    }

    fn margin_unchecked(&self, stage: usize, x: &[f64]) -> f64 {
        self.stumps[..stage]
            .iter()
            .zip(&self.alphas)
            .map(|(s, a)| a * f64::from(s.predict(x)))
            .sum()
    }

    /// Margin `Σ_{t≤stage} α_t h_t(x)` and its sign.
    pub fn predict(&self, stage: usize, x: &[f64]) -> Result<(f64, Label), BoostError> {
        self.check_stage(stage)?;
        let needed = self.stumps[..stage]
            .iter()
            .map(|s| s.feature + 1)
            .max()
            .unwrap_or(0);
        if x.len() < needed {
            return Err(BoostError::Dimension {
                got: x.len(),
                expected: needed,
            });
        }
        let m = self.margin_unchecked(stage, x);
        Ok((m, sign(m)))
    }

    pub fn staged_margins(&self, stage: usize, ds: &Dataset) -> Result<Vec<f64>, BoostError> {
        self.check_stage(stage)?;
        self.predict(stage, ds.row(0))?;
        Ok(ds.rows().map(|x| self.margin_unchecked(stage, x)).collect())
    }

    pub fn staged_predictions(&self, stage: usize, ds: &Dataset) -> Result<Vec<Label>, BoostError> {
        Ok(self
            .staged_margins(stage, ds)?
            .into_iter()
            .map(sign)
            .collect())
    }

    /// Individual stump predictions `h_t(x)` over a dataset, one row per round.
    pub fn stump_predictions(&self, ds: &Dataset) -> Vec<Vec<Label>> {
        self.stumps.iter().map(|s| s.predict_all(ds)).collect()
    }

    pub fn staged_error(&self, stage: usize, ds: &Dataset) -> Result<f64, BoostError> {
        let pred = self.staged_predictions(stage, ds)?;
        Ok(1.0 - crate::accuracy(&pred, ds.labels()))
    }

    /// `Π_{t≤stage} 2√(ε_t(1−ε_t))`, the classical bound on training error.
    /// Only a valid bound when no round up to `stage` was capped.
    pub fn training_error_bound(&self, stage: usize) -> Result<f64, BoostError> {
        self.check_stage(stage)?;
        Ok(self.round_errors[..stage]
            .iter()
            .map(|e| 2.0 * (e * (1.0 - e)).sqrt())
            .product())
    }
}
