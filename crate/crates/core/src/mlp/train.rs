//! Minibatch SGD with phase-dependent sampling and checkpointing.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{
    loss_and_grad, validate_specs, MlpError, MlpModel, PhaseSchedule, Sampling, SubnetObjective,
    SubnetworkSpec,
};
use crate::boost::BoostEnsemble;
use crate::data::Dataset;
use crate::rng::{rng_from_seed, Rng};

/// A model snapshot taken after `step` SGD updates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub step: usize,
    pub phase: usize,
    pub model: MlpModel,
    /// Position of the sampling stream (32-bit words consumed) at `step`.
    pub rng_word_pos: u128,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub step: usize,
    pub phase: usize,
    pub train_loss: f64,
    pub test_loss: Option<f64>,
    pub train_acc: f64,
    pub test_acc: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointSeries {
    pub seed: u64,
    pub checkpoints: Vec<Checkpoint>,
    pub curve: Vec<CurvePoint>,
}

impl CheckpointSeries {
    pub fn last(&self) -> Option<&Checkpoint> {
        self.checkpoints.last()
    }

    pub fn steps(&self) -> Vec<usize> {
        self.checkpoints.iter().map(|c| c.step).collect()
    }
}

enum Sampler {
    Uniform(usize),
    Weighted(WeightedIndex<f64>),
}

impl Sampler {
    fn new(sampling: &Sampling, n: usize) -> Result<Self, MlpError> {
        match sampling {
            Sampling::Uniform => Ok(Sampler::Uniform(n)),
            Sampling::BoostRound { round, weights } => WeightedIndex::new(weights)
                .map(Sampler::Weighted)
                .map_err(|e| MlpError::Schedule(format!("round {round} distribution: {e}"))),
        }
    }

    fn sample(&self, rng: &mut Rng) -> usize {
        match self {
            Sampler::Uniform(n) => rng.random_range(0..*n),
            Sampler::Weighted(w) => w.sample(rng),
        }
    }
}

enum Plan {
    /// Sampler per schedule phase; all parameters update.
    Phases(Vec<Sampler>),
    /// Round-robin over sub-networks; only the active one's units update.
    Subnetworks(Vec<(SubnetworkSpec, Sampler)>),
}

/// Owns the evolving model and sampling stream; one [`Trainer::step`] is one
/// SGD update.
pub struct Trainer<'a> {
    model: MlpModel,
    train: &'a Dataset,
    eval: Option<&'a Dataset>,
    schedule: &'a PhaseSchedule,
    plan: Plan,
    objective: SubnetObjective,
    rng: Rng,
    seed: u64,
    step: usize,
}

impl<'a> Trainer<'a> {
    pub fn new(
        model: MlpModel,
        train: &'a Dataset,
        eval: Option<&'a Dataset>,
        schedule: &'a PhaseSchedule,
        seed: u64,
    ) -> Result<Self, MlpError> {
        Self::check_inputs(&model, train, eval, schedule)?;
        let samplers = schedule
            .phases
            .iter()
            .map(|p| Sampler::new(p, train.len()))
            .collect::<Result<_, _>>()?;
        Ok(Self {
            model,
            train,
            eval,
            schedule,
            plan: Plan::Phases(samplers),
            objective: SubnetObjective::Full,
            rng: rng_from_seed(seed),
            seed,
            step: 0,
        })
    }

    /// Masked training: step `s` trains sub-network `s mod specs.len()` on
    /// minibatches from its assigned round's distribution. By default the
    /// loss is taken on the full network output (see
    /// [`Trainer::with_objective`]); only rows `w_j` and entries `v_j` with
    /// `j ∈ J` move. Phase samplings in `schedule` are ignored; its
    /// boundaries, step size and checkpoint cadence apply.
    #[allow(clippy::too_many_arguments)]
    pub fn with_subnetworks(
        model: MlpModel,
        train: &'a Dataset,
        eval: Option<&'a Dataset>,
        specs: &[SubnetworkSpec],
        overlap_cap: usize,
        ensemble: Option<&BoostEnsemble>,
        schedule: &'a PhaseSchedule,
        seed: u64,
    ) -> Result<Self, MlpError> {
        Self::check_inputs(&model, train, eval, schedule)?;
        validate_specs(specs, model.hidden(), overlap_cap)?;
        let mut plan = Vec::with_capacity(specs.len());
        for (i, spec) in specs.iter().enumerate() {
            let sampling = match spec.assigned_round {
                None => Sampling::Uniform,
                Some(round) => {
                    let e = ensemble.ok_or_else(|| {
                        MlpError::Subnetwork(format!(
                            "sub-network {i} is assigned round {round} but no ensemble was given"
                        ))
                    })?;
                    let weights = e.round_distributions().get(round).ok_or_else(|| {
                        MlpError::Subnetwork(format!(
                            "sub-network {i} is assigned round {round}, ensemble has {}",
                            e.rounds()
                        ))
                    })?;
                    if weights.len() != train.len() {
                        return Err(MlpError::Subnetwork(format!(
                            "round {round} distribution has {} entries, training set has {}",
                            weights.len(),
                            train.len()
                        )));
                    }
                    Sampling::BoostRound {
                        round,
                        weights: weights.clone(),
                    }
                }
            };
            plan.push((spec.clone(), Sampler::new(&sampling, train.len())?));
        }
        Ok(Self {
            model,
            train,
            eval,
            schedule,
            plan: Plan::Subnetworks(plan),
            objective: SubnetObjective::Full,
            rng: rng_from_seed(seed),
            seed,
            step: 0,
        })
    }

    fn check_inputs(
        model: &MlpModel,
        train: &Dataset,
        eval: Option<&Dataset>,
        schedule: &PhaseSchedule,
    ) -> Result<(), MlpError> {
        schedule.validate(train.len())?;
        for ds in std::iter::once(train).chain(eval) {
            if ds.dim() != model.input_dim() {
                return Err(MlpError::Dimension {
                    got: ds.dim(),
                    expected: model.input_dim(),
                });
            }
        }
        Ok(())
    }

    /// Loss target of masked steps; no effect on unmasked training.
    pub fn with_objective(mut self, objective: SubnetObjective) -> Self {
        self.objective = objective;
        self
    }

    /// Continues from a snapshot: model, step counter and stream position are
    /// restored, so the remaining run matches an uninterrupted one bit for bit.
    pub fn resume_from(mut self, ckpt: &Checkpoint) -> Result<Self, MlpError> {
        if ckpt.model.input_dim() != self.model.input_dim()
            || ckpt.model.hidden() != self.model.hidden()
        {
            return Err(MlpError::Shape(
                "checkpoint shape does not match trainer".into(),
            ));
        }
        self.model = ckpt.model.clone();
        self.step = ckpt.step;
        self.rng.set_word_pos(ckpt.rng_word_pos);
        Ok(self)
    }

    pub fn model(&self) -> &MlpModel {
        &self.model
    }

    pub fn current_step(&self) -> usize {
        self.step
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            step: self.step,
            phase: self.schedule.checkpoint_phase(self.step),
            model: self.model.clone(),
            rng_word_pos: self.rng.get_word_pos(),
        }
    }

    fn curve_point(&self) -> Result<CurvePoint, MlpError> {
        let loss = self.schedule.sgd.loss;
        let (train_loss, train_acc) = self.model.evaluate(self.train, loss)?;
        let test = self
            .eval
            .map(|ds| self.model.evaluate(ds, loss))
            .transpose()?;
        Ok(CurvePoint {
            step: self.step,
            phase: self.schedule.checkpoint_phase(self.step),
            train_loss,
            test_loss: test.map(|t| t.0),
            train_acc,
            test_acc: test.map(|t| t.1),
        })
    }

    /// One SGD update. Returns the minibatch loss, or `None` if the loss or
    /// the updated parameters are not finite (the model is left untouched).
    pub fn step(&mut self) -> Result<Option<f64>, MlpError> {
        let (sampler, mask) = match &self.plan {
            Plan::Phases(samplers) => (&samplers[self.schedule.phase_of_step(self.step)], None),
            Plan::Subnetworks(plan) => {
                let (spec, sampler) = &plan[self.step % plan.len()];
                (sampler, Some(spec))
            }
        };
        let sgd = &self.schedule.sgd;
        let batch: Vec<usize> = (0..sgd.batch_size)
            .map(|_| sampler.sample(&mut self.rng))
            .collect();
        let (loss, grads) = match (mask, self.objective) {
            (Some(spec), SubnetObjective::Own) => {
                let mut own = self.model.clone();
                let (_, v) = own.params_mut();
                for (j, vj) in v.iter_mut().enumerate() {
                    if !spec.contains(j) {
                        *vj = 0.0;
                    }
                }
                loss_and_grad(&own, self.train, &batch, sgd.loss)?
            }
            _ => loss_and_grad(&self.model, self.train, &batch, sgd.loss)?,
        };
        if !loss.is_finite() {
            return Ok(None);
        }

        let mut next = self.model.clone();
        let d = next.input_dim();
        let lr = sgd.learning_rate;
        let freeze = sgd.freeze_output;
        let hidden = next.hidden();
        let (w, v) = next.params_mut();
        let mut update = |j: usize| {
            for (p, g) in w[j * d..(j + 1) * d]
                .iter_mut()
                .zip(&grads.w[j * d..(j + 1) * d])
            {
                *p -= lr * g;
            }
            if !freeze {
                v[j] -= lr * grads.v[j];
            }
        };
        match mask {
            None => (0..hidden).for_each(&mut update),
            Some(spec) => spec.units().iter().for_each(|&j| update(j)),
        }
        if !next.is_finite() {
            return Ok(None);
        }
        self.model = next;
        self.step += 1;
        Ok(Some(loss))
    }

    /// Runs to the end of the schedule, recording checkpoints (including one
    /// at the current step).
    pub fn run(mut self) -> Result<CheckpointSeries, MlpError> {
        let mut series = CheckpointSeries {
            seed: self.seed,
            checkpoints: Vec::new(),
            curve: Vec::new(),
        };
        series.checkpoints.push(self.checkpoint());
        series.curve.push(self.curve_point()?);
        let total = self.schedule.total_steps();
        while self.step < total {
            if self.step()?.is_none() {
                return Err(MlpError::Diverged {
                    step: self.step,
                    partial: Box::new(series),
                });
            }
            if self.schedule.is_checkpoint_step(self.step) {
                series.checkpoints.push(self.checkpoint());
                series.curve.push(self.curve_point()?);
            }
        }
        Ok(series)
    }
}

/// Plain or boosting-aligned training from `model` under `schedule`.
pub fn train(
    model: MlpModel,
    train: &Dataset,
    eval: Option<&Dataset>,
    schedule: &PhaseSchedule,
    seed: u64,
) -> Result<CheckpointSeries, MlpError> {
    Trainer::new(model, train, eval, schedule, seed)?.run()
}

/// Round-robin masked training of sub-networks with the loss on the full
/// output; see [`Trainer::with_subnetworks`].
#[allow(clippy::too_many_arguments)]
pub fn train_subnetworks(
    model: MlpModel,
    train: &Dataset,
    eval: Option<&Dataset>,
    specs: &[SubnetworkSpec],
    overlap_cap: usize,
    ensemble: Option<&BoostEnsemble>,
    schedule: &PhaseSchedule,
    seed: u64,
) -> Result<CheckpointSeries, MlpError> {
    Trainer::with_subnetworks(
        model,
        train,
        eval,
        specs,
        overlap_cap,
        ensemble,
        schedule,
        seed,
    )?
    .run()
}
