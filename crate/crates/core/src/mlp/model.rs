use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::MlpError;
use crate::compensated_sum;
use crate::data::Dataset;
use crate::rng::rng_from_seed;

/// `f(x) = Σ_j v_j · ReLU(⟨w_j, x⟩)`, no biases.
///
/// `w` is stored row-major, one row of length `input_dim` per hidden unit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    input_dim: usize,
    hidden: usize,
    w: Vec<f64>,
    v: Vec<f64>,
}

/// Gradients with the same layout as the model parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub w: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Loss {
    Hinge,
    Logistic,
}

impl FromStr for Loss {
    type Err = MlpError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hinge" => Ok(Loss::Hinge),
            "logistic" => Ok(Loss::Logistic),
            other => Err(MlpError::UnknownLoss(other.to_string())),
        }
    }
}

impl fmt::Display for Loss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Loss::Hinge => "hinge",
            Loss::Logistic => "logistic",
        })
    }
}

impl Loss {
    /// Loss at margin `m = y·f(x)`.
    pub fn value(self, margin: f64) -> f64 {
        match self {
            Loss::Hinge => (1.0 - margin).max(0.0),
            // ln(1 + e^{-m}), stable for both signs
            Loss::Logistic => {
                if margin > 0.0 {
                    (-margin).exp().ln_1p()
                } else {
                    -margin + margin.exp().ln_1p()
                }
            }
        }
    }

    /// d loss / d margin; the hinge kink at margin 1 gets subgradient 0.
    pub fn slope(self, margin: f64) -> f64 {
        match self {
            Loss::Hinge => {
                if margin < 1.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            Loss::Logistic => {
                // −σ(−m)
                if margin > 0.0 {
                    let e = (-margin).exp();
                    -e / (1.0 + e)
                } else {
                    -1.0 / (1.0 + margin.exp())
                }
            }
        }
    }
}

impl MlpModel {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        Self {
            input_dim,
            hidden,
            w: vec![0.0; input_dim * hidden],
            v: vec![0.0; hidden],
        }
    }

    /// `w ~ N(0, 1/d)`, `v ~ N(0, 1/k)`, drawn from a seeded stream.
    pub fn init(input_dim: usize, hidden: usize, seed: u64) -> Result<Self, MlpError> {
        if input_dim == 0 || hidden == 0 {
            return Err(MlpError::Shape(format!(
                "input_dim and hidden must be >= 1, got {input_dim} and {hidden}"
            )));
        }
        let mut rng = rng_from_seed(seed);
        let sw = 1.0 / (input_dim as f64).sqrt();
        let sv = 1.0 / (hidden as f64).sqrt();
        let w = (0..input_dim * hidden)
            .map(|_| sw * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let v = (0..hidden)
            .map(|_| sv * rng.sample::<f64, _>(StandardNormal))
            .collect();
        Ok(Self {
            input_dim,
            hidden,
            w,
            v,
        })
    }

    pub fn from_parts(
        input_dim: usize,
        hidden: usize,
        w: Vec<f64>,
        v: Vec<f64>,
    ) -> Result<Self, MlpError> {
        if input_dim == 0 || hidden == 0 || w.len() != input_dim * hidden || v.len() != hidden {
            return Err(MlpError::Shape(format!(
                "expected w of {}x{} and v of {}, got {} and {}",
                hidden,
                input_dim,
                hidden,
                w.len(),
                v.len()
            )));
        }
        let m = Self {
            input_dim,
            hidden,
            w,
            v,
        };
        if !m.is_finite() {
            return Err(MlpError::Shape("parameters must be finite".into()));
        }
        Ok(m)
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn hidden_weights(&self) -> &[f64] {
        &self.w
    }

    pub fn hidden_row(&self, j: usize) -> &[f64] {
        &self.w[j * self.input_dim..(j + 1) * self.input_dim]
    }

    pub fn output_weights(&self) -> &[f64] {
        &self.v
    }

    pub(crate) fn params_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.w, &mut self.v)
    }

    pub fn is_finite(&self) -> bool {
        self.w.iter().chain(&self.v).all(|p| p.is_finite())
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), MlpError> {
        if x.len() != self.input_dim {
            return Err(MlpError::Dimension {
                got: x.len(),
                expected: self.input_dim,
            });
        }
        Ok(())
    }

    pub(crate) fn pre_activation(&self, j: usize, x: &[f64]) -> f64 {
        self.hidden_row(j).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// `ReLU(⟨w_j, x⟩)` for each hidden unit.
    pub fn embed(&self, x: &[f64]) -> Result<Vec<f64>, MlpError> {
        self.check_dim(x)?;
        Ok((0..self.hidden)
            .map(|j| self.pre_activation(j, x).max(0.0))
            .collect())
    }

    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, f64), MlpError> {
        let hidden = self.embed(x)?;
        let out = compensated_sum(self.v.iter().zip(&hidden).map(|(v, h)| v * h));
        Ok((hidden, out))
    }

    pub fn output(&self, x: &[f64]) -> Result<f64, MlpError> {
        self.forward(x).map(|(_, o)| o)
    }

    /// Raw outputs over every row of a dataset.
    pub fn scores(&self, ds: &Dataset) -> Result<Vec<f64>, MlpError> {
        ds.rows().map(|x| self.output(x)).collect()
    }

    /// Sign predictions over a dataset (`sign(0) = +1`).
    pub fn predictions(&self, ds: &Dataset) -> Result<Vec<crate::Label>, MlpError> {
        Ok(self.scores(ds)?.into_iter().map(crate::sign).collect())
    }

    /// Mean loss and accuracy over a whole dataset.
    pub fn evaluate(&self, ds: &Dataset, loss: Loss) -> Result<(f64, f64), MlpError> {
        let scores = self.scores(ds)?;
        let total: f64 = scores
            .iter()
            .zip(ds.labels())
            .map(|(s, &y)| loss.value(f64::from(y) * s))
            .sum();
        let pred: Vec<_> = scores.into_iter().map(crate::sign).collect();
        Ok((total / ds.len() as f64, crate::accuracy(&pred, ds.labels())))
    }
}

/// Mean loss over the batch rows `indices` of `ds`, with exact subgradients.
/// ReLU has subgradient 0 at 0.
pub fn loss_and_grad(
    model: &MlpModel,
    ds: &Dataset,
    indices: &[usize],
    loss: Loss,
) -> Result<(f64, Gradients), MlpError> {
    if indices.is_empty() {
        return Err(MlpError::EmptyBatch);
    }
    if ds.dim() != model.input_dim {
        return Err(MlpError::Dimension {
            got: ds.dim(),
            expected: model.input_dim,
        });
    }
    let (d, k) = (model.input_dim, model.hidden);
    let mut gw = vec![0.0; d * k];
    let mut gv = vec![0.0; k];
    let mut pre = vec![0.0; k];
    let mut total = 0.0;
    for &i in indices {
        let x = ds.row(i);
        let y = f64::from(ds.label(i));
        for (j, p) in pre.iter_mut().enumerate() {
            *p = model.pre_activation(j, x);
        }
        let out = compensated_sum(model.v.iter().zip(&pre).map(|(v, p)| v * p.max(0.0)));
        let margin = y * out;
        total += loss.value(margin);
        let g = loss.slope(margin) * y;
        if g == 0.0 {
            continue;
        }
        for j in 0..k {
            if pre[j] > 0.0 {
                gv[j] += g * pre[j];
                let scale = g * model.v[j];
                for (gwj, xi) in gw[j * d..(j + 1) * d].iter_mut().zip(x) {
                    *gwj += scale * xi;
                }
            }
        }
    }
    let m = indices.len() as f64;
    gw.iter_mut().for_each(|g| *g /= m);
    gv.iter_mut().for_each(|g| *g /= m);
    Ok((total / m, Gradients { w: gw, v: gv }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::DatasetMeta;

    fn tiny() -> MlpModel {
        MlpModel::from_parts(2, 1, vec![1.0, 0.0], vec![2.0]).unwrap()
    }

    #[test]
    fn forward_by_hand() {
        assert_eq!(tiny().forward(&[3.0, -1.0]).unwrap(), (vec![3.0], 6.0));
        assert_eq!(tiny().forward(&[-3.0, -1.0]).unwrap(), (vec![0.0], 0.0));
        assert_eq!(MlpModel::zeros(3, 4).output(&[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert!(tiny().forward(&[1.0]).is_err());
    }

    #[test]
    fn embedding_is_hidden_layer() {
        let m = MlpModel::init(5, 7, 1).unwrap();
        let x = [0.3, -1.0, 2.0, 0.0, 0.5];
        assert_eq!(m.embed(&x).unwrap(), m.forward(&x).unwrap().0);
        assert_eq!(m.embed(&[0.0; 5]).unwrap(), vec![0.0; 7]);
        assert_eq!(m.embed(&[9.0; 5]).unwrap().len(), 7);
    }

    #[test]
    fn zero_model_losses() {
        let ds = Dataset::new(
            vec![1.0, 2.0, -1.0, 0.5, 3.0, 3.0],
            2,
            vec![1, -1, 1],
            DatasetMeta::default(),
        )
        .unwrap();
        let z = MlpModel::zeros(2, 3);
        let (l, _) = loss_and_grad(&z, &ds, &[0, 1, 2], Loss::Hinge).unwrap();
        assert_eq!(l, 1.0);
        let (l, _) = loss_and_grad(&z, &ds, &[0, 1, 2], Loss::Logistic).unwrap();
        assert!((l - 2f64.ln()).abs() < 1e-15);
        assert!(matches!(
            loss_and_grad(&z, &ds, &[], Loss::Hinge),
            Err(MlpError::EmptyBatch)
        ));
    }

    #[test]
    fn loss_names() {
        assert_eq!("hinge".parse::<Loss>().unwrap(), Loss::Hinge);
        assert_eq!("logistic".parse::<Loss>().unwrap(), Loss::Logistic);
        assert!(matches!(
            "mse".parse::<Loss>(),
            Err(MlpError::UnknownLoss(_))
        ));
    }

    #[test]
    fn logistic_is_stable_at_extremes() {
        assert!(Loss::Logistic.value(-800.0).is_finite());
        assert_eq!(Loss::Logistic.value(800.0), 0.0);
        assert_eq!(Loss::Logistic.slope(-800.0), -1.0);
        assert_eq!(Loss::Hinge.slope(1.0), 0.0);
    }
}
