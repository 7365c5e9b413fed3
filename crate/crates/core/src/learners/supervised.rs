//! Non-private mini-batch SGD, used for teachers and students.

use serde::{Deserialize, Serialize};

use super::dpl::{dpl, FairRegParams};
use super::model::{Architecture, Model};
use crate::error::{Error, Result};
use crate::rng::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub architecture: Architecture,
    pub classes: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            architecture: Architecture::SoftmaxRegression,
            classes: 2,
            epochs: 30,
            batch_size: 32,
            learning_rate: 0.3,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::param("epochs/batch_size", "must be positive"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::param("learning_rate", "must be > 0"));
        }
        Ok(())
    }
}

/// Fits a fresh model to `(features, label)` pairs with shuffled mini-batches.
pub fn student_train(data: &[(Vec<f64>, usize)], config: &TrainConfig, rng: &mut SeededRng) -> Result<Model> {
    train_supervised(data, config, None, rng)
}

/// Like [`student_train`] with `reg_weight * DPL` added to each batch loss.
pub fn student_train_regularized(
    data: &[(Vec<f64>, usize)],
    config: &TrainConfig,
    fair: &FairRegParams,
    rng: &mut SeededRng,
) -> Result<Model> {
    fair.validate()?;
    train_supervised(data, config, Some(fair), rng)
}

fn train_supervised(
    data: &[(Vec<f64>, usize)],
    config: &TrainConfig,
    fair: Option<&FairRegParams>,
    rng: &mut SeededRng,
) -> Result<Model> {
    config.validate()?;
    let (first, _) = data.first().ok_or(Error::Empty("training set"))?;
    let mut model = Model::init(config.architecture, first.len(), config.classes, rng)?;
    let fair = fair.filter(|f| f.reg_weight > 0.0);
    let mut order: Vec<usize> = (0..data.len()).collect();
    for _ in 0..config.epochs {
        rng.shuffle(&mut order);
        for chunk in order.chunks(config.batch_size) {
            let mut sum = vec![0.0; model.params().len()];
            for &i in chunk {
                let (x, y) = &data[i];
                let (_, g) = model.loss_and_grad(x, *y)?;
                for (s, gi) in sum.iter_mut().zip(g) {
                    *s += gi;
                }
            }
            let scale = config.learning_rate / chunk.len() as f64;
            let mut step: Vec<f64> = sum.into_iter().map(|s| s * scale).collect();
            if let Some(f) = fair {
                let d = dpl(&model, &f.public_set, f.temperature, f.variant, f.absolute)?;
                for (s, g) in step.iter_mut().zip(d.grad) {
                    *s += config.learning_rate * f.reg_weight * g;
                }
            }
            for (t, s) in model.params_mut().iter_mut().zip(step) {
                *t -= s;
            }
        }
    }
    Ok(model)
}

/// Fraction of `data` the model labels correctly.
pub fn evaluate_accuracy(model: &Model, data: &[(Vec<f64>, usize)]) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Empty("evaluation set"));
    }
    let mut correct = 0usize;
    for (x, y) in data {
        if model.predict(x)? == *y {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len() as f64)
}
