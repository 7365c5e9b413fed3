//! DP-SGD with Poisson subsampling, optionally regularized by the demographic
//! parity loss on a public set.

use serde::{Deserialize, Serialize};

use super::dpl::{dpl, FairRegParams};
use super::model::{clip, Architecture, Model};
use crate::accounting::{default_orders, dp_sgd_epsilon};
use crate::domain::LabeledExample;
use crate::error::{Error, Result};
use crate::rng::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpSgdParams {
    pub learning_rate: f64,
    pub noise_multiplier: f64,
    /// Expected batch size `L`; each example is sampled with rate `L / N`.
    pub expected_batch: usize,
    /// Per-example clipping norm `C`; `f64::INFINITY` disables clipping.
    pub clip_norm: f64,
    pub steps: u64,
    pub delta: f64,
}

impl DpSgdParams {
    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::param("learning_rate", "must be > 0"));
        }
        if !(self.noise_multiplier >= 0.0) {
            return Err(Error::param("noise_multiplier", "must be >= 0"));
        }
        if self.expected_batch == 0 || self.expected_batch > n {
            return Err(Error::param(
                "expected_batch",
                format!("need 1 <= L <= N = {n}, got {}", self.expected_batch),
            ));
        }
        if !(self.clip_norm > 0.0) {
            return Err(Error::param("clip_norm", "must be > 0"));
        }
        if self.steps == 0 {
            return Err(Error::param("steps", "must be positive"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::param("delta", "need 0 < delta < 1"));
        }
        Ok(())
    }

    pub fn sampling_rate(&self, n: usize) -> f64 {
        self.expected_batch as f64 / n as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub model: Model,
    pub epsilon: f64,
    /// Steps whose Poisson batch came out empty.
    pub empty_steps: u64,
}

fn dims(data: &[LabeledExample]) -> Result<usize> {
    let first = data.first().ok_or(Error::Empty("training set"))?;
    for e in data {
        if e.features.len() != first.features.len() {
            return Err(Error::DimensionMismatch {
                expected: first.features.len(),
                actual: e.features.len(),
            });
        }
    }
    Ok(first.features.len())
}

/// Standard DP-SGD. The model is initialized from `rng`.
pub fn dp_sgd_train(
    data: &[LabeledExample],
    architecture: Architecture,
    classes: usize,
    params: &DpSgdParams,
    rng: &mut SeededRng,
) -> Result<TrainedModel> {
    train(data, architecture, classes, params, None, rng)
}

/// DP-SGD where every per-example gradient gets `reg_weight * ∇DPL` added
/// before clipping. The public set is free, so the privacy cost is that of
/// [`dp_sgd_train`] with the same parameters.
pub fn fair_dp_sgd_train(
    data: &[LabeledExample],
    architecture: Architecture,
    classes: usize,
    params: &DpSgdParams,
    fair: &FairRegParams,
    rng: &mut SeededRng,
) -> Result<TrainedModel> {
    fair.validate()?;
    train(data, architecture, classes, params, Some(fair), rng)
}

fn train(
    data: &[LabeledExample],
    architecture: Architecture,
    classes: usize,
    params: &DpSgdParams,
    fair: Option<&FairRegParams>,
    rng: &mut SeededRng,
) -> Result<TrainedModel> {
    let dim = dims(data)?;
    params.validate(data.len())?;
    let q = params.sampling_rate(data.len());
    let noise_std = if params.noise_multiplier == 0.0 {
        0.0
    } else {
        params.noise_multiplier * params.clip_norm
    };
    let fair = fair.filter(|f| f.reg_weight > 0.0);
    let mut model = Model::init(architecture, dim, classes, rng)?;
    let p = model.params().len();
    let mut empty_steps = 0;

    for _ in 0..params.steps {
        let batch: Vec<&LabeledExample> = data.iter().filter(|_| rng.uniform() < q).collect();
        let regularizer = match fair {
            Some(f) => {
                let d = dpl(&model, &f.public_set, f.temperature, f.variant, f.absolute)?;
                Some(d.grad.into_iter().map(|g| f.reg_weight * g).collect::<Vec<_>>())
            }
            None => None,
        };
        let mut sum = vec![0.0; p];
        for e in &batch {
            let (_, mut g) = model.loss_and_grad(&e.features, e.label)?;
            if let Some(r) = &regularizer {
                for (gi, ri) in g.iter_mut().zip(r) {
                    *gi += ri;
                }
            }
            for (s, c) in sum.iter_mut().zip(clip(&g, params.clip_norm)) {
                *s += c;
            }
        }
        for s in &mut sum {
            *s += rng.gaussian(noise_std)?;
        }
        if batch.is_empty() {
            empty_steps += 1;
            continue;
        }
        let scale = params.learning_rate / batch.len() as f64;
        for (theta, s) in model.params_mut().iter_mut().zip(&sum) {
            *theta -= scale * s;
        }
    }
    if empty_steps > 0 {
        log::debug!("{empty_steps} of {} steps drew an empty batch", params.steps);
    }
    let epsilon = dp_sgd_epsilon(q, params.noise_multiplier, params.steps, params.delta, &default_orders())?;
    Ok(TrainedModel {
        model,
        epsilon,
        empty_steps,
    })
}
