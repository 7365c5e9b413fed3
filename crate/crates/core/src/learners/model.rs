//! Softmax regression and a one-hidden-layer tanh MLP with hand-written
//! gradients.
//!
//! Parameter layout (row-major):
//! * softmax regression: `W (K x d)`, `b (K)`;
//! * MLP: `W1 (h x d)`, `b1 (h)`, `W2 (K x h)`, `b2 (K)`.

use serde::{Deserialize, Serialize};

use crate::domain::Classifier;
use crate::error::{Error, Result};
use crate::rng::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum Architecture {
    SoftmaxRegression,
    Mlp { hidden: usize },
}

impl Architecture {
    pub fn param_count(self, dim: usize, classes: usize) -> usize {
        match self {
            Architecture::SoftmaxRegression => classes * dim + classes,
            Architecture::Mlp { hidden } => hidden * dim + hidden + classes * hidden + classes,
        }
    }
}

/// Standard deviation of the initial parameters (variance 0.01).
pub const INIT_STD: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    architecture: Architecture,
    dim: usize,
    classes: usize,
    params: Vec<f64>,
}

impl Model {
    pub fn zeros(architecture: Architecture, dim: usize, classes: usize) -> Result<Self> {
        if dim == 0 || classes < 2 {
            return Err(Error::param("dims", format!("need d >= 1 and K >= 2, got d={dim}, K={classes}")));
        }
        if let Architecture::Mlp { hidden: 0 } = architecture {
            return Err(Error::param("hidden", "hidden width must be positive"));
        }
        Ok(Self {
            architecture,
            dim,
            classes,
            params: vec![0.0; architecture.param_count(dim, classes)],
        })
    }

    /// Parameters drawn i.i.d. from N(0, INIT_STD^2).
    pub fn init(architecture: Architecture, dim: usize, classes: usize, rng: &mut SeededRng) -> Result<Self> {
        let mut model = Self::zeros(architecture, dim, classes)?;
        for p in &mut model.params {
            *p = rng.gaussian(INIT_STD)?;
        }
        Ok(model)
    }

    pub fn from_params(architecture: Architecture, dim: usize, classes: usize, params: Vec<f64>) -> Result<Self> {
        let mut model = Self::zeros(architecture, dim, classes)?;
        if params.len() != model.params.len() {
            return Err(Error::LengthMismatch {
                left: params.len(),
                right: model.params.len(),
            });
        }
        model.params = params;
        Ok(model)
    }

    pub fn architecture(&self) -> Architecture {
        self.architecture
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: x.len(),
            });
        }
        Ok(())
    }

    fn hidden(&self, x: &[f64], hidden: usize) -> Vec<f64> {
        let d = self.dim;
        let (w1, rest) = self.params.split_at(hidden * d);
        let b1 = &rest[..hidden];
        (0..hidden)
            .map(|j| (dot(&w1[j * d..(j + 1) * d], x) + b1[j]).tanh())
            .collect()
    }

    fn affine(weights: &[f64], bias: &[f64], input: &[f64]) -> Vec<f64> {
        let n = input.len();
        bias.iter()
            .enumerate()
            .map(|(k, b)| dot(&weights[k * n..(k + 1) * n], input) + b)
            .collect()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let (d, k) = (self.dim, self.classes);
        Ok(match self.architecture {
            Architecture::SoftmaxRegression => {
                let (w, b) = self.params.split_at(k * d);
                Self::affine(w, b, x)
            }
            Architecture::Mlp { hidden } => {
                let h = self.hidden(x, hidden);
                let second = &self.params[hidden * d + hidden..];
                let (w2, b2) = second.split_at(k * hidden);
                Self::affine(w2, b2, &h)
            }
        })
    }

    /// Argmax of the logits, ties to the lowest class id.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.forward(x)?))
    }

    /// Gradient with respect to the parameters of `<dlogits, logits(x)>`.
    pub fn backward(&self, x: &[f64], dlogits: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        if dlogits.len() != self.classes {
            return Err(Error::LengthMismatch {
                left: dlogits.len(),
                right: self.classes,
            });
        }
        let (d, k) = (self.dim, self.classes);
        let mut grad = vec![0.0; self.params.len()];
        match self.architecture {
            Architecture::SoftmaxRegression => {
                for c in 0..k {
                    for j in 0..d {
                        grad[c * d + j] = dlogits[c] * x[j];
                    }
                    grad[k * d + c] = dlogits[c];
                }
            }
            Architecture::Mlp { hidden } => {
                let h = self.hidden(x, hidden);
                let off2 = hidden * d + hidden;
                let w2 = &self.params[off2..off2 + k * hidden];
                for c in 0..k {
                    for j in 0..hidden {
                        grad[off2 + c * hidden + j] = dlogits[c] * h[j];
                    }
                    grad[off2 + k * hidden + c] = dlogits[c];
                }
                for j in 0..hidden {
                    let upstream: f64 = (0..k).map(|c| dlogits[c] * w2[c * hidden + j]).sum();
                    let dpre = upstream * (1.0 - h[j] * h[j]);
                    for i in 0..d {
                        grad[j * d + i] = dpre * x[i];
                    }
                    grad[hidden * d + j] = dpre;
                }
            }
        }
        Ok(grad)
    }

    /// Cross-entropy loss of one example and its parameter gradient.
    pub fn loss_and_grad(&self, x: &[f64], label: usize) -> Result<(f64, Vec<f64>)> {
        if label >= self.classes {
            return Err(Error::OutOfRange {
                what: "label",
                value: label,
                limit: self.classes,
            });
        }
        let logits = self.forward(x)?;
        let probs = softmax(&logits, 1.0);
        let loss = -log_softmax_at(&logits, label);
        let mut dlogits = probs;
        dlogits[label] -= 1.0;
        Ok((loss, self.backward(x, &dlogits)?))
    }

    pub fn loss(&self, x: &[f64], label: usize) -> Result<f64> {
        let logits = self.forward(x)?;
        Ok(-log_softmax_at(&logits, label))
    }
}

impl Classifier for Model {
    fn num_classes(&self) -> usize {
        self.classes
    }

    fn classify(&self, features: &[f64]) -> Result<usize> {
        self.predict(features)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Softmax of `logits / temperature`.
pub fn softmax(logits: &[f64], temperature: f64) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| ((l - max) / temperature).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn log_softmax_at(logits: &[f64], index: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    logits[index] - lse
}

pub fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Rescales `g` to norm at most `clip_norm`: `g / max(1, |g| / C)`.
pub fn clip(g: &[f64], clip_norm: f64) -> Vec<f64> {
    let factor = (l2_norm(g) / clip_norm).max(1.0);
    g.iter().map(|x| x / factor).collect()
}
