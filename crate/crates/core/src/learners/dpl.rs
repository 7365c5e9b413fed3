//! Demographic parity loss over a public set, using tempered-softmax soft
//! prediction rates in place of indicator counts.

use serde::{Deserialize, Serialize};

use super::model::{softmax, Model};
use crate::error::{Error, Result};
use crate::fairness::DisparityVariant;

/// Two active pairs closer than this share the subgradient.
const TIE_TOLERANCE: f64 = 1e-12;

/// A public, unlabeled point with its sensitive group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublicPoint {
    pub features: Vec<f64>,
    pub group: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairRegParams {
    pub reg_weight: f64,
    pub temperature: f64,
    #[serde(default)]
    pub variant: DisparityVariant,
    /// Penalize `max |Γ|` instead of the signed `max Γ`.
    #[serde(default)]
    pub absolute: bool,
    pub public_set: Vec<PublicPoint>,
}

impl FairRegParams {
    pub fn new(reg_weight: f64, temperature: f64, public_set: Vec<PublicPoint>) -> Result<Self> {
        let p = Self {
            reg_weight,
            temperature,
            variant: DisparityVariant::default(),
            absolute: false,
            public_set,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.reg_weight >= 0.0) || !self.reg_weight.is_finite() {
            return Err(Error::param("reg_weight", format!("must be finite and >= 0, got {}", self.reg_weight)));
        }
        if !(self.temperature > 0.0) {
            return Err(Error::param("temperature", format!("must be > 0, got {}", self.temperature)));
        }
        if self.reg_weight > 0.0 && self.public_set.is_empty() {
            return Err(Error::Empty("public set"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DplValue {
    pub loss: f64,
    pub grad: Vec<f64>,
}

/// One disparity term: `sign * (p(z,k) - reference)`, where the reference
/// depends on the variant.
#[derive(Debug, Clone, Copy)]
struct Term {
    group: usize,
    class: usize,
    /// For the between-groups variant, the group compared against.
    other: Option<usize>,
    sign: f64,
    value: f64,
}

/// Soft demographic parity loss and its (sub)gradient.
pub fn dpl(
    model: &Model,
    public: &[PublicPoint],
    temperature: f64,
    variant: DisparityVariant,
    absolute: bool,
) -> Result<DplValue> {
    if public.is_empty() {
        return Err(Error::Empty("public set"));
    }
    if !(temperature > 0.0) {
        return Err(Error::param("temperature", format!("must be > 0, got {temperature}")));
    }
    let k = model.classes();
    let groups = public.iter().map(|p| p.group).max().unwrap_or(0) + 1;
    let mut soft = Vec::with_capacity(public.len());
    let mut sums = vec![0.0; groups * k];
    let mut counts = vec![0usize; groups];
    for p in public {
        let s = softmax(&model.forward(&p.features)?, temperature);
        for c in 0..k {
            sums[p.group * k + c] += s[c];
        }
        counts[p.group] += 1;
        soft.push(s);
    }
    let n = public.len() as f64;
    let class_sum = |c: usize| (0..groups).map(|z| sums[z * k + c]).sum::<f64>();
    let rate = |z: usize, c: usize| sums[z * k + c] / counts[z] as f64;

    let mut terms = Vec::new();
    for z in (0..groups).filter(|&z| counts[z] > 0) {
        let nz = counts[z] as f64;
        for c in 0..k {
            match variant {
                DisparityVariant::ToOverallNoDoubleCount => {
                    if counts[z] == public.len() {
                        continue;
                    }
                    let rest = (class_sum(c) - sums[z * k + c]) / (n - nz);
                    terms.push(Term { group: z, class: c, other: None, sign: 1.0, value: rate(z, c) - rest });
                }
                DisparityVariant::ToOverall => {
                    terms.push(Term {
                        group: z,
                        class: c,
                        other: None,
                        sign: 1.0,
                        value: rate(z, c) - class_sum(c) / n,
                    });
                }
                DisparityVariant::BetweenGroups => {
                    for w in (0..groups).filter(|&w| w != z && counts[w] > 0) {
                        let diff = rate(z, c) - rate(w, c);
                        terms.push(Term {
                            group: z,
                            class: c,
                            other: Some(w),
                            sign: if diff < 0.0 { -1.0 } else { 1.0 },
                            value: diff.abs(),
                        });
                    }
                }
            }
        }
    }
    if terms.is_empty() {
        return Err(Error::Undefined("demographic parity loss needs at least two groups"));
    }
    if absolute {
        for t in &mut terms {
            if t.value < 0.0 {
                t.value = -t.value;
                t.sign = -t.sign;
            }
        }
    }
    let loss = terms.iter().map(|t| t.value).fold(f64::NEG_INFINITY, f64::max);
    let active: Vec<Term> = terms.into_iter().filter(|t| loss - t.value <= TIE_TOLERANCE).collect();
    let weight = 1.0 / active.len() as f64;

    // d loss / d s_i[c] for every public point, accumulated over active terms
    let mut dsoft = vec![vec![0.0; k]; public.len()];
    for t in &active {
        let nz = counts[t.group] as f64;
        for (i, p) in public.iter().enumerate() {
            let own = if p.group == t.group { 1.0 / nz } else { 0.0 };
            let reference = match variant {
                DisparityVariant::ToOverallNoDoubleCount => {
                    if p.group == t.group {
                        0.0
                    } else {
                        1.0 / (n - nz)
                    }
                }
                DisparityVariant::ToOverall => 1.0 / n,
                DisparityVariant::BetweenGroups => match t.other {
                    Some(w) if p.group == w => 1.0 / counts[w] as f64,
                    _ => 0.0,
                },
            };
            dsoft[i][t.class] += weight * t.sign * (own - reference);
        }
    }

    let mut grad = vec![0.0; model.params().len()];
    for (i, p) in public.iter().enumerate() {
        if dsoft[i].iter().all(|&v| v == 0.0) {
            continue;
        }
        // Jacobian of softmax(l / T): ds_c / dl_j = s_c (δ_cj - s_j) / T
        let s = &soft[i];
        let inner: f64 = (0..k).map(|c| dsoft[i][c] * s[c]).sum();
        let dlogits: Vec<f64> = (0..k).map(|j| s[j] * (dsoft[i][j] - inner) / temperature).collect();
        for (g, v) in grad.iter_mut().zip(model.backward(&p.features, &dlogits)?) {
            *g += v;
        }
    }
    Ok(DplValue { loss, grad })
}
