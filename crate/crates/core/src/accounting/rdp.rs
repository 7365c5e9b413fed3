//! Rényi-DP costs of the mechanisms used by both frameworks and conversion
//! to (epsilon, delta).

use serde::{Deserialize, Serialize};

use crate::domain::VoteHistogram;
use crate::error::{Error, Result};

/// Integers 2..=64 followed by 128 and 256.
pub fn default_orders() -> Vec<f64> {
    (2..=64).map(f64::from).chain([128.0, 256.0]).collect()
}

/// Rényi divergence bounds (nats) on a grid of orders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RdpCurve {
    orders: Vec<f64>,
    values: Vec<f64>,
}

impl RdpCurve {
    pub fn new(orders: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if orders.len() != values.len() {
            return Err(Error::LengthMismatch {
                left: orders.len(),
                right: values.len(),
            });
        }
        if orders.iter().any(|&o| !(o > 1.0)) {
            return Err(Error::param("orders", "every order must exceed 1"));
        }
        if orders.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::param("orders", "orders must be strictly ascending"));
        }
        if values.iter().any(|&v| !(v >= 0.0)) {
            return Err(Error::param("values", "RDP values must be nonnegative"));
        }
        Ok(Self { orders, values })
    }

    pub fn zeros(orders: Vec<f64>) -> Self {
        let values = vec![0.0; orders.len()];
        Self { orders, values }
    }

    /// Evaluates `cost(order)` on every order of the grid.
    pub fn from_fn<F>(orders: Vec<f64>, mut cost: F) -> Result<Self>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let values = orders.iter().map(|&o| cost(o)).collect::<Result<Vec<_>>>()?;
        Self::new(orders, values)
    }

    pub fn orders(&self) -> &[f64] {
        &self.orders
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_empty(&self) -> bool {
        self.orders.is_empty()
    }

    /// Pointwise sum (sequential composition).
    pub fn compose(&mut self, other: &RdpCurve) -> Result<()> {
        if self.orders != other.orders {
            return Err(Error::param("orders", "curves must share the same order grid"));
        }
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
        Ok(())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            orders: self.orders.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }
}

/// L2 sensitivity of a Gaussian mechanism, stored squared since the cost
/// only depends on the square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L2Sensitivity {
    squared: f64,
}

impl L2Sensitivity {
    /// Sensitivity `sqrt(2)` of a vote histogram when one teacher changes
    /// its vote.
    pub const GNMAX: L2Sensitivity = L2Sensitivity { squared: 2.0 };
    pub const ONE: L2Sensitivity = L2Sensitivity { squared: 1.0 };

    pub fn new(norm: f64) -> Self {
        Self {
            squared: norm * norm,
        }
    }

    pub fn from_squared(squared: f64) -> Self {
        Self { squared }
    }

    pub fn squared(self) -> f64 {
        self.squared
    }
}

fn check_order(order: f64) -> Result<()> {
    if !(order > 1.0) {
        return Err(Error::param("order", format!("must exceed 1, got {order}")));
    }
    Ok(())
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma >= 0.0) {
        return Err(Error::param("sigma", format!("must be >= 0, got {sigma}")));
    }
    Ok(())
}

/// `order * sensitivity^2 / (2 sigma^2)`; infinite when `sigma == 0`.
pub fn gaussian_rdp(sigma: f64, sensitivity: L2Sensitivity, order: f64) -> Result<f64> {
    check_sigma(sigma)?;
    check_order(order)?;
    if sigma == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(order * sensitivity.squared() / (2.0 * (sigma * sigma)))
}

/// Cost of the consensus check: a Gaussian mechanism on the maximum vote
/// count, which has sensitivity 1.
pub fn threshold_check_rdp(sigma1: f64, order: f64) -> Result<f64> {
    gaussian_rdp(sigma1, L2Sensitivity::ONE, order)
}

/// Data-independent cost of one GNMax answer, `order / sigma^2`.
pub fn gnmax_rdp(sigma2: f64, order: f64) -> Result<f64> {
    gaussian_rdp(sigma2, L2Sensitivity::GNMAX, order)
}

/// Upper bound on the probability that the noisy argmax differs from the
/// plurality: `1/2 sum_{i != i*} erfc((n_i* - n_i) / (2 sigma))`, capped at 1.
pub fn q_tilde(hist: &VoteHistogram, sigma2: f64) -> Result<f64> {
    if !(sigma2 > 0.0) {
        return Err(Error::param("sigma2", format!("must be > 0, got {sigma2}")));
    }
    let top = hist.plurality();
    let n_top = f64::from(hist.votes()[top]);
    let bound: f64 = hist
        .votes()
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != top)
        .map(|(_, &n)| 0.5 * libm::erfc((n_top - f64::from(n)) / (2.0 * sigma2)))
        .sum();
    Ok(bound.min(1.0))
}

/// A per-query argmax cost and whether the data-dependent bound applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArgmaxCost {
    pub value: f64,
    /// The data-dependent bound was infeasible or larger than the
    /// data-independent one.
    pub fallback: bool,
}

/// `log(1 - exp(x))` for `x < 0`.
fn log1mexp(x: f64) -> f64 {
    if x > -std::f64::consts::LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

fn logaddexp(a: f64, b: f64) -> f64 {
    let hi = a.max(b);
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + ((a - hi).exp() + (b - hi).exp()).ln()
}

/// Data-dependent RDP of GNMax at `order` given `qt`, a bound on the
/// probability of not releasing the plurality.
///
/// The generic bound holds for any pair of data-independent guarantees
/// `(mu1, eps1)`, `(mu2, eps2)` with `order <= mu1, mu2`:
///
/// ```text
/// 1/(order-1) * log((1-q) A^(order-1) + q B^(order-1))
/// A = (1-q) / (1 - (q e^eps2)^((mu2-1)/mu2)),  B = e^eps1 / q^(1/(mu1-1))
/// ```
///
/// valid when `q < 1` and `q <= (e^((mu2-1) eps2) / (mu1/(mu1-1) * mu2/(mu2-1)))^mu2`.
/// The pair is chosen as `mu2 = sigma sqrt(log(1/q))`, `mu1 = mu2 + 1`, with
/// `eps_mu = mu / sigma^2` from the data-independent GNMax cost. The result
/// is capped by the data-independent cost `order / sigma^2`.
pub fn data_dependent_rdp(qt: f64, sigma2: f64, order: f64) -> Result<ArgmaxCost> {
    check_order(order)?;
    if !(sigma2 > 0.0) {
        return Err(Error::param("sigma2", format!("must be > 0, got {sigma2}")));
    }
    if !(0.0..=1.0).contains(&qt) {
        return Err(Error::param("qt", format!("must lie in [0, 1], got {qt}")));
    }
    let variance = sigma2 * sigma2;
    let cap = order / variance;
    if qt == 0.0 {
        return Ok(ArgmaxCost {
            value: 0.0,
            fallback: false,
        });
    }
    let fallback = ArgmaxCost {
        value: cap,
        fallback: true,
    };
    let logq = qt.ln();
    if logq >= 0.0 {
        return Ok(fallback);
    }
    let mu2 = (variance * -logq).sqrt();
    let mu1 = mu2 + 1.0;
    if !(mu1 > order && mu2 > 1.0) {
        return Ok(fallback);
    }
    let eps1 = mu1 / variance;
    let eps2 = mu2 / variance;
    let log_a2 = (mu2 - 1.0) * eps2;
    let q_limit = log_a2 - mu2 * ((1.0 + 1.0 / (mu1 - 1.0)).ln() + (1.0 + 1.0 / (mu2 - 1.0)).ln());
    if !(logq <= q_limit && -logq > eps2) {
        return Ok(fallback);
    }
    let log1q = log1mexp(logq);
    let log_a = (order - 1.0) * (log1q - log1mexp((logq + eps2) * (1.0 - 1.0 / mu2)));
    let log_b = (order - 1.0) * (eps1 - logq / (mu1 - 1.0));
    let bound = logaddexp(log1q + log_a, logq + log_b) / (order - 1.0);
    if !bound.is_finite() || bound > cap {
        return Ok(fallback);
    }
    Ok(ArgmaxCost {
        value: bound.max(0.0),
        fallback: false,
    })
}

/// Per-step RDP of the Poisson-subsampled Gaussian mechanism at an integer
/// order, via the binomial expansion
/// `A = sum_i C(order, i) (1-q)^(order-i) q^i exp((i^2 - i) / (2 sigma^2))`,
/// returning `log(A) / (order - 1)`. Sensitivity is the clipping norm, which
/// the noise multiplier `sigma` is relative to.
pub fn subsampled_gaussian_rdp(q: f64, sigma: f64, order: u32) -> Result<f64> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::param("q", format!("must lie in (0, 1], got {q}")));
    }
    check_sigma(sigma)?;
    if order < 2 {
        return Err(Error::param("order", format!("must be an integer >= 2, got {order}")));
    }
    if sigma == 0.0 {
        return Ok(f64::INFINITY);
    }
    let alpha = f64::from(order);
    if q == 1.0 {
        return Ok(alpha / (2.0 * (sigma * sigma)));
    }
    let ln_q = q.ln();
    let ln_1mq = (-q).ln_1p();
    let two_var = 2.0 * sigma * sigma;
    let mut ln_binom = 0.0f64;
    let mut terms = Vec::with_capacity(order as usize + 1);
    for i in 0..=order {
        if i > 0 {
            ln_binom += (f64::from(order - i + 1) / f64::from(i)).ln();
        }
        let fi = f64::from(i);
        terms.push(ln_binom + (alpha - fi) * ln_1mq + fi * ln_q + (fi * fi - fi) / two_var);
    }
    let hi = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ln_a = hi + terms.iter().map(|t| (t - hi).exp()).sum::<f64>().ln();
    Ok((ln_a / (alpha - 1.0)).max(0.0))
}

/// Converts an RDP curve to epsilon at `delta`:
/// `min over orders of value + log(1/delta) / (order - 1)`.
pub fn rdp_to_dp(curve: &RdpCurve, delta: f64) -> Result<f64> {
    rdp_to_dp_with_order(curve, delta).map(|(eps, _)| eps)
}

/// Like [`rdp_to_dp`], also returning the minimizing order.
pub fn rdp_to_dp_with_order(curve: &RdpCurve, delta: f64) -> Result<(f64, f64)> {
    if curve.is_empty() {
        return Err(Error::Empty("RDP curve"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param("delta", format!("must lie in (0, 1), got {delta}")));
    }
    let log_inv_delta = -delta.ln();
    let mut best = (f64::INFINITY, curve.orders[0]);
    for (&order, &value) in curve.orders.iter().zip(&curve.values) {
        let eps = value + log_inv_delta / (order - 1.0);
        if eps < best.0 {
            best = (eps, order);
        }
    }
    Ok(best)
}

/// Epsilon of `steps` compositions of the subsampled Gaussian.
pub fn dp_sgd_epsilon(q: f64, sigma: f64, steps: u64, delta: f64, orders: &[f64]) -> Result<f64> {
    let per_step = RdpCurve::from_fn(orders.to_vec(), |o| {
        if o.fract() != 0.0 {
            return Err(Error::param("orders", "subsampled Gaussian accounting uses integer orders"));
        }
        subsampled_gaussian_rdp(q, sigma, o as u32)
    })?;
    rdp_to_dp(&per_step.scaled(steps as f64), delta)
}

/// Smallest noise multiplier (to within 1e-4 relative) whose DP-SGD epsilon
/// does not exceed `target_eps`.
pub fn calibrate_noise_multiplier(
    q: f64,
    steps: u64,
    delta: f64,
    target_eps: f64,
    orders: &[f64],
) -> Result<f64> {
    if !(target_eps > 0.0) {
        return Err(Error::param("target_eps", format!("must be > 0, got {target_eps}")));
    }
    let eps = |s: f64| dp_sgd_epsilon(q, s, steps, delta, orders);
    let mut lo = 1e-2;
    let mut hi = 1.0;
    while eps(hi)? > target_eps {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::param("target_eps", "unreachable with noise multiplier <= 1e6"));
        }
    }
    if eps(lo)? <= target_eps {
        return Ok(lo);
    }
    while (hi - lo) / hi > 1e-4 {
        let mid = 0.5 * (lo + hi);
        if eps(mid)? > target_eps {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}
