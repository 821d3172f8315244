//! Closed-form confidence quantities used by the engine.
//!
//! `log` is the natural logarithm throughout; `log2` appears only in the
//! number of smoothness levels. Every confidence parameter must satisfy
//! `0 < delta < 1/e` so that `log log (1/delta) >= 0`.

use std::f64::consts::E;

use crate::error::{invalid, Result};

/// Smallest constant for which the sample-size bound carries its guarantee.
pub const C_THEORY: f64 = 7.0e6;

/// Default multiplier on [`C_THEORY`]; gives an effective constant of ~10.
pub const DEFAULT_C_SCALE: f64 = 1.43e-6;

/// Largest admissible confidence parameter, just below `1/e`.
pub const DEFAULT_DELTA_CAP: f64 = 0.367_879_440_171_440_3; // e^-1 - 1e-9

/// Constant of the sample-size bound, split into its theoretical value and a
/// scale for desk-sized runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatParams {
    pub c_theory: f64,
    pub c_scale: f64,
    pub delta_cap: f64,
}

impl Default for StatParams {
    fn default() -> Self {
        Self {
            c_theory: C_THEORY,
            c_scale: DEFAULT_C_SCALE,
            delta_cap: DEFAULT_DELTA_CAP,
        }
    }
}

impl StatParams {
    /// Theoretical regime: `c_scale = 1`.
    pub fn theoretical() -> Self {
        Self {
            c_scale: 1.0,
            ..Self::default()
        }
    }

    /// Parameters whose effective constant is exactly `c_eff`.
    pub fn with_effective_constant(c_eff: f64) -> Self {
        Self {
            c_scale: c_eff / C_THEORY,
            ..Self::default()
        }
    }

    pub fn c_eff(&self) -> f64 {
        self.c_theory * self.c_scale
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c_theory >= C_THEORY) {
            return Err(invalid("c_theory", format!("must be >= {C_THEORY}")));
        }
        if !(self.c_scale > 0.0 && self.c_scale.is_finite()) {
            return Err(invalid("c_scale", "must be positive and finite"));
        }
        if !(self.delta_cap > 0.0 && self.delta_cap < (-1f64).exp()) {
            return Err(invalid("delta_cap", "must lie in (0, 1/e)"));
        }
        Ok(())
    }
}

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < (-1f64).exp()) {
        return Err(invalid("delta", format!("must lie in (0, 1/e), got {delta}")));
    }
    Ok(())
}

/// `log(1/delta) + log log(1/delta)`.
fn delta_term(delta: f64) -> f64 {
    let l = -delta.ln();
    l + l.ln()
}

/// Anytime confidence radius
/// `b = sqrt((2/k) (log(1/delta) + log log(1/delta) + log log(e k)))`.
pub fn confidence_radius(delta: f64, k: u64) -> Result<f64> {
    check_delta(delta)?;
    if k == 0 {
        return Err(invalid("k", "must be at least 1"));
    }
    let k = k as f64;
    // log(e k) = 1 + log k avoids overflow for huge k
    let iterated = (1.0 + k.ln()).ln();
    Ok((2.0 / k * (delta_term(delta) + iterated)).sqrt())
}

/// The sample-size bound before rounding:
/// `(c/Delta^2) (log(1/delta) + log log(1/delta) + log log(512 sqrt(e) / Delta))`.
pub fn sample_bound_raw(params: &StatParams, delta: f64, margin: f64) -> Result<f64> {
    check_delta(delta)?;
    if !(margin > 0.0 && margin <= 1.0) {
        return Err(invalid("Delta", format!("must lie in (0, 1], got {margin}")));
    }
    let inner = (512.0 * E.sqrt() / margin).ln().ln();
    Ok(params.c_eff() / (margin * margin) * (delta_term(delta) + inner))
}

/// Number of label requests `k(delta, Delta)` (rounded up; saturates at
/// `u64::MAX`).
pub fn sample_bound(params: &StatParams, delta: f64, margin: f64) -> Result<u64> {
    let raw = sample_bound_raw(params, delta, margin)?;
    Ok(raw.ceil() as u64)
}

/// `Delta = max(eps/2, (eps / 2C)^(1/(beta+1)))`.
pub fn margin_threshold(epsilon: f64, beta: f64, c: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(invalid("beta", format!("must be nonnegative, got {beta}")));
    }
    if !(c >= 1.0 && c.is_finite()) {
        return Err(invalid("C", format!("must be >= 1, got {c}")));
    }
    let half = epsilon / 2.0;
    Ok(half.max((half / c).powf(1.0 / (beta + 1.0))))
}

/// `phi_n = sqrt((log(1/delta) + log log(1/delta)) / n)`. Not used by the
/// engine.
pub fn phi(n: u64, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    Ok((delta_term(delta) / n as f64).sqrt())
}

pub(crate) fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(invalid("epsilon", format!("must lie in (0, 1/2), got {epsilon}")));
    }
    Ok(())
}

/// Number of smoothness levels, `ceil(log2(1/eps))`.
pub fn num_levels(epsilon: f64) -> Result<usize> {
    check_epsilon(epsilon)?;
    Ok((1.0 / epsilon).log2().ceil() as usize)
}

/// Smoothness and noise grids for a given accuracy.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub epsilon: f64,
    /// `alpha_i = 2^(1-i)` for `i = 1..=ceil(log2(1/eps))`.
    pub alphas: Vec<f64>,
    /// `beta_i = i / log^2(1/eps)` for `i = 1..=ceil(log^3(1/eps))`.
    pub betas: Vec<f64>,
    /// `Delta_i = margin_threshold(eps, beta_i, C)`.
    pub margins: Vec<f64>,
}

pub fn build_grids(epsilon: f64, c: f64) -> Result<GridSpec> {
    let levels = num_levels(epsilon)?;
    let log_inv = (1.0 / epsilon).ln();
    let n_betas = (log_inv.powi(3).ceil() as usize).max(1);
    let alphas = (1..=levels).map(|i| 2f64.powi(1 - i as i32)).collect();
    let betas: Vec<f64> = (1..=n_betas).map(|i| i as f64 / (log_inv * log_inv)).collect();
    let margins = betas
        .iter()
        .map(|&b| margin_threshold(epsilon, b, c))
        .collect::<Result<_>>()?;
    Ok(GridSpec {
        epsilon,
        alphas,
        betas,
        margins,
    })
}

impl GridSpec {
    /// Per-point request cap `max_i k(delta, Delta_i)`.
    pub fn request_cap(&self, params: &StatParams, delta: f64) -> Result<u64> {
        let mut cap = 0;
        for &m in &self.margins {
            cap = cap.max(sample_bound(params, delta, m)?);
        }
        Ok(cap)
    }

    /// Largest `i` (1-based) with `requests <= k(delta, Delta_i)`: the
    /// strongest noise level whose budget covers the requests spent.
    pub fn certified_level(&self, params: &StatParams, delta: f64, requests: u64) -> Result<Option<usize>> {
        let mut best = None;
        for (i, &m) in self.margins.iter().enumerate() {
            if requests <= sample_bound(params, delta, m)? {
                best = Some(i + 1);
            }
        }
        Ok(best)
    }
}
