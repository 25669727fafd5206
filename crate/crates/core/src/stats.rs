//! Finite-sample bounds.
//!
//! The score bound is Azuma–Hoeffding: for increments in `[0,1]` with
//! arbitrary history-dependent conditional means `μ_t`,
//! `Pr(Ŝ − (1/n)Σμ_t ≥ s) ≤ exp(−2ns²)`. It needs no independence, so it
//! stays valid for memoryful devices and adaptive strategies.
//!
//! The bias interval is a two-sided Hoeffding interval on `Pr(y=0)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn default_level() -> f64 {
    0.05
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfidenceParams {
    /// Significance of the score lower bound.
    #[serde(default = "default_level")]
    pub alpha: f64,
    /// Significance of the bias interval.
    #[serde(default = "default_level")]
    pub beta: f64,
}

impl Default for ConfidenceParams {
    fn default() -> Self {
        ConfidenceParams { alpha: 0.05, beta: 0.05 }
    }
}

impl ConfidenceParams {
    pub fn validate(&self) -> Result<()> {
        check_level("alpha", self.alpha)?;
        check_level("beta", self.beta)
    }
}

fn check_level(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("{name}={v} must lie in (0,1)")))
    }
}

/// A lower confidence bound on a mean of `[0,1]` increments.
pub trait LowerBound {
    fn lower(&self, s_hat: f64, n: usize) -> Result<f64>;
}

#[derive(Clone, Copy, Debug)]
pub struct AzumaHoeffding {
    pub alpha: f64,
}

impl LowerBound for AzumaHoeffding {
    fn lower(&self, s_hat: f64, n: usize) -> Result<f64> {
        azuma_lower(s_hat, n, self.alpha)
    }
}

/// `sqrt(ln(1/α) / 2n)`.
pub fn azuma_penalty(n: usize, alpha: f64) -> Result<f64> {
    check_level("alpha", alpha)?;
    if n == 0 {
        return Err(Error::domain("bound needs at least one round"));
    }
    Ok(((1.0 / alpha).ln() / (2.0 * n as f64)).sqrt())
}

/// `max(0, ŝ − sqrt(ln(1/α)/2n))`.
pub fn azuma_lower(s_hat: f64, n: usize, alpha: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&s_hat) {
        return Err(Error::domain(format!("score {s_hat} outside [0,1]")));
    }
    Ok((s_hat - azuma_penalty(n, alpha)?).clamp(0.0, 1.0))
}

/// Point estimate and Hoeffding interval of the query bias.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiasEstimate {
    pub eps_hat: f64,
    #[serde(rename = "bias_delta")]
    pub delta: f64,
    pub eps_max: f64,
    #[serde(rename = "bias_n")]
    pub n: usize,
}

/// `ε̂ = n0/n − 1/2`, `δ = sqrt(ln(2/β)/2n)`, `ε_max = min(|ε̂| + δ, 1/2)`.
pub fn bias_interval(n0: usize, n: usize, beta: f64) -> Result<BiasEstimate> {
    check_level("beta", beta)?;
    if n == 0 {
        return Err(Error::domain("bias interval needs at least one round"));
    }
    if n0 > n {
        return Err(Error::domain(format!("n0={n0} exceeds n={n}")));
    }
    let eps_hat = n0 as f64 / n as f64 - 0.5;
    let delta = ((2.0 / beta).ln() / (2.0 * n as f64)).sqrt();
    Ok(BiasEstimate { eps_hat, delta, eps_max: (eps_hat.abs() + delta).min(0.5), n })
}
