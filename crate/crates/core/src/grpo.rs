//! Pure math of the group-relative surrogate objective.
//!
//! A group is n responses to one prompt. Rewards are standardized inside the
//! group (population statistics):
//!
//! ```text
//! A_i = (R_i - mean(R)) / std(R)
//! ```
//!
//! Per-token importance ratios against the rollout-time policy feed a
//! decoupled-clip surrogate ("clip-higher": the upper bound may sit further
//! from 1 than the lower one, so unlikely tokens can gain mass):
//!
//! ```text
//! value_t = min(r_t * A, clip(r_t, 1 - eps_low, 1 + eps_high) * A)
//! ```
//!
//! KL regularization against a frozen reference policy uses the k3 estimator
//! `rho - ln(rho) - 1` with `rho = pi_ref / pi_theta`, which is pointwise
//! nonnegative and unbiased under sampling from `pi_theta`.
//!
//! Everything here is a pure function; the derivative outputs are with
//! respect to `log pi_theta(token)`, which is exactly what
//! `PolicyParams::grad_weighted_logprob` consumes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GrpoError {
    #[error("degenerate group: zero reward variance (filter such groups first)")]
    DegenerateGroup,
    #[error("length mismatch: {left} vs {right}")]
    ShapeMismatch { left: usize, right: usize },
}

/// Clipping bounds. `eps_high >= eps_low` is the expected (clip-higher)
/// configuration; equality recovers the symmetric clip.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClipConfig {
    pub eps_low: f64,
    pub eps_high: f64,
}

impl ClipConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.eps_low > 0.0 && self.eps_low < 1.0) {
            return Err(format!("eps_low must be in (0, 1), got {}", self.eps_low));
        }
        if self.eps_high <= 0.0 {
            return Err(format!("eps_high must be positive, got {}", self.eps_high));
        }
        Ok(())
    }
}

/// KL penalty weight; 0 disables the penalty.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KlConfig {
    pub beta: f64,
}

impl KlConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.beta < 0.0 {
            return Err(format!("beta must be nonnegative, got {}", self.beta));
        }
        Ok(())
    }
}

/// Standardized advantages plus the group statistics they came from.
#[derive(Clone, Debug, PartialEq)]
pub struct AdvantageSet {
    pub advantages: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

/// Group-standardize rewards with the population standard deviation.
/// `rewards` must have at least two entries and nonzero variance.
pub fn compute_advantages(rewards: &[f64]) -> Result<AdvantageSet, GrpoError> {
    if rewards.len() < 2 {
        return Err(GrpoError::DegenerateGroup);
    }
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let var = rewards.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    if std == 0.0 {
        return Err(GrpoError::DegenerateGroup);
    }
    Ok(AdvantageSet {
        advantages: rewards.iter().map(|r| (r - mean) / std).collect(),
        mean,
        std,
    })
}

/// Per-token probability ratios `exp(logp_new - logp_old)`.
pub fn importance_ratio(logp_new: &[f64], logp_old: &[f64]) -> Result<Vec<f64>, GrpoError> {
    if logp_new.len() != logp_old.len() {
        return Err(GrpoError::ShapeMismatch {
            left: logp_new.len(),
            right: logp_old.len(),
        });
    }
    Ok(logp_new
        .iter()
        .zip(logp_old)
        .map(|(n, o)| (n - o).exp())
        .collect())
}

/// Decoupled-clip surrogate. Returns per-token objective values and their
/// derivatives with respect to `log pi_theta(token)`. The derivative is
/// `r_t * A` when the unclipped branch is selected and 0 when clipped; ties
/// at the boundary resolve to the unclipped branch so gradients keep flowing.
pub fn clipped_surrogate(ratios: &[f64], advantage: f64, clip: &ClipConfig) -> (Vec<f64>, Vec<f64>) {
    let lo = 1.0 - clip.eps_low;
    let hi = 1.0 + clip.eps_high;
    let mut values = Vec::with_capacity(ratios.len());
    let mut derivs = Vec::with_capacity(ratios.len());
    for &r in ratios {
        let unclipped = r * advantage;
        let clipped = r.clamp(lo, hi) * advantage;
        if unclipped <= clipped {
            values.push(unclipped);
            derivs.push(r * advantage);
        } else {
            values.push(clipped);
            derivs.push(0.0);
        }
    }
    (values, derivs)
}

/// k3 KL estimator. With `rho_t = exp(logp_ref_t - logp_theta_t)`:
///
/// ```text
/// value_t = rho_t - ln(rho_t) - 1 >= 0
/// d value_t / d logp_theta_t = 1 - rho_t
/// ```
///
/// Computed as `expm1(delta) - delta` with `delta = logp_ref - logp_theta`,
/// which keeps the value nonnegative even when the policies nearly agree.
pub fn kl_k3(logp_theta: &[f64], logp_ref: &[f64]) -> Result<(Vec<f64>, Vec<f64>), GrpoError> {
    if logp_theta.len() != logp_ref.len() {
        return Err(GrpoError::ShapeMismatch {
            left: logp_theta.len(),
            right: logp_ref.len(),
        });
    }
    let mut values = Vec::with_capacity(logp_theta.len());
    let mut derivs = Vec::with_capacity(logp_theta.len());
    for (&lt, &lr) in logp_theta.iter().zip(logp_ref) {
        let delta = lr - lt;
        values.push(delta.exp_m1() - delta);
        derivs.push(-delta.exp_m1());
    }
    Ok((values, derivs))
}

/// Assemble the scalar loss (negated objective) from per-token surrogate and
/// KL terms, both aggregated as a global token mean across the minibatch:
///
/// ```text
/// loss = -mean(surrogate) + beta * mean(kl)
/// dloss/dlogp_t = (-surrogate_deriv_t + beta * kl_deriv_t) / token_count
/// ```
pub fn assemble_loss(
    surrogate_values: &[f64],
    surrogate_derivs: &[f64],
    kl_values: &[f64],
    kl_derivs: &[f64],
    kl: &KlConfig,
) -> (f64, Vec<f64>) {
    let count = surrogate_values.len();
    assert_eq!(count, surrogate_derivs.len());
    assert_eq!(count, kl_values.len());
    assert_eq!(count, kl_derivs.len());
    if count == 0 {
        return (0.0, Vec::new());
    }
    let n = count as f64;
    let mean_surr = surrogate_values.iter().sum::<f64>() / n;
    let mean_kl = kl_values.iter().sum::<f64>() / n;
    let loss = -mean_surr + kl.beta * mean_kl;
    let derivs = surrogate_derivs
        .iter()
        .zip(kl_derivs)
        .map(|(sd, kd)| (-sd + kl.beta * kd) / n)
        .collect();
    (loss, derivs)
}
