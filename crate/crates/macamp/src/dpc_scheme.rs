//! Achievable-scheme parameters: power-split signal construction, dirty-paper
//! coding coefficients, successive-cancellation rate allocations and the
//! receiver's scalar LMMSE coefficient.
//!
//! With split `gamma_i`, user `i` transmits
//! `X_i = sqrt((1-gamma_i) P_i / Q) * S + X_im`, `X_im ~ N(0, gamma_i P_i)`
//! dirty-paper coded against the effective state. The receiver estimates
//! `S_hat = c * Y`; `c` is computed from the scheme's exact second-order
//! statistics as `Cov(S,Y)/Var(Y)`, which attains the region's distortion
//! bound exactly.

use crate::channel_model::{ConfigError, PowerSplit, ValidatedConfig};
use crate::tradeoff_n_user::sc_vertex;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SchemeError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("operation requires a two-user config with state_coupling 1")]
    NotTwoUserDirtyPaper,
    #[error("invalid decoding order {0:?}")]
    InvalidOrder(Vec<usize>),
}

/// All achievable-scheme coefficients for one split and decoding order.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct DpcParameters {
    /// Decoding order, first decoded first.
    pub decoding_order: Vec<usize>,
    /// Factor multiplying `S` in the effective channel:
    /// `alpha + sum_i sqrt((1-gamma_i) P_i / Q)`.
    pub state_scale: f64,
    /// Per-user DPC scaling of the effective known state in the auxiliary
    /// `U_i = X_im + alpha_i * S_eff`.
    pub alpha_coeffs: Vec<f64>,
    /// Per-user message-component variance `gamma_i P_i`.
    pub message_vars: Vec<f64>,
    /// Per-user `sqrt((1-gamma_i) P_i / Q)`.
    pub amplification_gains: Vec<f64>,
    /// Scalar `c` with `S_hat = c * Y`.
    pub mmse_coeff: f64,
}

pub(crate) fn state_scale(config: &ValidatedConfig, split: &PowerSplit) -> f64 {
    config.state_coupling
        + split
            .gammas
            .iter()
            .zip(&config.powers)
            .map(|(g, p)| ((1.0 - g) * p / config.state_var).sqrt())
            .sum::<f64>()
}

/// `Cov(S,Y) / Var(Y)` from the scheme's second-order statistics, any N.
pub fn lmmse_coefficient_n(
    config: &ValidatedConfig,
    split: &PowerSplit,
) -> Result<f64, ConfigError> {
    split.validate_for(config)?;
    let s = state_scale(config, split);
    let q = config.state_var;
    let msg_power: f64 = split
        .gammas
        .iter()
        .zip(&config.powers)
        .map(|(g, p)| g * p)
        .sum();
    Ok(s * q / (s * s * q + msg_power + config.noise_var))
}

/// Two-user LMMSE coefficient (dirty-paper model, `alpha = 1`).
pub fn lmmse_coefficient(config: &ValidatedConfig, gamma: f64, beta: f64) -> Result<f64, SchemeError> {
    check_two_user_dpc(config)?;
    Ok(lmmse_coefficient_n(config, &PowerSplit::new(vec![gamma, beta]))?)
}

fn check_two_user_dpc(config: &ValidatedConfig) -> Result<(), SchemeError> {
    if config.n_users() != 2 || config.state_coupling != 1.0 {
        return Err(SchemeError::NotTwoUserDirtyPaper);
    }
    Ok(())
}

/// DPC coefficients for the two-user scheme under the given decoding order
/// (0-based user indices; the first-decoded user treats the other user's
/// message as noise).
pub fn two_user_dpc_params(
    config: &ValidatedConfig,
    gamma: f64,
    beta: f64,
    order: [usize; 2],
) -> Result<DpcParameters, SchemeError> {
    check_two_user_dpc(config)?;
    if !matches!(order, [0, 1] | [1, 0]) {
        return Err(SchemeError::InvalidOrder(order.to_vec()));
    }
    let split = PowerSplit::new(vec![gamma, beta]);
    split.validate_for(config).map_err(SchemeError::Config)?;
    let s2 = config.noise_var;
    let message_vars = vec![gamma * config.powers[0], beta * config.powers[1]];
    let (first, second) = (order[0], order[1]);
    let mut alpha_coeffs = vec![0.0; 2];
    alpha_coeffs[first] = message_vars[first] / (message_vars[first] + message_vars[second] + s2);
    alpha_coeffs[second] = message_vars[second] / (message_vars[second] + s2);
    let amplification_gains = split
        .gammas
        .iter()
        .zip(&config.powers)
        .map(|(g, p)| ((1.0 - g) * p / config.state_var).sqrt())
        .collect();
    Ok(DpcParameters {
        decoding_order: order.to_vec(),
        state_scale: state_scale(config, &split),
        alpha_coeffs,
        message_vars,
        amplification_gains,
        mmse_coeff: lmmse_coefficient_n(config, &split).map_err(SchemeError::Config)?,
    })
}

/// Successive-cancellation rates: the user at position `k` of the decoding
/// order gets `1/2 log2(1 + gamma_k P_k / (sigma^2 + later message power))`.
/// Returned indexed by user.
pub fn n_user_sc_rates(
    config: &ValidatedConfig,
    split: &PowerSplit,
    permutation: &[usize],
) -> Result<Vec<f64>, SchemeError> {
    split.validate_for(config).map_err(SchemeError::Config)?;
    let n = config.n_users();
    let mut seen = vec![false; n];
    if permutation.len() != n
        || permutation.iter().any(|&u| {
            u >= n || std::mem::replace(&mut seen[u], true)
        })
    {
        return Err(SchemeError::InvalidOrder(permutation.to_vec()));
    }
    Ok(sc_vertex(config, split, permutation).rates)
}

/// Convex combination of the rate vectors of two decoding orders
/// (`lambda_ts` fraction of the block spent on `order_a`).
pub fn time_share(rates_a: &[f64], rates_b: &[f64], lambda_ts: f64) -> Vec<f64> {
    rates_a
        .iter()
        .zip(rates_b)
        .map(|(a, b)| lambda_ts * a + (1.0 - lambda_ts) * b)
        .collect()
}

/// Mean squared error of the estimate `c * Y` under the scheme's statistics.
pub fn scheme_mse(config: &ValidatedConfig, split: &PowerSplit, c: f64) -> Result<f64, ConfigError> {
    split.validate_for(config)?;
    let s = state_scale(config, split);
    let q = config.state_var;
    let msg_power: f64 = split
        .gammas
        .iter()
        .zip(&config.powers)
        .map(|(g, p)| g * p)
        .sum();
    let var_y = s * s * q + msg_power + config.noise_var;
    Ok(q - 2.0 * c * s * q + c * c * var_y)
}
