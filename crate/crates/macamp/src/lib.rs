//! Rate/state-estimation trade-off regions for state-dependent Gaussian
//! multiple access channels.
//!
//! The receiver of an `N`-sender Gaussian MAC observes
//! `Y = sum_i X_i + alpha*S + Z`, where `S` is an i.i.d. Gaussian state (or
//! common source) known non-causally at every transmitter. Each sender splits
//! its power budget between dirty-paper-coded message transmission and uncoded
//! amplification of `S`; the receiver decodes all messages and forms a linear
//! MMSE estimate of `S`. This crate computes the resulting closed-form
//! trade-off region between message rates and estimation distortion, the
//! achievable-scheme parameters, weighted-sum converse bounds, and Monte Carlo
//! verification of the scheme's second-order statistics.
//!
//! All rates are in bits per channel use (logarithms base 2), distortion in
//! squared-error units.

pub mod channel_model;
pub mod cli_io;
pub mod dpc_scheme;
pub mod monte_carlo;
pub mod tradeoff_n_user;
pub mod tradeoff_two_user;
pub mod weighted_sum;

pub use channel_model::{ChannelConfig, PowerSplit, TradeoffPoint, ValidatedConfig};

/// 0.5 * log2(1 + x), the Gaussian capacity unit used throughout.
#[inline]
pub(crate) fn half_log2_1p(x: f64) -> f64 {
    0.5 * x.ln_1p() / std::f64::consts::LN_2
}
