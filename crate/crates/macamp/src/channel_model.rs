//! Problem-instance representation and the uncoded-user reduction.
//!
//! A [`ChannelConfig`] fixes one instance of the channel
//! `Y = sum_i X_i + alpha*S + Z`: per-user power budgets, state and noise
//! variances, and the state-coupling coefficient `alpha` (`alpha = 1` is the
//! dirty-paper model, `alpha = 0` the stateless common-source model).

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("state_var must be positive (got {0})")]
    NonPositiveStateVar(f64),
    #[error("noise_var must be positive (got {0})")]
    NonPositiveNoiseVar(f64),
    #[error("power of user {user} must be non-negative (got {value})")]
    NegativePower { user: usize, value: f64 },
    #[error("state_coupling must lie in [0,1] (got {0})")]
    CouplingOutOfRange(f64),
    #[error("powers list is empty")]
    NoUsers,
    #[error("non-finite field value {0}")]
    NonFinite(f64),
    #[error("user index {index} out of range for {n_users} users")]
    UserOutOfRange { index: usize, n_users: usize },
    #[error("reduction yields zero-variance state")]
    ZeroVarianceState,
    #[error("power split length {split} does not match {n_users} users")]
    SplitLengthMismatch { split: usize, n_users: usize },
    #[error("gamma of user {user} must lie in [0,1] (got {value})")]
    GammaOutOfRange { user: usize, value: f64 },
}

/// One problem instance: powers `P_i`, state variance `Q`, noise variance
/// `sigma_z^2` and the state coupling `alpha`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ChannelConfig {
    pub powers: Vec<f64>,
    pub state_var: f64,
    pub noise_var: f64,
    pub state_coupling: f64,
}

impl ChannelConfig {
    pub fn new(powers: Vec<f64>, state_var: f64, noise_var: f64, state_coupling: f64) -> Self {
        ChannelConfig {
            powers,
            state_var,
            noise_var,
            state_coupling,
        }
    }

    pub fn n_users(&self) -> usize {
        self.powers.len()
    }

    /// Checks every invariant and wraps the config as [`ValidatedConfig`].
    pub fn validate(self) -> Result<ValidatedConfig, ConfigError> {
        for &v in [self.state_var, self.noise_var, self.state_coupling]
            .iter()
            .chain(self.powers.iter())
        {
            if !v.is_finite() {
                return Err(ConfigError::NonFinite(v));
            }
        }
        if self.powers.is_empty() {
            return Err(ConfigError::NoUsers);
        }
        if self.state_var <= 0.0 {
            return Err(ConfigError::NonPositiveStateVar(self.state_var));
        }
        if self.noise_var <= 0.0 {
            return Err(ConfigError::NonPositiveNoiseVar(self.noise_var));
        }
        if let Some((user, &value)) = self.powers.iter().enumerate().find(|(_, &p)| p < 0.0) {
            return Err(ConfigError::NegativePower { user, value });
        }
        if !(0.0..=1.0).contains(&self.state_coupling) {
            return Err(ConfigError::CouplingOutOfRange(self.state_coupling));
        }
        Ok(ValidatedConfig(self))
    }
}

/// A [`ChannelConfig`] whose invariants have been checked. Immutable; all
/// downstream operations take `&ValidatedConfig`.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ValidatedConfig(ChannelConfig);

impl std::ops::Deref for ValidatedConfig {
    type Target = ChannelConfig;
    fn deref(&self) -> &ChannelConfig {
        &self.0
    }
}

impl ValidatedConfig {
    pub fn inner(&self) -> &ChannelConfig {
        &self.0
    }

    /// Removes `user`, folding its full power into the effective state: the
    /// removed sender transmits `sqrt(P/Q) * S` uncoded, so the remaining
    /// `N-1` senders see an additive state of variance
    /// `Q' = (alpha*sqrt(Q) + sqrt(P))^2` with coupling 1.
    pub fn reduce_uncoded_user(&self, user: usize) -> Result<ValidatedConfig, ConfigError> {
        if user >= self.n_users() {
            return Err(ConfigError::UserOutOfRange {
                index: user,
                n_users: self.n_users(),
            });
        }
        let amp = self.state_coupling * self.state_var.sqrt() + self.powers[user].sqrt();
        let new_q = amp * amp;
        if new_q == 0.0 {
            return Err(ConfigError::ZeroVarianceState);
        }
        let mut powers = self.powers.clone();
        powers.remove(user);
        if powers.is_empty() {
            return Err(ConfigError::NoUsers);
        }
        ChannelConfig::new(powers, new_q, self.noise_var, 1.0).validate()
    }
}

/// Per-user fraction of power spent on message transmission; the remaining
/// `1 - gamma_i` amplifies the state.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PowerSplit {
    pub gammas: Vec<f64>,
}

impl PowerSplit {
    pub fn new(gammas: Vec<f64>) -> Self {
        PowerSplit { gammas }
    }

    pub fn uniform(n_users: usize, gamma: f64) -> Self {
        PowerSplit {
            gammas: vec![gamma; n_users],
        }
    }

    pub fn validate_for(&self, config: &ValidatedConfig) -> Result<(), ConfigError> {
        if self.gammas.len() != config.n_users() {
            return Err(ConfigError::SplitLengthMismatch {
                split: self.gammas.len(),
                n_users: config.n_users(),
            });
        }
        if let Some((user, &value)) = self
            .gammas
            .iter()
            .enumerate()
            .find(|(_, &g)| !(0.0..=1.0).contains(&g))
        {
            return Err(ConfigError::GammaOutOfRange { user, value });
        }
        Ok(())
    }
}

/// One point of the region: a rate vector plus a distortion value.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TradeoffPoint {
    pub rates: Vec<f64>,
    pub distortion: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(powers: &[f64], q: f64, nv: f64, alpha: f64) -> ChannelConfig {
        ChannelConfig::new(powers.to_vec(), q, nv, alpha)
    }

    #[test]
    fn fig3_config_is_valid() {
        assert!(cfg(&[2.0, 2.0], 1.0, 1.0, 1.0).validate().is_ok());
    }

    #[test]
    fn zero_power_user_allowed() {
        assert!(cfg(&[0.0], 1.0, 1.0, 1.0).validate().is_ok());
    }

    #[test]
    fn rejects_each_invariant_with_distinct_diagnostic() {
        let e = cfg(&[2.0, 2.0], 0.0, 1.0, 1.0).validate().unwrap_err();
        assert!(e.to_string().contains("state_var must be positive"));
        let e = cfg(&[2.0], 1.0, 0.0, 1.0).validate().unwrap_err();
        assert!(matches!(e, ConfigError::NonPositiveNoiseVar(_)));
        let e = cfg(&[2.0, -1.0], 1.0, 1.0, 1.0).validate().unwrap_err();
        assert!(matches!(e, ConfigError::NegativePower { user: 1, .. }));
        let e = cfg(&[2.0], 1.0, 1.0, 1.5).validate().unwrap_err();
        assert!(matches!(e, ConfigError::CouplingOutOfRange(_)));
        let e = cfg(&[], 1.0, 1.0, 1.0).validate().unwrap_err();
        assert!(matches!(e, ConfigError::NoUsers));
    }

    #[test]
    fn reduce_stateless_three_sender() {
        let c = cfg(&[2.0, 2.0, 2.0], 1.0, 1.0, 0.0).validate().unwrap();
        let r = c.reduce_uncoded_user(2).unwrap();
        assert_eq!(r.powers, vec![2.0, 2.0]);
        assert!((r.state_var - 2.0).abs() < 1e-15);
        assert_eq!(r.state_coupling, 1.0);
        assert_eq!(r.noise_var, 1.0);
    }

    #[test]
    fn reduce_zero_power_user_keeps_state_var() {
        let c = cfg(&[3.0, 0.0], 1.0, 1.0, 1.0).validate().unwrap();
        let r = c.reduce_uncoded_user(1).unwrap();
        assert_eq!(r.powers, vec![3.0]);
        assert!((r.state_var - 1.0).abs() < 1e-15);
    }

    #[test]
    fn reduce_dirty_paper_three_sender() {
        let c = cfg(&[2.0, 2.0, 2.0], 1.0, 1.0, 1.0).validate().unwrap();
        let r = c.reduce_uncoded_user(2).unwrap();
        let expect = (1.0 + 2.0_f64.sqrt()).powi(2);
        assert!((r.state_var - expect).abs() < 1e-12);
        assert!((expect - 5.8284).abs() < 1e-4);
    }

    #[test]
    fn reduce_errors() {
        let c = cfg(&[2.0, 2.0], 1.0, 1.0, 1.0).validate().unwrap();
        assert!(matches!(
            c.reduce_uncoded_user(2),
            Err(ConfigError::UserOutOfRange { .. })
        ));
        let c = cfg(&[2.0, 0.0], 1.0, 1.0, 0.0).validate().unwrap();
        assert_eq!(c.reduce_uncoded_user(1), Err(ConfigError::ZeroVarianceState));
    }

    #[test]
    fn reduction_order_insensitive() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(7);
        for _ in 0..200 {
            let powers: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..5.0)).collect();
            let q = rng.gen_range(0.1..4.0);
            let alpha = rng.gen_range(0.0..=1.0);
            let c = cfg(&powers, q, 1.0, alpha).validate().unwrap();
            // remove users 3 then 2, vs 2 then 3 (indices after first removal shift)
            let a = c.reduce_uncoded_user(3).unwrap().reduce_uncoded_user(2).unwrap();
            let b = c.reduce_uncoded_user(2).unwrap().reduce_uncoded_user(2).unwrap();
            assert!((a.state_var - b.state_var).abs() < 1e-12);
            assert_eq!(a.powers, b.powers);
            let direct = (alpha * q.sqrt() + powers[2].sqrt() + powers[3].sqrt()).powi(2);
            assert!((a.state_var - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn reduce_with_zero_coupling_gives_removed_power() {
        let c = cfg(&[1.0, 2.5], 3.0, 1.0, 0.0).validate().unwrap();
        let r = c.reduce_uncoded_user(1).unwrap();
        assert!((r.state_var - 2.5).abs() < 1e-15);
    }

    #[test]
    fn split_validation() {
        let c = cfg(&[2.0, 2.0], 1.0, 1.0, 1.0).validate().unwrap();
        assert!(PowerSplit::new(vec![0.5, 1.0]).validate_for(&c).is_ok());
        assert!(PowerSplit::new(vec![0.5]).validate_for(&c).is_err());
        assert!(PowerSplit::new(vec![0.5, 1.1]).validate_for(&c).is_err());
    }
}
