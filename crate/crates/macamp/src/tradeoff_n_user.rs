//! N-sender trade-off region: polymatroid rate constraints over user subsets,
//! the general-alpha distortion bound, and permutation corner points.
//!
//! For a power split `(gamma_1, ..., gamma_N)` the rate region is the
//! polymatroid `{ R >= 0 : sum_{j in J} R_j <= g(J) for all J }` with rank
//! function `g(J) = 1/2 log2(1 + sum_{j in J} gamma_j P_j / sigma_z^2)`; its
//! vertices are the successive-cancellation rate allocations, one per
//! decoding order.

use crate::channel_model::{ConfigError, PowerSplit, ValidatedConfig};
use crate::half_log2_1p;
use serde::Serialize;

/// Vertex enumeration is N! permutations; hard cap.
pub const MAX_VERTEX_USERS: usize = 8;

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SubsetRateCap {
    /// Bitmask over user indices, bit `i` = user `i`.
    pub subset: u32,
    pub cap: f64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct PolymatroidVertex {
    /// Decoding order: `permutation[0]` is decoded first (sees all later
    /// users' message power as interference).
    pub permutation: Vec<usize>,
    /// Rates indexed by user, not by decoding position.
    pub rates: Vec<f64>,
}

/// `1/2 log2(1 + sum_{j in subset} gamma_j P_j / sigma_z^2)`.
pub fn subset_rate_cap(
    config: &ValidatedConfig,
    split: &PowerSplit,
    subset: u32,
) -> Result<SubsetRateCap, ConfigError> {
    split.validate_for(config)?;
    let n = config.n_users();
    if n < 32 && subset >= 1u32 << n {
        let bad = (31 - subset.leading_zeros()) as usize;
        return Err(ConfigError::UserOutOfRange {
            index: bad,
            n_users: n,
        });
    }
    let msg_power: f64 = (0..n)
        .filter(|&j| subset & (1 << j) != 0)
        .map(|j| split.gammas[j] * config.powers[j])
        .sum();
    Ok(SubsetRateCap {
        subset,
        cap: half_log2_1p(msg_power / config.noise_var),
    })
}

/// Minimal distortion for this split:
/// `Q (sigma^2 + sum gamma_j P_j) / (sigma^2 + sum gamma_j P_j + (alpha sqrt(Q) + sum sqrt((1-gamma_j) P_j))^2)`.
pub fn distortion_bound_n(config: &ValidatedConfig, split: &PowerSplit) -> Result<f64, ConfigError> {
    split.validate_for(config)?;
    Ok(distortion_unchecked(
        &config.powers,
        config.state_var,
        config.noise_var,
        config.state_coupling,
        &split.gammas,
    ))
}

/// Formula core, shared with the optimizer's inner loops.
pub(crate) fn distortion_unchecked(
    powers: &[f64],
    state_var: f64,
    noise_var: f64,
    coupling: f64,
    gammas: &[f64],
) -> f64 {
    let msg_power: f64 = gammas.iter().zip(powers).map(|(g, p)| g * p).sum();
    let amp: f64 = coupling * state_var.sqrt()
        + gammas
            .iter()
            .zip(powers)
            .map(|(g, p)| ((1.0 - g) * p).sqrt())
            .sum::<f64>();
    let base = noise_var + msg_power;
    state_var * base / (base + amp * amp)
}

/// All N! successive-cancellation vertices, in lexicographic permutation
/// order. The user decoded last sees only noise.
pub fn polymatroid_vertices(
    config: &ValidatedConfig,
    split: &PowerSplit,
) -> Result<Vec<PolymatroidVertex>, ConfigError> {
    split.validate_for(config)?;
    let n = config.n_users();
    if n > MAX_VERTEX_USERS {
        return Err(ConfigError::UserOutOfRange {
            index: n,
            n_users: MAX_VERTEX_USERS,
        });
    }
    let mut perms = Vec::new();
    let mut current: Vec<usize> = (0..n).collect();
    lex_permutations(&mut current, 0, &mut perms);
    perms.sort();
    Ok(perms
        .into_iter()
        .map(|perm| sc_vertex(config, split, &perm))
        .collect())
}

fn lex_permutations(items: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == items.len() {
        out.push(items.clone());
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        lex_permutations(items, k + 1, out);
        items.swap(k, i);
    }
}

/// Successive-cancellation rates for one decoding order.
pub fn sc_vertex(config: &ValidatedConfig, split: &PowerSplit, perm: &[usize]) -> PolymatroidVertex {
    let n = config.n_users();
    debug_assert_eq!(perm.len(), n);
    let mut rates = vec![0.0; n];
    for (pos, &user) in perm.iter().enumerate() {
        let interference: f64 = perm[pos + 1..]
            .iter()
            .map(|&j| split.gammas[j] * config.powers[j])
            .sum();
        rates[user] = half_log2_1p(
            split.gammas[user] * config.powers[user] / (config.noise_var + interference),
        );
    }
    PolymatroidVertex {
        permutation: perm.to_vec(),
        rates,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SubmodularityReport {
    pub trials: usize,
    pub max_violation: f64,
}

/// Samples random subset pairs `(A, B)` and reports the worst violation of
/// `g(A) + g(B) >= g(A u B) + g(A n B)`.
pub fn check_submodular(
    config: &ValidatedConfig,
    split: &PowerSplit,
    trials: usize,
    seed: u64,
) -> Result<SubmodularityReport, ConfigError> {
    use rand::{Rng, SeedableRng};
    split.validate_for(config)?;
    let n = config.n_users();
    let full: u32 = if n >= 32 { u32::MAX } else { (1u32 << n) - 1 };
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let g = |s: u32| subset_rate_cap(config, split, s).map(|c| c.cap);
    let mut max_violation: f64 = 0.0;
    for _ in 0..trials {
        let a: u32 = rng.gen::<u32>() & full;
        let b: u32 = rng.gen::<u32>() & full;
        let violation = g(a | b)? + g(a & b)? - g(a)? - g(b)?;
        max_violation = max_violation.max(violation);
    }
    Ok(SubmodularityReport {
        trials,
        max_violation,
    })
}
