//! Weighted-sum bounds `T(mu, lambda) = max sum_i mu_i R_i + (lambda/2) log2(Q/D)`:
//! regime classification on the lambda-mu plane, converse evaluation, and
//! concave maximization over power splits.
//!
//! After sorting the rate weights non-increasing, three regimes decide which
//! reduction applies:
//!
//! * Case 1 (`lambda <= mu_N`): maximize the weighted-rate/distortion
//!   objective jointly over all split coordinates (strictly concave).
//! * Case 2 (`lambda >= mu_1`): uncoded transmission of the state by all
//!   users; the optimum sits at the all-zero split.
//! * Case 3 (`mu_j <= lambda <= mu_{j-1}`): users `j..N` transmit uncoded
//!   (`gamma = 0`) and the remaining sub-problem is maximized.
//!
//! In every case the reported value equals the weighted objective evaluated
//! at the reported split, with rates read off the successive-cancellation
//! vertex that decodes higher-weight users later.

use crate::channel_model::{PowerSplit, ValidatedConfig};
use crate::half_log2_1p;
use crate::tradeoff_n_user::{distortion_unchecked, sc_vertex};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum WeightError {
    #[error("all-zero weight vector")]
    AllZero,
    #[error("weight vector has {weights} entries for {n_users} users")]
    LengthMismatch { weights: usize, n_users: usize },
    #[error("weights must be non-negative and finite (got {0})")]
    BadWeight(f64),
    #[error("maximize_split requires lambda <= smallest positive mu")]
    LambdaTooLarge,
    #[error("exhaustive grid limited to 4 users (got {0})")]
    GridTooManyUsers(usize),
    #[error("grid resolution must be >= 2")]
    GridTooSmall,
    #[error("coordinate ascent did not converge; best value {value}")]
    NonConvergence { value: f64 },
}

/// Non-negative rate weights `mu_i` plus the distortion weight `lambda`.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct WeightVector {
    pub mus: Vec<f64>,
    pub lambda: f64,
}

impl WeightVector {
    pub fn new(mus: Vec<f64>, lambda: f64) -> Self {
        WeightVector { mus, lambda }
    }

    fn check(&self) -> Result<(), WeightError> {
        for &w in self.mus.iter().chain(std::iter::once(&self.lambda)) {
            if !w.is_finite() || w < 0.0 {
                return Err(WeightError::BadWeight(w));
            }
        }
        if self.mus.iter().all(|&m| m == 0.0) && self.lambda == 0.0 {
            return Err(WeightError::AllZero);
        }
        Ok(())
    }
}

/// Weights reindexed so `mu` is non-increasing and scaled so the smallest
/// positive `mu` is 1 (`lambda` rescaled by the same factor).
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct NormalizedWeights {
    pub weights: WeightVector,
    /// `order[k]` is the original index of the user at sorted position `k`.
    pub order: Vec<usize>,
    /// Divisor applied to every weight (1 when no `mu` is positive).
    pub scale: f64,
}

pub fn normalize_weights(raw: &WeightVector) -> Result<NormalizedWeights, WeightError> {
    raw.check()?;
    let mut order: Vec<usize> = (0..raw.mus.len()).collect();
    order.sort_by(|&a, &b| raw.mus[b].total_cmp(&raw.mus[a]));
    let scale = raw
        .mus
        .iter()
        .copied()
        .filter(|&m| m > 0.0)
        .fold(f64::INFINITY, f64::min);
    let scale = if scale.is_finite() { scale } else { 1.0 };
    let mus = order.iter().map(|&i| raw.mus[i] / scale).collect();
    Ok(NormalizedWeights {
        weights: WeightVector::new(mus, raw.lambda / scale),
        order,
        scale,
    })
}

/// Which reduction of the weighted-sum bound applies.
///
/// Boundary policy: `lambda = 1` is Case 1; `lambda = mu_j` goes to the
/// smaller pivot (Case 2 when `lambda = mu_1`).
#[derive(Debug, Clone, Copy, Serialize, PartialEq, Eq)]
pub enum Regime {
    Case1,
    Case2,
    /// Users `pivot..N` (1-based, in sorted order) are forced uncoded.
    Case3 { pivot: usize },
}

pub fn classify_regime(normalized: &NormalizedWeights) -> Regime {
    let mus = &normalized.weights.mus;
    let lambda = normalized.weights.lambda;
    let positive: Vec<f64> = mus.iter().copied().filter(|&m| m > 0.0).collect();
    if positive.is_empty() {
        return Regime::Case2;
    }
    if lambda <= positive[positive.len() - 1] {
        return Regime::Case1;
    }
    if lambda >= positive[0] {
        return Regime::Case2;
    }
    // smallest pivot j (1-based) with mu_j <= lambda < mu_{j-1}
    let j = (1..positive.len())
        .find(|&j| lambda >= positive[j])
        .expect("lambda strictly between mu_1 and mu_m") + 1;
    Regime::Case3 { pivot: j }
}

/// Result of a weighted-sum maximization.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct OptimumReport {
    /// Optimal objective value in bits (original, unscaled weights).
    pub value: f64,
    /// Maximizing power split, original user order.
    pub split: PowerSplit,
    pub regime: Regime,
    /// Rates of the achieving successive-cancellation corner, original order.
    pub rates: Vec<f64>,
    /// Human-readable description of the achieving operating point.
    pub corner: String,
}

/// Sorted-space problem view shared by the evaluators and optimizers.
struct Sorted<'a> {
    powers: Vec<f64>,
    mus: Vec<f64>,
    lambda: f64,
    config: &'a ValidatedConfig,
}

impl<'a> Sorted<'a> {
    fn new(config: &'a ValidatedConfig, norm: &NormalizedWeights) -> Self {
        Sorted {
            powers: norm.order.iter().map(|&i| config.powers[i]).collect(),
            // unscaled weights so objective values stay in original units
            mus: norm.weights.mus.iter().map(|m| m * norm.scale).collect(),
            lambda: norm.weights.lambda * norm.scale,
            config,
        }
    }

    /// Greedy weighted rate sum plus distortion credit at a sorted split.
    fn objective(&self, gammas: &[f64]) -> f64 {
        let n = self.powers.len();
        let s2 = self.config.noise_var;
        let mut value = 0.0;
        let mut prefix = 0.0;
        for i in 0..n {
            prefix += gammas[i] * self.powers[i];
            let next = if i + 1 < n { self.mus[i + 1] } else { 0.0 };
            let w = self.mus[i] - next;
            if w != 0.0 {
                value += w * half_log2_1p(prefix / s2);
            }
        }
        if self.lambda > 0.0 {
            let d = distortion_unchecked(
                &self.powers,
                self.config.state_var,
                s2,
                self.config.state_coupling,
                gammas,
            );
            value += 0.5 * self.lambda * (self.config.state_var / d).log2();
        }
        value
    }
}

/// Direct evaluation of `sum_i mu_i R_i + (lambda/2) log2(Q/D)` at a split,
/// with the rate sum maximized over the split's polymatroid (greedy).
pub fn evaluate_objective(
    config: &ValidatedConfig,
    weights: &WeightVector,
    split: &PowerSplit,
) -> Result<f64, WeightError> {
    let norm = normalized_for(config, weights)?;
    let sorted = Sorted::new(config, &norm);
    let gammas: Vec<f64> = norm.order.iter().map(|&i| split.gammas[i]).collect();
    Ok(sorted.objective(&gammas))
}

fn normalized_for(
    config: &ValidatedConfig,
    weights: &WeightVector,
) -> Result<NormalizedWeights, WeightError> {
    if weights.mus.len() != config.n_users() {
        return Err(WeightError::LengthMismatch {
            weights: weights.mus.len(),
            n_users: config.n_users(),
        });
    }
    normalize_weights(weights)
}

const GOLDEN_INV: f64 = 0.381_966_011_250_105_2; // 2 - phi
const MAX_SWEEPS: usize = 200;

/// Golden-section maximization of a unimodal `f` on `[0, 1]`.
fn golden_max(f: impl Fn(f64) -> f64) -> (f64, f64) {
    let (mut a, mut b) = (0.0_f64, 1.0_f64);
    let mut x1 = a + GOLDEN_INV * (b - a);
    let mut x2 = b - GOLDEN_INV * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > 1e-11 {
        if f1 > f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = a + GOLDEN_INV * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = b - GOLDEN_INV * (b - a);
            f2 = f(x2);
        }
    }
    // endpoints can win when the maximizer sits on the boundary
    let mut best = if f1 > f2 { (x1, f1) } else { (x2, f2) };
    for x in [0.0, 1.0] {
        let fx = f(x);
        if fx > best.1 {
            best = (x, fx);
        }
    }
    best
}

/// Cyclic coordinate golden-section ascent over the `active` coordinates of a
/// sorted split (inactive coordinates stay fixed). Concavity of the
/// restricted objective makes the maximizer unique.
fn coordinate_ascent(
    sorted: &Sorted,
    gammas: &mut [f64],
    active: &[usize],
) -> Result<f64, WeightError> {
    let mut value = sorted.objective(gammas);
    if active.is_empty() {
        return Ok(value);
    }
    for _ in 0..MAX_SWEEPS {
        let mut max_move = 0.0_f64;
        for &k in active {
            let (x, fx) = golden_max(|g| {
                let mut trial = gammas.to_vec();
                trial[k] = g;
                sorted.objective(&trial)
            });
            if fx > value {
                max_move = max_move.max((x - gammas[k]).abs());
                gammas[k] = x;
                value = fx;
            }
        }
        if max_move < 1e-8 {
            return Ok(value);
        }
    }
    Err(WeightError::NonConvergence { value })
}

fn report_from_sorted(
    config: &ValidatedConfig,
    norm: &NormalizedWeights,
    sorted: &Sorted,
    gammas_sorted: &[f64],
    regime: Regime,
    corner: String,
) -> OptimumReport {
    let n = config.n_users();
    let mut split = vec![0.0; n];
    for (k, &orig) in norm.order.iter().enumerate() {
        split[orig] = gammas_sorted[k];
    }
    let split = PowerSplit::new(split);
    // higher-weight users decoded later: decoding order is sorted order reversed
    let decode_order: Vec<usize> = norm.order.iter().rev().copied().collect();
    let rates = sc_vertex(config, &split, &decode_order).rates;
    OptimumReport {
        value: sorted.objective(gammas_sorted),
        split,
        regime,
        rates,
        corner,
    }
}

/// Converse upper bound `T(mu, lambda)` with its achieving split and corner.
pub fn converse_bound(
    config: &ValidatedConfig,
    weights: &WeightVector,
) -> Result<OptimumReport, WeightError> {
    let norm = normalized_for(config, weights)?;
    let sorted = Sorted::new(config, &norm);
    let n = config.n_users();
    let regime = classify_regime(&norm);

    if sorted.lambda == 0.0 {
        // rates increase in every gamma; no distortion credit
        let gammas = vec![1.0; n];
        return Ok(report_from_sorted(
            config,
            &norm,
            &sorted,
            &gammas,
            regime,
            "full message power, successive cancellation".to_string(),
        ));
    }

    let positive = norm.weights.mus.iter().filter(|&&m| m > 0.0).count();
    let (active_count, corner): (usize, String) = match regime {
        Regime::Case2 => (
            0,
            "uncoded state amplification by all users (zero rates)".to_string(),
        ),
        Regime::Case1 => (
            positive,
            "joint split optimum, successive cancellation".to_string(),
        ),
        Regime::Case3 { pivot } => (
            pivot - 1,
            format!("users {pivot}..{n} (by weight rank) uncoded, sub-problem optimum"),
        ),
    };
    let mut gammas = vec![0.0; n];
    let active: Vec<usize> = (0..active_count).collect();
    coordinate_ascent(&sorted, &mut gammas, &active)?;
    Ok(report_from_sorted(config, &norm, &sorted, &gammas, regime, corner))
}

/// Unique maximizer of the Case-1 objective (requires `lambda` at most the
/// smallest positive `mu` after normalization).
pub fn maximize_split(
    config: &ValidatedConfig,
    weights: &WeightVector,
) -> Result<OptimumReport, WeightError> {
    let norm = normalized_for(config, weights)?;
    if !matches!(classify_regime(&norm), Regime::Case1) {
        return Err(WeightError::LambdaTooLarge);
    }
    converse_bound(config, weights)
}

/// Exhaustive grid maximum of the same weighted objective; brute-force
/// validation oracle for [`converse_bound`] and [`maximize_split`].
pub fn grid_oracle(
    config: &ValidatedConfig,
    weights: &WeightVector,
    resolution: usize,
) -> Result<OptimumReport, WeightError> {
    let n = config.n_users();
    if n > 4 {
        return Err(WeightError::GridTooManyUsers(n));
    }
    if resolution < 2 {
        return Err(WeightError::GridTooSmall);
    }
    let norm = normalized_for(config, weights)?;
    let sorted = Sorted::new(config, &norm);
    let step = 1.0 / (resolution - 1) as f64;
    let grid: Vec<f64> = (0..resolution).map(|i| i as f64 * step).collect();

    // per-axis message powers and amplification amplitudes
    let axis: Vec<(Vec<f64>, Vec<f64>)> = sorted
        .powers
        .iter()
        .map(|&p| {
            (
                grid.iter().map(|&g| g * p).collect(),
                grid.iter().map(|&g| ((1.0 - g) * p).sqrt()).collect(),
            )
        })
        .collect();
    let s2 = config.noise_var;
    let amp0 = config.state_coupling * config.state_var.sqrt();
    let mut w = vec![0.0; n];
    for i in 0..n {
        let next = if i + 1 < n { sorted.mus[i + 1] } else { 0.0 };
        w[i] = sorted.mus[i] - next;
    }
    let lambda = sorted.lambda;
    let log2_s2 = s2.log2();
    // innermost cell: c_last*log2(s2+sa) + c_dist*log2(s2+sa+sb^2) + offset
    let c_last = 0.5 * (w[n - 1] - lambda);
    let c_dist = 0.5 * lambda;
    let offset = -0.5 * w[n - 1] * log2_s2 + 0.5 * lambda * config.state_var.log2();

    let best = (0..resolution)
        .into_par_iter()
        .map(|i0| {
            let mut best = (f64::NEG_INFINITY, usize::MAX);
            let mut idx = vec![0usize; n];
            idx[0] = i0;
            if n == 1 {
                let base = s2 + axis[0].0[i0];
                let sb = amp0 + axis[0].1[i0];
                let v = offset + c_last * base.log2() + c_dist * (base + sb * sb).log2();
                return (v, i0);
            }
            let pa0 = axis[0].0[i0];
            let pb0 = amp0 + axis[0].1[i0];
            let t0 = if w[0] != 0.0 {
                w[0] * half_log2_1p(pa0 / s2)
            } else {
                0.0
            };
            scan_inner(
                &axis, &mut idx, 1, pa0, pb0, t0, s2, &w, c_last, c_dist, offset, &mut best,
                resolution,
            );
            best
        })
        .reduce(
            || (f64::NEG_INFINITY, usize::MAX),
            |a, b| {
                if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                    b
                } else {
                    a
                }
            },
        );

    // unflatten the row-major winning index
    let mut idx = vec![0usize; n];
    let mut rem = best.1;
    for k in (0..n).rev() {
        idx[k] = rem % resolution;
        rem /= resolution;
    }
    let gammas_sorted: Vec<f64> = idx.iter().map(|&i| grid[i]).collect();
    let regime = classify_regime(&norm);
    Ok(report_from_sorted(
        config,
        &norm,
        &sorted,
        &gammas_sorted,
        regime,
        format!("grid oracle, resolution {resolution}"),
    ))
}

#[allow(clippy::too_many_arguments)]
fn scan_inner(
    axis: &[(Vec<f64>, Vec<f64>)],
    idx: &mut [usize],
    depth: usize,
    pa: f64,
    pb: f64,
    t: f64,
    s2: f64,
    w: &[f64],
    c_last: f64,
    c_dist: f64,
    offset: f64,
    best: &mut (f64, usize),
    resolution: usize,
) {
    let n = axis.len();
    if depth == n - 1 {
        // innermost axis: closed-form cell evaluation
        let (ref a, ref b) = axis[n - 1];
        for i in 0..resolution {
            idx[n - 1] = i;
            let sa = pa + a[i];
            let sb = pb + b[i];
            let base = s2 + sa;
            let v = t + offset + c_last * base.log2() + c_dist * (base + sb * sb).log2();
            if v > best.0 {
                let flat = idx
                    .iter()
                    .fold(0usize, |acc, &k| acc * resolution + k);
                *best = (v, flat);
            } else if v == best.0 {
                let flat = idx.iter().fold(0usize, |acc, &k| acc * resolution + k);
                if flat < best.1 {
                    best.1 = flat;
                }
            }
        }
        return;
    }
    let (ref a, ref b) = axis[depth];
    for i in 0..resolution {
        idx[depth] = i;
        let pa2 = pa + a[i];
        let pb2 = pb + b[i];
        let t2 = if w[depth] != 0.0 {
            t + w[depth] * half_log2_1p(pa2 / s2)
        } else {
            t
        };
        scan_inner(
            axis, idx, depth + 1, pa2, pb2, t2, s2, w, c_last, c_dist, offset, best, resolution,
        );
    }
}
