//! Closed-form evaluation and geometric enumeration of the two-user region:
//! per-split pentagon caps, corner points, fixed-distortion cross-sections and
//! the 3-D boundary surface.
//!
//! For a split `(gamma, beta)` the rate region is the pentagon cut out by the
//! individual and sum-rate caps, and the attainable distortion is
//!
//! ```text
//! D(gamma, beta) = Q (sigma^2 + gamma P1 + beta P2)
//!     / (P1 + P2 + Q + sigma^2 + 2 sqrt(gb P1 Q) + 2 sqrt(bb P2 Q) + 2 sqrt(gb bb P1 P2))
//! ```
//!
//! with `gb = 1 - gamma`, `bb = 1 - beta`. The full region is the convex
//! closure of all such pentagons stacked at `z = log2(Q/D)`.

use crate::channel_model::{ConfigError, PowerSplit, ValidatedConfig};
use crate::half_log2_1p;
use crate::tradeoff_n_user::distortion_bound_n;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum RegionError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("operation requires a two-user config (got {0} users)")]
    NotTwoUser(usize),
    #[error("gamma/beta must lie in [0,1]")]
    SplitOutOfRange,
    #[error("grid must be >= 2")]
    GridTooSmall,
    #[error("distortion infeasible: {requested} below minimum {minimum}")]
    DistortionInfeasible { requested: f64, minimum: f64 },
    #[error("distortion target must be positive")]
    NonPositiveDistortion,
}

/// Individual and sum-rate caps of one pentagon, bits per channel use.
#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct RateCaps2 {
    pub r1_cap: f64,
    pub r2_cap: f64,
    pub rsum_cap: f64,
}

/// The two sum-rate-tight corner points of a pentagon.
#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct CornerPair {
    /// User 1 decoded last: `(1/2 log2(1 + gP1/s2), 1/2 log2(1 + bP2/(gP1+s2)))`.
    pub a1: (f64, f64),
    /// User 2 decoded last (roles swapped).
    pub a2: (f64, f64),
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq, Eq)]
pub enum SampleTag {
    CornerA1,
    CornerA2,
    SingleUser1,
    SingleUser2,
}

impl SampleTag {
    pub fn as_str(self) -> &'static str {
        match self {
            SampleTag::CornerA1 => "corner-A1",
            SampleTag::CornerA2 => "corner-A2",
            SampleTag::SingleUser1 => "single-user-1",
            SampleTag::SingleUser2 => "single-user-2",
        }
    }
}

/// One tagged boundary sample: a rate pair at `z = log2(Q/D)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SurfaceSample {
    pub gamma: f64,
    pub beta: f64,
    pub r1: f64,
    pub r2: f64,
    pub log2_q_over_d: f64,
    pub tag: SampleTag,
}

/// Raw tagged samples of the region boundary, row-major in `(gamma, beta)`.
#[derive(Debug, Clone, Serialize)]
pub struct RegionSample {
    pub samples: Vec<SurfaceSample>,
}

fn check_two_user(config: &ValidatedConfig) -> Result<(), RegionError> {
    if config.n_users() != 2 {
        return Err(RegionError::NotTwoUser(config.n_users()));
    }
    Ok(())
}

fn check_unit(x: f64) -> Result<(), RegionError> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(RegionError::SplitOutOfRange)
    }
}

pub fn rate_caps(config: &ValidatedConfig, gamma: f64, beta: f64) -> Result<RateCaps2, RegionError> {
    check_two_user(config)?;
    check_unit(gamma)?;
    check_unit(beta)?;
    let m1 = gamma * config.powers[0];
    let m2 = beta * config.powers[1];
    Ok(RateCaps2 {
        r1_cap: half_log2_1p(m1 / config.noise_var),
        r2_cap: half_log2_1p(m2 / config.noise_var),
        rsum_cap: half_log2_1p((m1 + m2) / config.noise_var),
    })
}

/// Minimal achievable distortion for this split.
pub fn distortion_bound(config: &ValidatedConfig, gamma: f64, beta: f64) -> Result<f64, RegionError> {
    check_two_user(config)?;
    check_unit(gamma)?;
    check_unit(beta)?;
    Ok(distortion_bound_n(config, &PowerSplit::new(vec![gamma, beta]))?)
}

pub fn corner_points(
    config: &ValidatedConfig,
    gamma: f64,
    beta: f64,
) -> Result<CornerPair, RegionError> {
    check_two_user(config)?;
    check_unit(gamma)?;
    check_unit(beta)?;
    let s2 = config.noise_var;
    let m1 = gamma * config.powers[0];
    let m2 = beta * config.powers[1];
    Ok(CornerPair {
        a1: (half_log2_1p(m1 / s2), half_log2_1p(m2 / (m1 + s2))),
        a2: (half_log2_1p(m1 / (m2 + s2)), half_log2_1p(m2 / s2)),
    })
}

/// Upper-right boundary of the rate region attainable at distortion at most
/// `d_target`, as a monotone polyline (r1 decreasing, r2 increasing).
///
/// Pentagons are nested in `beta`, so for each `gamma` on a `grid_res`-point
/// sweep only the largest feasible `beta` matters; it is located by bisection
/// on the monotone map `beta -> D(gamma, beta)`. Collected pentagon corners
/// are then convexified (time-sharing) and the Pareto frontier extracted,
/// ties broken toward larger r1.
pub fn cross_section(
    config: &ValidatedConfig,
    d_target: f64,
    grid_res: usize,
) -> Result<Vec<(f64, f64)>, RegionError> {
    check_two_user(config)?;
    if grid_res < 2 {
        return Err(RegionError::GridTooSmall);
    }
    if !(d_target > 0.0) {
        return Err(RegionError::NonPositiveDistortion);
    }
    let d_min = distortion_bound(config, 0.0, 0.0)?;
    if d_target < d_min - 1e-12 {
        return Err(RegionError::DistortionInfeasible {
            requested: d_target,
            minimum: d_min,
        });
    }

    let feasible = |g: f64, b: f64| distortion_bound(config, g, b).unwrap() <= d_target + 1e-12;
    let mut points: Vec<(f64, f64)> = vec![(0.0, 0.0)];
    let mut push_pentagon = |g: f64, b: f64| {
        let caps = rate_caps(config, g, b).unwrap();
        let c = corner_points(config, g, b).unwrap();
        points.push(c.a1);
        points.push(c.a2);
        points.push((caps.r1_cap, 0.0));
        points.push((0.0, caps.r2_cap));
    };

    // largest feasible gamma at beta = 0
    let gamma_max = if feasible(1.0, 0.0) {
        1.0
    } else {
        bisect_feasible(|g| feasible(g, 0.0))
    };
    for i in 0..grid_res {
        let g = gamma_max * i as f64 / (grid_res - 1) as f64;
        let b = if feasible(g, 1.0) {
            1.0
        } else {
            bisect_feasible(|b| feasible(g, b))
        };
        push_pentagon(g, b);
    }

    Ok(pareto_frontier(points))
}

/// Largest `x` in [0,1] with `feasible(x)`, assuming feasibility is a
/// down-set. `feasible(0)` must hold.
fn bisect_feasible(feasible: impl Fn(f64) -> bool) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Convexified Pareto frontier of a point cloud: r1 strictly decreasing,
/// r2 strictly increasing, concave.
pub(crate) fn pareto_frontier(mut points: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    // sort by r1 desc, r2 desc; keep strict r2 improvements (ties to larger r1)
    points.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.total_cmp(&a.1)));
    let mut staircase: Vec<(f64, f64)> = Vec::new();
    for p in points {
        if staircase.last().map_or(true, |l| p.1 > l.1 + 1e-15) {
            staircase.push(p);
        }
    }
    // upper concave hull over the staircase (r1 decreasing along the chain)
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for p in staircase {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            // drop b if it lies on or below the chord a-p
            if cross <= 1e-15 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull
}

/// Tagged boundary samples over a `grid_res x grid_res` split grid, suitable
/// for 3-D plotting; `z = log2(Q/D)` clamped at 0.
pub fn surface_samples(config: &ValidatedConfig, grid_res: usize) -> Result<RegionSample, RegionError> {
    check_two_user(config)?;
    if grid_res < 2 {
        return Err(RegionError::GridTooSmall);
    }
    let step = 1.0 / (grid_res - 1) as f64;
    let mut samples = Vec::with_capacity(grid_res * grid_res * 4);
    for i in 0..grid_res {
        let gamma = i as f64 * step;
        for j in 0..grid_res {
            let beta = j as f64 * step;
            let caps = rate_caps(config, gamma, beta)?;
            let corners = corner_points(config, gamma, beta)?;
            let d = distortion_bound(config, gamma, beta)?;
            let z = (config.state_var / d).log2().max(0.0);
            for (pt, tag) in [
                (corners.a1, SampleTag::CornerA1),
                (corners.a2, SampleTag::CornerA2),
                ((caps.r1_cap, 0.0), SampleTag::SingleUser1),
                ((0.0, caps.r2_cap), SampleTag::SingleUser2),
            ] {
                samples.push(SurfaceSample {
                    gamma,
                    beta,
                    r1: pt.0,
                    r2: pt.1,
                    log2_q_over_d: z,
                    tag,
                });
            }
        }
    }
    Ok(RegionSample { samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel_model::ChannelConfig;
    use rand::{Rng, SeedableRng};

    fn fig3() -> ValidatedConfig {
        ChannelConfig::new(vec![2.0, 2.0], 1.0, 1.0, 1.0)
            .validate()
            .unwrap()
    }

    #[test]
    fn rate_caps_full_split() {
        let caps = rate_caps(&fig3(), 1.0, 1.0).unwrap();
        assert!((caps.r1_cap - 0.5 * 3.0_f64.log2()).abs() < 1e-12);
        assert!((caps.r2_cap - 0.5 * 3.0_f64.log2()).abs() < 1e-12);
        assert!((caps.rsum_cap - 0.5 * 5.0_f64.log2()).abs() < 1e-12);
        assert!((caps.r1_cap - 0.79248).abs() < 1e-5);
        assert!((caps.rsum_cap - 1.16096).abs() < 1e-5);
    }

    #[test]
    fn rate_caps_degenerate_splits() {
        let caps = rate_caps(&fig3(), 0.0, 0.7).unwrap();
        assert_eq!(caps.r1_cap, 0.0);
        let caps = rate_caps(&fig3(), 0.0, 0.0).unwrap();
        assert_eq!((caps.r1_cap, caps.r2_cap, caps.rsum_cap), (0.0, 0.0, 0.0));
    }

    #[test]
    fn distortion_examples() {
        let c = fig3();
        let d00 = distortion_bound(&c, 0.0, 0.0).unwrap();
        assert!((d00 - 1.0 / (10.0 + 4.0 * 2.0_f64.sqrt())).abs() < 1e-15);
        let d11 = distortion_bound(&c, 1.0, 1.0).unwrap();
        assert!((d11 - 5.0 / 6.0).abs() < 1e-15);
        // no transmit power: receiver-side MMSE of S from S + Z
        let c0 = ChannelConfig::new(vec![0.0, 0.0], 1.0, 1.0, 1.0)
            .validate()
            .unwrap();
        let d = distortion_bound(&c0, 0.3, 0.9).unwrap();
        assert!((d - 0.5).abs() < 1e-15);
    }

    #[test]
    fn corner_point_examples() {
        let c = fig3();
        let pair = corner_points(&c, 1.0, 1.0).unwrap();
        assert!((pair.a1.0 - 0.79248).abs() < 1e-5);
        assert!((pair.a1.1 - 0.36848).abs() < 1e-5);
        assert!((pair.a2.0 - pair.a1.1).abs() < 1e-12);
        // gamma = 0: degenerate pentagon
        let pair = corner_points(&c, 0.0, 0.6).unwrap();
        assert_eq!(pair.a1.0, 0.0);
        assert!((pair.a1.1 - pair.a2.1).abs() < 1e-12);
    }

    #[test]
    fn corners_lie_on_sum_rate_face() {
        let c = fig3();
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(17);
        for _ in 0..500 {
            let (g, b) = (rng.gen_range(0.0..=1.0), rng.gen_range(0.0..=1.0));
            let caps = rate_caps(&c, g, b).unwrap();
            let pair = corner_points(&c, g, b).unwrap();
            assert!((pair.a1.0 + pair.a1.1 - caps.rsum_cap).abs() < 1e-12);
            assert!((pair.a2.0 + pair.a2.1 - caps.rsum_cap).abs() < 1e-12);
            assert!(caps.rsum_cap <= caps.r1_cap + caps.r2_cap + 1e-12);
            assert!(caps.rsum_cap + 1e-12 >= caps.r1_cap.max(caps.r2_cap));
        }
    }

    #[test]
    fn cross_section_at_dmax_is_pentagon() {
        let c = fig3();
        let poly = cross_section(&c, 5.0 / 6.0, 64).unwrap();
        let caps = rate_caps(&c, 1.0, 1.0).unwrap();
        let pair = corner_points(&c, 1.0, 1.0).unwrap();
        // the vertical and horizontal pentagon edges are dominated, so the
        // strict Pareto frontier is exactly the dominant face A1-A2
        assert_eq!(poly.len(), 2);
        assert!((poly[0].0 - pair.a1.0).abs() < 1e-9 && (poly[0].1 - pair.a1.1).abs() < 1e-9);
        assert!((poly[0].0 - caps.r1_cap).abs() < 1e-9);
        assert!((poly[1].0 - pair.a2.0).abs() < 1e-9 && (poly[1].1 - pair.a2.1).abs() < 1e-9);
        assert!((poly[1].1 - caps.r2_cap).abs() < 1e-9);
    }

    #[test]
    fn cross_section_at_minimum_is_origin() {
        let c = fig3();
        let d_min = distortion_bound(&c, 0.0, 0.0).unwrap();
        let poly = cross_section(&c, d_min, 16).unwrap();
        // only the full-amplification split is feasible, up to bisection slack
        for &(r1, r2) in &poly {
            assert!(r1 < 1e-6 && r2 < 1e-6, "unexpected point ({r1}, {r2})");
        }
    }

    #[test]
    fn cross_section_infeasible() {
        let c = fig3();
        assert!(matches!(
            cross_section(&c, 0.01, 16),
            Err(RegionError::DistortionInfeasible { .. })
        ));
    }

    #[test]
    fn cross_section_monotone_and_nested() {
        let c = fig3();
        let inner = cross_section(&c, 0.3, 128).unwrap();
        let outer = cross_section(&c, 0.66, 128).unwrap();
        for w in inner.windows(2) {
            assert!(w[1].0 < w[0].0);
            assert!(w[1].1 > w[0].1);
        }
        // nesting checked pointwise on a shared r1 grid
        for k in 0..=50 {
            let r1 = inner[0].0 * k as f64 / 50.0;
            let a = eval_frontier(&inner, r1);
            let b = eval_frontier(&outer, r1);
            assert!(a <= b + 1e-9, "nesting violated at r1={r1}: {a} > {b}");
        }
    }

    /// r2 on the polyline at the given r1 (polyline sorted r1 descending).
    pub(crate) fn eval_frontier(poly: &[(f64, f64)], r1: f64) -> f64 {
        if poly.len() == 1 {
            return poly[0].1;
        }
        if r1 >= poly[0].0 {
            return poly[0].1;
        }
        for w in poly.windows(2) {
            if r1 >= w[1].0 {
                let t = (r1 - w[0].0) / (w[1].0 - w[0].0);
                return w[0].1 + t * (w[1].1 - w[0].1);
            }
        }
        poly.last().unwrap().1
    }

    #[test]
    fn surface_sample_counts_and_feasibility() {
        let c = fig3();
        let region = surface_samples(&c, 16).unwrap();
        assert_eq!(region.samples.len(), 16 * 16 * 4);
        for s in &region.samples {
            let caps = rate_caps(&c, s.gamma, s.beta).unwrap();
            assert!(s.r1 <= caps.r1_cap + 1e-12);
            assert!(s.r2 <= caps.r2_cap + 1e-12);
            assert!(s.r1 + s.r2 <= caps.rsum_cap + 1e-12);
            assert!(s.log2_q_over_d >= 0.0);
        }
    }

    #[test]
    fn surface_extreme_cells() {
        let region = surface_samples(&fig3(), 64).unwrap();
        let last = region.samples.last().unwrap(); // gamma = beta = 1
        assert!((last.log2_q_over_d - (6.0_f64 / 5.0).log2()).abs() < 1e-12);
        let first = &region.samples[0]; // gamma = beta = 0
        assert!((first.log2_q_over_d - (10.0 + 4.0 * 2.0_f64.sqrt()).log2()).abs() < 1e-12);
        assert_eq!((first.r1, first.r2), (0.0, 0.0));
    }

    #[test]
    fn grid_too_small_rejected() {
        assert!(matches!(surface_samples(&fig3(), 1), Err(RegionError::GridTooSmall)));
        assert!(matches!(cross_section(&fig3(), 0.5, 1), Err(RegionError::GridTooSmall)));
    }
}
