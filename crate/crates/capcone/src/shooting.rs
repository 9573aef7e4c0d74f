//! Contact angle ↔ initial height, terminal-value shooting near the right
//! angle, family sweeps, and linearisation checks.
//!
//! For heights below the Lawson height the profile reaches zero at `t_a`
//! with slope `f'(t_a)`; the contact angle of the cone is
//! `theta_a = arctan(sqrt(1 - t_a^2) |f'(t_a)|)`, strictly increasing in `a`
//! and tending to `pi/2` at the Lawson height.  Bisection on `a` therefore
//! inverts the angle map.
//!
//! Near `pi/2` the angle is computed as `atan2(sqrt(1 - t_a^2), |p|)` with
//! `p = 1/f'(t_a)` taken from the inverse chart, which keeps full relative
//! accuracy in `pi/2 - theta`.  The alternative parametrisation by the
//! terminal value `f(b_a) = -eps` past the zero is provided by
//! [`solve_near_half_pi`].

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::profile_ode::{
    integrate_profile, integrate_profile_with, ConePair, IntegrateOptions, ProfileTrajectory, ShootRequest,
    TerminalEvent,
};
use crate::specfun::{eval_family, find_zero, ProfileFamily};
use crate::tolerances::{
    FD_STEP_REL, RESAMPLE_POINTS, SHOOT_A_GAP, SHOOT_A_MIN, SHOOT_EPS_TOL, SHOOT_MAX_ITER, SHOOT_THETA_TOL,
};

use std::f64::consts::FRAC_PI_2;

/// A cone with prescribed contact angle.
#[derive(Debug, Clone, Serialize)]
pub struct ConeSolution {
    /// Dimension pair.
    pub pair: ConePair,
    /// Initial height.
    pub a: f64,
    /// Profile (positive phase, or past zero for terminal-value shooting).
    pub trajectory: ProfileTrajectory,
    /// Zero of the profile.
    pub t_a: f64,
    /// Contact angle in radians.
    pub theta: f64,
}

/// Angle from the zero `t` and slope `fp` at the zero.
pub fn angle_from_slope(t: f64, fp: f64) -> f64 {
    (1.0 - t * t).sqrt().atan2(1.0 / fp.abs())
}

fn zero_of(traj: &ProfileTrajectory) -> Option<(f64, f64)> {
    match traj.terminal {
        TerminalEvent::ZeroCrossing { t_a, slope } => Some((t_a, slope)),
        TerminalEvent::LawsonExact => Some((traj.request.pair.lawson_zero(), f64::NEG_INFINITY)),
        TerminalEvent::Blowup { .. } => traj.zero,
    }
}

/// Contact angle `theta_a` of the solution with initial height `a`.
pub fn terminal_angle(pair: ConePair, a: f64) -> Result<f64> {
    Ok(shoot_angle(pair, a)?.0)
}

fn shoot_angle(pair: ConePair, a: f64) -> Result<(f64, ProfileTrajectory)> {
    let traj = integrate_profile(&ShootRequest::new(pair, 1.0, a)?)?;
    match traj.terminal {
        TerminalEvent::ZeroCrossing { t_a, slope } => Ok((angle_from_slope(t_a, slope), traj)),
        _ => Err(Error::NotReachingZero(a)),
    }
}

/// The Lawson cone as a [`ConeSolution`] with `theta = pi/2`.
pub fn lawson_solution(pair: ConePair) -> Result<ConeSolution> {
    let a = pair.a_star();
    let trajectory = integrate_profile(&ShootRequest::new(pair, 1.0, a)?)?;
    Ok(ConeSolution { pair, a, trajectory, t_a: pair.lawson_zero(), theta: FRAC_PI_2 })
}

/// Solve for the cone with contact angle `theta in (0, pi/2]`.
pub fn solve_cone(pair: ConePair, theta: f64) -> Result<ConeSolution> {
    if !(theta > 0.0 && theta <= FRAC_PI_2 + 1e-15) {
        return Err(Error::InvalidInput(format!("theta = {theta} must lie in (0, pi/2]")));
    }
    if (theta - FRAC_PI_2).abs() <= 1e-15 {
        return lawson_solution(pair);
    }
    let a_star = pair.a_star();
    let (mut lo, mut hi) = (SHOOT_A_MIN, a_star - SHOOT_A_GAP);
    let mut best: Option<(f64, f64, ProfileTrajectory)> = None;
    for _ in 0..SHOOT_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        let (th, traj) = shoot_angle(pair, mid)?;
        let better = best.as_ref().is_none_or(|b| (th - theta).abs() < (b.1 - theta).abs());
        if better {
            best = Some((mid, th, traj));
        }
        if (th - theta).abs() <= SHOOT_THETA_TOL * 1e-2 || hi - lo <= 4.0 * f64::EPSILON * a_star {
            break;
        }
        if th < theta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (a, th, trajectory) = best.ok_or_else(|| Error::NonConvergence("angle bisection".into()))?;
    if (th - theta).abs() > SHOOT_THETA_TOL {
        return Err(Error::NonConvergence(format!(
            "angle bisection reached |theta(a) - theta| = {:e}",
            (th - theta).abs()
        )));
    }
    let (t_a, _) = zero_of(&trajectory).expect("zero crossing");
    Ok(ConeSolution { pair, a, trajectory, t_a, theta: th })
}

/// Solution parametrised by its terminal value `f(t_hat) = -eps` past the zero.
#[derive(Debug, Clone, Serialize)]
pub struct NearHalfPiSolution {
    /// The cone (trajectory continues past the zero to the blow-up).
    pub cone: ConeSolution,
    /// Terminal value parameter.
    pub eps: f64,
    /// Zero `t_eps` of the profile.
    pub t_eps: f64,
    /// Blow-up point `t_hat_eps`, where `f = -eps`.
    pub t_hat_eps: f64,
}

fn terminal_value(pair: ConePair, a: f64) -> (f64, Option<ProfileTrajectory>) {
    let opts = IntegrateOptions { continue_past_zero: true, stops: Vec::new() };
    match integrate_profile_with(&ShootRequest { pair, lambda: 1.0, a }, &opts) {
        Ok(traj) => match traj.terminal {
            TerminalEvent::Blowup { f_b, .. } => (f_b, Some(traj)),
            _ => (f64::NEG_INFINITY, None),
        },
        // No blow-up before t = 1: the terminal value is below every target.
        Err(_) => (f64::NEG_INFINITY, None),
    }
}

/// Shoot on the height so that the blow-up happens at height `-eps`.
pub fn solve_near_half_pi(pair: ConePair, eps: f64) -> Result<NearHalfPiSolution> {
    let a_star = pair.a_star();
    if !(eps > 0.0 && eps <= 0.1 * a_star) {
        return Err(Error::InvalidInput(format!("eps = {eps} must lie in (0, 0.1 a_nk = {}]", 0.1 * a_star)));
    }
    let mut hi = a_star * (1.0 - 1e-14);
    let (t_hi, _) = terminal_value(pair, hi);
    if t_hi <= -eps {
        return Err(Error::NonConvergence(format!("terminal value {t_hi} at the Lawson height is below -eps")));
    }
    let mut delta = eps;
    let mut lo = a_star * (1.0 - delta);
    let mut found = false;
    for _ in 0..60 {
        let (v, _) = terminal_value(pair, lo);
        if v < -eps {
            found = true;
            break;
        }
        hi = lo;
        delta = (2.0 * delta).min(0.999);
        lo = a_star * (1.0 - delta);
    }
    if !found {
        return Err(Error::NonConvergence("no height bracket for the terminal value".into()));
    }
    let mut best: Option<(f64, f64, ProfileTrajectory)> = None;
    for _ in 0..SHOOT_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        let (v, traj) = terminal_value(pair, mid);
        if let Some(traj) = traj {
            if best.as_ref().is_none_or(|b| (v + eps).abs() < (b.1 + eps).abs()) {
                best = Some((mid, v, traj));
            }
        }
        if (v + eps).abs() <= SHOOT_EPS_TOL * 1e-2 || hi - lo <= 4.0 * f64::EPSILON * a_star {
            break;
        }
        if v < -eps {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (a, v, trajectory) = best.ok_or_else(|| Error::NonConvergence("terminal-value bisection".into()))?;
    if (v + eps).abs() > SHOOT_EPS_TOL {
        return Err(Error::NonConvergence(format!("terminal value defect {:e}", (v + eps).abs())));
    }
    let (t_eps, slope) = trajectory.zero.ok_or_else(|| Error::NumericalFailure("no zero recorded".into()))?;
    let t_hat_eps = match trajectory.terminal {
        TerminalEvent::Blowup { b_a, .. } => b_a,
        _ => unreachable!("terminal_value only returns blow-up trajectories"),
    };
    let theta = angle_from_slope(t_eps, slope);
    Ok(NearHalfPiSolution { cone: ConeSolution { pair, a, trajectory, t_a: t_eps, theta }, eps, t_eps, t_hat_eps })
}

/// What is varied in a family sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum SweepMode {
    /// Heights `a` at `lambda = 1`.
    VaryHeight {
        /// Initial heights.
        heights: Vec<f64>,
    },
    /// Scales `lambda` at fixed height.
    VaryLambda {
        /// Fixed initial height.
        a: f64,
        /// Scale parameters.
        lambdas: Vec<f64>,
    },
}

/// Sweep request.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRequest {
    /// Dimension pair.
    pub pair: ConePair,
    /// Mode and parameters.
    pub mode: SweepMode,
}

/// One member of a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepMember {
    /// The varied parameter (height or scale).
    pub param: f64,
    /// Trajectory.
    pub trajectory: ProfileTrajectory,
}

/// Crossing count of two height-sweep members on their common domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossingCount {
    /// Smaller parameter.
    pub lower: f64,
    /// Larger parameter.
    pub upper: f64,
    /// Sign changes of the difference.
    pub crossings: usize,
    /// First crossing point, if any.
    pub first_crossing: Option<f64>,
}

/// Result of a family sweep; members sorted by parameter.
#[derive(Debug, Clone, Serialize)]
pub struct FamilySweep {
    /// Dimension pair.
    pub pair: ConePair,
    /// Request mode.
    pub mode: SweepMode,
    /// Members sorted by parameter.
    pub members: Vec<SweepMember>,
    /// Pairwise crossing counts (height sweeps).
    pub crossings: Vec<CrossingCount>,
    /// Strict ordering verdict (scale sweeps): larger scale lies strictly below.
    pub ordered: Option<bool>,
}

/// Resample two trajectories on a common grid of their shared domain.
fn common_grid(a: &ProfileTrajectory, b: &ProfileTrajectory, start_frac: f64) -> Vec<(f64, f64, f64)> {
    let end = a.samples.last().unwrap().t.min(b.samples.last().unwrap().t);
    let m = RESAMPLE_POINTS;
    (0..m)
        .map(|i| start_frac * end + (1.0 - start_frac) * end * i as f64 / (m - 1) as f64)
        .filter_map(|t| Some((t, a.interpolate(t)?, b.interpolate(t)?)))
        .collect()
}

/// Sign changes of `f_a - f_b` on the common domain (at most one for heights).
pub fn count_crossings(a: &ProfileTrajectory, b: &ProfileTrajectory) -> (usize, Option<f64>) {
    let mut count = 0;
    let mut first = None;
    let mut prev = 0.0_f64;
    for (t, fa, fb) in common_grid(a, b, 0.0) {
        let d = fa - fb;
        if d == 0.0 {
            continue;
        }
        if prev != 0.0 && d.signum() != prev.signum() {
            count += 1;
            first.get_or_insert(t);
        }
        prev = d;
    }
    (count, first)
}

/// `min (f_a - f_b)` over the common domain, away from the shared value at `t = 0`.
pub fn min_gap(a: &ProfileTrajectory, b: &ProfileTrajectory) -> f64 {
    common_grid(a, b, 0.01).into_iter().map(|(_, fa, fb)| fa - fb).fold(f64::INFINITY, f64::min)
}

/// Integrate every member (concurrently) and compute crossings/ordering.
pub fn family_sweep(req: &SweepRequest) -> Result<FamilySweep> {
    let pair = req.pair;
    let mut params: Vec<(f64, ShootRequest)> = match &req.mode {
        SweepMode::VaryHeight { heights } => {
            heights.iter().map(|&a| Ok((a, ShootRequest::new(pair, 1.0, a)?))).collect::<Result<_>>()?
        }
        SweepMode::VaryLambda { a, lambdas } => {
            lambdas.iter().map(|&l| Ok((l, ShootRequest::new(pair, l, *a)?))).collect::<Result<_>>()?
        }
    };
    if params.is_empty() {
        return Err(Error::InvalidInput("empty parameter list".into()));
    }
    params.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let members: Vec<SweepMember> = params
        .par_iter()
        .map(|(p, r)| Ok(SweepMember { param: *p, trajectory: integrate_profile(r)? }))
        .collect::<Result<_>>()?;
    let mut crossings = Vec::new();
    let mut ordered = None;
    match req.mode {
        SweepMode::VaryHeight { .. } => {
            for i in 0..members.len() {
                for j in i + 1..members.len() {
                    let (c, first) = count_crossings(&members[i].trajectory, &members[j].trajectory);
                    crossings.push(CrossingCount {
                        lower: members[i].param,
                        upper: members[j].param,
                        crossings: c,
                        first_crossing: first,
                    });
                }
            }
        }
        SweepMode::VaryLambda { .. } => {
            let ok = members.windows(2).all(|w| min_gap(&w[0].trajectory, &w[1].trajectory) > 0.0);
            ordered = Some(ok);
        }
    }
    Ok(FamilySweep { pair, mode: req.mode.clone(), members, crossings, ordered })
}

fn values_on_grid(req: &ShootRequest, grid: &[f64]) -> Result<Vec<f64>> {
    let opts = IntegrateOptions { continue_past_zero: false, stops: grid.to_vec() };
    let traj = integrate_profile_with(req, &opts)?;
    grid.iter()
        .map(|&t| {
            if let Some(s) = traj.samples.iter().find(|s| s.t == t) {
                Ok(s.f)
            } else {
                Err(Error::InvalidInput(format!("grid point {t} outside the positive phase")))
            }
        })
        .collect()
}

/// `sup |2 lambda v_lambda - (a v_a - f)|` over `grid` by central differences.
pub fn variation_identity(pair: ConePair, lambda: f64, a: f64, grid: &[f64]) -> Result<f64> {
    if grid.is_empty() || grid.windows(2).any(|w| w[1] <= w[0]) || grid[0] <= 0.0 {
        return Err(Error::InvalidInput("grid must be positive and strictly increasing".into()));
    }
    let base = ShootRequest::new(pair, lambda, a)?;
    let f = values_on_grid(&base, grid)?;
    let ha = FD_STEP_REL * a;
    let fap = values_on_grid(&ShootRequest::new(pair, lambda, a + ha)?, grid)?;
    let fam = values_on_grid(&ShootRequest::new(pair, lambda, a - ha)?, grid)?;
    let v_lambda: Vec<f64> = if lambda > 0.0 {
        let hl = FD_STEP_REL * lambda;
        let flp = values_on_grid(&ShootRequest::new(pair, lambda + hl, a)?, grid)?;
        let flm = values_on_grid(&ShootRequest::new(pair, lambda - hl, a)?, grid)?;
        flp.iter().zip(&flm).map(|(p, m)| (p - m) / (2.0 * hl)).collect()
    } else {
        vec![0.0; grid.len()]
    };
    let mut defect = 0.0_f64;
    for i in 0..grid.len() {
        let v_a = (fap[i] - fam[i]) / (2.0 * ha);
        defect = defect.max((2.0 * lambda * v_lambda[i] - (a * v_a - f[i])).abs());
    }
    Ok(defect)
}

/// Deviation of the small-angle cone from the scaled linear profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmallThetaDeviation {
    /// Angle.
    pub theta: f64,
    /// `sup_{[0, t_theta]} |f_theta - c theta f_0|`.
    pub deviation: f64,
    /// Zero of `f_theta`.
    pub t_theta: f64,
    /// Zero of `f_0`.
    pub t0: f64,
    /// `c = 1/(sqrt(1 - t0^2) |f_0'(t0)|)`.
    pub c: f64,
}

/// Linearisation constant `c_{n,k} = 1/(sqrt(1 - t0^2) |f_0'(t0)|)`.
pub fn linear_constant(pair: ConePair) -> Result<(f64, f64)> {
    let fam = ProfileFamily::linear(pair);
    let t0 = find_zero(&fam)?;
    let d = eval_family(&fam, t0, 1)?;
    Ok((1.0 / ((1.0 - t0 * t0).sqrt() * d.abs()), t0))
}

/// Deviation of `f_theta` from `c theta f_0` (expected order `theta^3`).
pub fn small_theta_deviation(pair: ConePair, theta: f64) -> Result<SmallThetaDeviation> {
    if !(theta > 0.0 && theta <= 0.2) {
        return Err(Error::InvalidInput(format!("theta = {theta} must lie in (0, 0.2]")));
    }
    let sol = solve_cone(pair, theta)?;
    let (c, t0) = linear_constant(pair)?;
    let fam = ProfileFamily::linear(pair);
    let m = RESAMPLE_POINTS;
    let mut dev = 0.0_f64;
    for i in 0..m {
        let t = sol.t_a * i as f64 / (m - 1) as f64;
        let f = sol.trajectory.interpolate(t).unwrap_or(0.0);
        dev = dev.max((f - c * theta * eval_family(&fam, t, 0)?).abs());
    }
    Ok(SmallThetaDeviation { theta, deviation: dev, t_theta: sol.t_a, t0, c })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(n: u32, k: u32) -> ConePair {
        ConePair::new(n, k).unwrap()
    }

    #[test]
    fn small_height_gives_small_angle() {
        let p = pair(7, 1);
        assert!(terminal_angle(p, 1e-3 * p.a_star()).unwrap() < 0.01);
    }

    #[test]
    fn near_lawson_height_gives_near_right_angle() {
        let p = pair(7, 1);
        assert!(terminal_angle(p, 0.999 * p.a_star()).unwrap() > 1.4);
    }

    #[test]
    fn angle_increases_with_height() {
        let p = pair(7, 2);
        assert!(terminal_angle(p, 0.3 * p.a_star()).unwrap() < terminal_angle(p, 0.6 * p.a_star()).unwrap());
    }

    #[test]
    fn blowup_heights_do_not_reach_zero() {
        let p = pair(7, 1);
        assert!(matches!(terminal_angle(p, 1.1 * p.a_star()), Err(Error::NotReachingZero(_))));
    }

    #[test]
    fn right_angle_is_lawson() {
        let s = solve_cone(pair(7, 2), FRAC_PI_2).unwrap();
        assert!((s.a - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn round_trip() {
        let p = pair(7, 1);
        let s = solve_cone(p, 0.5).unwrap();
        assert!((terminal_angle(p, s.a).unwrap() - 0.5).abs() < 1e-8);
    }

    #[test]
    fn small_angle_height_matches_linear_constant() {
        let p = pair(7, 1);
        let s = solve_cone(p, 0.01).unwrap();
        let (c, _) = linear_constant(p).unwrap();
        assert!((s.a / 0.01 / c - 1.0).abs() < 0.01);
    }

    #[test]
    fn invalid_angles_rejected() {
        assert!(solve_cone(pair(7, 1), 0.0).is_err());
        assert!(solve_cone(pair(7, 1), 2.0).is_err());
    }

    #[test]
    fn near_half_pi_relations() {
        let p = pair(7, 1);
        let s = solve_near_half_pi(p, 1e-3).unwrap();
        let f_b = match s.cone.trajectory.terminal {
            TerminalEvent::Blowup { f_b, .. } => f_b,
            _ => panic!(),
        };
        assert!((f_b + 1e-3).abs() < 1e-9);
        assert!((1e-3 * s.cone.theta.tan() - p.a_star()).abs() <= 0.05 * p.a_star());
        assert!(s.t_eps < s.t_hat_eps);
        assert!((s.t_eps - p.lawson_zero()).abs() < 1e-2);
    }

    #[test]
    fn gap_between_zero_and_blowup_is_quadratic() {
        let p = pair(7, 1);
        let eps = 1e-2;
        let s = solve_near_half_pi(p, eps).unwrap();
        let formula = 5.0 * eps * eps / (2.0 * 6f64.sqrt());
        let ratio = (s.t_hat_eps - s.t_eps) / formula;
        assert!((0.8..=1.2).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn height_sweep_crosses_once() {
        let p = pair(7, 1);
        let a = p.a_star();
        let sw = family_sweep(&SweepRequest {
            pair: p,
            mode: SweepMode::VaryHeight { heights: vec![0.4 * a, 0.2 * a, 0.3 * a] },
        })
        .unwrap();
        assert_eq!(sw.members[0].param, 0.2 * a);
        assert_eq!(sw.crossings.len(), 3);
        for c in &sw.crossings {
            assert_eq!(c.crossings, 1, "{c:?}");
        }
    }

    #[test]
    fn lambda_sweep_is_ordered() {
        let p = pair(7, 1);
        let sw = family_sweep(&SweepRequest {
            pair: p,
            mode: SweepMode::VaryLambda { a: p.a_star(), lambdas: vec![0.25, 0.5, 1.0] },
        })
        .unwrap();
        assert_eq!(sw.ordered, Some(true));
    }

    #[test]
    fn linear_member_is_scaled_family() {
        let p = pair(7, 1);
        let a = 0.3;
        let tr = integrate_profile(&ShootRequest::new(p, 0.0, a).unwrap()).unwrap();
        let fam = ProfileFamily::linear(p);
        for s in &tr.samples {
            assert!((s.f - a * eval_family(&fam, s.t, 0).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn variation_identity_small_defect() {
        let grid: Vec<f64> = (1..=20).map(|i| 0.02 * i as f64).collect();
        assert!(variation_identity(pair(7, 1), 1.0, 0.3, &grid).unwrap() <= 1e-5);
        assert!(variation_identity(pair(7, 1), 0.0, 0.3, &grid).unwrap() <= 1e-8);
    }

    #[test]
    fn small_theta_rates() {
        let p = pair(7, 1);
        let d1 = small_theta_deviation(p, 0.1).unwrap();
        let d2 = small_theta_deviation(p, 0.05).unwrap();
        let d3 = small_theta_deviation(p, 0.2).unwrap();
        let r = d1.deviation / d2.deviation;
        assert!((6.0..=10.0).contains(&r), "deviation ratio {r}");
        assert!(d3.deviation > d1.deviation && d1.deviation > d2.deviation);
        let rt = (d1.t_theta - d1.t0).abs() / (d2.t_theta - d2.t0).abs();
        assert!((3.5..=4.5).contains(&rt), "t ratio {rt}");
    }
}
