//! Shooting integration of the capillary profile equation.
//!
//! For a dimension pair `(n, k)` the cone over the graph of `f` is minimal iff
//!
//! ```text
//! (1-t^2) f'' + (f - t f') + (n-2) (1 + (1-t^2) lambda f'^2 / (1 + lambda f^2)) (f - A f') = 0,
//! A(t) = t - alpha/t,   alpha = (k-1)/(n-2),
//! ```
//!
//! with `lambda = 1`; `lambda = 0` gives the linear operator
//! `L f = (1-t^2) f'' + (n-1)(f - t f') + (k-1) f'/t`, and `f_lambda = f/sqrt(lambda)`
//! maps the two scales onto each other.  Solutions are even in `t` with
//! `f(0) = a`; they either reach zero with finite slope or blow up in slope
//! (square-root singularity) while still positive, the dividing height being
//! the Lawson profile `sqrt((k - (n-1) t^2)/(n-k-1))`.
//!
//! Integration starts from an even Taylor polynomial at `t = T_SEED`, runs
//! in the `t`-chart with state `(f, f')`, and when `|f'|` becomes large
//! switches to the inverse chart with independent variable `f` and state
//! `(t, p = 1/f')`, where the blow-up is the regular event `p = 0`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ode::{Dopri5, Event};
use crate::tolerances::{CHART_RETURN_SLOPE, CHART_SWITCH_SLOPE, T_ESCAPE, T_SEED, TOL_EQ_LAWSON};

/// Validated dimension pair `(n, k)` with `n >= 3` and `1 <= k <= n-2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ConePair {
    /// Ambient dimension parameter.
    pub n: u32,
    /// Dimension parameter of the second sphere factor.
    pub k: u32,
}

impl ConePair {
    /// Validate `(n, k)`.
    pub fn new(n: u32, k: u32) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidInput(format!("n = {n} must be >= 3")));
        }
        if k < 1 || k > n - 2 {
            return Err(Error::InvalidInput(format!("k = {k} must satisfy 1 <= k <= n-2 = {}", n - 2)));
        }
        Ok(Self { n, k })
    }

    /// `alpha = (k-1)/(n-2)`.
    pub fn alpha(&self) -> f64 {
        (self.k as f64 - 1.0) / (self.n as f64 - 2.0)
    }

    /// Lawson height `a_{n,k} = sqrt(k/(n-k-1))`.
    pub fn a_star(&self) -> f64 {
        (self.k as f64 / (self.n as f64 - self.k as f64 - 1.0)).sqrt()
    }

    /// `A(t) = t - alpha/t`.
    pub fn big_a(&self, t: f64) -> f64 {
        t - self.alpha() / t
    }

    /// Zero of the Lawson profile, `sqrt(k/(n-1))`.
    pub fn lawson_zero(&self) -> f64 {
        (self.k as f64 / (self.n as f64 - 1.0)).sqrt()
    }

    /// All valid pairs with `n_min <= n <= n_max`, sorted.
    pub fn all(n_min: u32, n_max: u32) -> Vec<Self> {
        (n_min.max(3)..=n_max).flat_map(|n| (1..=n - 2).map(move |k| Self { n, k })).collect()
    }
}

/// Shooting data: pair, scale `lambda >= 0`, and initial height `a = f(0) > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShootRequest {
    /// Dimension pair.
    pub pair: ConePair,
    /// Scale parameter (1: minimal cone equation, 0: linear equation).
    pub lambda: f64,
    /// Initial height.
    pub a: f64,
}

impl ShootRequest {
    /// Validated request.
    pub fn new(pair: ConePair, lambda: f64, a: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidInput(format!("lambda = {lambda} must be finite and >= 0")));
        }
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidInput(format!("initial height a = {a} must be positive")));
        }
        Ok(Self { pair, lambda, a })
    }
}

/// One stored point of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    /// Time.
    pub t: f64,
    /// Profile value.
    pub f: f64,
    /// Profile slope.
    pub fp: f64,
}

/// How a trajectory ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum TerminalEvent {
    /// `f(t_a) = 0` with finite negative slope.
    ZeroCrossing {
        /// Zero.
        t_a: f64,
        /// Slope at the zero.
        slope: f64,
    },
    /// `|f'| -> infinity` at `b_a < 1`.
    Blowup {
        /// Blow-up time.
        b_a: f64,
        /// Value at blow-up.
        f_b: f64,
    },
    /// The initial height is the Lawson height; the closed form is used.
    LawsonExact,
}

/// A shooting solution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileTrajectory {
    /// The request that produced it.
    pub request: ShootRequest,
    /// Samples, `t` strictly increasing (the blow-up point itself is excluded).
    pub samples: Vec<Sample>,
    /// Terminal event.
    pub terminal: TerminalEvent,
    /// Zero crossing passed on the way when integrating past zero: `(t, f'(t))`.
    pub zero: Option<(f64, f64)>,
}

impl ProfileTrajectory {
    /// Cubic Hermite interpolation of `(f, f')` at `t` inside the sampled range.
    pub fn interpolate(&self, t: f64) -> Option<f64> {
        let s = &self.samples;
        if s.is_empty() || t < s[0].t || t > s[s.len() - 1].t {
            return None;
        }
        let i = s.partition_point(|p| p.t <= t).clamp(1, s.len() - 1);
        let (p0, p1) = (s[i - 1], s[i]);
        let h = p1.t - p0.t;
        if h == 0.0 {
            return Some(p0.f);
        }
        let u = (t - p0.t) / h;
        let (h00, h10, h01, h11) = (
            2.0 * u * u * u - 3.0 * u * u + 1.0,
            u * u * u - 2.0 * u * u + u,
            -2.0 * u * u * u + 3.0 * u * u,
            u * u * u - u * u,
        );
        Some(h00 * p0.f + h10 * h * p0.fp + h01 * p1.f + h11 * h * p1.fp)
    }

    /// Right end of the positive phase (zero, blow-up point, or Lawson zero).
    pub fn end_time(&self) -> f64 {
        match self.terminal {
            TerminalEvent::ZeroCrossing { t_a, .. } => t_a,
            TerminalEvent::Blowup { b_a, .. } => self.zero.map_or(b_a, |z| z.0),
            TerminalEvent::LawsonExact => self.request.pair.lawson_zero(),
        }
    }
}

/// Options for [`integrate_profile_with`].
#[derive(Debug, Clone, Default)]
pub struct IntegrateOptions {
    /// Record the zero crossing and continue to the blow-up at negative height.
    pub continue_past_zero: bool,
    /// Times (ascending, in the `t`-chart phase) the integrator must land on.
    pub stops: Vec<f64>,
}

/// `f''` from the profile equation.
pub fn ode_rhs(req: &ShootRequest, t: f64, f: f64, fp: f64) -> Result<f64> {
    if t >= 1.0 {
        return Err(Error::SingularTime(t));
    }
    Ok(rhs(req.pair, req.lambda, t, f, fp))
}

#[inline]
fn rhs(pair: ConePair, lambda: f64, t: f64, f: f64, fp: f64) -> f64 {
    let n2 = pair.n as f64 - 2.0;
    let om = 1.0 - t * t;
    let big_a = t - pair.alpha() / t;
    let nonlin = 1.0 + om * lambda * fp * fp / (1.0 + lambda * f * f);
    -((f - t * fp) + n2 * nonlin * (f - big_a * fp)) / om
}

/// Residual of the profile equation for given `(f, f', f'')`.
pub fn ode_residual(req: &ShootRequest, t: f64, f: f64, fp: f64, fpp: f64) -> f64 {
    let n2 = req.pair.n as f64 - 2.0;
    let om = 1.0 - t * t;
    let nonlin = 1.0 + om * req.lambda * fp * fp / (1.0 + req.lambda * f * f);
    om * fpp + (f - t * fp) + n2 * nonlin * (f - req.pair.big_a(t) * fp)
}

/// Inverse-chart right-hand side: state `(t, p = 1/f')`, independent variable `f`.
#[inline]
fn rhs_inverse(pair: ConePair, lambda: f64, f: f64, t: f64, p: f64) -> [f64; 2] {
    let n2 = pair.n as f64 - 2.0;
    let om = 1.0 - t * t;
    let big_a = t - pair.alpha() / t;
    let dp = (p * p * (p * f - t) + n2 * (p * p + om * lambda / (1.0 + lambda * f * f)) * (p * f - big_a)) / om;
    [p, dp]
}

// Truncated even power series arithmetic in t (index = degree).
const SERIES_DEG: usize = 8;

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; SERIES_DEG + 1];
    for (i, ai) in a.iter().enumerate() {
        if *ai == 0.0 {
            continue;
        }
        for (j, bj) in b.iter().enumerate() {
            if i + j <= SERIES_DEG {
                out[i + j] += ai * bj;
            }
        }
    }
    out
}

fn poly_add(a: &[f64], b: &[f64], sb: f64) -> Vec<f64> {
    (0..=SERIES_DEG).map(|i| a.get(i).copied().unwrap_or(0.0) + sb * b.get(i).copied().unwrap_or(0.0)).collect()
}

/// `t (1 + lambda f^2) * [equation]`, a polynomial identity in t for polynomial f.
fn series_residual(pair: ConePair, lambda: f64, c: &[f64]) -> Vec<f64> {
    let n2 = pair.n as f64 - 2.0;
    let alpha = pair.alpha();
    let mut f = vec![0.0; SERIES_DEG + 1];
    let mut fp = vec![0.0; SERIES_DEG + 1];
    let mut fpp = vec![0.0; SERIES_DEG + 1];
    for (j, cj) in c.iter().enumerate() {
        let d = 2 * j;
        if d <= SERIES_DEG {
            f[d] = *cj;
        }
        if d >= 1 && d - 1 <= SERIES_DEG {
            fp[d - 1] = d as f64 * cj;
        }
        if d >= 2 && d - 2 <= SERIES_DEG {
            fpp[d - 2] = (d * (d - 1)) as f64 * cj;
        }
    }
    let t = [0.0, 1.0];
    let om = [1.0, 0.0, -1.0];
    let one = [1.0];
    let q = poly_add(&one, &poly_mul(&f, &f), lambda); // 1 + lambda f^2
    let f_minus_tfp = poly_add(&f, &poly_mul(&t, &fp), -1.0);
    // t (1-t^2) f'' + t (f - t f')
    let lin = poly_add(&poly_mul(&poly_mul(&t, &om), &fpp), &poly_mul(&t, &f_minus_tfp), 1.0);
    let first = poly_mul(&q, &lin);
    // [(1 + lambda f^2) + (1-t^2) lambda f'^2] (t (f - t f') + alpha f')
    let bracket = poly_add(&q, &poly_mul(&om, &poly_mul(&fp, &fp)), lambda);
    let h = poly_add(&poly_mul(&t, &f_minus_tfp), &fp, alpha);
    poly_add(&first, &poly_mul(&bracket, &h), n2)
}

/// Even Taylor coefficients `c_0 = a, c_1, ..., c_m` of the solution, `f = sum c_j t^{2j}`.
///
/// Each `c_j` is fixed by the coefficient of `t^{2j-1}` of the polynomial
/// identity, which is affine in `c_j`.
pub fn series_coefficients(req: &ShootRequest, m: usize) -> Vec<f64> {
    let m = m.min(SERIES_DEG / 2);
    let mut c = vec![req.a];
    for j in 1..=m {
        let deg = 2 * j - 1;
        c.push(0.0);
        let r0 = series_residual(req.pair, req.lambda, &c)[deg];
        c[j] = 1.0;
        let r1 = series_residual(req.pair, req.lambda, &c)[deg];
        c[j] = -r0 / (r1 - r0);
    }
    c
}

/// Degree-6 even Taylor state `(f, f')` at `t_seed`.
pub fn taylor_seed(req: &ShootRequest, t_seed: f64) -> Result<(f64, f64)> {
    if !(t_seed > 0.0 && t_seed <= 1e-3) {
        return Err(Error::InvalidInput(format!("t_seed = {t_seed} must lie in (0, 1e-3]")));
    }
    let c = series_coefficients(req, 3);
    let (mut f, mut fp) = (0.0, 0.0);
    for (j, cj) in c.iter().enumerate() {
        f += cj * t_seed.powi(2 * j as i32);
        if j > 0 {
            fp += 2.0 * j as f64 * cj * t_seed.powi(2 * j as i32 - 1);
        }
    }
    Ok((f, fp))
}

/// Closed-form `f''(0)`, `f''''(0)` of the solution.
pub fn values_at_zero(req: &ShootRequest) -> (f64, f64) {
    let (n, k) = (req.pair.n as f64, req.pair.k as f64);
    let a = req.a;
    let f2 = -(n - 1.0) * a / k;
    let d = k.powi(3) * (k + 2.0);
    let f4 = -3.0 * (n - 1.0) * a / d * (k * k * (n + 1.0) + 2.0 * (n - 1.0) * (n - k - 1.0))
        + 6.0 * (n - 1.0).powi(2) * (n - k - 1.0) / d * a / (1.0 + req.lambda * a * a);
    (f2, f4)
}

/// `h(0) = f(0) - lim A f' = (n-k-1) a / (k (n-2))`.
pub fn h_at_zero(req: &ShootRequest) -> f64 {
    let (n, k) = (req.pair.n as f64, req.pair.k as f64);
    (n - k - 1.0) * req.a / (k * (n - 2.0))
}

/// Lawson profile `sqrt((k - (n-1) t^2)/(n-k-1))`.
pub fn lawson_profile(pair: ConePair, t: f64) -> Result<f64> {
    let (n, k) = (pair.n as f64, pair.k as f64);
    let rad = (k - (n - 1.0) * t * t) / (n - k - 1.0);
    if rad < 0.0 {
        if rad > -1e-15 {
            return Ok(0.0);
        }
        return Err(Error::OutOfDomain(format!("t = {t} beyond the Lawson zero {}", pair.lawson_zero())));
    }
    Ok(rad.sqrt())
}

/// `(f, f', f'')` of the Lawson profile.
pub fn lawson_derivs(pair: ConePair, t: f64) -> Result<(f64, f64, f64)> {
    let (n, k) = (pair.n as f64, pair.k as f64);
    let f = lawson_profile(pair, t)?;
    let c = (n - 1.0) / (n - k - 1.0);
    let fp = -c * t / f;
    let fpp = -c / f + c * t * fp / (f * f);
    Ok((f, fp, fpp))
}

/// `Psi = f (f - A f') - 1/(n-2)`.
pub fn psi_eval(pair: ConePair, t: f64, f: f64, fp: f64) -> f64 {
    f * (f - pair.big_a(t) * fp) - 1.0 / (pair.n as f64 - 2.0)
}

/// `Psi(0) = (n-k-1)/((n-2) k) (lambda a^2 - a_{n,k}^2)` for the scaled equation.
pub fn psi_at_zero(pair: ConePair, a: f64) -> f64 {
    let (n, k) = (pair.n as f64, pair.k as f64);
    (n - k - 1.0) / ((n - 2.0) * k) * (a * a - pair.a_star().powi(2))
}

/// Integrate the profile equation from the Taylor seed to its terminal event.
pub fn integrate_profile(req: &ShootRequest) -> Result<ProfileTrajectory> {
    integrate_profile_with(req, &IntegrateOptions::default())
}

fn lawson_trajectory(req: &ShootRequest) -> Result<ProfileTrajectory> {
    let pair = req.pair;
    let tz = pair.lawson_zero();
    let m = 512;
    let mut samples = Vec::with_capacity(m);
    for i in 0..m {
        let t = tz * i as f64 / m as f64;
        let (f, fp, _) = if t == 0.0 { (pair.a_star(), 0.0, 0.0) } else { lawson_derivs(pair, t)? };
        samples.push(Sample { t, f, fp });
    }
    Ok(ProfileTrajectory { request: *req, samples, terminal: TerminalEvent::LawsonExact, zero: None })
}

/// [`integrate_profile`] with options (continuation past zero, mandatory stops).
pub fn integrate_profile_with(req: &ShootRequest, opts: &IntegrateOptions) -> Result<ProfileTrajectory> {
    let req = ShootRequest::new(req.pair, req.lambda, req.a)?;
    let pair = req.pair;
    let lambda = req.lambda;
    if lambda == 1.0 && (req.a - pair.a_star()).abs() <= TOL_EQ_LAWSON * pair.a_star() && !opts.continue_past_zero {
        return lawson_trajectory(&req);
    }
    let solver = Dopri5::default();
    let (f0, fp0) = taylor_seed(&req, T_SEED)?;
    let mut samples = vec![Sample { t: 0.0, f: req.a, fp: 0.0 }];
    let mut zero: Option<(f64, f64)> = None;
    let mut t = T_SEED;
    let mut y = [f0, fp0];
    let t_end = 1.0 - T_ESCAPE;
    for _ in 0..64 {
        // ---- t-chart ------------------------------------------------------
        let past = zero.is_some();
        let mut events = vec![Event::terminal(|_, y: &[f64; 2]| y[1] + CHART_SWITCH_SLOPE)];
        if !past {
            if opts.continue_past_zero {
                events.push(Event::recorded(|_, y: &[f64; 2]| y[0]));
            } else {
                events.push(Event::terminal(|_, y: &[f64; 2]| y[0]));
            }
        }
        let stops: Vec<f64> = opts.stops.iter().copied().filter(|s| *s > t).collect();
        let sol = solver.integrate(
            |x, y: &[f64; 2]| [y[1], rhs(pair, lambda, x, y[0], y[1])],
            t,
            y,
            t_end,
            1e-4,
            &events,
            &stops,
        )?;
        for (x, s) in sol.xs.iter().zip(&sol.ys) {
            if *x > samples.last().unwrap().t {
                samples.push(Sample { t: *x, f: s[0], fp: s[1] });
            }
        }
        for hit in &sol.recorded {
            if hit.index == 1 && zero.is_none() {
                zero = Some((hit.x, hit.y[1]));
            }
        }
        let Some(hit) = sol.terminal else {
            return Err(Error::NumericalFailure(format!(
                "trajectory (a = {}, lambda = {lambda}) reached t = 1 without an event",
                req.a
            )));
        };
        if hit.x > samples.last().unwrap().t {
            samples.push(Sample { t: hit.x, f: hit.y[0], fp: hit.y[1] });
        }
        if hit.index == 1 {
            return Ok(ProfileTrajectory {
                request: req,
                samples,
                terminal: TerminalEvent::ZeroCrossing { t_a: hit.x, slope: hit.y[1] },
                zero: None,
            });
        }

        // ---- inverse chart: f decreasing, state (t, p = 1/f') ---------------
        let f_start = hit.y[0];
        let mut state = [hit.x, 1.0 / hit.y[1]];
        let mut f_cur = f_start;
        let f_targets: Vec<f64> = if zero.is_none() && f_start > 0.0 {
            if opts.continue_past_zero {
                vec![0.0, f_start - 1e3]
            } else {
                vec![0.0]
            }
        } else {
            vec![f_start - 1e3]
        };
        let mut handed_back = false;
        for (ti, f_target) in f_targets.iter().enumerate() {
            let events = [
                Event::terminal(|_, y: &[f64; 2]| y[1]),
                Event::terminal(|_, y: &[f64; 2]| y[1] + 1.0 / CHART_RETURN_SLOPE),
                Event::terminal(|_, y: &[f64; 2]| t_end - y[0]),
            ];
            let sol = solver.integrate(
                |ff, y: &[f64; 2]| rhs_inverse(pair, lambda, ff, y[0], y[1]),
                f_cur,
                state,
                *f_target,
                1e-4,
                &events,
                &[],
            )?;
            for (ff, s) in sol.xs.iter().zip(&sol.ys) {
                if s[1] < 0.0 && s[0] > samples.last().unwrap().t {
                    samples.push(Sample { t: s[0], f: *ff, fp: 1.0 / s[1] });
                }
            }
            match sol.terminal {
                Some(h) if h.index == 0 => {
                    return Ok(ProfileTrajectory {
                        request: req,
                        samples,
                        terminal: TerminalEvent::Blowup { b_a: h.y[0], f_b: h.x },
                        zero,
                    });
                }
                Some(h) if h.index == 1 => {
                    t = h.y[0];
                    y = [h.x, 1.0 / h.y[1]];
                    handed_back = true;
                    break;
                }
                Some(_) => {
                    return Err(Error::NumericalFailure(format!("inverse chart escaped to t = 1 (a = {})", req.a)));
                }
                None => {
                    let (ff, s) = sol.last();
                    if ti == 0 && *f_target == 0.0 {
                        if opts.continue_past_zero {
                            zero = Some((s[0], 1.0 / s[1]));
                            f_cur = ff;
                            state = s;
                            continue;
                        }
                        return Ok(ProfileTrajectory {
                            request: req,
                            samples,
                            terminal: TerminalEvent::ZeroCrossing { t_a: s[0], slope: 1.0 / s[1] },
                            zero: None,
                        });
                    }
                    return Err(Error::NumericalFailure(format!("inverse chart did not terminate (a = {})", req.a)));
                }
            }
        }
        if !handed_back {
            return Err(Error::NumericalFailure("inverse chart exhausted its targets".into()));
        }
    }
    Err(Error::NumericalFailure(format!("too many chart switches (a = {})", req.a)))
}

/// Trichotomy by initial height (minimal-cone equation, `lambda = 1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum HeightClass {
    /// `a < a_{n,k}`: reaches zero with finite slope.
    ReachesZero,
    /// `a = a_{n,k}`: the Lawson profile.
    Lawson,
    /// `a > a_{n,k}`: slope blows up while positive.
    BlowsUpPositive,
}

/// Classify the solution of height `a` by integration, cross-checked against `sgn(a - a_{n,k})`.
pub fn classify_by_height(pair: ConePair, a: f64) -> Result<HeightClass> {
    let a_star = pair.a_star();
    let by_height = if (a - a_star).abs() <= TOL_EQ_LAWSON * a_star {
        HeightClass::Lawson
    } else if a < a_star {
        HeightClass::ReachesZero
    } else {
        HeightClass::BlowsUpPositive
    };
    let traj = integrate_profile(&ShootRequest::new(pair, 1.0, a)?)?;
    let by_event = match traj.terminal {
        TerminalEvent::ZeroCrossing { .. } => HeightClass::ReachesZero,
        TerminalEvent::Blowup { f_b, .. } if f_b > 0.0 => HeightClass::BlowsUpPositive,
        TerminalEvent::Blowup { .. } => return Err(Error::AmbiguousNearLawson(a)),
        TerminalEvent::LawsonExact => HeightClass::Lawson,
    };
    if by_event != by_height {
        return Err(Error::AmbiguousNearLawson(a));
    }
    Ok(by_event)
}

/// Derivatives at zero of the Riccati variables `q = f'/f`, `w = lambda f^2/(1 + lambda f^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiccatiSeed {
    /// `q'(0)`.
    pub q1: f64,
    /// `w''(0)`.
    pub w2: f64,
    /// `q'''(0)`.
    pub q3: f64,
    /// `w''''(0)`.
    pub w4: f64,
}

/// Riccati derivatives at zero for initial value `w0 in (0, 1)`.
pub fn riccati_seed(pair: ConePair, w0: f64) -> Result<RiccatiSeed> {
    if !(w0 > 0.0 && w0 < 1.0) {
        return Err(Error::InvalidInput(format!("w0 = {w0} must lie in (0, 1)")));
    }
    let (n, k) = (pair.n as f64, pair.k as f64);
    let q1 = -(n - 1.0) / k;
    let w2 = -2.0 * (n - 1.0) * w0 * (1.0 - w0) / k;
    let q3 = -6.0 * (n - 1.0) / (k.powi(3) * (k + 2.0)) * (k * k * n + (n - 1.0) * ((n - k - 1.0) * w0 + k));
    let w4 = 12.0 * (n - 1.0).powi(2) * w0 * (1.0 - w0) / (k.powi(3) * (k + 2.0))
        * (k * (k + 2.0) * (1.0 - 2.0 * w0) - (k * k * n / (n - 1.0) + (n - k - 1.0) * w0 + k));
    Ok(RiccatiSeed { q1, w2, q3, w4 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(n: u32, k: u32) -> ConePair {
        ConePair::new(n, k).unwrap()
    }

    fn req(n: u32, k: u32, lambda: f64, a: f64) -> ShootRequest {
        ShootRequest::new(pair(n, k), lambda, a).unwrap()
    }

    #[test]
    fn pair_validation() {
        assert!(ConePair::new(7, 6).is_err());
        assert!(ConePair::new(2, 1).is_err());
        assert!(ConePair::new(7, 0).is_err());
        let p = pair(7, 1);
        assert!((p.a_star() - 0.2f64.sqrt()).abs() < 1e-15);
        assert_eq!(p.alpha(), 0.0);
    }

    #[test]
    fn lawson_profile_values() {
        let p = pair(7, 1);
        assert!((lawson_profile(p, 0.0).unwrap() - 0.447_213_595_499_958).abs() < 1e-12);
        assert!((lawson_profile(p, 0.2).unwrap() - 0.152f64.sqrt()).abs() < 1e-15);
        assert!(lawson_profile(p, p.lawson_zero()).unwrap().abs() < 1e-7);
        assert!(matches!(lawson_profile(p, 0.5), Err(Error::OutOfDomain(_))));
    }

    #[test]
    fn lawson_solves_equation() {
        for p in ConePair::all(3, 12) {
            let r = ShootRequest::new(p, 1.0, p.a_star()).unwrap();
            let tz = p.lawson_zero();
            for i in 0..50 {
                let t = 0.05 + (0.9 * tz - 0.05) * i as f64 / 49.0;
                let (f, fp, fpp) = lawson_derivs(p, t).unwrap();
                assert!(ode_residual(&r, t, f, fp, fpp).abs() < 1e-10, "{p:?} t={t}");
                assert!(psi_eval(p, t, f, fp).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn slanted_plane_solves_equation_when_k_is_n_minus_1() {
        // With k = n - 1 (alpha = 1), f = tan(theta) sqrt(1 - t^2) solves the equation.
        let p = ConePair { n: 7, k: 6 };
        let r = ShootRequest { pair: p, lambda: 1.0, a: 0.7 };
        let c = 0.7;
        for i in 1..20 {
            let t = i as f64 / 21.0;
            let s = (1.0 - t * t).sqrt();
            let (f, fp, fpp) = (c * s, -c * t / s, -c / s.powi(3));
            assert!(ode_residual(&r, t, f, fp, fpp).abs() < 1e-10);
        }
    }

    #[test]
    fn linear_limit_matches_legendre_operator() {
        let p = pair(9, 4);
        let r = req(9, 4, 0.0, 1.0);
        let (t, f, fp, fpp) = (0.4, 0.8, -0.7, -2.0);
        let l = crate::specfun::legendre_residual(p, t, f, fp, fpp);
        assert!((ode_residual(&r, t, f, fp, fpp) - l).abs() < 1e-14);
    }

    #[test]
    fn rhs_rejects_t_at_one() {
        assert_eq!(ode_rhs(&req(7, 1, 1.0, 0.3), 1.0, 0.1, -1.0), Err(Error::SingularTime(1.0)));
    }

    #[test]
    fn series_values_at_zero() {
        let (f2, f4) = values_at_zero(&req(7, 2, 1.0, 1.0));
        assert!((f2 + 3.0).abs() < 1e-14);
        assert!((f4 + 31.5).abs() < 1e-12);
        let c = series_coefficients(&req(7, 2, 1.0, 1.0), 3);
        assert!((720.0 * c[3] + 1710.0).abs() < 1e-9);
        // Independent symbolic series oracle.
        assert!((values_at_zero(&req(7, 1, 1.0, 1.0)).1 + 228.0).abs() < 1e-10);
        let c = series_coefficients(&req(9, 4, 0.5, 1.5), 3);
        assert!((24.0 * c[2] + 18.176_470_588_235_293).abs() < 1e-10);
        assert!((720.0 * c[3] + 552.846_020_761_245_7).abs() < 1e-8);
        let c = series_coefficients(&req(12, 9, 2.0, 1.0 / 3.0), 3);
        assert!((24.0 * c[2] + 1.455_418_381_344_307_3).abs() < 1e-12);
        assert!((720.0 * c[3] + 25.508_521_605_915_295).abs() < 1e-10);
    }

    #[test]
    fn closed_form_fourth_derivative_matches_series() {
        for p in ConePair::all(3, 12) {
            for (lambda, a) in [(0.0, 1.0), (1.0, 0.3), (0.5, 1.5), (2.0, 0.1)] {
                let r = ShootRequest::new(p, lambda, a).unwrap();
                let c = series_coefficients(&r, 2);
                let (f2, f4) = values_at_zero(&r);
                assert!((f2 - 2.0 * c[1]).abs() < 1e-12 * f2.abs());
                assert!((f4 - 24.0 * c[2]).abs() < 1e-10 * f4.abs().max(1.0), "{p:?}");
            }
        }
    }

    #[test]
    fn h_at_zero_formula() {
        assert!((h_at_zero(&req(7, 1, 1.0, 1.0)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn psi_at_zero_formula() {
        assert!((psi_at_zero(pair(7, 1), 1.0) - 0.8).abs() < 1e-15);
        // Limit of psi_eval along the seed agrees.
        let r = req(7, 1, 1.0, 1.0);
        let (f, fp) = taylor_seed(&r, 1e-4).unwrap();
        assert!((psi_eval(r.pair, 1e-4, f, fp) - 0.8).abs() < 1e-6);
    }

    #[test]
    fn seed_validation() {
        assert!(taylor_seed(&req(7, 1, 1.0, 1.0), 0.01).is_err());
    }

    #[test]
    fn lawson_height_is_reproduced_by_integration() {
        let p = pair(7, 1);
        // Slightly off the Lawson tolerance so the integrator actually runs.
        let a = p.a_star() * (1.0 - 1e-8);
        let tr = integrate_profile(&ShootRequest::new(p, 1.0, a).unwrap()).unwrap();
        for s in tr.samples.iter().filter(|s| s.t <= 0.4) {
            let exact = lawson_profile(p, s.t).unwrap();
            assert!((s.f - exact).abs() < 1e-8, "t={} f={} exact={exact}", s.t, s.f);
        }
    }

    #[test]
    fn lower_height_reaches_zero_between_lawson_zero_and_t0() {
        let p = pair(7, 1);
        let tr = integrate_profile(&ShootRequest::new(p, 1.0, 0.95 * p.a_star()).unwrap()).unwrap();
        match tr.terminal {
            TerminalEvent::ZeroCrossing { t_a, slope } => {
                assert!(t_a > (1.0f64 / 6.0).sqrt() && t_a < 0.517_331, "t_a={t_a}");
                assert!(slope < 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn higher_height_blows_up_positive() {
        let p = pair(7, 1);
        let tr = integrate_profile(&ShootRequest::new(p, 1.0, 1.05 * p.a_star()).unwrap()).unwrap();
        match tr.terminal {
            TerminalEvent::Blowup { b_a, f_b } => assert!(b_a < 1.0 && f_b > 0.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn classification_trichotomy() {
        let p = pair(9, 4);
        let a = p.a_star();
        assert_eq!(classify_by_height(p, 0.9 * a).unwrap(), HeightClass::ReachesZero);
        assert_eq!(classify_by_height(p, a).unwrap(), HeightClass::Lawson);
        assert_eq!(classify_by_height(p, 1.1 * a).unwrap(), HeightClass::BlowsUpPositive);
    }

    #[test]
    fn riccati_values() {
        let s = riccati_seed(pair(7, 1), 0.5).unwrap();
        assert_eq!(s.q1, -6.0);
        assert!((s.w2 + 3.0).abs() < 1e-14);
        assert!((s.q3 + 336.0).abs() < 1e-10);
        assert!((s.w4 + 168.0).abs() < 1e-10);
        // Independent substitution oracle.
        assert!((riccati_seed(pair(7, 1), 0.9).unwrap().w4 + 117.504).abs() < 1e-9);
        let s = riccati_seed(pair(9, 4), 0.2).unwrap();
        assert!((s.q3 + 22.8).abs() < 1e-10 && (s.w4 + 2.688).abs() < 1e-10 && (s.w2 + 0.64).abs() < 1e-12);
    }

    #[test]
    fn riccati_consistent_with_series() {
        // q = f'/f and w = lambda f^2/(1+lambda f^2) from the Taylor series.
        let r = req(9, 4, 0.7, 1.3);
        let c = series_coefficients(&r, 3);
        let w0 = r.lambda * r.a * r.a / (1.0 + r.lambda * r.a * r.a);
        let s = riccati_seed(r.pair, w0).unwrap();
        let q1 = 2.0 * c[1] / c[0];
        let q3 = 6.0 * (4.0 * c[2] / c[0] - 2.0 * c[1] * c[1] / (c[0] * c[0]));
        assert!((q1 - s.q1).abs() < 1e-12);
        assert!((q3 - s.q3).abs() < 1e-9 * s.q3.abs());
    }

    #[test]
    fn hermite_interpolation_reproduces_samples() {
        let p = pair(7, 2);
        let tr = integrate_profile(&ShootRequest::new(p, 1.0, 0.5).unwrap()).unwrap();
        let s = tr.samples[3];
        assert!((tr.interpolate(s.t).unwrap() - s.f).abs() < 1e-14);
        assert!(tr.interpolate(2.0).is_none());
    }
}
