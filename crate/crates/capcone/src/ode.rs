//! Adaptive Dormand–Prince 5(4) integrator with event location.
//!
//! The profile equations are integrated at tolerances near machine precision
//! and need exact event localisation (zero crossings, chart switches,
//! derivative blow-up).  Events are located by bisecting the length of a
//! single Runge–Kutta step taken from the last accepted state, so the located
//! state carries the full fifth-order accuracy of the scheme.
//!
//! The independent variable may run in either direction.

use crate::error::{Error, Result};
use crate::tolerances::{EVENT_TOL, ODE_ATOL, ODE_H_MIN, ODE_MAX_STEPS, ODE_RTOL};

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Difference between the fifth- and fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// A scalar event function `g(x, y)`; the event fires where `g` changes sign.
pub struct Event<'a, const N: usize> {
    /// Event function.
    pub g: Box<dyn Fn(f64, &[f64; N]) -> f64 + 'a>,
    /// Terminal events stop the integration; others are recorded and skipped.
    pub terminal: bool,
}

impl<'a, const N: usize> Event<'a, N> {
    /// Terminal event.
    pub fn terminal(g: impl Fn(f64, &[f64; N]) -> f64 + 'a) -> Self {
        Self { g: Box::new(g), terminal: true }
    }

    /// Non-terminal (recorded) event.
    pub fn recorded(g: impl Fn(f64, &[f64; N]) -> f64 + 'a) -> Self {
        Self { g: Box::new(g), terminal: false }
    }
}

/// A located event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventHit<const N: usize> {
    /// Index into the event slice passed to the integrator.
    pub index: usize,
    /// Location of the event.
    pub x: f64,
    /// State at the event.
    pub y: [f64; N],
}

/// Result of an integration: accepted steps plus located events.
#[derive(Debug, Clone)]
pub struct Solution<const N: usize> {
    /// Independent variable at the start and after every accepted step.
    pub xs: Vec<f64>,
    /// State at the corresponding `xs`.
    pub ys: Vec<[f64; N]>,
    /// Non-terminal events in order of occurrence.
    pub recorded: Vec<EventHit<N>>,
    /// The terminal event, if one stopped the integration.
    pub terminal: Option<EventHit<N>>,
}

impl<const N: usize> Solution<N> {
    /// Final state (the terminal event state if one fired).
    pub fn last(&self) -> (f64, [f64; N]) {
        match &self.terminal {
            Some(hit) => (hit.x, hit.y),
            None => (*self.xs.last().unwrap(), *self.ys.last().unwrap()),
        }
    }
}

/// Dormand–Prince 5(4) integrator settings.
#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    /// Relative tolerance.
    pub rtol: f64,
    /// Absolute tolerance.
    pub atol: f64,
    /// Step-size floor.
    pub h_min: f64,
    /// Step-size ceiling.
    pub h_max: f64,
    /// Step budget.
    pub max_steps: usize,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Self { rtol: ODE_RTOL, atol: ODE_ATOL, h_min: ODE_H_MIN, h_max: 0.05, max_steps: ODE_MAX_STEPS }
    }
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        *o += h * acc;
    }
    out
}

impl Dopri5 {
    /// One Dormand–Prince step; returns the fifth-order solution and the
    /// scaled error norm (infinite if the right-hand side is not finite).
    fn step<const N: usize, F>(&self, f: &F, x: f64, y: &[f64; N], k1: &[f64; N], h: f64) -> ([f64; N], [f64; N], f64)
    where
        F: Fn(f64, &[f64; N]) -> [f64; N],
    {
        let k2 = f(x + C2 * h, &axpy(y, h, &[(A21, k1)]));
        let k3 = f(x + C3 * h, &axpy(y, h, &[(A31, k1), (A32, &k2)]));
        let k4 = f(x + C4 * h, &axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(x + C5 * h, &axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = f(x + h, &axpy(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
        let y_new = axpy(y, h, &[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = f(x + h, &y_new);
        let mut err = 0.0;
        for i in 0..N {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
            err += (e / sc).powi(2);
        }
        let mut err = (err / N as f64).sqrt();
        if !err.is_finite() || y_new.iter().chain(k7.iter()).any(|v| !v.is_finite()) {
            err = f64::INFINITY;
        }
        (y_new, k7, err)
    }

    /// Integrate `y' = f(x, y)` from `x0` towards `x_end`.
    ///
    /// * `h0` — initial step magnitude;
    /// * `events` — sign-change events (see [`Event`]);
    /// * `stops` — points the integrator must land on exactly (ordered in the
    ///   direction of integration), useful for evaluating on a fixed grid.
    pub fn integrate<const N: usize, F>(
        &self,
        f: F,
        x0: f64,
        y0: [f64; N],
        x_end: f64,
        h0: f64,
        events: &[Event<'_, N>],
        stops: &[f64],
    ) -> Result<Solution<N>>
    where
        F: Fn(f64, &[f64; N]) -> [f64; N],
    {
        let dir = if x_end >= x0 { 1.0 } else { -1.0 };
        let mut x = x0;
        let mut y = y0;
        let mut k1 = f(x, &y);
        if k1.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalFailure(format!("non-finite right-hand side at x = {x0}")));
        }
        let mut h = h0.abs().min(self.h_max).max(self.h_min);
        let mut g_prev: Vec<f64> = events.iter().map(|e| (e.g)(x, &y)).collect();
        let mut sol = Solution { xs: vec![x], ys: vec![y], recorded: Vec::new(), terminal: None };
        let mut stop_idx = 0;
        while stop_idx < stops.len() && (stops[stop_idx] - x) * dir <= 0.0 {
            stop_idx += 1;
        }
        let mut steps = 0;
        while (x_end - x) * dir > 0.0 {
            steps += 1;
            if steps > self.max_steps {
                return Err(Error::NumericalFailure(format!("step budget exhausted at x = {x}")));
            }
            // Clamp to the next mandatory stop and to the end point.
            let mut target = x_end;
            if stop_idx < stops.len() && (stops[stop_idx] - target) * dir < 0.0 {
                target = stops[stop_idx];
            }
            let remaining = (target - x).abs();
            let mut hit_target = false;
            if h >= remaining {
                h = remaining;
                hit_target = true;
            }
            let (y_new, k7, err) = self.step(&f, x, &y, &k1, dir * h);
            if err > 1.0 {
                let fac = if err.is_finite() { (0.9 * err.powf(-0.2)).max(0.2) } else { 0.1 };
                h *= fac;
                if h < self.h_min {
                    return Err(Error::NumericalFailure(format!("step size underflow at x = {x}")));
                }
                continue;
            }
            let x_new = if hit_target { target } else { x + dir * h };

            // Event detection on the accepted step.
            let g_new: Vec<f64> = events.iter().map(|e| (e.g)(x_new, &y_new)).collect();
            let mut fired: Vec<(f64, usize)> = Vec::new();
            for (i, (gp, gn)) in g_prev.iter().zip(&g_new).enumerate() {
                if *gp != 0.0 && gp.signum() != gn.signum() {
                    let h_ev = self.locate(&f, x, &y, &k1, dir * (x_new - x).abs(), &*events[i].g, *gp);
                    fired.push((h_ev, i));
                }
            }
            if !fired.is_empty() {
                fired.sort_by(|a, b| a.0.abs().partial_cmp(&b.0.abs()).unwrap());
                let mut stop = None;
                for (h_ev, i) in fired {
                    let y_ev = if h_ev == 0.0 { y } else { self.step(&f, x, &y, &k1, h_ev).0 };
                    let hit = EventHit { index: i, x: x + h_ev, y: y_ev };
                    if events[i].terminal {
                        stop = Some(hit);
                        break;
                    }
                    sol.recorded.push(hit);
                }
                if let Some(hit) = stop {
                    sol.terminal = Some(hit);
                    return Ok(sol);
                }
            }

            x = x_new;
            y = y_new;
            k1 = k7;
            g_prev = g_new;
            sol.xs.push(x);
            sol.ys.push(y);
            if hit_target && stop_idx < stops.len() && x == stops[stop_idx] {
                stop_idx += 1;
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if !hit_target {
                h = (h * fac).min(self.h_max);
            } else {
                // Do not let a short clamped step shrink the next one.
                h = (h * fac).max(h0.abs().min(self.h_max) * 1e-3).min(self.h_max);
            }
        }
        Ok(sol)
    }

    /// Bisect the signed step length `h_full` for the sign change of `g`.
    #[allow(clippy::too_many_arguments)]
    fn locate<const N: usize, F>(
        &self,
        f: &F,
        x: f64,
        y: &[f64; N],
        k1: &[f64; N],
        h_full: f64,
        g: &dyn Fn(f64, &[f64; N]) -> f64,
        g0: f64,
    ) -> f64
    where
        F: Fn(f64, &[f64; N]) -> [f64; N],
    {
        let (mut lo, mut hi) = (0.0_f64, h_full);
        let tol = EVENT_TOL * x.abs().max(1.0);
        for _ in 0..200 {
            if (hi - lo).abs() <= tol {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let (ym, _, _) = self.step(f, x, y, k1, mid);
            let gm = g(x + mid, &ym);
            if gm.is_finite() && gm.signum() == g0.signum() && gm != 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }
}
