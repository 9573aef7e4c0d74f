//! Gauss hypergeometric function and the two profile families built from it.
//!
//! * the *linear* family `f_{n,k}(t) = 2F1((n-1)/2, -1/2; k/2; t^2)`, the even
//!   solution of the Legendre-type operator `L_{n,k}`;
//! * the *barrier* family `g_{n,k,alpha}(t) = 2F1((n+alpha-2)/2, -alpha/2; k/2; t^2)`,
//!   the even solution of `Delta(rho^alpha g) = 0`.
//!
//! Both satisfy `(1-t^2) F'' + ((k-1)/t - (n-1) t) F' + lambda_F F = 0` with
//! `lambda_F = n-1` (linear) and `lambda_F = alpha (alpha + n - 2)` (barrier).
//!
//! # Evaluation strategy
//!
//! The series is summed directly unless the Euler transformation
//! `2F1(a,b;c;x) = (1-x)^(c-a-b) 2F1(c-a,c-b;c;x)` either terminates
//! (`c-a` or `c-b` a non-positive integer, giving a closed form) or, for
//! `x > 1/2`, produces a series of positive terms.  For the parameter families
//! used here the direct series is free of cancellation on `[0,1)`: after the
//! first term the linear family has only negative terms, and the barrier
//! family with `alpha in (2-n, 0)` only positive ones.  Derivatives use the
//! contiguous shift `d/dx 2F1(a,b;c;x) = (ab/c) 2F1(a+1,b+1;c+1;x)`.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::profile_ode::ConePair;
use crate::tolerances::{HYP_TAIL_REL, HYP_TERM_BUDGET, ZERO_BISECT_TOL, ZERO_SCAN_END, ZERO_SCAN_POINTS};

/// Gauss parameters `(a, b; c)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypParams {
    /// Upper parameter `a`.
    pub a: f64,
    /// Upper parameter `b`.
    pub b: f64,
    /// Lower parameter `c`.
    pub c: f64,
}

fn is_nonpositive_integer(v: f64) -> bool {
    v <= 0.0 && v.fract() == 0.0
}

impl HypParams {
    /// Validated constructor: `c` may not be zero or a negative integer.
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && c.is_finite()) {
            return Err(Error::InvalidParams(format!("non-finite parameters ({a}, {b}; {c})")));
        }
        if is_nonpositive_integer(c) {
            return Err(Error::InvalidParams(format!("c = {c} is a non-positive integer")));
        }
        Ok(Self { a, b, c })
    }

    /// Parameters shifted by `m` in every slot, scaled into the derivative
    /// prefactor `(a)_m (b)_m / (c)_m`.
    fn shifted(&self, m: usize) -> (Self, f64) {
        let mut pref = 1.0;
        for i in 0..m {
            let i = i as f64;
            pref *= (self.a + i) * (self.b + i) / (self.c + i);
        }
        let s = m as f64;
        (Self { a: self.a + s, b: self.b + s, c: self.c + s }, pref)
    }
}

/// Direct power series with a tail bound relative to the sum of |terms|.
fn direct_series(a: f64, b: f64, c: f64, x: f64) -> Result<f64> {
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    let mut sum_abs = 1.0_f64;
    for j in 0..HYP_TERM_BUDGET {
        let jf = j as f64;
        let ratio = (a + jf) * (b + jf) / ((c + jf) * (jf + 1.0)) * x;
        term *= ratio;
        if term == 0.0 {
            return Ok(sum);
        }
        sum += term;
        sum_abs += term.abs();
        // Once consecutive terms shrink, the remaining ratios tend to x from
        // either side; bound the tail geometrically with the larger of the two.
        let r = ratio.abs().max(x);
        if ratio.abs() < 1.0 && r < 1.0 {
            let tail = term.abs() * r / (1.0 - r);
            if tail <= HYP_TAIL_REL * sum_abs {
                return Ok(sum);
            }
        }
    }
    Err(Error::NonConvergence(format!(
        "2F1({a}, {b}; {c}; {x}) exceeded {HYP_TERM_BUDGET} terms"
    )))
}

/// `2F1(a, b; c; x)` for `x in [0, 1)`.
///
/// Relative accuracy is ~1e-15 whenever the summed series is of one sign,
/// which holds for every family used in this crate.
pub fn gauss_2f1(p: HypParams, x: f64) -> Result<f64> {
    let HypParams { a, b, c } = HypParams::new(p.a, p.b, p.c)?;
    if !(0.0..1.0).contains(&x) {
        return Err(Error::OutOfDomain(format!("2F1 argument x = {x} not in [0, 1)")));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    let (ea, eb) = (c - a, c - b);
    let terminating = is_nonpositive_integer(ea) || is_nonpositive_integer(eb);
    if terminating || (x > 0.5 && ea > 0.0 && eb > 0.0) {
        let pref = (1.0 - x).powf(c - a - b);
        return Ok(pref * direct_series(ea, eb, c, x)?);
    }
    direct_series(a, b, c, x)
}

/// `d^order/dx^order 2F1(a, b; c; x)` via shifted parameters (order <= 2).
pub fn gauss_2f1_derivs(p: HypParams, x: f64, order: usize) -> Result<f64> {
    if order > 2 {
        return Err(Error::InvalidInput(format!("derivative order {order} > 2")));
    }
    let p = HypParams::new(p.a, p.b, p.c)?;
    let (q, pref) = p.shifted(order);
    if pref == 0.0 {
        return Ok(0.0);
    }
    Ok(pref * gauss_2f1(q, x)?)
}

/// Which profile family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FamilyKind {
    /// `f_{n,k}`, parameters `((n-1)/2, -1/2; k/2)`.
    Linear,
    /// `g_{n,k,alpha}`, parameters `((n+alpha-2)/2, -alpha/2; k/2)`.
    Barrier(f64),
}

/// A profile family `t -> 2F1(., .; k/2; t^2)` with a cached first zero.
#[derive(Debug)]
pub struct ProfileFamily {
    /// Ambient dimension parameter n.
    pub n: u32,
    /// Sphere parameter k (1 <= k <= n-1; k = n-1 only for the degenerate linear family).
    pub k: u32,
    /// Family kind.
    pub kind: FamilyKind,
    zero: OnceLock<std::result::Result<f64, Error>>,
}

impl Clone for ProfileFamily {
    fn clone(&self) -> Self {
        let out = Self::raw(self.n, self.k, self.kind);
        if let Some(z) = self.zero.get() {
            let _ = out.zero.set(z.clone());
        }
        out
    }
}

impl ProfileFamily {
    fn raw(n: u32, k: u32, kind: FamilyKind) -> Self {
        Self { n, k, kind, zero: OnceLock::new() }
    }

    /// Linear family of a valid cone pair.
    pub fn linear(pair: ConePair) -> Self {
        Self::raw(pair.n, pair.k, FamilyKind::Linear)
    }

    /// Barrier family of a valid cone pair with exponent `alpha`.
    pub fn barrier(pair: ConePair, alpha: f64) -> Self {
        Self::raw(pair.n, pair.k, FamilyKind::Barrier(alpha))
    }

    /// Family from raw dimensions, allowing the degenerate `k = n - 1`.
    pub fn from_dims(n: u32, k: u32, kind: FamilyKind) -> Result<Self> {
        if n < 3 || k < 1 || k > n - 1 {
            return Err(Error::InvalidInput(format!("(n, k) = ({n}, {k}) needs n >= 3, 1 <= k <= n-1")));
        }
        Ok(Self::raw(n, k, kind))
    }

    /// Gauss parameters of the family.
    pub fn params(&self) -> HypParams {
        let (n, k) = (self.n as f64, self.k as f64);
        match self.kind {
            FamilyKind::Linear => HypParams { a: (n - 1.0) / 2.0, b: -0.5, c: k / 2.0 },
            FamilyKind::Barrier(al) => HypParams { a: (n + al - 2.0) / 2.0, b: -al / 2.0, c: k / 2.0 },
        }
    }

    /// Eigenvalue `lambda_F` in `(1-t^2)F'' + ((k-1)/t - (n-1)t)F' + lambda_F F = 0`.
    pub fn eigenvalue(&self) -> f64 {
        let n = self.n as f64;
        match self.kind {
            FamilyKind::Linear => n - 1.0,
            FamilyKind::Barrier(al) => al * (al + n - 2.0),
        }
    }

    /// `(F, F', F'')` at `t`, with derivatives in `t` obtained from the
    /// contiguous relations composed with `x = t^2`.
    pub fn eval3(&self, t: f64) -> Result<(f64, f64, f64)> {
        if !(0.0..1.0).contains(&t.abs()) {
            return Err(Error::OutOfDomain(format!("profile argument t = {t} not in (-1, 1)")));
        }
        let p = self.params();
        let x = t * t;
        let f = gauss_2f1(p, x)?;
        let d1 = gauss_2f1_derivs(p, x, 1)?;
        let d2 = gauss_2f1_derivs(p, x, 2)?;
        Ok((f, 2.0 * t * d1, 2.0 * d1 + 4.0 * x * d2))
    }

    /// Second derivative recovered from the defining ODE given `(F, F')`.
    pub fn second_derivative_from_ode(&self, t: f64, f: f64, fp: f64) -> f64 {
        let (n, k) = (self.n as f64, self.k as f64);
        if t == 0.0 {
            return -self.eigenvalue() * f / k;
        }
        -(((k - 1.0) / t - (n - 1.0) * t) * fp + self.eigenvalue() * f) / (1.0 - t * t)
    }

    /// Smallest positive zero, cached after the first call.
    pub fn zero(&self) -> Result<f64> {
        self.zero.get_or_init(|| find_zero_uncached(self)).clone()
    }
}

/// Value or derivative (`deriv <= 2`) of a profile family at `t`.
pub fn eval_family(fam: &ProfileFamily, t: f64, deriv: usize) -> Result<f64> {
    if deriv > 2 {
        return Err(Error::InvalidInput(format!("derivative order {deriv} > 2")));
    }
    if !(0.0..1.0).contains(&t.abs()) {
        return Err(Error::OutOfDomain(format!("profile argument t = {t} not in (-1, 1)")));
    }
    let p = fam.params();
    let x = t * t;
    match deriv {
        0 => gauss_2f1(p, x),
        1 => Ok(2.0 * t * gauss_2f1_derivs(p, x, 1)?),
        _ => {
            let d1 = gauss_2f1_derivs(p, x, 1)?;
            let d2 = gauss_2f1_derivs(p, x, 2)?;
            Ok(2.0 * d1 + 4.0 * x * d2)
        }
    }
}

/// Smallest positive root of the family (cached on the family).
pub fn find_zero(fam: &ProfileFamily) -> Result<f64> {
    fam.zero()
}

fn find_zero_uncached(fam: &ProfileFamily) -> Result<f64> {
    let p = fam.params();
    let value = |t: f64| gauss_2f1(p, t * t);
    // Ascending Chebyshev nodes on [0, end]; the scan stops at the first sign
    // change.  If the series budget runs out near t = 1 while every value so
    // far was positive, the family has no zero on the scanned interval.
    let m = ZERO_SCAN_POINTS - 1;
    let node = |i: usize| 0.5 * (1.0 - (std::f64::consts::PI * i as f64 / m as f64).cos()) * ZERO_SCAN_END;
    let mut t_prev = 0.0;
    let mut v_prev = value(0.0)?;
    for i in 1..=m {
        let t = node(i);
        let v = match value(t) {
            Ok(v) => v,
            Err(Error::NonConvergence(_)) => return Err(Error::NoZero),
            Err(e) => return Err(e),
        };
        if v == 0.0 {
            return Ok(t);
        }
        if v.signum() != v_prev.signum() {
            let (mut lo, mut hi) = (t_prev, t);
            while hi - lo > ZERO_BISECT_TOL {
                let mid = 0.5 * (lo + hi);
                let vm = value(mid)?;
                if vm.signum() == v_prev.signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Ok(0.5 * (lo + hi));
        }
        t_prev = t;
        v_prev = v;
    }
    Err(Error::NoZero)
}

/// `L_{n,k} f = (1-t^2) f'' + (n-1)(f - t f') + (k-1) f'/t`, pointwise.
pub fn legendre_residual(pair: ConePair, t: f64, f: f64, fp: f64, fpp: f64) -> f64 {
    let (n, k) = (pair.n as f64, pair.k as f64);
    (1.0 - t * t) * fpp + (n - 1.0) * (f - t * fp) + (k - 1.0) * fp / t
}
