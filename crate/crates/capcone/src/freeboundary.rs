//! Computable kernels of the free-boundary (`theta = pi/2`) regime.
//!
//! * Indicial roots `gamma_low, gamma_high = ((n-2) -/+ sqrt(n^2 - 8n + 8))/2`
//!   of the radial Jacobi operator on the Lawson cone.
//! * Relations between the terminal value `eps` of a near-free-boundary
//!   profile and its contact angle, zero and blow-up point.
//! * Homogeneous cap potentials `phi^+-` on the two sides `E_+-` of the cone
//!   `s^2 + z^2 = a^2 r^2` (with `r = |x|`, `s = |y|`, `a^2 = k/(n-k-1)`), their
//!   normalising constants, and sampled positivity of the divergence of
//!   `grad phi/|grad phi|`.
//!
//! Every potential is a short sum of monomials `c S^p r^q` with `S = s^2 + z^2`,
//! so values, gradients and Hessians are exact closed forms.

use std::f64::consts::FRAC_PI_2;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::extrema::{minimize, Extremum};
use crate::profile_ode::ConePair;
use crate::shooting::solve_near_half_pi;
use crate::tolerances::{DIV_ANGLES, DIV_RADII, EXTREMA_GRID};

// ---------------------------------------------------------------------------
// Indicial roots
// ---------------------------------------------------------------------------

/// Decay exponents of homogeneous Jacobi fields on the Lawson cone in dimension `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IndicialData {
    /// Ambient dimension parameter.
    pub n: u32,
    /// Smaller root (real part when complex).
    pub gamma_low: f64,
    /// Larger root (real part when complex).
    pub gamma_high: f64,
    /// Imaginary part magnitude (zero when the roots are real).
    pub imag: f64,
    /// Whether the roots are real, i.e. `n >= 7`.
    pub real: bool,
}

impl IndicialData {
    /// Interval `(-gamma_high, -gamma_low)` of strictly stable decay exponents.
    pub fn interval(&self) -> (f64, f64) {
        (-self.gamma_high, -self.gamma_low)
    }

    /// Whether `[lo, hi]` lies strictly inside [`Self::interval`].
    pub fn contains(&self, lo: f64, hi: f64) -> bool {
        let (a, b) = self.interval();
        self.real && a < lo && hi < b
    }

    /// Residual of `r^2 u'' + (n-1) r u' + (n-1) u` on `u = R^{-gamma}` (divided by `u`).
    pub fn jacobi_residual(&self, gamma: f64) -> f64 {
        let n1 = self.n as f64 - 1.0;
        gamma * (gamma + 1.0) - n1 * gamma + n1
    }
}

/// Indicial roots for `n >= 3`; complex roots are flagged, not rejected.
pub fn indicial_roots(n: u32) -> Result<IndicialData> {
    if n < 3 {
        return Err(Error::InvalidInput(format!("n = {n} must be at least 3")));
    }
    let nf = n as f64;
    let disc = nf * nf - 8.0 * nf + 8.0;
    let half = (nf - 2.0) / 2.0;
    if disc >= 0.0 {
        let d = disc.sqrt() / 2.0;
        Ok(IndicialData { n, gamma_low: half - d, gamma_high: half + d, imag: 0.0, real: true })
    } else {
        Ok(IndicialData { n, gamma_low: half, gamma_high: half, imag: (-disc).sqrt() / 2.0, real: false })
    }
}

// ---------------------------------------------------------------------------
// Near-free-boundary relations
// ---------------------------------------------------------------------------

/// Geometry of the cone whose profile blows up at height `-eps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NearHalfPiData {
    /// Dimension pair.
    pub pair: ConePair,
    /// Terminal value parameter.
    pub eps: f64,
    /// Contact angle.
    pub theta: f64,
    /// Zero of the profile.
    pub t_eps: f64,
    /// Blow-up point.
    pub t_hat_eps: f64,
    /// Free-boundary aperture `t_eps/sqrt(1 - t_eps^2)`.
    pub aperture_slope: f64,
    /// `|eps tan(theta) - a_{n,k}|`.
    pub tan_defect: f64,
    /// `|theta - (pi/2 - sqrt((n-k-1)/k) eps)|`.
    pub theta_defect: f64,
    /// `|t_hat - t - (n-k-1)/(2 sqrt(k(n-1))) eps^2|`.
    pub gap_defect: f64,
    /// `|t_eps - sqrt(k/(n-1))|`.
    pub t_defect: f64,
}

/// Solve for the near-free-boundary cone and report the defects of the
/// asymptotic relations between `eps`, `theta`, `t_eps` and `t_hat_eps`.
pub fn near_half_pi_relations(pair: ConePair, eps: f64) -> Result<NearHalfPiData> {
    let a = pair.a_star();
    if !(eps > 0.0 && eps <= 0.05 * a) {
        return Err(Error::InvalidInput(format!("eps = {eps} must lie in (0, 0.05 a_nk = {}]", 0.05 * a)));
    }
    let sol = solve_near_half_pi(pair, eps)?;
    let (n, k) = (pair.n as f64, pair.k as f64);
    let theta = sol.cone.theta;
    let t = sol.t_eps;
    Ok(NearHalfPiData {
        pair,
        eps,
        theta,
        t_eps: t,
        t_hat_eps: sol.t_hat_eps,
        aperture_slope: t / (1.0 - t * t).sqrt(),
        tan_defect: (eps * theta.tan() - a).abs(),
        theta_defect: (theta - (FRAC_PI_2 - ((n - k - 1.0) / k).sqrt() * eps)).abs(),
        gap_defect: (sol.t_hat_eps - t - (n - k - 1.0) / (2.0 * (k * (n - 1.0)).sqrt()) * eps * eps).abs(),
        t_defect: (t - (k / (n - 1.0)).sqrt()).abs(),
    })
}

/// Finite-difference estimate of `kappa` in `t/sqrt(1-t^2) = a (1 + kappa eps + O(eps^2))`,
/// from the apertures at `eps` and `2 eps`.
pub fn kappa_estimate(pair: ConePair, eps: f64) -> Result<f64> {
    let s1 = near_half_pi_relations(pair, eps)?.aperture_slope;
    let s2 = near_half_pi_relations(pair, 2.0 * eps)?.aperture_slope;
    Ok((s2 - s1) / (pair.a_star() * eps))
}

// ---------------------------------------------------------------------------
// Cap potentials
// ---------------------------------------------------------------------------

/// Side of the cone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// `E_+ = { s^2 + z^2 > a^2 r^2 }`.
    Plus,
    /// `E_- = { s^2 + z^2 < a^2 r^2 }`.
    Minus,
}

impl Side {
    fn sign(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }
}

/// Which closed form the potential takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CapCase {
    /// `n = 7`, degree `7/2`, piecewise.
    I,
    /// `(7, 3)`, degree `7/2`.
    II,
    /// `8 <= n <= 12`, `k = 1`, degree 4 (plus) or 5 (minus), piecewise.
    III,
    /// Remaining pairs with `n >= 8`, degree 4.
    IV,
}

/// A homogeneous potential on one side of the Lawson cone, optionally shifted vertically.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapPotential {
    /// Dimension pair.
    pub pair: ConePair,
    /// Side.
    pub side: Side,
    /// Closed-form case.
    pub case: CapCase,
    /// Homogeneity degree.
    pub degree: f64,
    /// Vertical shift `delta_hat >= 0` (towards `z < 0` on the plus side, `z > 0` on the minus side).
    pub shift: f64,
    /// Monomials `(c, p, q)` of `c S^p r^q`.
    terms: Vec<(f64, f64, f64)>,
}

/// Value, gradient and Hessian in `(r, s, z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapJet {
    /// `phi`.
    pub value: f64,
    /// `(phi_r, phi_s, phi_z)`.
    pub grad: [f64; 3],
    /// Hessian in `(r, s, z)`.
    pub hess: [[f64; 3]; 3],
    /// `(n-k-1) phi_r/r + (k-1) phi_s/s`, evaluated without dividing by zero.
    pub cyl: f64,
}

impl CapPotential {
    /// Select the potential for `(pair, side)` with shift `delta_hat`.
    pub fn new(pair: ConePair, side: Side, shift: f64) -> Result<Self> {
        let (n, k) = (pair.n, pair.k);
        if n < 7 {
            return Err(Error::InvalidInput(format!("cap potentials need n >= 7, got n = {n}")));
        }
        if !(shift >= 0.0) {
            return Err(Error::InvalidInput(format!("shift = {shift} must be non-negative")));
        }
        let b = k as f64 / (n - k - 1) as f64;
        let (case, terms) = match (n, k, side) {
            (7, 3, _) => (CapCase::II, vec![(1.0, 1.75, 0.0), (-1.0, 0.0, 3.5)]),
            (7, 5, Side::Plus) | (7, 1, Side::Minus) => {
                return Err(Error::InvalidInput(format!("no cap potential for ({n},{k}) on the {side:?} side")))
            }
            (7, _, Side::Plus) => (CapCase::I, vec![(1.0, 1.75, 0.0), (-b, 0.75, 2.0)]),
            (7, _, Side::Minus) => (CapCase::I, vec![(1.0, 1.0, 1.5), (-b, 0.0, 3.5)]),
            (8..=12, 1, Side::Plus) => (CapCase::III, vec![(1.0, 2.0, 0.0), (-b, 1.0, 2.0)]),
            (8..=12, 1, Side::Minus) => (CapCase::III, vec![(1.0, 1.0, 3.0), (-b, 0.0, 5.0)]),
            _ => (CapCase::IV, vec![(1.0, 2.0, 0.0), (-b * b, 0.0, 4.0)]),
        };
        let degree = 2.0 * terms[0].1 + terms[0].2;
        Ok(Self { pair, side, case, degree, shift, terms })
    }

    /// `a^2 = k/(n-k-1)`.
    pub fn a2(&self) -> f64 {
        self.pair.k as f64 / (self.pair.n - self.pair.k - 1) as f64
    }

    fn shifted_z(&self, z: f64) -> f64 {
        match self.side {
            Side::Plus => z + self.shift,
            Side::Minus => z - self.shift,
        }
    }

    /// Whether `(r, s, z)` lies in the closure of the declared side (after the shift).
    pub fn on_side(&self, r: f64, s: f64, z: f64) -> bool {
        let zz = self.shifted_z(z);
        let d = s * s + zz * zz - self.a2() * r * r;
        let tol = 1e-12 * (r * r + s * s + zz * zz);
        match self.side {
            Side::Plus => d >= -tol,
            Side::Minus => d <= tol,
        }
    }

    /// Value, gradient and Hessian at `(r, s, z)` with `r, s >= 0`.
    pub fn jet(&self, r: f64, s: f64, z: f64) -> Result<CapJet> {
        if r < 0.0 || s < 0.0 {
            return Err(Error::OutOfDomain(format!("(r, s) = ({r}, {s}) must be non-negative")));
        }
        if matches!(self.case, CapCase::I | CapCase::III) && !self.on_side(r, s, z) {
            return Err(Error::WrongSide);
        }
        let z = self.shifted_z(z);
        let big_s = s * s + z * z;
        let pw = |x: f64, e: f64| if e == 0.0 { 1.0 } else { x.powf(e) };
        // Partials with respect to (S, r).
        let (mut v, mut ps, mut pr, mut pss, mut psr, mut prr, mut pr_over_r) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for &(c, p, q) in &self.terms {
            v += c * pw(big_s, p) * pw(r, q);
            if p != 0.0 {
                ps += c * p * pw(big_s, p - 1.0) * pw(r, q);
                if p != 1.0 {
                    pss += c * p * (p - 1.0) * pw(big_s, p - 2.0) * pw(r, q);
                }
                if q != 0.0 {
                    psr += c * p * q * pw(big_s, p - 1.0) * pw(r, q - 1.0);
                }
            }
            if q != 0.0 {
                pr += c * q * pw(big_s, p) * pw(r, q - 1.0);
                pr_over_r += c * q * pw(big_s, p) * pw(r, q - 2.0);
                if q != 1.0 {
                    prr += c * q * (q - 1.0) * pw(big_s, p) * pw(r, q - 2.0);
                }
            }
        }
        let grad = [pr, 2.0 * s * ps, 2.0 * z * ps];
        let hess = [
            [prr, 2.0 * s * psr, 2.0 * z * psr],
            [2.0 * s * psr, 2.0 * ps + 4.0 * s * s * pss, 4.0 * s * z * pss],
            [2.0 * z * psr, 4.0 * s * z * pss, 2.0 * ps + 4.0 * z * z * pss],
        ];
        let (n, k) = (self.pair.n as f64, self.pair.k as f64);
        let cyl = (n - k - 1.0) * pr_over_r + (k - 1.0) * 2.0 * ps;
        Ok(CapJet { value: v, grad, hess, cyl })
    }

    /// Divergence of `grad phi/|grad phi|` in `R^{n+1}`, using the cylindrical Laplacian.
    pub fn divergence(&self, r: f64, s: f64, z: f64) -> Result<f64> {
        let j = self.jet(r, s, z)?;
        let g = j.grad;
        let g2: f64 = g.iter().map(|x| x * x).sum();
        if g2 == 0.0 {
            return Err(Error::NumericalFailure("vanishing gradient".into()));
        }
        let lap = j.hess[0][0] + j.hess[1][1] + j.hess[2][2] + j.cyl;
        let mut dgg = 0.0;
        for i in 0..3 {
            for l in 0..3 {
                dgg += g[i] * j.hess[i][l] * g[l];
            }
        }
        Ok((g2 * lap - dgg) / g2.powf(1.5))
    }

    /// Side-signed, degree-zero normalised divergence
    /// `sign * R^{1+degree} div(grad phi/|grad phi|) / |phi|`.
    pub fn scaled_divergence(&self, r: f64, s: f64, z: f64) -> Result<f64> {
        let big_r = (r * r + s * s + z * z).sqrt();
        let v = self.jet(r, s, z)?.value;
        Ok(self.side.sign() * big_r.powf(1.0 + self.degree) * self.divergence(r, s, z)? / v.abs())
    }
}

/// `(phi, grad phi)` at `(r, s, z)`.
pub fn cap_eval(pot: &CapPotential, r: f64, s: f64, z: f64) -> Result<(f64, [f64; 3])> {
    let j = pot.jet(r, s, z)?;
    Ok((j.value, j.grad))
}

/// Normalising constant of a potential, computed and as listed in closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapConstants {
    /// Dimension pair.
    pub pair: ConePair,
    /// Side.
    pub side: Side,
    /// Case.
    pub case: CapCase,
    /// `phi(0,1,0)/|grad phi|` (plus) or `-phi(1,0,0)/|grad phi|` (minus), gradient at the unit cone point.
    pub computed: f64,
    /// Closed-form list value.
    pub listed: f64,
    /// Agreement to `1e-12` relative.
    pub matches_reference: bool,
}

/// Normalising constant `c^+-_{n,k}` with `c |grad phi| = R^{degree - 1}` on the cone.
pub fn cap_constants(pair: ConePair, side: Side) -> Result<CapConstants> {
    let pot = CapPotential::new(pair, side, 0.0)?;
    let b = pot.a2();
    let a = b.sqrt();
    let (r0, s0) = (1.0 / (1.0 + b).sqrt(), a / (1.0 + b).sqrt());
    let g = cap_eval(&pot, r0, s0, 0.0)?.1;
    let gn = g.iter().map(|x| x * x).sum::<f64>().sqrt();
    // Normalisation points lie on opposite sides; evaluate the closed forms without side checks.
    let free = CapPotential { case: CapCase::IV, ..pot.clone() };
    let norm = match side {
        Side::Plus => free.jet(0.0, 1.0, 0.0)?.value,
        Side::Minus => -free.jet(1.0, 0.0, 0.0)?.value,
    };
    let computed = norm / gn;
    let n = pair.n as f64;
    let listed = match (pot.case, side) {
        (CapCase::I, Side::Plus) => (1.0 + b).powf(0.75) / (2.0 * a.powf(2.5)),
        (CapCase::I, Side::Minus) => a * (1.0 + b).powf(0.75) / 2.0,
        (CapCase::II, _) => 2f64.powf(1.75) / 7.0,
        (CapCase::III, Side::Plus) => (n - 1.0) * (n - 2.0).sqrt() / 2.0,
        (CapCase::III, Side::Minus) => (n - 1.0).powf(1.5) / (2.0 * (n - 2.0).powi(2)),
        (CapCase::IV, Side::Plus) => (1.0 + b) / (4.0 * a.powi(3)),
        (CapCase::IV, Side::Minus) => a * (1.0 + b).powi(2) / 4.0,
    };
    Ok(CapConstants {
        pair,
        side,
        case: pot.case,
        computed,
        listed,
        matches_reference: (computed - listed).abs() <= 1e-12 * listed.abs(),
    })
}

/// The cubic `t^3 - 3 sqrt5 t^2 - 15 t + 25`.
pub fn lawlor_cubic(t: f64) -> f64 {
    let r5 = 5f64.sqrt();
    ((t - 3.0 * r5) * t - 15.0) * t + 25.0
}

/// Minimum of [`lawlor_cubic`] over `[0, 1]` and its location.
pub fn lawlor_cubic_min() -> Extremum {
    minimize(|t| Ok(lawlor_cubic(t)), 0.0, 1.0, EXTREMA_GRID).expect("polynomial evaluation cannot fail")
}

/// Sample grid for divergence checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DivergenceGrid {
    /// Smallest radius.
    pub r_min: f64,
    /// Largest radius.
    pub r_max: f64,
    /// Log-spaced radii.
    pub radii: usize,
    /// Angular samples per radius.
    pub angles: usize,
}

impl Default for DivergenceGrid {
    fn default() -> Self {
        Self { r_min: 1.0, r_max: 10.0, radii: DIV_RADII, angles: DIV_ANGLES }
    }
}

/// Outcome of a sampled divergence check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DivergenceReport {
    /// Smallest scaled divergence.
    pub min_scaled: f64,
    /// Where it is attained.
    pub argmin: [f64; 3],
    /// Number of sample points.
    pub points: usize,
    /// All samples strictly positive.
    pub positive: bool,
}

/// Sample points of the declared side: radius `R`, polar angle `psi` of `(r, sqrt(s^2+z^2))`
/// strictly inside the side's range, and a rotation angle splitting `sqrt(s^2+z^2)` into `(s, z)`.
pub fn side_samples(pot: &CapPotential, grid: &DivergenceGrid) -> Vec<[f64; 3]> {
    let psi0 = pot.a2().sqrt().atan();
    let (lo, hi) = match pot.side {
        Side::Plus => (psi0, FRAC_PI_2),
        Side::Minus => (0.0, psi0),
    };
    let mut pts = Vec::with_capacity(grid.radii * grid.angles);
    for i in 0..grid.radii {
        let frac = if grid.radii == 1 { 0.0 } else { i as f64 / (grid.radii - 1) as f64 };
        let big_r = grid.r_min * (grid.r_max / grid.r_min).powf(frac);
        for j in 0..grid.angles {
            let psi = lo + (hi - lo) * (j + 1) as f64 / (grid.angles + 1) as f64;
            let om = FRAC_PI_2 * ((i + j) % 5) as f64 / 4.0;
            let rho = big_r * psi.sin();
            pts.push([big_r * psi.cos(), rho * om.cos(), rho * om.sin()]);
        }
    }
    pts
}

/// Minimum over the grid of the side-signed scaled divergence.
pub fn cap_divergence_check(pot: &CapPotential, grid: &DivergenceGrid) -> Result<DivergenceReport> {
    let mut best = (f64::INFINITY, [0.0; 3]);
    let pts = side_samples(pot, grid);
    for p in &pts {
        let v = pot.scaled_divergence(p[0], p[1], p[2])?;
        if v < best.0 {
            best = (v, *p);
        }
    }
    Ok(DivergenceReport { min_scaled: best.0, argmin: best.1, points: pts.len(), positive: best.0 > 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(n: u32, k: u32) -> ConePair {
        ConePair::new(n, k).unwrap()
    }

    #[test]
    fn indicial_exact_values() {
        let d = indicial_roots(7).unwrap();
        assert_eq!((d.gamma_low, d.gamma_high), (2.0, 3.0));
        assert!(d.contains(-2.9, -2.1));
        let d = indicial_roots(8).unwrap();
        assert!((d.gamma_low - (3.0 - 2f64.sqrt())).abs() < 1e-15);
        assert!((d.gamma_high - 4.414_213_562_373_095).abs() < 1e-14);
        assert!(!indicial_roots(6).unwrap().real);
        for n in 7..40 {
            let d = indicial_roots(n).unwrap();
            assert!((d.gamma_low + d.gamma_high - (n as f64 - 2.0)).abs() < 1e-12);
            assert!((d.gamma_low * d.gamma_high - (n as f64 - 1.0)).abs() < 1e-9);
            assert!(d.jacobi_residual(d.gamma_low).abs() < 1e-12 * n as f64);
            assert!(d.jacobi_residual(d.gamma_high).abs() < 1e-12 * (n * n) as f64);
        }
    }

    #[test]
    fn potentials_vanish_on_cone_and_are_homogeneous() {
        for (n, k, side) in [(7, 1, Side::Plus), (7, 3, Side::Minus), (7, 5, Side::Minus), (9, 1, Side::Minus), (10, 3, Side::Plus)] {
            let pot = CapPotential::new(pair(n, k), side, 0.0).unwrap();
            let a = pot.a2().sqrt();
            assert!(cap_eval(&pot, 1.0, a * 0.6, a * 0.8).unwrap().0.abs() < 1e-13);
            let p = match side {
                Side::Plus => [0.3, 0.9, 0.4],
                Side::Minus => [1.0, 0.1, 0.05],
            };
            let v = cap_eval(&pot, p[0], p[1], p[2]).unwrap().0;
            for lam in [0.5, 2.0, 10.0] {
                let w = cap_eval(&pot, lam * p[0], lam * p[1], lam * p[2]).unwrap().0;
                assert!((w - lam.powf(pot.degree) * v).abs() <= 1e-10 * w.abs().max(1.0), "({n},{k}) {lam}: {w} {v}");
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let pot = CapPotential::new(pair(7, 2), Side::Plus, 0.1).unwrap();
        let p = [0.4, 0.9, 0.3];
        let (_, g) = cap_eval(&pot, p[0], p[1], p[2]).unwrap();
        for i in 0..3 {
            let h = 1e-6;
            let (mut a, mut b) = (p, p);
            a[i] += h;
            b[i] -= h;
            let fd = (cap_eval(&pot, a[0], a[1], a[2]).unwrap().0 - cap_eval(&pot, b[0], b[1], b[2]).unwrap().0) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-6 * g[i].abs().max(1.0));
        }
    }

    #[test]
    fn wrong_side_and_excluded_pairs() {
        let pot = CapPotential::new(pair(7, 1), Side::Plus, 0.0).unwrap();
        assert_eq!(cap_eval(&pot, 1.0, 0.0, 0.0).unwrap_err(), Error::WrongSide);
        assert!(CapPotential::new(pair(7, 5), Side::Plus, 0.0).is_err());
        assert!(CapPotential::new(pair(7, 1), Side::Minus, 0.0).is_err());
        assert!(CapPotential::new(pair(6, 2), Side::Plus, 0.0).is_err());
    }

    #[test]
    fn constants() {
        let c = cap_constants(pair(7, 3), Side::Plus).unwrap();
        assert!((c.computed - 0.480_512_237_287_837).abs() < 1e-12 && c.matches_reference);
        for (n, k, s) in [(7, 1, Side::Plus), (7, 5, Side::Minus), (9, 1, Side::Plus), (9, 1, Side::Minus), (10, 3, Side::Plus)] {
            assert!(cap_constants(pair(n, k), s).unwrap().matches_reference, "({n},{k},{s:?})");
        }
        // Case IV on the minus side: the computed value a^4/|grad phi| differs from the list.
        let c = cap_constants(pair(10, 3), Side::Minus).unwrap();
        assert!(!c.matches_reference);
        assert!((c.computed - 0.265_165_042_944_955).abs() < 1e-12);
        assert!((c.listed - 0.397_747_564_417_433).abs() < 1e-12);
    }

    #[test]
    fn lawlor_cubic_minimum() {
        let e = lawlor_cubic_min();
        assert_eq!(e.x, 1.0);
        assert!((e.value - (11.0 - 3.0 * 5f64.sqrt())).abs() < 1e-12);
        assert_eq!(lawlor_cubic(0.0), 25.0);
        let d = |t: f64| 3.0 * t * t - 6.0 * 5f64.sqrt() * t - 15.0;
        assert!(d(0.0) < 0.0 && d(1.0) < 0.0);
    }

    #[test]
    fn divergence_positivity_and_scale_invariance() {
        let g = DivergenceGrid::default();
        let r = cap_divergence_check(&CapPotential::new(pair(7, 1), Side::Plus, 0.0).unwrap(), &g).unwrap();
        assert!(r.positive && r.points == 1000);
        let r = cap_divergence_check(&CapPotential::new(pair(7, 5), Side::Minus, 0.0).unwrap(), &g).unwrap();
        assert!(r.positive);
        let pot = CapPotential::new(pair(8, 3), Side::Plus, 0.0).unwrap();
        assert!(cap_divergence_check(&pot, &g).unwrap().positive);
        for p in side_samples(&pot, &DivergenceGrid { radii: 3, angles: 7, ..g }) {
            let a = pot.scaled_divergence(p[0], p[1], p[2]).unwrap();
            let b = pot.scaled_divergence(2.0 * p[0], 2.0 * p[1], 2.0 * p[2]).unwrap();
            assert!((a - b).abs() < 1e-8 * a.abs().max(1.0));
        }
    }

    #[test]
    fn divergence_matches_finite_differences() {
        // div X by central differences of the unit field, including the cylindrical terms.
        let pot = CapPotential::new(pair(9, 1), Side::Minus, 0.0).unwrap();
        let (n, k) = (9.0, 1.0);
        let unit = |p: [f64; 3]| {
            let g = cap_eval(&pot, p[0], p[1], p[2]).unwrap().1;
            let m = g.iter().map(|x| x * x).sum::<f64>().sqrt();
            [g[0] / m, g[1] / m, g[2] / m]
        };
        let p = [1.0, 0.2, 0.1];
        let h = 1e-5;
        let x = unit(p);
        let mut div = (n - k - 1.0) * x[0] / p[0] + (k - 1.0) * x[1] / p[1];
        for i in 0..3 {
            let (mut a, mut b) = (p, p);
            a[i] += h;
            b[i] -= h;
            div += (unit(a)[i] - unit(b)[i]) / (2.0 * h);
        }
        assert!((div - pot.divergence(p[0], p[1], p[2]).unwrap()).abs() < 1e-6);
    }
}

#[cfg(test)]
mod near_half_pi_tests {
    use super::*;

    #[test]
    fn defects_scale_with_eps() {
        let p = ConePair::new(7, 1).unwrap();
        let d1 = near_half_pi_relations(p, 1e-3).unwrap();
        let d2 = near_half_pi_relations(p, 5e-4).unwrap();
        let ratio = d1.tan_defect / d2.tan_defect;
        assert!((1.7..=2.3).contains(&ratio), "tan ratio {ratio}");
        let gr = d1.gap_defect / d2.gap_defect;
        assert!(d1.t_eps < d1.t_hat_eps && d1.theta < FRAC_PI_2);
        // The gap relation holds to O(eps^3).
        assert!((6.0..=10.0).contains(&gr), "gap ratio {gr}");
    }

    #[test]
    fn theta_linear_coefficient() {
        let p = ConePair::new(7, 1).unwrap();
        let c = 5f64.sqrt();
        for eps in [1e-2, 5e-3] {
            let d = near_half_pi_relations(p, eps).unwrap();
            let fit = (FRAC_PI_2 - d.theta) / eps;
            assert!((fit - c).abs() < 0.1 * c, "eps {eps}: {fit}");
        }
        let kappa = kappa_estimate(p, 5e-3).unwrap();
        assert!(kappa > 0.0);
    }
}
