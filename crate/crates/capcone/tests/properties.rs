//! Randomised invariants across the public API.

use capcone::freeboundary::{cap_eval, indicial_roots, CapPotential, Side};
use capcone::profile_ode::{integrate_profile, ConePair, ShootRequest, TerminalEvent};
use capcone::specfun::{eval_family, find_zero, gauss_2f1, FamilyKind, HypParams, ProfileFamily};
use proptest::prelude::*;

fn pair_strategy() -> impl Strategy<Value = ConePair> {
    (3u32..=12).prop_flat_map(|n| (Just(n), 1..=n - 2)).prop_map(|(n, k)| ConePair::new(n, k).unwrap())
}

fn cap_strategy() -> impl Strategy<Value = (ConePair, Side)> {
    (7u32..=12).prop_flat_map(|n| (Just(n), 1..=n - 2, prop::bool::ANY)).prop_filter_map("no potential", |(n, k, plus)| {
        let pair = ConePair::new(n, k).ok()?;
        let side = if plus { Side::Plus } else { Side::Minus };
        CapPotential::new(pair, side, 0.0).ok().map(|_| (pair, side))
    })
}

/// A point strictly on the side of the cone `s^2 + z^2 = a^2 r^2` where the potential is defined;
/// `w` sets the angle in the `(s, z)` plane.
fn side_point(pot: &CapPotential, u: f64, v: f64, w: f64) -> [f64; 3] {
    let a = pot.a2().sqrt();
    let r = 0.2 + u;
    let rho = match pot.side {
        Side::Plus => a * r * (1.2 + v),
        Side::Minus => a * r * (0.1 + 0.7 * v),
    };
    [r, rho * w.cos(), rho * w.sin()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gauss_closed_forms(a in 0.05f64..3.0, b in -1.0f64..-0.01, x in 0.0f64..0.95) {
        let l = gauss_2f1(HypParams::new(a, b, b).unwrap(), x).unwrap();
        prop_assert!((l - (1.0 - x).powf(-a)).abs() <= 1e-12 * l.abs().max(1.0));
        let r = gauss_2f1(HypParams::new(a, b, a).unwrap(), x).unwrap();
        prop_assert!((r - (1.0 - x).powf(-b)).abs() <= 1e-12 * r.abs().max(1.0));
    }

    #[test]
    fn family_second_derivative_matches_ode(p in pair_strategy(), t in 0.0f64..0.95, alpha in -6.0f64..-0.5, linear in prop::bool::ANY) {
        let kind = if linear { FamilyKind::Linear } else { FamilyKind::Barrier(alpha) };
        let fam = ProfileFamily::from_dims(p.n, p.k, kind).unwrap();
        let (f, fp, fpp) = fam.eval3(t).unwrap();
        let ode = fam.second_derivative_from_ode(t, f, fp);
        prop_assert!((fpp - ode).abs() <= 1e-10 * fpp.abs().max(f.abs()).max(1.0), "{fpp} vs {ode}");
        prop_assert_eq!(eval_family(&fam, t, 2).unwrap(), fpp);
    }

    #[test]
    fn linear_zero_lies_past_sqrt_alpha(p in pair_strategy()) {
        let t0 = find_zero(&ProfileFamily::linear(p)).unwrap();
        prop_assert!(p.alpha().sqrt() < t0 && t0 < 1.0);
    }

    #[test]
    fn subcritical_profiles_decrease_to_zero(p in pair_strategy(), frac in 0.05f64..0.9) {
        let traj = integrate_profile(&ShootRequest::new(p, 1.0, frac * p.a_star()).unwrap()).unwrap();
        let t_a = match traj.terminal {
            TerminalEvent::ZeroCrossing { t_a, .. } => t_a,
            other => return Err(TestCaseError::fail(format!("{other:?}"))),
        };
        prop_assert!(t_a > p.alpha().sqrt());
        for s in traj.samples.iter().filter(|s| s.t > 0.0 && s.f > 0.0) {
            prop_assert!(s.fp < 0.0);
            prop_assert!(s.f - p.big_a(s.t) * s.fp > 0.0);
        }
    }

    #[test]
    fn indicial_roots_solve_characteristic_equation(n in 3u32..=40) {
        let d = indicial_roots(n).unwrap();
        if d.real {
            prop_assert!(d.jacobi_residual(d.gamma_low).abs() <= 1e-12 * (n * n) as f64);
            prop_assert!(d.jacobi_residual(d.gamma_high).abs() <= 1e-12 * (n * n) as f64);
        }
    }

    #[test]
    fn cap_gradient_matches_central_differences((p, side) in cap_strategy(), u in 0.0f64..1.0, v in 0.0f64..1.0, w in -1.2f64..1.2) {
        let pot = CapPotential::new(p, side, 0.0).unwrap();
        let x = side_point(&pot, u, v, w);
        let (_, g) = cap_eval(&pot, x[0], x[1], x[2]).unwrap();
        let scale = g.iter().fold(0.0f64, |m, c| m.max(c.abs())).max(1e-3);
        for i in 0..3 {
            let h = 1e-6 * x.iter().fold(0.0f64, |m, c| m.max(c.abs()));
            let (mut xp, mut xm) = (x, x);
            xp[i] += h;
            xm[i] -= h;
            let fd = (cap_eval(&pot, xp[0], xp[1], xp[2]).unwrap().0 - cap_eval(&pot, xm[0], xm[1], xm[2]).unwrap().0) / (2.0 * h);
            prop_assert!((fd - g[i]).abs() <= 1e-6 * scale, "component {i}: {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn cap_homogeneity((p, side) in cap_strategy(), u in 0.0f64..1.0, v in 0.0f64..1.0, w in -1.2f64..1.2, lam in 0.5f64..10.0) {
        let pot = CapPotential::new(p, side, 0.0).unwrap();
        let x = side_point(&pot, u, v, w);
        let base = cap_eval(&pot, x[0], x[1], x[2]).unwrap().0;
        let scaled = cap_eval(&pot, lam * x[0], lam * x[1], lam * x[2]).unwrap().0;
        prop_assert!((scaled - lam.powf(pot.degree) * base).abs() <= 1e-10 * scaled.abs().max(1.0));
    }
}
