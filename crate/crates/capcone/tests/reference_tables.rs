//! Quadratic-barrier exponents and subsolution exponents from the embedded tables.

use capcone::barriers::{alpha_ledger, check_subsolution, stability_margin, verify_supersolution};
use capcone::profile_ode::ConePair;
use capcone::reference::{table, TableKind};

#[test]
fn quadratic_exponents_verify() {
    for r in table(TableKind::Quadratics) {
        let rep = verify_supersolution(ConePair::new(r.n, r.k).unwrap(), r.param).unwrap();
        if (r.n, r.k) == (20, 18) {
            // The listed exponent -10 fails max K(1, .) < 0; the exponent -7 certifies this pair.
            assert_eq!(r.param, -10.0);
            assert!(rep.s1_ok && rep.s2_ok && !rep.s3_ok && rep.max_k1 > 0.0);
            assert!(verify_supersolution(ConePair::new(20, 18).unwrap(), -7.0).unwrap().all_ok());
        } else {
            assert!(rep.all_ok(), "({},{},{}) {:?}", r.n, r.k, r.param, rep.columns());
        }
    }
}

#[test]
fn alpha_rows_agree_with_ledger_and_pass() {
    for r in table(TableKind::Alpha) {
        let p = ConePair::new(r.n, r.k).unwrap();
        assert_eq!(alpha_ledger(p), Some(r.param));
        assert!(stability_margin(p, r.param).unwrap() > 0.0);
        let check = check_subsolution(p, r.param).unwrap();
        assert!(check.verdict, "({},{})", r.n, r.k);
        if r.n >= 8 {
            assert!(check.max_g_prime < 0.0, "({},{}) G not decreasing", r.n, r.k);
        }
    }
}
