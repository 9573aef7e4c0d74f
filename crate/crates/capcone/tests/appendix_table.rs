//! Recompute every embedded supersolution row and compare with the published columns.

use capcone::barriers::verify_supersolution;
use capcone::profile_ode::ConePair;
use capcone::reference::{matches, table, TableKind};
use rayon::prelude::*;

const COLUMNS: [&str; 5] = ["rbar_minus_a", "max_qhat", "max_k0", "max_k1", "min_p"];

#[test]
fn appendix_rows_match_except_one_published_entry() {
    let rows = table(TableKind::Appendix);
    let results: Vec<_> = rows
        .par_iter()
        .map(|r| (r, verify_supersolution(ConePair::new(r.n, r.k).unwrap(), r.param)))
        .collect();
    let mut mismatches = Vec::new();
    for (r, rep) in results {
        let rep = rep.unwrap_or_else(|e| panic!("({},{},{}): {e}", r.n, r.k, r.param));
        assert!(rep.all_ok(), "({},{},{}) verdicts", r.n, r.k, r.param);
        for (i, (g, w)) in rep.columns().iter().zip(r.columns().unwrap()).enumerate() {
            if !matches(*g, w) {
                mismatches.push((r.n, r.k, COLUMNS[i], *g, w));
            }
        }
    }
    // The published min P for (12, 7, -7) is 27.07; the recomputed value is 28.99.
    assert_eq!(mismatches.len(), 1, "{mismatches:#?}");
    let (n, k, col, got, want) = mismatches[0];
    assert_eq!((n, k, col), (12, 7, "min_p"));
    assert!((got - 28.99).abs() < 0.01 && want == 27.07);
}
