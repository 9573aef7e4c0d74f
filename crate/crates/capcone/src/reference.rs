//! Embedded reference tables: supersolution rows with their five published
//! columns, the quadratic-barrier exponents, and the subsolution exponents.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::tolerances::{TABLE_TOL_ABS, TABLE_TOL_REL};

const REFERENCE_CSV: &str = include_str!("../data/reference.csv");

/// Which table a row belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TableKind {
    /// Supersolution rows `(n, k, beta)` with five published columns.
    Appendix,
    /// Supersolution exponents of the quadratic barriers.
    Quadratics,
    /// Subsolution exponents `alpha`.
    Alpha,
}

/// One reference row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    /// Table.
    pub table: TableKind,
    /// Dimension parameter.
    pub n: u32,
    /// Second factor dimension.
    pub k: u32,
    /// Exponent (`beta` or `alpha`).
    pub param: f64,
    /// Published `r_bar - A`.
    pub rbar_minus_a: Option<f64>,
    /// Published `max Q_hat`.
    pub max_qhat: Option<f64>,
    /// Published `max K(0, .)`.
    pub max_k0: Option<f64>,
    /// Published `max K(1, .)`.
    pub max_k1: Option<f64>,
    /// Published `min P`.
    pub min_p: Option<f64>,
}

impl ReferenceRow {
    /// Published columns, when present.
    pub fn columns(&self) -> Option<[f64; 5]> {
        Some([self.rbar_minus_a?, self.max_qhat?, self.max_k0?, self.max_k1?, self.min_p?])
    }
}

/// All embedded rows in file order.
pub fn reference_rows() -> &'static [ReferenceRow] {
    static ROWS: OnceLock<Vec<ReferenceRow>> = OnceLock::new();
    ROWS.get_or_init(|| {
        csv::Reader::from_reader(REFERENCE_CSV.as_bytes())
            .deserialize()
            .collect::<std::result::Result<Vec<_>, _>>()
            .expect("embedded reference table is well formed")
    })
}

/// Rows of one table.
pub fn table(kind: TableKind) -> Vec<ReferenceRow> {
    reference_rows().iter().filter(|r| r.table == kind).copied().collect()
}

/// Whether `value` matches `reference` within `max(abs, rel |reference|)`.
pub fn matches_with(value: f64, reference: f64, abs: f64, rel: f64) -> bool {
    (value - reference).abs() <= abs.max(rel * reference.abs())
}

/// [`matches_with`] at the default table tolerances.
pub fn matches(value: f64, reference: f64) -> bool {
    matches_with(value, reference, TABLE_TOL_ABS, TABLE_TOL_REL)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tables_parse() {
        assert_eq!(table(TableKind::Appendix).len(), 38);
        assert_eq!(table(TableKind::Quadratics).len(), 12);
        let first = table(TableKind::Appendix)[0];
        assert_eq!((first.n, first.k, first.param), (7, 1, -2.0));
        assert_eq!(first.columns(), Some([-3.33, -0.011, -1.55, -1.39, 2.34]));
        assert!(table(TableKind::Quadratics).iter().any(|r| (r.n, r.k, r.param) == (9, 5, -3.0)));
        assert!(table(TableKind::Alpha).iter().filter(|r| r.n == 8).all(|r| r.param == -4.5));
    }

    #[test]
    fn tolerance_rule() {
        assert!(matches(-1.56, -1.55));
        assert!(matches(100.0, 101.9));
        assert!(!matches(100.0, 102.1));
    }
}
