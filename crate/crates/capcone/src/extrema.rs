//! Extrema of smooth functions on intervals: dense grid plus golden-section
//! refinement around the best samples.

use crate::error::Result;
use crate::tolerances::{GOLDEN_CANDIDATES, GOLDEN_TOL};

/// Location and value of an extremum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum {
    /// Argument.
    pub x: f64,
    /// Value.
    pub value: f64,
}

/// Maximum of `f` on `[a, b]` from `n` equispaced samples refined by golden section.
pub fn maximize<F>(f: F, a: f64, b: f64, n: usize) -> Result<Extremum>
where
    F: Fn(f64) -> Result<f64>,
{
    let n = n.max(3);
    let h = (b - a) / (n - 1) as f64;
    let xs: Vec<f64> = (0..n).map(|i| if i == n - 1 { b } else { a + h * i as f64 }).collect();
    let vals: Vec<f64> = xs.iter().map(|&x| f(x)).collect::<Result<_>>()?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| vals[j].partial_cmp(&vals[i]).unwrap_or(std::cmp::Ordering::Equal));
    let mut best = Extremum { x: xs[order[0]], value: vals[order[0]] };
    for &i in order.iter().take(GOLDEN_CANDIDATES) {
        let lo = if i == 0 { a } else { xs[i - 1] };
        let hi = if i == n - 1 { b } else { xs[i + 1] };
        let e = golden_max(&f, lo, hi)?;
        if e.value > best.value {
            best = e;
        }
    }
    Ok(best)
}

/// Minimum of `f` on `[a, b]` (see [`maximize`]).
pub fn minimize<F>(f: F, a: f64, b: f64, n: usize) -> Result<Extremum>
where
    F: Fn(f64) -> Result<f64>,
{
    let e = maximize(|x| Ok(-f(x)?), a, b, n)?;
    Ok(Extremum { x: e.x, value: -e.value })
}

fn golden_max<F>(f: &F, mut lo: f64, mut hi: f64) -> Result<Extremum>
where
    F: Fn(f64) -> Result<f64>,
{
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while hi - lo > GOLDEN_TOL {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1)?;
        }
    }
    // Endpoints of the bracket are candidates too (maxima on the boundary).
    let mut best = if f1 > f2 { Extremum { x: x1, value: f1 } } else { Extremum { x: x2, value: f2 } };
    for x in [lo, hi] {
        let v = f(x)?;
        if v > best.value {
            best = Extremum { x, value: v };
        }
    }
    Ok(best)
}
