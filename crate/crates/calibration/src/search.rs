//! One-dimensional minimisation used to fit temperatures.

use relikit_core::{Error, Result};

/// Golden-section search for a minimum of `f` on `[lo, hi]`, stopping when
/// the bracket is narrower than `tol`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

/// Minimises `f` on `[lo, hi]`: evaluates a `grid`-point coarse grid,
/// refines around the best grid point with golden-section search, and also
/// compares against the mandatory probe points. Returns the best `(x, f(x))`.
pub fn grid_then_golden(
    f: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    grid: usize,
    tol: f64,
    probes: &[f64],
) -> Result<(f64, f64)> {
    assert!(grid >= 2 && lo < hi);
    let step = (hi - lo) / (grid - 1) as f64;
    let xs: Vec<f64> = (0..grid)
        .map(|i| {
            if i + 1 == grid {
                hi
            } else {
                lo + step * i as f64
            }
        })
        .collect();
    let fs: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    if fs.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical(
            "objective is not finite on the search grid".into(),
        ));
    }
    let best = (0..grid).fold(0, |b, i| if fs[i] < fs[b] { i } else { b });
    let a = xs[best.saturating_sub(1)];
    let b = xs[(best + 1).min(grid - 1)];
    let mut winner = golden_section(&f, a, b, tol);
    for (x, fx) in probes
        .iter()
        .map(|&x| (x, f(x)))
        .chain(std::iter::once((xs[best], fs[best])))
    {
        if fx < winner.1 {
            winner = (x, fx);
        }
    }
    if !winner.1.is_finite() {
        return Err(Error::Numerical(
            "objective diverged during refinement".into(),
        ));
    }
    Ok(winner)
}
