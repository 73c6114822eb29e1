//! Golden-section search over a unimodal profit function.
//!
//! Serves as the numerically independent route for every closed-form
//! optimum in this crate, and as the primary sizing method where no
//! closed form exists (fee-aware two-pool trades, mixed pool kinds).

use crate::{MavError, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_9;
const MAX_ITERS: usize = 200;

/// Relative tolerance on the located trade size.
pub const DX_REL_TOL: f64 = 1e-10;

fn ordering_key(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

/// Locates the maximum of a unimodal `profit` function on `bracket`,
/// refined to [`DX_REL_TOL`] relative tolerance in the trade size.
///
/// Returns `(dx_max, max_profit)`. Over a flat profit surface the
/// smallest bracketed trade size wins, so a constant-zero function
/// reports `(bracket.0, 0.0)`.
pub fn numeric_mav(profit: impl Fn(f64) -> f64, bracket: (f64, f64)) -> Result<(f64, f64)> {
    let (mut a, mut b) = bracket;
    if !a.is_finite() || !b.is_finite() {
        return Err(MavError::InvalidInput(format!(
            "bracket endpoints ({a}, {b}) must be finite"
        )));
    }
    if a > b {
        return Err(MavError::InvalidInput(format!(
            "bracket ({a}, {b}) is reversed"
        )));
    }
    let (lo, hi) = (a, b);
    let tol = DX_REL_TOL * a.abs().max(b.abs()).max(f64::MIN_POSITIVE);

    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = profit(x1);
    let mut f2 = profit(x2);

    let mut iters = 0;
    while b - a > tol && iters < MAX_ITERS {
        if ordering_key(f1) >= ordering_key(f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = profit(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = profit(x2);
        }
        iters += 1;
    }

    let mut best = (lo, profit(lo));
    for candidate in [(x1, f1), (x2, f2), (hi, profit(hi))] {
        if ordering_key(candidate.1) > ordering_key(best.1) {
            best = candidate;
        }
    }
    Ok(best)
}
