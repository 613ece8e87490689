//! Safeguarded Newton iteration for increasing scalar functions.

#[derive(Debug, Clone, Copy)]
pub(crate) struct Bracket {
    pub lo: f64,
    pub hi: f64,
}

const MAX_ITER: usize = 400;

/// Root of an increasing `f` on `bracket`, where `f(lo) <= 0 <= f(hi)`.
///
/// `f` returns the value and the derivative. Newton steps that leave the
/// current bracket, or a non-positive slope, fall back to bisection. Stops
/// once `|f(y)| <= tol` or the bracket cannot shrink further in floating
/// point.
pub(crate) fn safeguarded_newton<F>(f: F, bracket: Bracket, guess: f64, tol: f64) -> f64
where
    F: Fn(f64) -> (f64, f64),
{
    let Bracket { mut lo, mut hi } = bracket;
    debug_assert!(lo <= hi);
    let mut y = guess.clamp(lo, hi);
    let mut best = (f64::INFINITY, y);
    for _ in 0..MAX_ITER {
        let (v, dv) = f(y);
        if v.abs() < best.0 {
            best = (v.abs(), y);
        }
        if v.abs() <= tol {
            return y;
        }
        if v < 0.0 {
            lo = y;
        } else {
            hi = y;
        }
        if hi - lo <= 2.0 * f64::EPSILON * hi.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        let newton = y - v / dv;
        y = if dv > 0.0 && dv.is_finite() && newton > lo && newton < hi { newton } else { split(lo, hi) };
    }
    best.1
}

/// Bisection point; geometric once the bracket spans many orders of
/// magnitude so roots far below `hi` are reached in few steps.
fn split(lo: f64, hi: f64) -> f64 {
    if lo <= 0.0 {
        if hi > 0.0 {
            let y = hi * 1e-8;
            return if y > 0.0 { y } else { 0.5 * (lo + hi) };
        }
        return 0.5 * (lo + hi);
    }
    if hi > 4.0 * lo {
        (lo.sqrt() * hi.sqrt()).clamp(lo, hi)
    } else {
        0.5 * (lo + hi)
    }
}
