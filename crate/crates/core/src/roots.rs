//! Bracketed Newton iteration with bisection fallback.

/// Finds `x` in `[lo, hi]` with `f(x) = 0` for a nondecreasing `f`.
///
/// `f` returns the residual and its derivative. A Newton step is taken when it
/// stays strictly inside the current bracket, otherwise the bracket is
/// bisected. Iteration stops once the bracket is narrower than `x_tol`
/// (relative to `|x|` when that is larger than one) or the residual is
/// exactly zero.
pub fn solve_increasing<F>(mut f: F, mut lo: f64, mut hi: f64, x0: f64, x_tol: f64) -> f64
where
    F: FnMut(f64) -> (f64, f64),
{
    debug_assert!(lo <= hi);
    let mut x = if x0 > lo && x0 < hi { x0 } else { 0.5 * (lo + hi) };
    for _ in 0..400 {
        let (fx, dfx) = f(x);
        if fx == 0.0 {
            return x;
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let width = hi - lo;
        if width <= x_tol * x.abs().max(1.0) {
            break;
        }
        let newton = if dfx > 0.0 && dfx.is_finite() {
            x - fx / dfx
        } else {
            f64::NAN
        };
        if newton > lo && newton < hi {
            let step = (newton - x).abs();
            x = newton;
            if step <= 2.0 * f64::EPSILON * x.abs() {
                return x;
            }
        } else {
            x = 0.5 * (lo + hi);
        }
    }
    x
}

/// Expands `hi` geometrically until `f(hi) >= 0`, for nondecreasing `f`.
pub fn expand_upper<F: FnMut(f64) -> f64>(mut f: F, start: f64) -> f64 {
    let mut hi = start.max(1.0);
    for _ in 0..2000 {
        if f(hi) >= 0.0 {
            return hi;
        }
        hi *= 2.0;
    }
    hi
}
