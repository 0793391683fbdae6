//! Adaptive Simpson quadrature, plus a period-aware variant for integrands
//! with a known period.

use std::cell::Cell;

/// Default absolute tolerance on a mean value.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// Default recursion depth limit.
pub const MAX_DEPTH: u32 = 30;

/// Integration result with the number of integrand evaluations spent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub evaluations: u64,
}

/// Adaptive Simpson on `[lo, hi]` to absolute tolerance `tol`.
///
/// Uses the usual Richardson correction `(S2 - S1) / 15` on accepted panels.
/// Panels at `max_depth` are accepted as they are.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64, max_depth: u32) -> Integral {
    let evals = Cell::new(0u64);
    let g = |x: f64| {
        evals.set(evals.get() + 1);
        f(x)
    };
    if lo == hi {
        return Integral {
            value: 0.0,
            evaluations: 0,
        };
    }
    let (a, b, sign) = if lo < hi { (lo, hi, 1.0) } else { (hi, lo, -1.0) };
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (g(a), g(m), g(b));
    let whole = (b - a) * (fa + 4.0 * fm + fb) / 6.0;
    let value = refine(&g, a, m, b, fa, fm, fb, whole, tol, max_depth);
    Integral {
        value: sign * value,
        evaluations: evals.get(),
    }
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    m: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) * (fa + 4.0 * flm + fm) / 6.0;
    let right = (b - m) * (fm + 4.0 * frm + fb) / 6.0;
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol || lm <= a || rm >= b {
        left + right + delta / 15.0
    } else {
        refine(f, a, lm, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + refine(f, m, rm, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// Integral of a `period`-periodic `f` over `[lo, hi]`.
///
/// Whole periods are replaced by `count * ∫_0^P f`, with `full_period`
/// supplying that value (so callers can cache it); only the leftover piece
/// at the right end is integrated directly.
pub fn periodic_integral<F, P>(f: F, lo: f64, hi: f64, period: f64, full_period: P, tol: f64) -> Integral
where
    F: Fn(f64) -> f64,
    P: FnOnce() -> Integral,
{
    let (a, b, sign) = if lo <= hi { (lo, hi, 1.0) } else { (hi, lo, -1.0) };
    let len = b - a;
    if len <= period {
        let r = adaptive_simpson(f, a, b, tol, MAX_DEPTH);
        return Integral {
            value: sign * r.value,
            evaluations: r.evaluations,
        };
    }
    let rem = len % period;
    let count = ((len - rem) / period).round();
    let full = full_period();
    let tail = adaptive_simpson(f, b - rem, b, tol, MAX_DEPTH);
    Integral {
        value: sign * (count * full.value + tail.value),
        evaluations: full.evaluations + tail.evaluations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let r = adaptive_simpson(|x| x * x * x - 2.0 * x + 1.0, 0.0, 2.0, 1e-12, MAX_DEPTH);
        assert!((r.value - 2.0).abs() < 1e-14);
        let r = adaptive_simpson(|x| x, 1.0, 0.0, 1e-12, MAX_DEPTH);
        assert!((r.value + 0.5).abs() < 1e-15);
    }

    #[test]
    fn smooth_oscillation_to_tolerance() {
        let r = adaptive_simpson(|x: f64| (7.0 * x).cos(), 0.0, 3.0, 1e-11, MAX_DEPTH);
        let exact = (21.0f64).sin() / 7.0;
        assert!((r.value - exact).abs() < 1e-10, "{}", r.value - exact);
    }

    #[test]
    fn kinks_are_resolved() {
        let r = adaptive_simpson(|x: f64| (x - 0.3).abs(), 0.0, 1.0, 1e-12, MAX_DEPTH);
        assert!((r.value - (0.045 + 0.245)).abs() < 1e-11);
    }

    #[test]
    fn periodic_reduction_matches_direct() {
        let period = 0.25;
        let f = |x: f64| (x * std::f64::consts::TAU / period).sin().powi(2);
        let direct = adaptive_simpson(f, 0.1, 2.37, 1e-12, MAX_DEPTH).value;
        let full = || adaptive_simpson(f, 0.0, period, 1e-13, MAX_DEPTH);
        let reduced = periodic_integral(f, 0.1, 2.37, period, full, 1e-12).value;
        assert!((direct - reduced).abs() < 1e-10, "{direct} vs {reduced}");
        let back = periodic_integral(f, 2.37, 0.1, period, full, 1e-12).value;
        assert!((reduced + back).abs() < 1e-14);
    }
}
