//! Scalar root-finding and 1-D optimization helpers.

use crate::error::{Error, Result};

/// Bisect `f` for a root on `[lo, hi]`, assuming a sign change.
///
/// Runs until the bracket width falls below `xtol` (absolute). The bracket
/// endpoints need not be finite evaluations of `f` as long as the signs are.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, xtol: f64) -> Result<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.is_nan() || fhi.is_nan() || flo.signum() == fhi.signum() {
        return Err(Error::Optimizer {
            what: "bisect",
            msg: format!("no sign change on [{lo}, {hi}] (f: {flo}, {fhi})"),
            best: lo,
            objective: flo,
        });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo < xtol {
            return Ok(mid.clamp(lo, hi));
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Safeguarded Newton on `f` with derivative `df`, falling back to bisection
/// steps whenever the Newton update leaves the bracket `[lo, hi]`.
///
/// Converges on |f| <= ftol or a bracket narrower than machine resolution.
pub fn newton_bracketed<F, D>(f: F, df: D, x0: f64, mut lo: f64, mut hi: f64, ftol: f64, max_iter: usize) -> Result<f64>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let mut x = x0.clamp(lo, hi);
    let mut fx = f(x);
    let mut best = (x, fx.abs());
    // keep the bracket sign-consistent with f(lo)
    let mut flo = f(lo);
    if flo == 0.0 {
        return Ok(lo);
    }
    for _ in 0..max_iter {
        if fx.abs() <= ftol {
            return Ok(x);
        }
        if fx.abs() < best.1 {
            best = (x, fx.abs());
        }
        if fx.signum() == flo.signum() {
            lo = x;
            flo = fx;
        } else {
            hi = x;
        }
        let d = df(x);
        let mut next = if d != 0.0 && d.is_finite() { x - fx / d } else { f64::NAN };
        if !next.is_finite() || next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        if next == x || hi - lo <= f64::EPSILON * (1.0 + x.abs()) {
            let fm = f(next);
            return Ok(if fm.abs() < fx.abs() { next } else { x });
        }
        x = next;
        fx = f(x);
    }
    if fx.abs() <= ftol * 16.0 {
        return Ok(x);
    }
    Err(Error::Optimizer {
        what: "newton",
        msg: format!("no convergence after {max_iter} iterations"),
        best: best.0,
        objective: best.1,
    })
}

/// Golden-section minimization of `f` on `[lo, hi]` to bracket width `xtol`.
pub fn golden_min<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, xtol: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > xtol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Expand a bracket around `x0` until `f` changes sign, doubling the step.
///
/// `dir` gives the search direction (+1 right, -1 left); `limit` caps the
/// excursion. Returns the sign-change bracket ordered low to high.
pub fn expand_bracket<F: Fn(f64) -> f64>(f: F, x0: f64, step0: f64, dir: f64, limit: f64) -> Option<(f64, f64)> {
    let f0 = f(x0);
    let mut step = step0;
    let mut prev = x0;
    for _ in 0..80 {
        let mut x = x0 + dir * step;
        if (dir > 0.0 && x > limit) || (dir < 0.0 && x < limit) {
            x = limit;
        }
        let fx = f(x);
        if fx == 0.0 || fx.signum() != f0.signum() {
            return Some(if prev < x { (prev, x) } else { (x, prev) });
        }
        if x == limit {
            return None;
        }
        prev = x;
        step *= 2.0;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn newton_with_bad_start_falls_back() {
        let r = newton_bracketed(|x| x * x * x - 8.0, |x| 3.0 * x * x, 1e6, 0.0, 1e7, 1e-12, 200).unwrap();
        assert!((r - 2.0).abs() < 1e-9);
    }

    #[test]
    fn golden_min_quadratic() {
        let m = golden_min(|x| (x - 3.25) * (x - 3.25), 0.0, 10.0, 1e-10);
        assert!((m - 3.25).abs() < 1e-8);
    }
}
