//! Parameter intervals, Chebyshev grids and monotone cubic interpolation.

use crate::error::{Error, Result};

/// Open interval (lo, hi); either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo < hi, "degenerate interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        x > self.lo && x < self.hi
    }

    pub fn check(&self, what: &'static str, x: f64) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::Domain { what, value: x, lo: self.lo, hi: self.hi })
        }
    }
}

/// Chebyshev points of the second kind on [lo, hi], endpoints included.
pub fn chebyshev_nodes(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    (0..n)
        .map(|i| {
            let t = (std::f64::consts::PI * i as f64 / (n - 1) as f64).cos();
            (mid - half * t).clamp(lo, hi)
        })
        .collect()
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| if i == n - 1 { hi } else { lo + step * i as f64 }).collect()
}

/// Shape-preserving cubic interpolant (Fritsch–Carlson) through a
/// non-decreasing table. Monotone data gives a monotone interpolant.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    /// Build from strictly increasing `xs` and non-decreasing `ys`.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::Invalid("interpolation table needs >= 2 matching nodes".into()));
        }
        for i in 1..xs.len() {
            if !(xs[i] > xs[i - 1]) {
                return Err(Error::Invalid(format!("x-nodes not strictly increasing at {i}")));
            }
            if ys[i] < ys[i - 1] {
                return Err(Error::Invalid(format!("y-values decrease at node {i}")));
            }
        }
        let n = xs.len();
        let mut secants = vec![0.0; n - 1];
        for i in 0..n - 1 {
            secants[i] = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
        }
        let mut slopes = vec![0.0; n];
        slopes[0] = secants[0];
        slopes[n - 1] = secants[n - 2];
        for i in 1..n - 1 {
            slopes[i] = if secants[i - 1] * secants[i] <= 0.0 {
                0.0
            } else {
                // harmonic mean keeps the interpolant monotone
                let (h0, h1) = (xs[i] - xs[i - 1], xs[i + 1] - xs[i]);
                let w0 = 2.0 * h1 + h0;
                let w1 = h1 + 2.0 * h0;
                (w0 + w1) / (w0 / secants[i - 1] + w1 / secants[i])
            };
        }
        for i in 0..n - 1 {
            if secants[i] == 0.0 {
                slopes[i] = 0.0;
                slopes[i + 1] = 0.0;
            }
        }
        Ok(MonotoneCubic { xs, ys, slopes })
    }

    pub fn x_range(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }

    pub fn y_range(&self) -> (f64, f64) {
        (self.ys[0], *self.ys.last().unwrap())
    }

    /// Evaluate; clamps outside the table to the end values.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let i = match self.xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => return self.ys[i],
            Err(i) => i - 1,
        };
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        let (m0, m1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * y0 + h10 * m0 + h01 * y1 + h11 * m1
    }

    /// Invert a non-decreasing interpolant by bisection to `xtol`.
    pub fn invert(&self, y: f64, xtol: f64) -> Result<f64> {
        let (ylo, yhi) = self.y_range();
        if y < ylo || y > yhi {
            return Err(Error::Invalid(format!("inverse query {y} outside [{ylo}, {yhi}]")));
        }
        let (xlo, xhi) = self.x_range();
        crate::roots::bisect(|x| self.eval(x) - y, xlo, xhi, xtol)
    }
}

/// Working interval for curve evaluation around an estimate.
///
/// Starts at +-6 standard errors, shrunk geometrically into the parameter
/// domain, then widened until `cdf` pins both tails below `tail_mass`.
/// Expansion stops early once it stalls: a confidence distribution may be
/// defective at a parameter boundary, leaving less than `tail_mass` to pin.
pub fn working_interval<C: Fn(f64) -> f64>(cdf: C, domain: Interval, center: f64, stderr: f64, tail_mass: f64) -> Interval {
    let into = |x: f64, toward_lo: bool| -> f64 {
        if domain.contains(x) {
            return x;
        }
        if toward_lo {
            if domain.lo.is_finite() { domain.lo + 0.25 * (center - domain.lo) } else { x }
        } else if domain.hi.is_finite() {
            domain.hi - 0.25 * (domain.hi - center)
        } else {
            x
        }
    };
    let mut lo = into(center - 6.0 * stderr, true);
    let mut hi = into(center + 6.0 * stderr, false);
    let mut val = cdf(lo);
    for _ in 0..60 {
        if val <= tail_mass {
            break;
        }
        let next = if domain.lo.is_finite() { domain.lo + 0.25 * (lo - domain.lo) } else { lo - 2.0 * (center - lo) };
        let next_val = cdf(next);
        if !(next_val < val - 0.02 * (val - tail_mass)) {
            break; // stalled: mass below is unreachable
        }
        lo = next;
        val = next_val;
    }
    let mut val = cdf(hi);
    for _ in 0..60 {
        if val >= 1.0 - tail_mass {
            break;
        }
        let next = if domain.hi.is_finite() { domain.hi - 0.25 * (domain.hi - hi) } else { hi + 2.0 * (hi - center) };
        let next_val = cdf(next);
        if !(next_val > val + 0.02 * ((1.0 - tail_mass) - val)) {
            break;
        }
        hi = next;
        val = next_val;
    }
    Interval::new(lo, hi)
}
