//! Thin wrappers around the reference distribution functions.
//!
//! Gamma quantiles get a Newton polish: the generic inverse in the backing
//! library stops short of full precision for large shape parameters.

use statrs::distribution::{ChiSquared, Continuous, ContinuousCDF, Gamma, Normal};

pub fn std_normal_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

pub fn std_normal_pdf(x: f64) -> f64 {
    (-(0.5) * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

pub fn std_normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

pub fn chi2_cdf(df: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    ChiSquared::new(df).expect("df > 0").cdf(x)
}

pub fn chi2_quantile(df: f64, p: f64) -> f64 {
    gamma_quantile(0.5 * df, 2.0, p)
}

/// Chi-squared(1) CDF, the limiting calibration of a log-likelihood ratio.
pub fn chi2_1_cdf(w: f64) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    // P(chi2_1 <= w) = 2 Phi(sqrt(w)) - 1
    2.0 * std_normal_cdf(w.sqrt()) - 1.0
}

/// CDF of Gamma(shape, scale).
pub fn gamma_cdf(shape: f64, scale: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let mean = shape * scale;
    let sd = shape.sqrt() * scale;
    if x >= mean + 40.0 * sd {
        return 1.0; // far outside the series' reliable range
    }
    let v = Gamma::new(shape, 1.0 / scale).expect("shape, scale > 0").cdf(x);
    if v.is_nan() {
        if x > mean { 1.0 } else { 0.0 }
    } else {
        v
    }
}

pub fn gamma_quantile(shape: f64, scale: f64, p: f64) -> f64 {
    assert!((0.0..1.0).contains(&p) || p == 0.0 || p < 1.0, "p in (0,1)");
    let g = Gamma::new(shape, 1.0 / scale).expect("shape, scale > 0");
    let mut x = g.inverse_cdf(p).max(f64::MIN_POSITIVE);
    if !x.is_finite() {
        // Wilson-Hilferty start
        let z = std_normal_quantile(p);
        let t = 1.0 - 1.0 / (9.0 * shape) + z / (3.0 * shape.sqrt());
        x = (shape * scale * t * t * t).max(f64::MIN_POSITIVE);
    }
    // Newton on F(x) - p with a positivity safeguard
    for _ in 0..40 {
        let f = g.cdf(x) - p;
        let d = g.ln_pdf(x).exp(); // direct pdf overflows at large shape
        if d <= 0.0 || !d.is_finite() {
            break;
        }
        let mut step = f / d;
        if step.abs() > 0.5 * x {
            step = 0.5 * x * step.signum();
        }
        let next = x - step;
        if !next.is_finite() || next <= 0.0 {
            x *= 0.5;
            continue;
        }
        if (next - x).abs() <= 1e-15 * x.abs() {
            return next;
        }
        x = next;
    }
    x
}
