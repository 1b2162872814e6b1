//! Confidence curves and confidence distributions, the transforms between
//! them, level-set extraction, and the exact confidence distribution
//! C(theta) = 1 - G(theta_hat; theta).

use std::sync::Arc;

use crate::calib::Calibration;
use crate::dist::{std_normal_cdf, std_normal_quantile};
use crate::error::{Error, Result};
use crate::grid::{chebyshev_nodes, working_interval, Interval, MonotoneCubic};
use crate::models::Model;

/// Tail mass pinned inside the working interval.
const WORKING_TAIL: f64 = 1e-6;
/// Nodes in the quantile grid cache.
const QUANTILE_NODES: usize = 513;
/// Bisection tolerance for quantile inversion, relative to the domain width.
const QUANTILE_TOL: f64 = 1e-13;

pub type EvalFn = Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>;

/// Sign convention of the curve-to-distribution map: +1 at the minimizer.
fn sign_at(minimizer: f64, theta: f64) -> f64 {
    if minimizer >= theta {
        1.0
    } else {
        -1.0
    }
}

/// H(theta) = (1 - sign(minimizer - theta) cc(theta)) / 2.
pub fn h_from_cc(cc_value: f64, minimizer: f64, theta: f64) -> f64 {
    0.5 * (1.0 - sign_at(minimizer, theta) * cc_value)
}

// ---------------------------------------------------------------------------
// Confidence curve
// ---------------------------------------------------------------------------

/// Regular confidence curve: one minimum where it vanishes, level sets are
/// finite intervals. Immutable and share-safe.
#[derive(Clone)]
pub struct ConfidenceCurve {
    eval_fn: EvalFn,
    minimizer: f64,
    domain: Interval,
    param_domain: Interval,
}

impl ConfidenceCurve {
    pub fn new(eval_fn: EvalFn, minimizer: f64, domain: Interval, param_domain: Interval) -> Self {
        ConfidenceCurve { eval_fn, minimizer, domain, param_domain }
    }

    pub fn eval(&self, theta: f64) -> Result<f64> {
        (self.eval_fn)(theta)
    }

    pub fn minimizer(&self) -> f64 {
        self.minimizer
    }

    /// Working domain used for grids and level-set searches.
    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn param_domain(&self) -> Interval {
        self.param_domain
    }

    /// Distribution value H(theta) under the sign convention.
    pub fn h(&self, theta: f64) -> Result<f64> {
        Ok(h_from_cc(self.eval(theta)?, self.minimizer, theta))
    }

    /// Level set {theta : cc(theta) <= level} as an interval, found by
    /// root bracketing on each side of the minimizer. The working domain is
    /// widened toward the parameter boundary when the set hits its edge.
    pub fn level_set(&self, level: f64) -> Result<(f64, f64)> {
        if !(0.0 < level && level < 1.0) {
            return Err(Error::Invalid(format!("level {level} outside (0,1)")));
        }
        let lo = self.level_edge(level, -1.0)?;
        let hi = self.level_edge(level, 1.0)?;
        Ok((lo, hi))
    }

    fn level_edge(&self, level: f64, dir: f64) -> Result<f64> {
        let mut edge = if dir < 0.0 { self.domain.lo } else { self.domain.hi };
        let g = |t: f64| self.eval(t).map(|c| c - level).unwrap_or(f64::NAN);
        for _ in 0..60 {
            let v = g(edge);
            if v.is_nan() {
                return Err(Error::IrregularCurve { msg: format!("curve not evaluable at {edge}") });
            }
            if v >= 0.0 {
                let (lo, hi) = if dir < 0.0 { (edge, self.minimizer) } else { (self.minimizer, edge) };
                return crate::roots::bisect(g, lo, hi, QUANTILE_TOL * (hi - lo).abs().max(1e-30));
            }
            // widen toward the parameter boundary
            let bound = if dir < 0.0 { self.param_domain.lo } else { self.param_domain.hi };
            edge = if bound.is_finite() { bound + 0.25 * (edge - bound) } else { edge + dir * 2.0 * (edge - self.minimizer).abs().max(1.0) };
        }
        Err(Error::IrregularCurve { msg: format!("level {level} set unbounded toward {}", if dir < 0.0 { "the left" } else { "the right" }) })
    }

    /// Transform into the confidence distribution H; errors if H fails its
    /// monotonicity probe (irregular curve).
    pub fn to_distribution(&self) -> Result<ConfidenceDistribution> {
        let minimizer = self.minimizer;
        let f = self.eval_fn.clone();
        let cdf: EvalFn = Arc::new(move |theta| Ok(h_from_cc(f(theta)?, minimizer, theta)));
        ConfidenceDistribution::from_cdf(cdf, self.domain, self.param_domain)
    }
}

// ---------------------------------------------------------------------------
// Confidence distribution
// ---------------------------------------------------------------------------

/// Sample-dependent CDF on the parameter space with numerical quantiles.
///
/// Quantile inversion brackets on a Chebyshev grid cache (monotone cubic
/// between nodes) and polishes by bisection against the exact CDF.
#[derive(Clone)]
pub struct ConfidenceDistribution {
    cdf_fn: EvalFn,
    domain: Interval,
    param_domain: Interval,
    cache: Arc<MonotoneCubic>,
}

impl ConfidenceDistribution {
    pub fn from_cdf(cdf_fn: EvalFn, domain: Interval, param_domain: Interval) -> Result<Self> {
        let nodes = chebyshev_nodes(domain.lo, domain.hi, QUANTILE_NODES);
        let mut values = Vec::with_capacity(nodes.len());
        let mut prev = f64::NEG_INFINITY;
        for &t in &nodes {
            let v = cdf_fn(t)?;
            if v < prev - 1e-9 {
                return Err(Error::IrregularCurve { msg: format!("distribution probe decreases at theta = {t} ({v} after {prev})") });
            }
            let v = v.max(prev); // pin microscopic monotonicity noise
            values.push(v);
            prev = v;
        }
        let cache = MonotoneCubic::new(nodes, values)?;
        Ok(ConfidenceDistribution { cdf_fn, domain, param_domain, cache: Arc::new(cache) })
    }

    pub fn cdf(&self, theta: f64) -> Result<f64> {
        (self.cdf_fn)(theta)
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    /// Quantile by bracketed bisection of the exact CDF, started from the
    /// grid cache; widens past the working domain when the mass sits outside.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0 < p && p < 1.0) {
            return Err(Error::Invalid(format!("quantile level {p} outside (0,1)")));
        }
        let (ylo, yhi) = self.cache.y_range();
        let width = self.domain.hi - self.domain.lo;
        let g = |t: f64| self.cdf(t).map(|c| c - p).unwrap_or(f64::NAN);
        if p >= ylo && p <= yhi {
            let start = self.cache.invert(p, 1e-6 * width)?;
            // widen a local bracket geometrically before giving up on it
            let mut half = 2e-6 * width;
            while half < width {
                let lo = (start - half).max(self.domain.lo);
                let hi = (start + half).min(self.domain.hi);
                let (glo, ghi) = (g(lo), g(hi));
                if glo <= 0.0 && ghi >= 0.0 {
                    return crate::roots::bisect(g, lo, hi, QUANTILE_TOL * width);
                }
                if glo.is_nan() || ghi.is_nan() {
                    break;
                }
                half *= 8.0;
            }
        }
        // outside the cache: march toward the parameter boundary
        let dir = if p < ylo { -1.0 } else { 1.0 };
        let mut edge = if dir < 0.0 { self.domain.lo } else { self.domain.hi };
        let inner = if dir < 0.0 { self.domain.hi } else { self.domain.lo };
        for _ in 0..80 {
            let v = g(edge);
            if v.is_nan() {
                break;
            }
            if v * dir >= 0.0 {
                let (lo, hi) = if dir < 0.0 { (edge, inner) } else { (inner, edge) };
                return crate::roots::bisect(g, lo, hi, QUANTILE_TOL * (hi - lo));
            }
            let bound = if dir < 0.0 { self.param_domain.lo } else { self.param_domain.hi };
            edge = if bound.is_finite() { bound + 0.25 * (edge - bound) } else { edge + dir * 2.0 * width };
        }
        Err(Error::Invalid(format!("quantile {p} not bracketed inside the parameter domain")))
    }

    pub fn median(&self) -> Result<f64> {
        self.quantile(0.5)
    }

    /// Tail-symmetric curve |1 - 2 C(theta)| with the median as minimizer.
    pub fn to_curve(&self) -> Result<ConfidenceCurve> {
        let f = self.cdf_fn.clone();
        let eval: EvalFn = Arc::new(move |theta| Ok((1.0 - 2.0 * f(theta)?).abs()));
        Ok(ConfidenceCurve::new(eval, self.median()?, self.domain, self.param_domain))
    }
}

// ---------------------------------------------------------------------------
// Constructors from models
// ---------------------------------------------------------------------------

/// Exact confidence distribution C(theta) = 1 - G(theta_hat; theta) from a
/// model with a closed-form estimator CDF.
pub fn exact_cd(model: &dyn Model, data: &[f64]) -> Result<ConfidenceDistribution> {
    let theta_hat = model.mle(data)?;
    if model.estimator_cdf(theta_hat, theta_hat).is_none() {
        return Err(Error::EstimatorCdfUnavailable { model: model.key() });
    }
    let g = model_g(model);
    exact_cd_from(g, model.key(), theta_hat, model.stderr(theta_hat), model.param_domain())
}

fn model_g(model: &dyn Model) -> Arc<dyn Fn(f64, f64) -> Result<f64> + Send + Sync> {
    let m = model.clone_box();
    Arc::new(move |y, theta| m.estimator_cdf(y, theta).ok_or(Error::EstimatorCdfUnavailable { model: m.key() }))
}

/// Exact confidence distribution from an estimator CDF supplied directly
/// (closed form or a Monte Carlo estimate); G must be non-increasing in
/// theta on the probed grid.
pub fn exact_cd_from(
    g: Arc<dyn Fn(f64, f64) -> Result<f64> + Send + Sync>,
    model_key: &'static str,
    theta_hat: f64,
    stderr: f64,
    param_domain: Interval,
) -> Result<ConfidenceDistribution> {
    let gc = g.clone();
    let cdf_fn: EvalFn = Arc::new(move |theta| Ok((1.0 - gc(theta_hat, theta)?).clamp(0.0, 1.0)));
    let probe_cdf = |t: f64| cdf_fn(t).unwrap_or(f64::NAN);
    let domain = working_interval(probe_cdf, param_domain, theta_hat, stderr, WORKING_TAIL);
    // monotonicity contract: G non-increasing in theta
    let probes = chebyshev_nodes(domain.lo, domain.hi, 65);
    let mut prev = f64::INFINITY;
    for &t in &probes {
        let gv = g(theta_hat, t)?;
        if gv > prev + 1e-9 {
            return Err(Error::ModelViolation {
                msg: format!("estimator CDF of `{model_key}` increases in theta at {t}"),
            });
        }
        prev = gv.min(prev);
    }
    ConfidenceDistribution::from_cdf(cdf_fn, domain, param_domain)
}

/// Confidence curve cc(theta) = F(w(theta); theta) from the log-likelihood
/// ratio and a sampling-distribution calibration.
pub fn cc_from_w(model: &dyn Model, data: &[f64], calib: &Calibration) -> Result<ConfidenceCurve> {
    let theta_hat = model.mle(data)?;
    let stderr = model.stderr(theta_hat);
    let param_domain = model.param_domain();
    let m = model.clone_box();
    let owned: Vec<f64> = data.to_vec();
    let lhat = m.loglik(theta_hat, &owned)?;
    let cal = calib.clone();
    let eval: EvalFn = Arc::new(move |theta| {
        let w = (2.0 * (lhat - m.loglik(theta, &owned)?)).max(0.0);
        Ok(cal.cdf(w, theta)?.clamp(0.0, 1.0))
    });
    let domain = normal_approx_domain(theta_hat, stderr, param_domain);
    Ok(ConfidenceCurve::new(eval, theta_hat, domain, param_domain))
}

/// First-order working domain [theta_hat(1e-6), theta_hat(1 - 1e-6)] from
/// the normal approximation, clipped into the parameter domain.
pub fn normal_approx_domain(theta_hat: f64, stderr: f64, param_domain: Interval) -> Interval {
    working_interval(
        |t| std_normal_cdf((t - theta_hat) / stderr),
        param_domain,
        theta_hat,
        stderr * (-std_normal_quantile(WORKING_TAIL) / 6.0).max(1.0),
        WORKING_TAIL,
    )
}
