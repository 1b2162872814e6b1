//! Sampling-distribution calibrations for the log-likelihood ratio and its
//! median-corrected version: exact pivot inversions where the model admits a
//! pivot, Monte Carlo samples of the pivot otherwise, and a theta-grid of
//! empirical CDFs for models with no pivot at all.

use std::sync::Arc;

use crate::dist::{gamma_cdf, gamma_quantile, std_normal_cdf};
use crate::error::{Error, Result};
use crate::mc::{par_map, substream, EmpiricalCdf, McConfig};
use crate::models::{Model, NormalTransform};
#[cfg(test)]
use crate::models::{ExpRate, GammaMean, NormalVariance};

type ExactFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// F(y; theta) for a ratio statistic: exact, pivotal-MC, or grid-MC.
#[derive(Clone)]
pub enum Calibration {
    /// Closed-form F(y; theta).
    Exact(ExactFn),
    /// Sorted pivotal sample of the statistic; free of theta.
    PivotSample(Arc<EmpiricalCdf>),
    /// Per-node empirical CDFs, linearly interpolated in theta.
    Grid(Arc<GridCalibration>),
}

impl std::fmt::Debug for Calibration {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Calibration::Exact(_) => write!(f, "Calibration::Exact"),
            Calibration::PivotSample(s) => write!(f, "Calibration::PivotSample({} draws)", s.len()),
            Calibration::Grid(g) => write!(f, "Calibration::Grid({} nodes)", g.nodes.len()),
        }
    }
}

impl Calibration {
    pub fn cdf(&self, y: f64, theta: f64) -> Result<f64> {
        match self {
            Calibration::Exact(f) => Ok(f(y, theta)),
            Calibration::PivotSample(s) => Ok(s.eval(y)),
            Calibration::Grid(g) => g.eval(y, theta),
        }
    }
}

/// Empirical CDFs at ordered theta nodes with linear interpolation between.
#[derive(Debug)]
pub struct GridCalibration {
    nodes: Vec<f64>,
    cdfs: Vec<EmpiricalCdf>,
}

impl GridCalibration {
    pub fn new(nodes: Vec<f64>, cdfs: Vec<EmpiricalCdf>) -> Result<Self> {
        if nodes.len() != cdfs.len() || nodes.len() < 2 {
            return Err(Error::Invalid("grid calibration needs >= 2 matching nodes".into()));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Invalid("grid nodes must be strictly increasing".into()));
        }
        Ok(GridCalibration { nodes, cdfs })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn eval(&self, y: f64, theta: f64) -> Result<f64> {
        let n = self.nodes.len();
        if theta < self.nodes[0] || theta > self.nodes[n - 1] {
            return Err(Error::CalibrationUnavailable { theta });
        }
        let j = self.nodes.partition_point(|t| *t <= theta);
        if j == 0 {
            return Ok(self.cdfs[0].eval(y));
        }
        if j == n {
            return Ok(self.cdfs[n - 1].eval(y));
        }
        let (t0, t1) = (self.nodes[j - 1], self.nodes[j]);
        let frac = (theta - t0) / (t1 - t0);
        Ok((1.0 - frac) * self.cdfs[j - 1].eval(y) + frac * self.cdfs[j].eval(y))
    }
}

// ---------------------------------------------------------------------------
// Gamma-pivot models
// ---------------------------------------------------------------------------

/// h(v) = v - 1 - log v: the ratio statistic's shape on the pivot scale.
pub fn h_ratio(v: f64) -> f64 {
    if v <= 0.0 {
        return f64::INFINITY;
    }
    v - 1.0 - v.ln()
}

/// Pivot structure shared by the gamma-type models: V ~ Gamma(s, 1/s) and
/// the (corrected) ratio is 2 s h(V / q), q = 1 for the uncorrected ratio
/// and the median of V for the corrected one.
#[derive(Debug, Clone, Copy)]
pub struct GammaPivot {
    pub s: f64,
    pub q: f64,
}

impl GammaPivot {
    pub fn uncorrected(s: f64) -> Self {
        GammaPivot { s, q: 1.0 }
    }

    pub fn corrected(s: f64) -> Self {
        GammaPivot { s, q: gamma_quantile(s, 1.0 / s, 0.5) }
    }

    /// Pivot shape for a model, where one exists.
    pub fn shape_for(model: &dyn Model) -> Option<f64> {
        model.gamma_pivot_shape()
    }

    /// Exact F(y) = P(2 s h(V/q) <= y) by inverting h on both branches.
    pub fn exact_cdf(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        let c = y / (2.0 * self.s);
        let (v_lo, v_hi) = h_level_interval(c);
        gamma_cdf(self.s, 1.0 / self.s, self.q * v_hi) - gamma_cdf(self.s, 1.0 / self.s, self.q * v_lo)
    }

    pub fn exact_calibration(&self) -> Calibration {
        let p = *self;
        Calibration::Exact(Arc::new(move |y, _theta| p.exact_cdf(y)))
    }

    /// Monte Carlo calibration from `replicates` pivot draws.
    pub fn mc_calibration(&self, cfg: &McConfig) -> Result<Calibration> {
        let gamma = rand_distr::Gamma::new(self.s, 1.0 / self.s).expect("valid gamma");
        let q = self.q;
        let s = self.s;
        let draws = par_map(cfg.workers, cfg.replicates, |rep| {
            let mut rng = substream(cfg.seed, 2, rep as u64);
            let v: f64 = rand::Rng::sample(&mut rng, gamma);
            2.0 * s * h_ratio(v / q)
        });
        Ok(Calibration::PivotSample(Arc::new(EmpiricalCdf::from_samples(draws)?)))
    }
}

/// Solve h(v) = c on both sides of v = 1 (h decreasing left, increasing right).
pub fn h_level_interval(c: f64) -> (f64, f64) {
    if c <= 0.0 {
        return (1.0, 1.0);
    }
    // left branch: h(v) -> inf as v -> 0+; solve in log v for relative accuracy
    let mut lo = 1.0;
    let mut lo_cand = (1.0 - (2.0 * c).sqrt()).max(0.5);
    for _ in 0..200 {
        if h_ratio(lo_cand) >= c {
            lo = crate::roots::bisect(|u: f64| h_ratio(u.exp()) - c, lo_cand.ln(), 0.0, 1e-13)
                .map(f64::exp)
                .unwrap_or(lo_cand);
            break;
        }
        lo_cand *= 0.25;
        if lo_cand < 1e-300 {
            lo = lo_cand;
            break;
        }
    }
    // right branch: h grows ~ v
    let mut hi = 1.0;
    let mut step = (2.0 * c).sqrt() + c;
    for _ in 0..200 {
        let cand = hi + step;
        if h_ratio(cand) >= c {
            hi = crate::roots::bisect(|v| h_ratio(v) - c, 1.0, cand, 1e-13 * cand).unwrap_or(cand);
            break;
        }
        hi = cand;
        step *= 2.0;
    }
    (lo.min(1.0), hi.max(1.0))
}

// ---------------------------------------------------------------------------
// Normal transformation family
// ---------------------------------------------------------------------------

/// Pivot map for the normal-transformation ratio statistics: with
/// A the effective acceleration and z0c the maximizer's bias constant,
/// the corrected ratio drawn under any phi is omega*(Z), Z standard normal.
#[derive(Debug, Clone, Copy)]
pub struct TransformPivot {
    accel: f64, // A = a (1 - a c)
    z0c: f64,
    corrected: bool,
}

impl TransformPivot {
    pub fn new(model: &NormalTransform, corrected: bool) -> Self {
        TransformPivot { accel: model.effective_accel(), z0c: model.z0c(), corrected }
    }

    /// Ratio value at pivot coordinate z; +inf past the support fold.
    pub fn omega(&self, z: f64) -> f64 {
        let a = self.accel;
        if self.corrected {
            let kappa = 1.0 - a * a;
            let m = 1.0 + a * z / kappa;
            if m <= 0.0 {
                return f64::INFINITY;
            }
            let t = z / kappa + a;
            (t * t - a * a - 2.0 * m.ln()).max(0.0)
        } else {
            let z0c = self.z0c;
            let m = 1.0 + a * (z - z0c);
            if m <= 0.0 {
                return f64::INFINITY;
            }
            (z * z - z0c * z0c - 2.0 * m.ln()).max(0.0)
        }
    }

    fn minimizer(&self) -> f64 {
        if self.corrected {
            0.0
        } else {
            self.z0c
        }
    }

    /// Exact F(y) = P(omega(Z) <= y) via two-sided inversion of omega.
    pub fn exact_cdf(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        let t0 = self.minimizer();
        let a = self.accel;
        // feasibility fold in z for a != 0
        let fold = if self.corrected {
            if a == 0.0 { f64::NEG_INFINITY } else { -(1.0 - a * a) / a }
        } else if a == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.z0c - 1.0 / a
        };
        let (lo_bound, hi_bound) = if a > 0.0 { (fold, f64::INFINITY) } else if a < 0.0 { (f64::NEG_INFINITY, -fold + 2.0 * t0) } else { (f64::NEG_INFINITY, f64::INFINITY) };
        let g = |z: f64| self.omega(z) - y;
        let z_lo = march_root(g, t0, -1.0, lo_bound);
        let z_hi = march_root(g, t0, 1.0, hi_bound);
        std_normal_cdf(z_hi) - std_normal_cdf(z_lo)
    }

    pub fn exact_calibration(&self) -> Calibration {
        let p = *self;
        Calibration::Exact(Arc::new(move |y, _theta| p.exact_cdf(y)))
    }

    pub fn mc_calibration(&self, cfg: &McConfig) -> Result<Calibration> {
        let p = *self;
        let draws = par_map(cfg.workers, cfg.replicates, |rep| {
            let mut rng = substream(cfg.seed, 3, rep as u64);
            let z: f64 = rand::Rng::sample(&mut rng, rand_distr::StandardNormal);
            p.omega(z)
        });
        Ok(Calibration::PivotSample(Arc::new(EmpiricalCdf::from_samples(draws)?)))
    }
}

/// Root of increasing-|g| along direction `dir` from the minimizer, where
/// g < 0 at the start and g -> +inf toward the bound (possibly infinite).
fn march_root(g: impl Fn(f64) -> f64, from: f64, dir: f64, bound: f64) -> f64 {
    let mut inner = from;
    let mut step = 1.0;
    for _ in 0..300 {
        let cand = if dir > 0.0 {
            if bound.is_finite() { (from + step).min(bound - 0.25 * (bound - inner)) } else { from + step }
        } else if bound.is_finite() {
            (from - step).max(bound + 0.25 * (inner - bound))
        } else {
            from - step
        };
        let v = g(cand);
        if v >= 0.0 {
            let (lo, hi) = if cand < inner { (cand, inner) } else { (inner, cand) };
            return crate::roots::bisect(&g, lo, hi, 1e-13 * (1.0 + cand.abs())).unwrap_or(cand);
        }
        inner = cand;
        step *= 2.0;
    }
    inner
}

// ---------------------------------------------------------------------------
// Model-driven constructors
// ---------------------------------------------------------------------------

/// Exact calibration of the ratio statistic for pivot models; None otherwise.
pub fn exact_calibration_for(model: &dyn Model, corrected: bool) -> Option<Calibration> {
    if let Some(s) = model.gamma_pivot_shape() {
        let pivot = if corrected { GammaPivot::corrected(s) } else { GammaPivot::uncorrected(s) };
        return Some(pivot.exact_calibration());
    }
    model.as_normal_transform().map(|m| TransformPivot::new(m, corrected).exact_calibration())
}

/// Monte Carlo pivot calibration for pivot models; None otherwise.
pub fn mc_calibration_for(model: &dyn Model, corrected: bool, cfg: &McConfig) -> Option<Result<Calibration>> {
    if let Some(s) = model.gamma_pivot_shape() {
        let pivot = if corrected { GammaPivot::corrected(s) } else { GammaPivot::uncorrected(s) };
        return Some(pivot.mc_calibration(cfg));
    }
    model.as_normal_transform().map(|m| TransformPivot::new(m, corrected).mc_calibration(cfg))
}
