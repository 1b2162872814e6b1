//! Median bias correction: the median function b(theta) of the estimator,
//! the corrected ratio w*(theta) = w(b(theta)), the corrected curve
//! cc*(theta) = F*(w*(theta); theta) with its distribution H*, and the
//! plug-in pipeline for the GPD record-probability study.

use std::sync::Arc;

use rand_chacha::ChaCha8Rng;

use crate::calib::{Calibration, GridCalibration};
use crate::confidence::{normal_approx_domain, ConfidenceCurve, ConfidenceDistribution, EvalFn};
use crate::dist::chi2_1_cdf;
use crate::error::{Error, Result};
use crate::gpd::{fit_tau, sample_gpd, GpdStudy};
use crate::grid::{linspace, Interval, MonotoneCubic};
use crate::mc::{par_map, sorted_median, substream, EmpiricalCdf, McConfig};
use crate::models::Model;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MedianSource {
    Exact,
    MonteCarlo,
}

/// Strictly increasing median function b with its inverse.
#[derive(Clone)]
pub struct MedianFunction {
    eval_fn: EvalFn,
    inverse_fn: EvalFn,
    source: MedianSource,
}

impl MedianFunction {
    pub fn identity() -> Self {
        MedianFunction {
            eval_fn: Arc::new(|t| Ok(t)),
            inverse_fn: Arc::new(|y| Ok(y)),
            source: MedianSource::Exact,
        }
    }

    pub fn affine(slope: f64, intercept: f64) -> Result<Self> {
        if !(slope > 0.0) {
            return Err(Error::Invalid(format!("median slope {slope} must be positive")));
        }
        Ok(MedianFunction {
            eval_fn: Arc::new(move |t| Ok(slope * t + intercept)),
            inverse_fn: Arc::new(move |y| Ok((y - intercept) / slope)),
            source: MedianSource::Exact,
        })
    }

    /// Closed-form median where the model provides one; otherwise solve
    /// G(b; theta) = 1/2 pointwise from the exact estimator CDF.
    pub fn exact_from_model(model: &dyn Model) -> Result<Self> {
        if let Some((slope, intercept)) = model.median_affine() {
            return Self::affine(slope, intercept);
        }
        if model.estimator_cdf(1.0, 1.0).is_none() {
            return Err(Error::EstimatorCdfUnavailable { model: model.key() });
        }
        let m = model.clone_box();
        let eval: EvalFn = Arc::new(move |theta: f64| solve_median_point(m.as_ref(), theta));
        let m2 = model.clone_box();
        let ev2 = eval.clone();
        let inverse: EvalFn = Arc::new(move |y: f64| {
            // b is increasing: bracket around y using the stderr scale
            let scale = m2.stderr(y).abs().max(1e-12 * (1.0 + y.abs()));
            let g = |t: f64| ev2(t).map(|b| b - y).unwrap_or(f64::NAN);
            let dom = m2.param_domain();
            let lo_lim = if dom.lo.is_finite() { dom.lo + 1e-12 * scale } else { y - 1e6 * scale };
            let hi_lim = if dom.hi.is_finite() { dom.hi - 1e-12 * scale } else { y + 1e6 * scale };
            let bracket = crate::roots::expand_bracket(&g, y, scale, -1.0, lo_lim)
                .or_else(|| crate::roots::expand_bracket(&g, y, scale, 1.0, hi_lim));
            match bracket {
                Some((a, b)) => crate::roots::bisect(g, a, b, 1e-11 * scale),
                None => Err(Error::Invalid(format!("median inverse of {y} not bracketed"))),
            }
        });
        Ok(MedianFunction { eval_fn: eval, inverse_fn: inverse, source: MedianSource::Exact })
    }

    /// Monte Carlo median table -> shape-preserving cubic interpolant.
    ///
    /// Raw medians may wiggle by sampling noise: violations up to `margin`
    /// are isotonized away (pool adjacent violators); anything larger is an
    /// error asking for more replicates.
    pub fn from_mc_table(nodes: Vec<f64>, medians: Vec<f64>, margin: f64) -> Result<Self> {
        if nodes.len() != medians.len() || nodes.len() < 2 {
            return Err(Error::Invalid("median table needs >= 2 matching nodes".into()));
        }
        let iso = isotonize(&medians);
        let mut worst = (0usize, 0.0f64);
        for (i, (&raw, &fit)) in medians.iter().zip(&iso).enumerate() {
            let adj = (raw - fit).abs();
            if adj > worst.1 {
                worst = (i, adj);
            }
        }
        if worst.1 > margin {
            return Err(Error::NonMonotoneMedian { node: worst.0, violation: worst.1, margin });
        }
        // restore strict increase after pooling
        let scale = (iso.last().unwrap() - iso.first().unwrap()).abs().max(1e-12);
        let eps = 1e-12 * scale;
        let mut ys = iso;
        for i in 1..ys.len() {
            if ys[i] <= ys[i - 1] {
                ys[i] = ys[i - 1] + eps;
            }
        }
        let cubic = Arc::new(MonotoneCubic::new(nodes, ys)?);
        let c1 = cubic.clone();
        let c2 = cubic.clone();
        Ok(MedianFunction {
            eval_fn: Arc::new(move |t| Ok(c1.eval(t))),
            inverse_fn: Arc::new(move |y| c2.invert(y, 1e-12)),
            source: MedianSource::MonteCarlo,
        })
    }

    /// Estimate the median function of a model on a theta grid by Monte Carlo.
    pub fn from_mc(model: &dyn Model, cfg: &McConfig) -> Result<Self> {
        if cfg.grid.len() < 2 {
            return Err(Error::Invalid("median estimation needs a theta grid".into()));
        }
        let mut medians = Vec::with_capacity(cfg.grid.len());
        let mut ses = Vec::with_capacity(cfg.grid.len());
        for (j, &theta) in cfg.grid.iter().enumerate() {
            let mut sample = par_map(cfg.workers, cfg.replicates, |rep| {
                let mut rng = substream(cfg.seed, j as u64, rep as u64);
                let data = model.sample(theta, &mut rng);
                model.mle(&data).unwrap_or(f64::NAN)
            });
            sample.retain(|x| x.is_finite());
            if sample.is_empty() {
                return Err(Error::Invalid(format!("no valid estimates at node {theta}")));
            }
            sample.sort_unstable_by(f64::total_cmp);
            medians.push(sorted_median(&sample));
            ses.push(median_se(&sample));
        }
        let margin = 3.0 * ses.iter().cloned().fold(0.0f64, f64::max);
        Self::from_mc_table(cfg.grid.clone(), medians, margin)
    }

    pub fn eval(&self, theta: f64) -> Result<f64> {
        (self.eval_fn)(theta)
    }

    pub fn inverse(&self, y: f64) -> Result<f64> {
        (self.inverse_fn)(y)
    }

    pub fn source(&self) -> MedianSource {
        self.source
    }

    /// True when b is numerically the identity at the probe points.
    pub fn is_identity_on(&self, probes: &[f64]) -> bool {
        probes.iter().all(|&t| match self.eval(t) {
            Ok(b) => (b - t).abs() <= 1e-12 * (1.0 + t.abs()),
            Err(_) => false,
        })
    }
}

fn solve_median_point(model: &dyn Model, theta: f64) -> Result<f64> {
    let g = |y: f64| model.estimator_cdf(y, theta).map(|v| v - 0.5).unwrap_or(f64::NAN);
    let scale = model.stderr(theta).abs().max(1e-12 * (1.0 + theta.abs()));
    let bracket = crate::roots::expand_bracket(&g, theta, scale, -1.0, theta - 60.0 * scale)
        .or_else(|| crate::roots::expand_bracket(&g, theta, scale, 1.0, theta + 60.0 * scale));
    match bracket {
        Some((a, b)) => crate::roots::bisect(g, a, b, 1e-12 * scale),
        None => Err(Error::Invalid(format!("median of estimator not bracketed at theta = {theta}"))),
    }
}

/// Asymptotic standard error of a sample median via the IQR density proxy.
fn median_se(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    let q = |p: f64| sorted[((p * n as f64) as usize).min(n - 1)];
    let iqr = (q(0.75) - q(0.25)).abs().max(f64::MIN_POSITIVE);
    1.2533 * (iqr / 1.349) / (n as f64).sqrt()
}

/// Pool-adjacent-violators: closest non-decreasing sequence (equal weights).
fn isotonize(ys: &[f64]) -> Vec<f64> {
    let mut level: Vec<f64> = Vec::with_capacity(ys.len());
    let mut weight: Vec<usize> = Vec::with_capacity(ys.len());
    for &y in ys {
        level.push(y);
        weight.push(1);
        while level.len() > 1 && level[level.len() - 2] > level[level.len() - 1] {
            let (l1, w1) = (level.pop().unwrap(), weight.pop().unwrap());
            let k = level.len() - 1;
            level[k] = (level[k] * weight[k] as f64 + l1 * w1 as f64) / (weight[k] + w1) as f64;
            weight[k] += w1;
        }
    }
    let mut out = Vec::with_capacity(ys.len());
    for (l, w) in level.iter().zip(&weight) {
        for _ in 0..*w {
            out.push(*l);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Corrected curve
// ---------------------------------------------------------------------------

/// Median bias corrected curve: w*, cc*, H*, minimized at b^{-1}(theta_hat).
#[derive(Clone)]
pub struct CorrectedCurve {
    curve: ConfidenceCurve,
    wstar_fn: EvalFn,
    median: MedianFunction,
}

impl CorrectedCurve {
    pub fn wstar(&self, theta: f64) -> Result<f64> {
        (self.wstar_fn)(theta)
    }

    pub fn ccstar(&self, theta: f64) -> Result<f64> {
        self.curve.eval(theta)
    }

    pub fn hstar(&self, theta: f64) -> Result<f64> {
        self.curve.h(theta)
    }

    /// Median-unbiased point estimate b^{-1}(theta_hat).
    pub fn minimizer(&self) -> f64 {
        self.curve.minimizer()
    }

    pub fn curve(&self) -> &ConfidenceCurve {
        &self.curve
    }

    pub fn median(&self) -> &MedianFunction {
        &self.median
    }

    pub fn to_distribution(&self) -> Result<ConfidenceDistribution> {
        self.curve.to_distribution()
    }
}

/// Build cc*(theta) = F*(w(b(theta)); theta) for a model with observed data.
///
/// A median function that is numerically the identity short-circuits to the
/// uncorrected construction (then F* = F and no correction is applied).
pub fn corrected_curve(model: &dyn Model, data: &[f64], median: &MedianFunction, calib: &Calibration) -> Result<CorrectedCurve> {
    let theta_hat = model.mle(data)?;
    let stderr = model.stderr(theta_hat);
    let param_domain = model.param_domain();
    let domain = normal_approx_domain(theta_hat, stderr, param_domain);

    let probes: Vec<f64> = [-1.0, -0.4, 0.0, 0.4, 1.0]
        .iter()
        .map(|k| theta_hat + k * stderr)
        .filter(|t| param_domain.contains(*t))
        .collect();
    let median = if median.is_identity_on(&probes) { MedianFunction::identity() } else { median.clone() };

    let m = model.clone_box();
    let owned: Vec<f64> = data.to_vec();
    let lhat = m.loglik(theta_hat, &owned)?;
    let med = median.clone();
    let wstar_fn: EvalFn = Arc::new(move |theta| {
        let b = med.eval(theta)?;
        Ok((2.0 * (lhat - m.loglik(b, &owned)?)).max(0.0))
    });
    let cal = calib.clone();
    let wf = wstar_fn.clone();
    let eval: EvalFn = Arc::new(move |theta| Ok(cal.cdf(wf(theta)?, theta)?.clamp(0.0, 1.0)));
    let minimizer = median.inverse(theta_hat)?;
    Ok(CorrectedCurve {
        curve: ConfidenceCurve::new(eval, minimizer, domain, param_domain),
        wstar_fn,
        median,
    })
}

// ---------------------------------------------------------------------------
// GPD record-probability pipeline
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct GpdPipelineConfig {
    pub seed: u64,
    pub replicates_per_node: usize,
    pub nodes: usize,
    pub workers: usize,
    /// Profile-deviance range defining the working p-interval.
    pub w_max: f64,
}

impl Default for GpdPipelineConfig {
    fn default() -> Self {
        GpdPipelineConfig {
            seed: 11,
            replicates_per_node: crate::mc::DEFAULT_GPD_NODE_REPLICATES,
            nodes: 41,
            workers: 0,
            w_max: 18.0,
        }
    }
}

/// Everything the GPD demo produces: fitted summary, Bartlett factor,
/// estimated median function and the corrected-curve machinery.
pub struct GpdPipeline {
    pub study: GpdStudy,
    /// 1 + eps = E w(p_hat) under the fitted parameters.
    pub bartlett: f64,
    /// (p, b-hat) table including the (0, 0) anchor.
    pub median_table: Vec<(f64, f64)>,
    pub failed_nodes: Vec<usize>,
    /// Grid nodes that completed.
    pub p_nodes: Vec<f64>,
    pub median: MedianFunction,
    pub corrected: CorrectedCurve,
    pub config: GpdPipelineConfig,
}

impl GpdPipeline {
    /// Bartlett-calibrated profile curve cc(p) = Q(w(p)/(1 + eps)).
    pub fn cc_bartlett(&self, p: f64) -> Result<f64> {
        Ok(chi2_1_cdf(self.study.w_profile(p)? / self.bartlett))
    }
}

/// The plug-in pipeline: estimate b(p | a_hat) on a p-grid by per-node
/// medians of the replicated estimate (anchored at b(0) = 0), interpolate
/// monotonically, form w(b(p)) from the profile likelihood, and calibrate it
/// by the per-node Monte Carlo distribution of w(b(p)) under (a_hat, p).
pub fn gpd_corrected_curve(study: &GpdStudy, cfg: &GpdPipelineConfig) -> Result<GpdPipeline> {
    let a_hat = study.shape();
    let p_hat = study.p_hat();
    let n = study.n();
    let (p_lo, p_hi) = working_p_range(study, cfg.w_max)?;
    let p_nodes = linspace(p_lo, p_hi, cfg.nodes);

    // pass 1: per-node replicate fits (stored: replicate p-hat, max loglik)
    let draw = |node: usize, rep: usize| -> ChaCha8Rng { substream(cfg.seed, node as u64, rep as u64) };
    let mut node_fits: Vec<Vec<Option<(f64, f64)>>> = Vec::with_capacity(cfg.nodes);
    for (j, &p_j) in p_nodes.iter().enumerate() {
        let sigma_j = study.sigma_of(a_hat, p_j)?;
        let fits = par_map(cfg.workers, cfg.replicates_per_node, |rep| {
            let mut rng = draw(j, rep);
            let data = sample_gpd(a_hat, sigma_j, n, &mut rng);
            fit_tau(&data).ok().map(|fit| {
                let p = study.p_of(fit.shape, fit.shape / fit.tau);
                (p, fit.loglik)
            })
        });
        node_fits.push(fits);
    }

    // per-node medians of the replicate estimates
    let mut ok_nodes = Vec::new();
    let mut medians = Vec::new();
    let mut ses = Vec::new();
    let mut failed_nodes = Vec::new();
    let mut ok_index = Vec::new();
    for (j, fits) in node_fits.iter().enumerate() {
        let mut ps: Vec<f64> = fits.iter().flatten().map(|(p, _)| *p).collect();
        let fail_frac = 1.0 - ps.len() as f64 / fits.len() as f64;
        if fail_frac > 0.01 || ps.is_empty() {
            failed_nodes.push(j);
            continue;
        }
        ps.sort_unstable_by(f64::total_cmp);
        ok_nodes.push(p_nodes[j]);
        medians.push(sorted_median(&ps));
        ses.push(median_se(&ps));
        ok_index.push(j);
    }
    let required = (0.9 * cfg.nodes as f64).ceil() as usize;
    if ok_nodes.len() < required {
        return Err(Error::TooManyFailedNodes { ok: ok_nodes.len(), total: cfg.nodes, required });
    }

    // median function anchored at b(0) = 0
    let margin = 3.0 * ses.iter().cloned().fold(0.0f64, f64::max);
    let mut table_nodes = Vec::with_capacity(ok_nodes.len() + 1);
    let mut table_medians = Vec::with_capacity(ok_nodes.len() + 1);
    table_nodes.push(0.0);
    table_medians.push(0.0);
    table_nodes.extend_from_slice(&ok_nodes);
    table_medians.extend_from_slice(&medians);
    let median = MedianFunction::from_mc_table(table_nodes.clone(), table_medians.clone(), margin)?;

    // pass 2: per-node sampling distribution of w(b(p)) under (a_hat, p),
    // regenerating each replicate from its own substream
    let mut cdfs = Vec::with_capacity(ok_nodes.len());
    for (&p_j, &j) in ok_nodes.iter().zip(&ok_index) {
        let sigma_j = study.sigma_of(a_hat, p_j)?;
        let b_j = median.eval(p_j)?;
        let fits = &node_fits[j];
        let samples = par_map(cfg.workers, cfg.replicates_per_node, |rep| match fits[rep] {
            Some((_, lhat_rep)) => {
                let mut rng = draw(j, rep);
                let data = sample_gpd(a_hat, sigma_j, n, &mut rng);
                study.w_profile_for(&data, lhat_rep, b_j)
            }
            None => f64::NAN,
        });
        let valid: Vec<f64> = samples.into_iter().filter(|x| !x.is_nan()).collect();
        cdfs.push(EmpiricalCdf::from_samples(valid)?);
    }
    let grid = Calibration::Grid(Arc::new(GridCalibration::new(ok_nodes.clone(), cdfs)?));

    // Bartlett factor 1 + eps = E w(p_hat) under the fitted parameters
    let bartlett = {
        let samples = par_map(cfg.workers, cfg.replicates_per_node, |rep| {
            let mut rng = substream(cfg.seed, cfg.nodes as u64, rep as u64);
            let data = sample_gpd(a_hat, study.scale(), n, &mut rng);
            match fit_tau(&data) {
                Ok(fit) => study.w_profile_for(&data, fit.loglik, p_hat),
                Err(_) => f64::NAN,
            }
        });
        let valid: Vec<f64> = samples.into_iter().filter(|x| x.is_finite()).collect();
        valid.iter().sum::<f64>() / valid.len() as f64
    };

    // observed corrected curve
    let study_c = study.clone();
    let med_c = median.clone();
    let wstar_fn: EvalFn = Arc::new(move |p| study_c.w_profile(med_c.eval(p)?));
    let wf = wstar_fn.clone();
    let grid_c = grid.clone();
    let eval: EvalFn = Arc::new(move |p| Ok(grid_c.cdf(wf(p)?, p)?.clamp(0.0, 1.0)));
    let minimizer = median.inverse(p_hat)?;
    let domain = Interval::new(ok_nodes[0], *ok_nodes.last().unwrap());
    let p_sup = -(-study.rate()).exp_m1();
    let corrected = CorrectedCurve {
        curve: ConfidenceCurve::new(eval, minimizer, domain, Interval::new(0.0, p_sup)),
        wstar_fn,
        median: median.clone(),
    };

    Ok(GpdPipeline {
        study: study.clone(),
        bartlett,
        median_table: table_nodes.into_iter().zip(table_medians).collect(),
        failed_nodes,
        p_nodes: ok_nodes,
        median,
        corrected,
        config: cfg.clone(),
    })
}

/// Working p-range where the observed profile deviance stays below w_max.
fn working_p_range(study: &GpdStudy, w_max: f64) -> Result<(f64, f64)> {
    let p_hat = study.p_hat();
    let p_sup = -(-study.rate()).exp_m1();
    let w = |p: f64| study.w_profile(p).unwrap_or(f64::INFINITY) - w_max;
    // downward march
    let mut lo = p_hat;
    for _ in 0..80 {
        let cand = 0.5 * lo;
        if cand < 1e-7 {
            lo = cand.max(1e-7);
            break;
        }
        if w(cand) >= 0.0 {
            lo = crate::roots::bisect(&w, cand, p_hat, 1e-6 * p_hat)?;
            break;
        }
        lo = cand;
    }
    // upward march toward the attainable supremum
    let mut hi = p_hat;
    for _ in 0..80 {
        let cand = hi + 0.5 * (p_sup - hi);
        if p_sup - cand < 1e-9 {
            hi = cand;
            break;
        }
        if w(cand) >= 0.0 {
            hi = crate::roots::bisect(&w, p_hat, cand, 1e-6 * p_hat)?;
            break;
        }
        hi = cand;
    }
    if !(lo < p_hat && p_hat < hi) {
        return Err(Error::Invalid(format!("degenerate working p-range [{lo}, {hi}] around {p_hat}")));
    }
    Ok((lo, hi))
}
