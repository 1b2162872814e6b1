//! Scalar-parameter models: log-likelihood, sampler, maximum likelihood
//! estimate and, where available, the exact estimator distribution G(y; theta)
//! and its closed-form median.
//!
//! Models are immutable after construction and safe to share across threads;
//! samplers take an explicit RNG stream and hold no mutable state.

use rand::{Rng, RngCore};

use crate::dist::{chi2_cdf, chi2_quantile, gamma_cdf, gamma_quantile, std_normal_cdf};
use crate::error::{Error, Result};
use crate::expfam::ExpFamModel;
use crate::grid::Interval;
use crate::roots::newton_bracketed;

/// Score tolerance and iteration cap for the MLE solver.
const MLE_SCORE_TOL: f64 = 1e-10;
const MLE_MAX_ITER: usize = 100;

pub trait Model: Send + Sync {
    /// Model suite key, e.g. "normal-var".
    fn key(&self) -> &'static str;

    fn sample_size(&self) -> usize;

    fn param_domain(&self) -> Interval;

    fn loglik(&self, theta: f64, data: &[f64]) -> Result<f64>;

    /// d/dtheta of the log-likelihood.
    fn score(&self, theta: f64, data: &[f64]) -> Result<f64>;

    /// Draw a dataset of `sample_size` observations under `theta`.
    fn sample(&self, theta: f64, rng: &mut dyn RngCore) -> Vec<f64>;

    /// Moment-style starting point for the MLE solver.
    fn mle_init(&self, data: &[f64]) -> f64;

    /// Maximum likelihood estimate: safeguarded Newton on the score with a
    /// bisection fallback, run on the log scale for positive domains.
    fn mle(&self, data: &[f64]) -> Result<f64> {
        solve_mle(self_as_model(self), data)
    }

    /// Exact distribution function of the MLE, where known.
    fn estimator_cdf(&self, y: f64, theta: f64) -> Option<f64>;

    /// Closed-form median function b(theta) as (slope, intercept), if affine.
    fn median_affine(&self) -> Option<(f64, f64)>;

    /// First-order standard error of the MLE under `theta`.
    fn stderr(&self, theta: f64) -> f64;

    /// Associated mean-parametrized exponential family, where one exists.
    fn expfam(&self) -> Option<ExpFamModel> {
        None
    }

    /// Shape s of the gamma pivot V ~ Gamma(s, 1/s) calibrating the ratio
    /// statistic as 2 s h(V/q), where the model admits one.
    fn gamma_pivot_shape(&self) -> Option<f64> {
        None
    }

    /// Downcast hook for the normal transformation family.
    fn as_normal_transform(&self) -> Option<&NormalTransform> {
        None
    }

    /// Owned copy behind the trait object; models are small parameter bundles.
    fn clone_box(&self) -> Box<dyn Model>;
}

fn self_as_model<M: Model + ?Sized>(m: &M) -> &M {
    m
}

/// Safeguarded Newton on the score, log-scaled for positive parameter
/// domains so the iterates cannot leave the parameter space.
fn solve_mle<M: Model + ?Sized>(model: &M, data: &[f64]) -> Result<f64> {
    let domain = model.param_domain();
    let positive = domain.lo == 0.0 && domain.hi == f64::INFINITY;
    let x0 = model.mle_init(data);
    if !domain.contains(x0) {
        return Err(Error::Optimizer {
            what: model.key(),
            msg: format!("initial estimate {x0} outside the domain"),
            best: x0,
            objective: f64::NAN,
        });
    }
    // work on an unconstrained scale internally
    let to_theta = move |u: f64| if positive { u.exp() } else { u };
    let from_theta = move |t: f64| if positive { t.ln() } else { t };
    let su = |u: f64| match model.score(to_theta(u), data) {
        // chain rule: d ell / du = score * dtheta/du
        Ok(s) => {
            if positive {
                s * to_theta(u)
            } else {
                s
            }
        }
        Err(_) => f64::NAN,
    };
    let u0 = from_theta(x0);
    let scale = 1.0 + u0.abs();
    // bracket a sign change of the score around the start
    let s0 = su(u0);
    if !s0.is_finite() {
        return Err(Error::Optimizer {
            what: model.key(),
            msg: "score not finite at the initial estimate".into(),
            best: x0,
            objective: s0,
        });
    }
    if s0.abs() <= MLE_SCORE_TOL {
        return Ok(x0);
    }
    let dir = if s0 > 0.0 { 1.0 } else { -1.0 };
    let limit = if dir > 0.0 {
        if positive || !domain.hi.is_finite() { u0 + 60.0 * scale } else { domain.hi }
    } else if positive || !domain.lo.is_finite() {
        u0 - 60.0 * scale
    } else {
        domain.lo
    };
    let (lo, hi) = match crate::roots::expand_bracket(su, u0, 0.1 * scale, dir, limit) {
        Some(b) => b,
        None => {
            return Err(Error::Optimizer {
                what: model.key(),
                msg: "score does not change sign inside the domain".into(),
                best: x0,
                objective: s0,
            })
        }
    };
    let h = 1e-6 * scale;
    let root = newton_bracketed(su, |u| (su(u + h) - su(u - h)) / (2.0 * h), 0.5 * (lo + hi), lo, hi, MLE_SCORE_TOL, MLE_MAX_ITER)?;
    Ok(to_theta(root))
}

/// Log-likelihood ratio w(theta) = 2(l(theta_hat) - l(theta)) >= 0.
pub fn loglik_ratio<M: Model + ?Sized>(model: &M, theta: f64, data: &[f64]) -> Result<f64> {
    model.param_domain().check(model.key(), theta)?;
    let that = model.mle(data)?;
    let w = 2.0 * (model.loglik(that, data)? - model.loglik(theta, data)?);
    Ok(w.max(0.0))
}

// ---------------------------------------------------------------------------
// N(0, theta): variance parameter
// ---------------------------------------------------------------------------

/// Variance of a centered normal sample; n theta_hat / theta is chi-squared.
#[derive(Debug, Clone, Copy)]
pub struct NormalVariance {
    n: usize,
}

impl NormalVariance {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        NormalVariance { n }
    }
}

impl Model for NormalVariance {
    fn key(&self) -> &'static str {
        "normal-var"
    }

    fn clone_box(&self) -> Box<dyn Model> {
        Box::new(*self)
    }

    fn sample_size(&self) -> usize {
        self.n
    }

    fn param_domain(&self) -> Interval {
        Interval::new(0.0, f64::INFINITY)
    }

    fn loglik(&self, theta: f64, data: &[f64]) -> Result<f64> {
        self.param_domain().check(self.key(), theta)?;
        let t: f64 = data.iter().map(|x| x * x).sum();
        let n = data.len() as f64;
        Ok(-0.5 * n * (2.0 * std::f64::consts::PI * theta).ln() - 0.5 * t / theta)
    }

    fn score(&self, theta: f64, data: &[f64]) -> Result<f64> {
        self.param_domain().check(self.key(), theta)?;
        let t: f64 = data.iter().map(|x| x * x).sum();
        let n = data.len() as f64;
        Ok(-0.5 * n / theta + 0.5 * t / (theta * theta))
    }

    fn sample(&self, theta: f64, rng: &mut dyn RngCore) -> Vec<f64> {
        let sd = theta.sqrt();
        (0..self.n).map(|_| sd * rng.sample::<f64, _>(rand_distr::StandardNormal)).collect()
    }

    fn mle_init(&self, data: &[f64]) -> f64 {
        (data.iter().map(|x| x * x).sum::<f64>() / data.len() as f64).max(f64::MIN_POSITIVE)
    }

    fn estimator_cdf(&self, y: f64, theta: f64) -> Option<f64> {
        Some(chi2_cdf(self.n as f64, self.n as f64 * y / theta))
    }

    fn median_affine(&self) -> Option<(f64, f64)> {
        Some((chi2_quantile(self.n as f64, 0.5) / self.n as f64, 0.0))
    }

    fn stderr(&self, theta: f64) -> f64 {
        (2.0 / self.n as f64).sqrt() * theta
    }

    fn expfam(&self) -> Option<ExpFamModel> {
        Some(ExpFamModel::normal_variance(self.n))
    }

    fn gamma_pivot_shape(&self) -> Option<f64> {
        Some(self.n as f64 / 2.0)
    }
}

// ---------------------------------------------------------------------------
// Exponential rate
// ---------------------------------------------------------------------------

/// Rate of an exponential sample; 2 n theta / theta_hat is chi-squared(2n).
#[derive(Debug, Clone, Copy)]
pub struct ExpRate {
    n: usize,
}

impl ExpRate {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        ExpRate { n }
    }
}

impl Model for ExpRate {
    fn key(&self) -> &'static str {
        "exp-rate"
    }

    fn clone_box(&self) -> Box<dyn Model> {
        Box::new(*self)
    }

    fn sample_size(&self) -> usize {
        self.n
    }

    fn param_domain(&self) -> Interval {
        Interval::new(0.0, f64::INFINITY)
    }

    fn loglik(&self, theta: f64, data: &[f64]) -> Result<f64> {
        self.param_domain().check(self.key(), theta)?;
        let s: f64 = data.iter().sum();
        Ok(data.len() as f64 * theta.ln() - theta * s)
    }

    fn score(&self, theta: f64, data: &[f64]) -> Result<f64> {
        self.param_domain().check(self.key(), theta)?;
        Ok(data.len() as f64 / theta - data.iter().sum::<f64>())
    }

    fn sample(&self, theta: f64, rng: &mut dyn RngCore) -> Vec<f64> {
        (0..self.n)
            .map(|_| {
                let u: f64 = rng.sample(rand_distr::OpenClosed01);
                -u.ln() / theta
            })
            .collect()
    }

    fn mle_init(&self, data: &[f64]) -> f64 {
        data.len() as f64 / data.iter().sum::<f64>()
    }

    fn estimator_cdf(&self, y: f64, theta: f64) -> Option<f64> {
        if y <= 0.0 {
            return Some(0.0);
        }
        let m = 2.0 * self.n as f64;
        Some(1.0 - chi2_cdf(m, m * theta / y))
    }

    fn median_affine(&self) -> Option<(f64, f64)> {
        let m = 2.0 * self.n as f64;
        Some((m / chi2_quantile(m, 0.5), 0.0))
    }

    fn stderr(&self, theta: f64) -> f64 {
        theta / (self.n as f64).sqrt()
    }

    fn gamma_pivot_shape(&self) -> Option<f64> {
        Some(self.n as f64)
    }
}

impl ExpRate {
    /// The family in its mean-value parametrization (theta -> 1/theta).
    pub fn mean_expfam(&self) -> ExpFamModel {
        ExpFamModel::exponential_mean(self.n)
    }
}

// ---------------------------------------------------------------------------
// Gamma with known shape, mean parametrization ("expfam-custom")
// ---------------------------------------------------------------------------

/// Mean of a Gamma sample with known shape; generalizes the exponential mean.
#[derive(Debug, Clone, Copy)]
pub struct GammaMean {
    shape: f64,
    n: usize,
}

impl GammaMean {
    pub fn new(shape: f64, n: usize) -> Self {
        assert!(shape > 0.0 && n >= 1);
        GammaMean { shape, n }
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }
}

impl Model for GammaMean {
    fn key(&self) -> &'static str {
        "expfam-custom"
    }

    fn clone_box(&self) -> Box<dyn Model> {
        Box::new(*self)
    }

    fn sample_size(&self) -> usize {
        self.n
    }

    fn param_domain(&self) -> Interval {
        Interval::new(0.0, f64::INFINITY)
    }

    fn loglik(&self, theta: f64, data: &[f64]) -> Result<f64> {
        self.param_domain().check(self.key(), theta)?;
        let k = self.shape;
        let n = data.len() as f64;
        let sum: f64 = data.iter().sum();
        let sum_ln: f64 = data.iter().map(|x| x.ln()).sum();
        Ok((k - 1.0) * sum_ln - k * sum / theta - n * k * (theta / k).ln() - n * statrs::function::gamma::ln_gamma(k))
    }

    fn score(&self, theta: f64, data: &[f64]) -> Result<f64> {
        self.param_domain().check(self.key(), theta)?;
        let k = self.shape;
        let n = data.len() as f64;
        let sum: f64 = data.iter().sum();
        Ok(k * sum / (theta * theta) - n * k / theta)
    }

    fn sample(&self, theta: f64, rng: &mut dyn RngCore) -> Vec<f64> {
        let g = rand_distr::Gamma::new(self.shape, theta / self.shape).expect("valid gamma");
        (0..self.n).map(|_| rng.sample(g)).collect()
    }

    fn mle_init(&self, data: &[f64]) -> f64 {
        data.iter().sum::<f64>() / data.len() as f64
    }

    fn estimator_cdf(&self, y: f64, theta: f64) -> Option<f64> {
        let s = self.n as f64 * self.shape;
        Some(gamma_cdf(s, theta / s, y))
    }

    fn median_affine(&self) -> Option<(f64, f64)> {
        let s = self.n as f64 * self.shape;
        Some((gamma_quantile(s, 1.0 / s, 0.5), 0.0))
    }

    fn stderr(&self, theta: f64) -> f64 {
        theta / (self.n as f64 * self.shape).sqrt()
    }

    fn expfam(&self) -> Option<ExpFamModel> {
        Some(ExpFamModel::gamma_mean(self.shape, self.n))
    }

    fn gamma_pivot_shape(&self) -> Option<f64> {
        Some(self.n as f64 * self.shape)
    }
}

// ---------------------------------------------------------------------------
// Normal transformation family
// ---------------------------------------------------------------------------

/// Estimator family phi_hat = phi + (1 + a phi)(Z - z0) with acceleration `a`
/// and bias constant `z0`. A single draw carries the whole sample's
/// information; the maximizer of the likelihood is an affine shift of
/// phi_hat, with constant `c` solving the stationarity condition.
#[derive(Debug, Clone, Copy)]
pub struct NormalTransform {
    a: f64,
    z0: f64,
    c: f64,
    z0c: f64,
}

impl NormalTransform {
    pub fn new(a: f64, z0: f64) -> Self {
        assert!(a.abs() < 1.0, "|a| must be < 1");
        let c = Self::solve_c(a, z0);
        let z0c = if a == 0.0 { 0.0 } else { z0 + c / (1.0 - a * c) };
        NormalTransform { a, z0, c, z0c }
    }

    /// Root of the stationarity quadratic, written to avoid cancellation:
    /// c = (R + D - 2) / (a (R + D)) with D = 1 - a z0, R = sqrt(D^2 + 4 a^2).
    fn solve_c(a: f64, z0: f64) -> f64 {
        if a == 0.0 {
            return -z0;
        }
        let d = 1.0 - a * z0;
        let r = (d * d + 4.0 * a * a).sqrt();
        (r + d - 2.0) / (a * (r + d))
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn z0(&self) -> f64 {
        self.z0
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// Bias constant of the maximizer's own normal-transformation form.
    pub fn z0c(&self) -> f64 {
        self.z0c
    }

    /// Effective acceleration of the maximizer: A = a (1 - a c).
    pub fn effective_accel(&self) -> f64 {
        self.a * (1.0 - self.a * self.c)
    }

    fn scale_at(&self, phi: f64) -> f64 {
        (1.0 - self.a * self.c) * (1.0 + self.a * phi)
    }
}

impl Model for NormalTransform {
    fn key(&self) -> &'static str {
        "normal-transform"
    }

    fn clone_box(&self) -> Box<dyn Model> {
        Box::new(*self)
    }

    fn sample_size(&self) -> usize {
        1
    }

    fn param_domain(&self) -> Interval {
        if self.a > 0.0 {
            Interval::new(-1.0 / self.a, f64::INFINITY)
        } else if self.a < 0.0 {
            Interval::new(f64::NEG_INFINITY, -1.0 / self.a)
        } else {
            Interval::new(f64::NEG_INFINITY, f64::INFINITY)
        }
    }

    fn loglik(&self, phi: f64, data: &[f64]) -> Result<f64> {
        self.param_domain().check(self.key(), phi)?;
        let phihat = data[0];
        let t = (phihat - phi) / (1.0 + self.a * phi) + self.z0;
        Ok(-0.5 * t * t - (1.0 + self.a * phi).ln())
    }

    fn score(&self, phi: f64, data: &[f64]) -> Result<f64> {
        self.param_domain().check(self.key(), phi)?;
        let phihat = data[0];
        let one_ap = 1.0 + self.a * phi;
        let t = (phihat - phi) / one_ap + self.z0;
        Ok(t * (1.0 + self.a * phihat) / (one_ap * one_ap) - self.a / one_ap)
    }

    fn sample(&self, phi: f64, rng: &mut dyn RngCore) -> Vec<f64> {
        let z: f64 = rng.sample(rand_distr::StandardNormal);
        vec![phi + (1.0 + self.a * phi) * (z - self.z0)]
    }

    fn mle_init(&self, data: &[f64]) -> f64 {
        data[0]
    }

    fn mle(&self, data: &[f64]) -> Result<f64> {
        // stationary point in closed form
        let phihat = data[0];
        let m = phihat - self.c * (1.0 + self.a * phihat);
        self.param_domain().check(self.key(), m)?;
        Ok(m)
    }

    fn estimator_cdf(&self, y: f64, phi: f64) -> Option<f64> {
        Some(std_normal_cdf((y - phi) / self.scale_at(phi) + self.z0c))
    }

    fn median_affine(&self) -> Option<(f64, f64)> {
        let d = (1.0 - self.a * self.c) * self.z0c;
        Some((1.0 - self.a * d, -d))
    }

    fn stderr(&self, phi: f64) -> f64 {
        self.scale_at(phi)
    }

    fn as_normal_transform(&self) -> Option<&NormalTransform> {
        Some(self)
    }
}

/// Build a model from its suite key.
pub fn model_by_key(key: &str, n: usize, params: &ModelParams) -> Result<Box<dyn Model>> {
    match key {
        "normal-var" => Ok(Box::new(NormalVariance::new(n))),
        "exp-rate" => Ok(Box::new(ExpRate::new(n))),
        "normal-transform" => Ok(Box::new(NormalTransform::new(params.a, params.z0))),
        "expfam-custom" => Ok(Box::new(GammaMean::new(params.shape, n))),
        other => Err(Error::Invalid(format!("unknown model key `{other}`"))),
    }
}

/// Extra constants consumed by some models.
#[derive(Debug, Clone, Copy)]
pub struct ModelParams {
    pub a: f64,
    pub z0: f64,
    pub shape: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams { a: 0.0, z0: 0.0, shape: 1.0 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn loglik_ratio_zero_at_mle() {
        let m = NormalVariance::new(10);
        let data = m.sample(4.0, &mut rng(1));
        let that = m.mle(&data).unwrap();
        let w = loglik_ratio(&m, that, &data).unwrap();
        assert!(w.abs() < 1e-9, "w({that}) = {w}");
    }

    #[test]
    fn normal_variance_w_closed_form() {
        // data rigged so theta_hat = 4 with n = 10
        let m = NormalVariance::new(10);
        let data = vec![2.0; 10]; // sum of squares 40 => mle 4
        assert!((m.mle(&data).unwrap() - 4.0).abs() < 1e-10);
        let w = loglik_ratio(&m, 2.0, &data).unwrap();
        assert!((w - 3.068_528_194_400_544_6).abs() < 1e-9, "w = {w}");
    }

    #[test]
    fn exp_rate_w_closed_form() {
        // theta_hat = 1/mean; data rigged so theta_hat = 2 and probe theta = 4
        let m = ExpRate::new(5);
        let data = vec![0.5; 5];
        assert!((m.mle(&data).unwrap() - 2.0).abs() < 1e-10);
        let w = loglik_ratio(&m, 4.0, &data).unwrap();
        assert!((w - 3.068_528_194_400_544_6).abs() < 1e-9, "w = {w}");
    }

    #[test]
    fn mle_maximizes_loglik() {
        let models: Vec<Box<dyn Model>> = vec![
            Box::new(NormalVariance::new(12)),
            Box::new(ExpRate::new(9)),
            Box::new(GammaMean::new(2.5, 7)),
            Box::new(NormalTransform::new(0.25, 0.1)),
        ];
        for m in &models {
            let data = m.sample(1.3, &mut rng(7));
            let that = m.mle(&data).unwrap();
            let lhat = m.loglik(that, &data).unwrap();
            for k in 1..40 {
                let theta = that * (0.2 + 0.08 * k as f64) + if m.param_domain().lo.is_finite() { 0.0 } else { -1.0 };
                if !m.param_domain().contains(theta) {
                    continue;
                }
                assert!(m.loglik(theta, &data).unwrap() <= lhat + 1e-8, "{}: l({theta}) > l({that})", m.key());
            }
        }
    }

    #[test]
    fn estimator_cdf_monotone_contracts() {
        let m = NormalVariance::new(10);
        // non-decreasing in y, non-increasing in theta
        let mut prev = -1.0;
        for i in 1..60 {
            let y = 0.2 * i as f64;
            let g = m.estimator_cdf(y, 4.0).unwrap();
            assert!(g >= prev);
            prev = g;
        }
        let mut prev = 2.0;
        for i in 1..60 {
            let th = 0.3 * i as f64;
            let g = m.estimator_cdf(4.0, th).unwrap();
            assert!(g <= prev + 1e-15);
            prev = g;
        }
        // y = theta: P(chi2_n <= n)
        let g = m.estimator_cdf(4.0, 4.0).unwrap();
        assert!((g - chi2_cdf(10.0, 10.0)).abs() < 1e-14);
    }

    #[test]
    fn exp_rate_estimator_cdf_median() {
        // n = 1: y with 2 theta / y at the chi2_2 median gives G = 1/2
        let m = ExpRate::new(1);
        let theta = 3.0;
        let y = 2.0 * theta / chi2_quantile(2.0, 0.5);
        assert!((m.estimator_cdf(y, theta).unwrap() - 0.5).abs() < 1e-10);
    }

    #[test]
    fn normal_transform_constants() {
        // z0 = a makes phi_hat itself the maximizer: c = 0 exactly
        for &a in &[0.05, 0.1, 0.2, 0.3] {
            let m = NormalTransform::new(a, a);
            assert!(m.c().abs() <= 10.0 * a.powi(3), "a={a}: c={}", m.c());
            assert!((m.z0c() - a).abs() < 1e-12);
        }
        // c tracks a - z0 with a cubic-order defect
        for &(a, z0) in &[(0.2, 0.1), (0.3, 0.25), (0.1, -0.05), (-0.2, -0.1)] {
            let m = NormalTransform::new(a, z0);
            let mag = a.abs().max(z0.abs());
            assert!((m.c() - (a - z0)).abs() <= 10.0 * mag.powi(3), "a={a} z0={z0} c={}", m.c());
        }
    }

    #[test]
    fn normal_transform_mle_is_stationary() {
        let m = NormalTransform::new(0.3, 0.15);
        let data = vec![8.5];
        let mhat = m.mle(&data).unwrap();
        assert!(m.score(mhat, &data).unwrap().abs() < 1e-12);
        // generic Newton path agrees with the closed form
        let newton = solve_mle(&m, &data).unwrap();
        assert!((newton - mhat).abs() < 1e-8);
    }

    #[test]
    fn normal_transform_median_is_half_point() {
        let m = NormalTransform::new(0.3, 0.3);
        let (s, i) = m.median_affine().unwrap();
        let phi = 10.0;
        let b = s * phi + i;
        assert!((m.estimator_cdf(b, phi).unwrap() - 0.5).abs() < 1e-12);
        // b(phi) = phi - a(1 + a phi) when z0 = a
        assert!((b - (phi - 0.3 * (1.0 + 0.3 * phi))).abs() < 1e-10);
    }

    #[test]
    fn gamma_mean_reduces_to_exponential() {
        let g = GammaMean::new(1.0, 6);
        let e = ExpRate::new(6);
        let data = vec![0.4, 1.7, 0.9, 2.2, 0.6, 1.1];
        let mu_hat = g.mle(&data).unwrap();
        let rate_hat = e.mle(&data).unwrap();
        assert!((mu_hat * rate_hat - 1.0).abs() < 1e-8);
    }

    #[test]
    fn w_invariant_under_reciprocal_reparametrization() {
        // monotone g(theta) = 1/theta maps the rate to the mean
        let e = ExpRate::new(8);
        let g = GammaMean::new(1.0, 8);
        let data = vec![0.9, 0.2, 1.4, 0.7, 2.8, 0.5, 1.0, 0.3];
        for &rate in &[0.5, 1.0, 2.5] {
            let w_rate = loglik_ratio(&e, rate, &data).unwrap();
            let w_mean = loglik_ratio(&g, 1.0 / rate, &data).unwrap();
            assert!((w_rate - w_mean).abs() < 1e-9, "rate {rate}: {w_rate} vs {w_mean}");
        }
    }

    #[test]
    fn domain_error_reported() {
        let m = NormalVariance::new(5);
        let err = loglik_ratio(&m, -1.0, &[1.0, 2.0, 0.5, 0.7, 1.1]).unwrap_err();
        assert!(matches!(err, Error::Domain { .. }));
    }
}
