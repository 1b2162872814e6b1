//! Generalized Pareto exceedance model with the record-probability
//! reparametrization used by the nuisance-parameter demo.
//!
//! Density (1/sigma)(1 - a x / sigma)^{1/a - 1} on 0 <= x <= sigma/a with
//! a, sigma > 0. The interest parameter is the chance of seeing at least one
//! exceedance past the record margin among Pois(lambda) future attempts,
//!
//!   p(a, sigma) = 1 - exp{ -lambda (1 - a w_rec / sigma)^{1/a} },
//!
//! (1 - a w_rec/sigma)^{1/a} being the GPD survival probability at w_rec.
//!
//! The unconstrained fit reduces to a 1-D search over tau = a / sigma: for
//! fixed tau the inner maximum over the shape is available in closed form.
//! The constrained profile at p = p0 eliminates sigma through the constraint
//! and optimizes over the shape alone (grid bracket + golden section).

use rand::{Rng, RngCore};

use crate::error::{Error, Result};

/// Floor guard for the tau search range.
const TAU_EDGE: f64 = 1e-9;

/// GPD exceedance study: data plus the fixed rate and record margin.
#[derive(Debug, Clone)]
pub struct GpdStudy {
    data: Vec<f64>,
    rate: f64,
    record_margin: f64,
    shape: f64,
    scale: f64,
    p_hat: f64,
    loglik_max: f64,
}

/// Sufficient pieces of an inner fit at fixed tau = a / sigma.
#[derive(Debug, Clone, Copy)]
pub struct TauFit {
    pub tau: f64,
    pub shape: f64,
    pub loglik: f64,
}

/// S(tau) = sum log(1 - tau x_i); requires tau x_i < 1 for every point.
fn log_margin_sum(data: &[f64], tau: f64) -> Option<f64> {
    let mut s = 0.0;
    for &x in data {
        let t = -tau * x;
        if t <= -1.0 {
            return None;
        }
        s += t.ln_1p();
    }
    Some(s)
}

/// Closed-form inner maximum over the shape at fixed tau.
pub fn fit_at_tau(data: &[f64], tau: f64) -> Option<TauFit> {
    if tau <= 0.0 {
        return None;
    }
    let n = data.len() as f64;
    let s = log_margin_sum(data, tau)?;
    if s >= 0.0 {
        return None;
    }
    let a = -s / n;
    let loglik = -n * a.ln() + n * tau.ln() - n - s;
    Some(TauFit { tau, shape: a, loglik })
}

/// d loglik / d tau at the inner maximum; used for the Newton polish.
fn tau_score(data: &[f64], tau: f64) -> Option<f64> {
    let n = data.len() as f64;
    let s = log_margin_sum(data, tau)?;
    if s >= 0.0 {
        return None;
    }
    let a = -s / n;
    let sp: f64 = data.iter().map(|&x| -x / (1.0 - tau * x)).sum();
    Some(sp * (1.0 / a - 1.0) + n / tau)
}

/// Unconstrained maximum likelihood over tau: bracket the best interior grid
/// point, golden-section, then polish on the score.
pub fn fit_tau(data: &[f64]) -> Result<TauFit> {
    let x_max = data.iter().cloned().fold(f64::MIN, f64::max);
    if !(x_max > 0.0) || data.iter().any(|x| *x < 0.0 || !x.is_finite()) {
        return Err(Error::Invalid("exceedances must be finite, non-negative, not all zero".into()));
    }
    let tau_hi = (1.0 - 1e-7) / x_max;
    let tau_lo = TAU_EDGE / x_max;
    let grid_n = 40;
    let step = (tau_hi - tau_lo) / (grid_n - 1) as f64;
    let lls: Vec<f64> = (0..grid_n)
        .map(|i| fit_at_tau(data, tau_lo + step * i as f64).map(|f| f.loglik).unwrap_or(f64::NEG_INFINITY))
        .collect();
    let mut best: Option<usize> = None;
    for i in 0..grid_n - 1 {
        // interior local maximum; the wall-adjacent cell does not qualify
        let left_ok = i == 0 || lls[i] >= lls[i - 1];
        let right_ok = lls[i] >= lls[i + 1];
        if left_ok && right_ok && lls[i].is_finite() && best.map(|b| lls[i] > lls[b]).unwrap_or(true) {
            best = Some(i);
        }
    }
    let i = best.ok_or_else(|| Error::Optimizer {
        what: "gpd-mle",
        msg: "no interior likelihood maximum over tau".into(),
        best: tau_hi,
        objective: *lls.last().unwrap(),
    })?;
    let lo = if i == 0 { tau_lo } else { tau_lo + step * (i - 1) as f64 };
    let hi = tau_lo + step * (i + 1).min(grid_n - 1) as f64;
    let neg = |t: f64| -fit_at_tau(data, t).map(|f| f.loglik).unwrap_or(f64::NEG_INFINITY);
    let mut tau = crate::roots::golden_min(neg, lo, hi, 1e-8 * (hi - lo));
    // Newton polish on the score with a secant slope
    for _ in 0..6 {
        let h = 1e-7 * tau;
        match (tau_score(data, tau), tau_score(data, tau + h), tau_score(data, tau - h)) {
            (Some(g), Some(gp), Some(gm)) => {
                let d2 = (gp - gm) / (2.0 * h);
                if d2 >= 0.0 || !d2.is_finite() {
                    break;
                }
                let next = tau - g / d2;
                if !(next > lo && next < hi) || (next - tau).abs() < 1e-14 * tau {
                    break;
                }
                tau = next;
            }
            _ => break,
        }
    }
    fit_at_tau(data, tau).ok_or_else(|| Error::Optimizer {
        what: "gpd-mle",
        msg: "polished tau left the feasible range".into(),
        best: tau,
        objective: f64::NAN,
    })
}

impl GpdStudy {
    /// Fit the study to observed exceedances.
    pub fn new(data: Vec<f64>, rate: f64, record_margin: f64) -> Result<Self> {
        if rate <= 0.0 || record_margin <= 0.0 {
            return Err(Error::Invalid("rate and record margin must be positive".into()));
        }
        let fit = fit_tau(&data)?;
        let shape = fit.shape;
        let scale = shape / fit.tau;
        let mut study = GpdStudy { data, rate, record_margin, shape, scale, p_hat: 0.0, loglik_max: fit.loglik };
        study.p_hat = study.p_of(shape, scale);
        Ok(study)
    }

    /// Simulate a synthetic study from known (a, sigma) and fit it.
    pub fn synthetic(a: f64, sigma: f64, n: usize, rate: f64, record_margin: f64, rng: &mut dyn RngCore) -> Result<Self> {
        let data = sample_gpd(a, sigma, n, rng);
        Self::new(data, rate, record_margin)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn n(&self) -> usize {
        self.data.len()
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn record_margin(&self) -> f64 {
        self.record_margin
    }

    /// Fitted shape a-hat.
    pub fn shape(&self) -> f64 {
        self.shape
    }

    /// Fitted scale sigma-hat.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn p_hat(&self) -> f64 {
        self.p_hat
    }

    pub fn loglik_max(&self) -> f64 {
        self.loglik_max
    }

    /// Record probability p(a, sigma) in [0, 1).
    pub fn p_of(&self, a: f64, sigma: f64) -> f64 {
        let t = 1.0 - a * self.record_margin / sigma;
        if t <= 0.0 {
            return 0.0; // record outside the fitted support
        }
        let survival = t.powf(1.0 / a);
        -(-self.rate * survival).exp_m1()
    }

    /// -log(1 - p0) / lambda, the survival probability the constraint pins.
    fn survival_of_p(&self, p0: f64) -> Result<f64> {
        let p_max = -(-self.rate).exp_m1();
        if !(p0 > 0.0 && p0 < p_max) {
            return Err(Error::Domain { what: "gpd record probability", value: p0, lo: 0.0, hi: p_max });
        }
        Ok(-(-p0).ln_1p() / self.rate)
    }

    /// Scale satisfying the constraint p(a, sigma) = p0 at given shape.
    pub fn sigma_of(&self, a: f64, p0: f64) -> Result<f64> {
        let q = self.survival_of_p(p0)?;
        Ok(a * self.record_margin / (1.0 - q.powf(a)))
    }

    pub fn loglik(&self, a: f64, sigma: f64) -> Result<f64> {
        gpd_loglik(&self.data, a, sigma)
    }

    /// Profile log-likelihood of the record probability,
    /// max{l(a, sigma) : p(a, sigma) = p0}, optimized over the shape alone.
    pub fn profile_loglik(&self, p0: f64) -> Result<f64> {
        self.profile_loglik_for(&self.data, p0)
    }

    /// Same profile, evaluated on replicate data.
    pub fn profile_loglik_for(&self, data: &[f64], p0: f64) -> Result<f64> {
        let q = self.survival_of_p(p0)?;
        let x_max = data.iter().cloned().fold(f64::MIN, f64::max);
        // support needs sigma(a)/a = w/(1 - q^a) >= x_max
        let a_cap = if x_max <= self.record_margin {
            f64::INFINITY
        } else {
            (1.0 - self.record_margin / x_max).ln() / q.ln()
        };
        let ll_at = |a: f64| -> f64 {
            let sigma = a * self.record_margin / (1.0 - q.powf(a));
            constrained_loglik(data, a, sigma)
        };
        let a_hi = if a_cap.is_finite() { a_cap * (1.0 - 1e-9) } else { 4.0 };
        let a_lo = 1e-4;
        if a_hi <= a_lo {
            return Err(Error::Optimizer {
                what: "gpd-profile",
                msg: format!("constraint p0 = {p0} infeasible for the data (shape cap {a_cap:.3e})"),
                best: a_cap,
                objective: f64::NEG_INFINITY,
            });
        }
        // geometric bracket grid, then golden section
        let grid_n = 24;
        let ratio = (a_hi / a_lo).powf(1.0 / (grid_n - 1) as f64);
        let mut best = (f64::NEG_INFINITY, a_lo);
        let mut best_i = 0usize;
        let mut a = a_lo;
        let mut values = Vec::with_capacity(grid_n);
        for i in 0..grid_n {
            let ll = ll_at(a);
            values.push((a, ll));
            if ll > best.0 {
                best = (ll, a);
                best_i = i;
            }
            a *= ratio;
        }
        if !best.0.is_finite() {
            return Err(Error::Optimizer {
                what: "gpd-profile",
                msg: format!("profile likelihood not finite anywhere on the shape grid at p0 = {p0}"),
                best: best.1,
                objective: best.0,
            });
        }
        let lo = values[best_i.saturating_sub(1)].0;
        let hi = values[(best_i + 1).min(grid_n - 1)].0;
        let a_star = crate::roots::golden_min(|a| -ll_at(a), lo, hi, 1e-10 * (hi - lo));
        Ok(ll_at(a_star).max(best.0))
    }

    /// Profile log-likelihood ratio w(p0) = 2(l_P(p_hat) - l_P(p0)) >= 0.
    pub fn w_profile(&self, p0: f64) -> Result<f64> {
        let lp = self.profile_loglik(p0)?;
        let w = 2.0 * (self.loglik_max - lp);
        if w < -1e-6 {
            return Err(Error::Optimizer {
                what: "gpd-profile",
                msg: format!("profile exceeds the fitted maximum at p0 = {p0}"),
                best: p0,
                objective: w,
            });
        }
        Ok(w.max(0.0))
    }

    /// w(p0) on replicate data, with the replicate's own fitted maximum.
    /// Infeasible constraints map to +infinity (the data cannot support p0).
    pub fn w_profile_for(&self, data: &[f64], loglik_max: f64, p0: f64) -> f64 {
        match self.profile_loglik_for(data, p0) {
            Ok(lp) if lp.is_finite() => (2.0 * (loglik_max - lp)).max(0.0),
            _ => f64::INFINITY,
        }
    }
}

/// Log-likelihood with support violations mapped to -inf (for searches).
fn constrained_loglik(data: &[f64], a: f64, sigma: f64) -> f64 {
    if !(a > 0.0) || !(sigma > 0.0) || !sigma.is_finite() {
        return f64::NEG_INFINITY;
    }
    let tau = a / sigma;
    let n = data.len() as f64;
    match log_margin_sum(data, tau) {
        Some(s) => -n * sigma.ln() + (1.0 / a - 1.0) * s,
        None => f64::NEG_INFINITY,
    }
}

/// Full GPD log-likelihood; support violations yield a domain error.
pub fn gpd_loglik(data: &[f64], a: f64, sigma: f64) -> Result<f64> {
    if a <= 0.0 || sigma <= 0.0 {
        return Err(Error::Domain { what: "gpd parameters", value: if a <= 0.0 { a } else { sigma }, lo: 0.0, hi: f64::INFINITY });
    }
    let ll = constrained_loglik(data, a, sigma);
    if !ll.is_finite() {
        return Err(Error::Domain { what: "gpd support", value: sigma / a, lo: 0.0, hi: f64::INFINITY });
    }
    Ok(ll)
}

/// Inverse-CDF sampler: x = (sigma/a)(1 - u^a), u uniform on (0, 1].
pub fn sample_gpd(a: f64, sigma: f64, n: usize, rng: &mut dyn RngCore) -> Vec<f64> {
    let cap = sigma / a;
    (0..n)
        .map(|_| {
            let u: f64 = rng.sample(rand_distr::OpenClosed01);
            cap * (1.0 - u.powf(a))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};

    const LAMBDA: f64 = 24.375; // 195/8
    const MARGIN: f64 = 0.285;

    fn synthetic_study(seed: u64) -> GpdStudy {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        GpdStudy::synthetic(0.18, 0.075, 195, LAMBDA, MARGIN, &mut rng).unwrap()
    }

    #[test]
    fn sampler_respects_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs = sample_gpd(0.18, 0.075, 2000, &mut rng);
        let cap = 0.075 / 0.18;
        assert!(xs.iter().all(|&x| (0.0..=cap).contains(&x)));
    }

    #[test]
    fn p_of_matches_survival_composition() {
        let study = synthetic_study(0);
        let (a, sigma) = (0.1821, 0.0745);
        let survival = (1.0_f64 - a * MARGIN / sigma).powf(1.0 / a);
        let want = 1.0 - (-LAMBDA * survival).exp();
        assert!((study.p_of(a, sigma) - want).abs() < 1e-14);
        // at the reference estimates the record probability is a few percent
        assert!(want > 0.01 && want < 0.10, "p = {want}");
        // record past the fitted support is impossible
        assert_eq!(study.p_of(0.5, 0.1), 0.0);
    }

    #[test]
    fn sigma_of_inverts_p_of() {
        let study = synthetic_study(0);
        for &p0 in &[0.005, 0.05, 0.3] {
            for &a in &[0.1, 0.2, 0.4] {
                let sigma = study.sigma_of(a, p0).unwrap();
                assert!((study.p_of(a, sigma) - p0).abs() < 1e-10, "a {a} p0 {p0}");
            }
        }
    }

    #[test]
    fn profile_at_mle_equals_unconstrained_max() {
        let study = synthetic_study(0);
        let lp = study.profile_loglik(study.p_hat()).unwrap();
        assert!((lp - study.loglik_max()).abs() < 1e-6, "{} vs {}", lp, study.loglik_max());
        assert!(study.w_profile(study.p_hat()).unwrap() < 1e-6);
    }

    #[test]
    fn w_profile_nonnegative_and_zero_only_at_p_hat() {
        let study = synthetic_study(0);
        let p_hat = study.p_hat();
        for k in 1..=50 {
            let p0 = 0.002 + 0.006 * k as f64;
            let w = study.w_profile(p0).unwrap();
            assert!(w >= 0.0);
            if (p0 - p_hat).abs() > 0.01 {
                assert!(w > 1e-4, "w({p0}) = {w} suspiciously flat (p_hat {p_hat})");
            }
        }
    }

    #[test]
    fn mle_matches_brute_force_grid() {
        let study = synthetic_study(0);
        // 2-D grid with zoom rounds
        let (mut a_lo, mut a_hi) = (0.02, 0.9);
        let (mut s_lo, mut s_hi) = (0.02, 0.2);
        let x_max = study.data().iter().cloned().fold(f64::MIN, f64::max);
        let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
        for _round in 0..4 {
            best = (f64::NEG_INFINITY, 0.0, 0.0);
            for i in 0..=80 {
                let a = a_lo + (a_hi - a_lo) * i as f64 / 80.0;
                for j in 0..=80 {
                    let s = s_lo + (s_hi - s_lo) * j as f64 / 80.0;
                    if s / a <= x_max || a <= 0.0 || s <= 0.0 {
                        continue;
                    }
                    if let Ok(ll) = study.loglik(a, s) {
                        if ll > best.0 {
                            best = (ll, a, s);
                        }
                    }
                }
            }
            let da = (a_hi - a_lo) / 80.0;
            let ds = (s_hi - s_lo) / 80.0;
            a_lo = (best.1 - 2.0 * da).max(1e-4);
            a_hi = best.1 + 2.0 * da;
            s_lo = (best.2 - 2.0 * ds).max(1e-4);
            s_hi = best.2 + 2.0 * ds;
        }
        assert!((best.1 - study.shape()).abs() < 1e-4, "shape {} vs {}", best.1, study.shape());
        assert!((best.2 - study.scale()).abs() < 1e-4, "scale {} vs {}", best.2, study.scale());
    }

    #[test]
    fn profile_matches_constraint_manifold_search() {
        let study = synthetic_study(0);
        for &p0 in &[0.01, 0.05, 0.12] {
            let lp = study.profile_loglik(p0).unwrap();
            // grid over the shape with sigma pinned by the constraint, zoomed
            let (mut a_lo, mut a_hi) = (0.01, 1.2);
            let mut best = f64::NEG_INFINITY;
            let mut best_a = 0.0;
            for _ in 0..5 {
                for i in 0..=200 {
                    let a = a_lo + (a_hi - a_lo) * i as f64 / 200.0;
                    if a <= 0.0 {
                        continue;
                    }
                    let sigma = match study.sigma_of(a, p0) {
                        Ok(s) => s,
                        Err(_) => continue,
                    };
                    if let Ok(ll) = study.loglik(a, sigma) {
                        if ll > best {
                            best = ll;
                            best_a = a;
                        }
                    }
                }
                let da = (a_hi - a_lo) / 200.0;
                a_lo = (best_a - 2.0 * da).max(1e-5);
                a_hi = best_a + 2.0 * da;
            }
            assert!((best - lp).abs() < 1e-4, "p0 {p0}: manifold {best} vs profile {lp}");
        }
    }

    #[test]
    fn p_interest_parameter_in_unit_interval() {
        let study = synthetic_study(0);
        assert!(study.p_hat() > 0.0 && study.p_hat() < 1.0);
    }

    #[test]
    fn infeasible_constraint_errors_with_best_iterate() {
        // data with an exceedance beyond the record margin caps the shape
        let study = synthetic_study(0);
        let mut data = study.data().to_vec();
        data[0] = 0.40; // force x_max > margin
        match study.profile_loglik_for(&data, 1e-9) {
            Ok(ll) => assert!(ll.is_finite()),
            Err(Error::Optimizer { best, .. }) => assert!(best >= 0.0),
            Err(e) => panic!("unexpected error {e}"),
        }
    }
}
