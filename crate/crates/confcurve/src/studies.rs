//! Simulation studies behind the verification suite and the `study`
//! subcommand: tail-symmetry rate checks, the directed-likelihood
//! equivalence check, normality comparisons, and uniformity diagnostics.

use crate::calib::exact_calibration_for;
use crate::confidence::h_from_cc;
use crate::error::{Error, Result};
use crate::mbc::MedianFunction;
use crate::mc::{par_map, sorted_median, substream, EmpiricalCdf, McConfig, TailStudyResult};
use crate::models::Model;
use crate::rstar::DirectedLikelihood;

/// Grid points across the +-2 sigma comparison window.
const WINDOW_POINTS: usize = 41;

fn window_grid(model: &dyn Model, theta_hat: f64) -> Vec<f64> {
    let sigma = model.stderr(theta_hat);
    let dom = model.param_domain();
    (0..WINDOW_POINTS)
        .map(|i| theta_hat - 2.0 * sigma + 4.0 * sigma * i as f64 / (WINDOW_POINTS - 1) as f64)
        .filter(|t| dom.contains(*t))
        .collect()
}

/// e(n): median over simulated datasets of the sup gap |H*(theta) - C(theta)|
/// on the central window, with the corrected curve calibrated exactly.
pub fn corrected_vs_exact_gap(model: &dyn Model, theta_true: f64, datasets: usize, cfg: &McConfig) -> Result<f64> {
    let median = MedianFunction::exact_from_model(model)?;
    let calib = exact_calibration_for(model, true)
        .ok_or_else(|| Error::Invalid(format!("no exact pivot calibration for `{}`", model.key())))?;
    let mut sups = par_map(cfg.workers, datasets, |rep| -> f64 {
        let mut rng = substream(cfg.seed, 5, rep as u64);
        let data = model.sample(theta_true, &mut rng);
        let run = || -> Result<f64> {
            let star = crate::mbc::corrected_curve(model, &data, &median, &calib)?;
            let theta_hat = model.mle(&data)?;
            let mut worst: f64 = 0.0;
            for t in window_grid(model, theta_hat) {
                let c = 1.0 - model.estimator_cdf(theta_hat, t).unwrap();
                worst = worst.max((star.hstar(t)? - c).abs());
            }
            Ok(worst)
        };
        run().unwrap_or(f64::NAN)
    });
    sups.retain(|x| x.is_finite());
    if sups.len() < datasets * 99 / 100 {
        return Err(Error::Invalid(format!("only {} of {datasets} datasets usable", sups.len())));
    }
    sups.sort_unstable_by(f64::total_cmp);
    Ok(sorted_median(&sups))
}

/// Same comparison for the uncorrected H(theta); used as the first-order
/// baseline the correction is measured against.
pub fn uncorrected_vs_exact_gap(model: &dyn Model, theta_true: f64, datasets: usize, cfg: &McConfig) -> Result<f64> {
    let calib = exact_calibration_for(model, false)
        .ok_or_else(|| Error::Invalid(format!("no exact pivot calibration for `{}`", model.key())))?;
    let mut sups = par_map(cfg.workers, datasets, |rep| -> f64 {
        let mut rng = substream(cfg.seed, 5, rep as u64);
        let data = model.sample(theta_true, &mut rng);
        let run = || -> Result<f64> {
            let cc = crate::confidence::cc_from_w(model, &data, &calib)?;
            let theta_hat = model.mle(&data)?;
            let mut worst: f64 = 0.0;
            for t in window_grid(model, theta_hat) {
                let c = 1.0 - model.estimator_cdf(theta_hat, t).unwrap();
                worst = worst.max((cc.h(t)? - c).abs());
            }
            Ok(worst)
        };
        run().unwrap_or(f64::NAN)
    });
    sups.retain(|x| x.is_finite());
    sups.sort_unstable_by(f64::total_cmp);
    Ok(sorted_median(&sups))
}

/// d(n): median over datasets of the sup gap |r(b(theta)) - r*(theta)| on
/// the central window, for a model with an exponential-family form.
pub fn directed_equivalence_gap(model: &dyn Model, theta_true: f64, datasets: usize, cfg: &McConfig) -> Result<f64> {
    let expfam = model.expfam().ok_or_else(|| Error::Invalid(format!("`{}` has no exponential-family form", model.key())))?;
    let median = MedianFunction::exact_from_model(model)?;
    let mut sups = par_map(cfg.workers, datasets, |rep| -> f64 {
        let mut rng = substream(cfg.seed, 6, rep as u64);
        let data = model.sample(theta_true, &mut rng);
        let run = || -> Result<f64> {
            let theta_hat = model.mle(&data)?;
            let dl = DirectedLikelihood::new(expfam.clone(), theta_hat)?;
            let mut worst: f64 = 0.0;
            for t in window_grid(model, theta_hat) {
                worst = worst.max((dl.r_median(&median, t)? - dl.rstar(t)?).abs());
            }
            Ok(worst)
        };
        run().unwrap_or(f64::NAN)
    });
    sups.retain(|x| x.is_finite());
    sups.sort_unstable_by(f64::total_cmp);
    Ok(sorted_median(&sups))
}

/// Gap between the closed-form expansion of r* (score-ratio form, slashed
/// derivatives evaluated through eta) and the defining formula; same
/// median-sup-over-window shape as the other rate checks.
pub fn rstar_expansion_gap(model: &dyn Model, theta_true: f64, datasets: usize, cfg: &McConfig) -> Result<f64> {
    let expfam = model.expfam().ok_or_else(|| Error::Invalid(format!("`{}` has no exponential-family form", model.key())))?;
    let mut sups = par_map(cfg.workers, datasets, |rep| -> f64 {
        let mut rng = substream(cfg.seed, 6, rep as u64);
        let data = model.sample(theta_true, &mut rng);
        let run = || -> Result<f64> {
            let theta_hat = model.mle(&data)?;
            let dl = DirectedLikelihood::new(expfam.clone(), theta_hat)?;
            let sigma = expfam.sigma_theta(theta_hat);
            let mut worst: f64 = 0.0;
            for t in window_grid(model, theta_hat) {
                // skip the removable singularity neighbourhood
                if (t - theta_hat).abs() < 0.05 * sigma {
                    continue;
                }
                let r = dl.r(t)?;
                // r - (1/6r) eta''(t) (theta_hat - t) / eta'(t)
                let expansion = r - expfam.eta_deriv2(t) * (theta_hat - t) / (6.0 * r * expfam.eta_deriv1(t));
                worst = worst.max((expansion - dl.rstar(t)?).abs());
            }
            Ok(worst)
        };
        run().unwrap_or(f64::NAN)
    });
    sups.retain(|x| x.is_finite());
    sups.sort_unstable_by(f64::total_cmp);
    Ok(sorted_median(&sups))
}

/// KS distances from N(0,1) of r(b(theta_true)) and r(theta_true) over
/// simulated replicates: the corrected root should sit closer to normal.
pub fn directed_normality(model: &dyn Model, theta_true: f64, cfg: &McConfig) -> Result<(f64, f64)> {
    let expfam = model.expfam().ok_or_else(|| Error::Invalid(format!("`{}` has no exponential-family form", model.key())))?;
    let median = MedianFunction::exact_from_model(model)?;
    let pairs = par_map(cfg.workers, cfg.replicates, |rep| -> (f64, f64) {
        let mut rng = substream(cfg.seed, 7, rep as u64);
        let data = model.sample(theta_true, &mut rng);
        let run = || -> Result<(f64, f64)> {
            let theta_hat = model.mle(&data)?;
            let dl = DirectedLikelihood::new(expfam.clone(), theta_hat)?;
            Ok((dl.r_median(&median, theta_true)?, dl.r(theta_true)?))
        };
        run().unwrap_or((f64::NAN, f64::NAN))
    });
    let rb: Vec<f64> = pairs.iter().map(|p| p.0).filter(|x| x.is_finite()).collect();
    let r: Vec<f64> = pairs.iter().map(|p| p.1).filter(|x| x.is_finite()).collect();
    let ks_rb = EmpiricalCdf::from_samples(rb)?.ks_distance(crate::dist::std_normal_cdf);
    let ks_r = EmpiricalCdf::from_samples(r)?.ks_distance(crate::dist::std_normal_cdf);
    Ok((ks_rb, ks_r))
}

/// What uniformity is being probed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UniformityKind {
    /// C(theta_true; X) from the exact estimator CDF.
    ExactCd,
    /// cc*(theta_true; X) with the exact pivot calibration.
    CorrectedCurve,
}

/// KS distance from Unif(0,1) of the probed statistic at theta_true.
pub fn uniformity_ks(model: &dyn Model, theta_true: f64, kind: UniformityKind, cfg: &McConfig) -> Result<f64> {
    let median = MedianFunction::exact_from_model(model)?;
    let calib = exact_calibration_for(model, true);
    let values = par_map(cfg.workers, cfg.replicates, |rep| -> f64 {
        let mut rng = substream(cfg.seed, 8, rep as u64);
        let data = model.sample(theta_true, &mut rng);
        let run = || -> Result<f64> {
            let theta_hat = model.mle(&data)?;
            match kind {
                UniformityKind::ExactCd => Ok(1.0 - model.estimator_cdf(theta_hat, theta_true).unwrap()),
                UniformityKind::CorrectedCurve => {
                    let cal = calib.as_ref().ok_or(Error::EstimatorCdfUnavailable { model: model.key() })?;
                    let b = median.eval(theta_true)?;
                    let w = crate::models::loglik_ratio(model, b, &data)?;
                    cal.cdf(w, theta_true)
                }
            }
        };
        run().unwrap_or(f64::NAN)
    });
    let valid: Vec<f64> = values.into_iter().filter(|x| x.is_finite()).collect();
    Ok(EmpiricalCdf::from_samples(valid)?.ks_distance(|u| u.clamp(0.0, 1.0)))
}

/// Tail-study cells for the corrected (or uncorrected) curve with its exact
/// pivot calibration; H(theta_true) per replicate comes from the closed
/// construction, not a full curve object.
pub fn pivot_tail_cells(model: &dyn Model, theta_true: f64, corrected: bool, alphas: &[f64], cfg: &McConfig) -> Result<TailStudyResult> {
    let calib = exact_calibration_for(model, corrected)
        .ok_or_else(|| Error::Invalid(format!("no exact pivot calibration for `{}`", model.key())))?;
    let median = if corrected { MedianFunction::exact_from_model(model)? } else { MedianFunction::identity() };
    let builder = move |data: &[f64]| -> Result<f64> {
        let theta_hat = model.mle(data)?;
        let b = median.eval(theta_true)?;
        let w = crate::models::loglik_ratio(model, b, data)?;
        let cc = calib.cdf(w, theta_true)?;
        Ok(h_from_cc(cc, median.inverse(theta_hat)?, theta_true))
    };
    crate::mc::tail_symmetry_cells(model, theta_true, &builder, alphas, cfg)
}

/// Kolmogorov-Smirnov critical value at the 1% level (asymptotic).
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}
