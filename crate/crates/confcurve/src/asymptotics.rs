//! Series inversion and expansion utilities for the tail-symmetry analysis:
//! the generalized inverse-mapping coefficients, Cornish–Fisher quantiles,
//! the median expansion, the first Edgeworth tail term, and the conjugate
//! point solved from the corrected log-likelihood ratio.

use num_rational::BigRational;
#[cfg(test)]
use num_traits::Zero;

use crate::dist::{std_normal_cdf, std_normal_pdf, std_normal_quantile};
use crate::error::{Error, Result};
use crate::expfam::ExpFamModel;
use crate::series::TruncatedSeries;

/// Invert the normalized convex series f(x) = x^2 + b_3 x^3 + ... + b_K x^K:
/// returns a_2..a_{K-1} with f(x) = f(g(x)) for g(x) = -x - sum a_k x^k,
/// exactly in rational arithmetic.
///
/// `b` holds b_3..b_K in ascending order. The coefficient system is
/// triangular, so each a_{m-1} is read off the order-m coefficient match.
pub fn lemma1_invert(b: &[BigRational]) -> Result<Vec<BigRational>> {
    let order = b.len() + 2; // highest matched power K
    if order > 16 {
        return Err(Error::Invalid("series order capped at 16".into()));
    }
    let one = BigRational::from_integer(1.into());
    let two = BigRational::from_integer(2.into());

    let mut f = TruncatedSeries::zero(order);
    f.set_coeff(2, one.clone());
    for (i, bk) in b.iter().enumerate() {
        f.set_coeff(i + 3, bk.clone());
    }

    let mut g = TruncatedSeries::zero(order);
    g.set_coeff(1, -one);

    let mut a = Vec::with_capacity(order.saturating_sub(2));
    for m in 3..=order {
        // with a_{m-1} still zero, coeff m of f(g) is off by exactly 2 a_{m-1}
        let fg = f.compose(&g)?;
        let am = (f.coeff(m) - fg.coeff(m)) / &two;
        g.set_coeff(m - 1, -am.clone());
        a.push(am);
    }
    debug_assert!({
        let fg = f.compose(&g)?;
        (0..=order).all(|k| fg.coeff(k) == f.coeff(k))
    });
    Ok(a)
}

/// Quantile of the standardized estimator via the Cornish–Fisher expansion,
/// accurate to O(n^{-3/2}) for rho_3, rho_4 the standardized cumulants.
pub fn cornish_fisher_quantile(rho3: f64, rho4: f64, n: usize, alpha: f64) -> f64 {
    let z = std_normal_quantile(alpha);
    let sqrt_n = (n as f64).sqrt();
    let nf = n as f64;
    z + rho3 / (6.0 * sqrt_n) * (z * z - 1.0)
        + rho4 / (24.0 * nf) * (z * z * z - 3.0 * z)
        - rho3 * rho3 / (36.0 * nf) * (2.0 * z * z * z - 5.0 * z)
}

/// Expansion of the median of the maximum likelihood estimator:
/// b(theta) = theta - rho_3 sigma_theta / (6 sqrt n) + O(n^{-2}).
pub fn median_expansion(model: &ExpFamModel, theta: f64) -> f64 {
    let n = model.n() as f64;
    theta - model.rho3(theta) * model.sigma_theta(theta) / (6.0 * n.sqrt())
}

/// One-term Edgeworth upper-tail probability for the standardized estimator:
/// 1 - K(u) = Phi(-u) + phi(u) rho_3 (u^2 - 1) / (6 sqrt n) + O(1/n).
pub fn edgeworth_tail(rho3: f64, n: usize, u: f64) -> f64 {
    std_normal_cdf(-u) + std_normal_pdf(u) * rho3 * (u * u - 1.0) / (6.0 * (n as f64).sqrt())
}

/// Conjugate point: the estimator value on the opposite side of the median
/// point at which the corrected ratio takes the same value as at `theta_hat`.
///
/// `median_at_theta` is b(theta); the defining equation is
/// w(b(theta); x) = w(b(theta); theta_hat), solved by bracketed bisection.
pub fn conjugate_point(model: &ExpFamModel, median_at_theta: f64, theta_hat: f64) -> Result<f64> {
    let beta = median_at_theta;
    model.check_theta(beta)?;
    model.check_theta(theta_hat)?;
    let target = model.loglik_ratio(theta_hat, beta)?;
    if target == 0.0 {
        return Ok(theta_hat); // theta_hat == b(theta): its own reflection
    }
    let domain = model.theta_domain();
    let above = theta_hat > beta;
    let w_gap = |x: f64| model.loglik_ratio(x, beta).map(|w| w - target).unwrap_or(f64::NAN);

    // march geometrically toward the domain end until w exceeds the target
    let mut step = (theta_hat - beta).abs().max(1e-12 * (1.0 + beta.abs()));
    let mut inner = beta;
    let mut outer = f64::NAN;
    for _ in 0..200 {
        let cand = if above {
            if domain.lo.is_finite() { (beta - step).max(domain.lo + 0.25 * (inner - domain.lo)) } else { beta - step }
        } else if domain.hi.is_finite() {
            (beta + step).min(domain.hi - 0.25 * (domain.hi - inner))
        } else {
            beta + step
        };
        let v = w_gap(cand);
        if v.is_nan() {
            break;
        }
        if v >= 0.0 {
            outer = cand;
            break;
        }
        inner = cand;
        step *= 2.0;
    }
    if !outer.is_finite() {
        return Err(Error::Optimizer {
            what: "conjugate_point",
            msg: format!("failed to bracket the reflection of {theta_hat} around {beta}"),
            best: inner,
            objective: target,
        });
    }
    let (lo, hi) = if outer < inner { (outer, inner) } else { (inner, outer) };
    crate::roots::bisect(w_gap, lo, hi, 1e-12 * (1.0 + beta.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::gamma_quantile;
    use num_traits::One;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn lemma1_printed_coefficients() {
        let b3 = rat(1, 3);
        let b4 = rat(-2, 7);
        let b5 = rat(5, 11);
        let b6 = rat(1, 13);
        let a = lemma1_invert(&[b3.clone(), b4.clone(), b5.clone(), b6]).unwrap();
        assert_eq!(a[0], b3);
        assert_eq!(a[1], &b3 * &b3);
        let b3c = b3.clone();
        let a4 = &b5 - rat(2, 1) * &b3 * &b4 + rat(2, 1) * &b3c * &b3c * &b3c;
        assert_eq!(a[2], a4);
        let a5 = rat(3, 1) * &b3 * &b5 - rat(6, 1) * &b3 * &b3 * &b4 + rat(4, 1) * &b3 * &b3 * &b3 * &b3;
        assert_eq!(a[3], a5);
    }

    #[test]
    fn lemma1_all_zero_gives_negation() {
        let a = lemma1_invert(&[BigRational::zero(), BigRational::zero(), BigRational::zero()]).unwrap();
        assert!(a.iter().all(|c| c.is_zero()));
    }

    #[test]
    fn lemma1_self_consistency_order6() {
        // f(g(x)) - f(x) must vanish through order 6 for the inverted series
        let b = [rat(1, 2), rat(-3, 5), rat(7, 9), rat(-1, 4)];
        let a = lemma1_invert(&b).unwrap();
        let order = 6;
        let mut f = TruncatedSeries::zero(order);
        f.set_coeff(2, BigRational::one());
        for (i, bk) in b.iter().enumerate() {
            f.set_coeff(i + 3, bk.clone());
        }
        let mut g = TruncatedSeries::zero(order);
        g.set_coeff(1, -BigRational::one());
        for (i, ak) in a.iter().enumerate() {
            if i + 2 <= order {
                g.set_coeff(i + 2, -ak.clone());
            }
        }
        let fg = f.compose(&g).unwrap();
        for k in 0..=order {
            assert_eq!(fg.coeff(k), f.coeff(k), "coefficient {k}");
        }
    }

    #[test]
    fn lemma1_rate_structure() {
        // with b_k proportional to n^{-(k-2)/2}, the inverted coefficients
        // scale as a_k = O(b_{k+1}) for even k and O(b_3 b_k) for odd k:
        // the normalized ratios must stabilize as n grows
        use num_traits::ToPrimitive;
        let beta = [rat(2, 3), rat(-1, 2), rat(3, 5), rat(1, 4), rat(-2, 7), rat(1, 6)]; // beta_3..beta_8
        let ratios = |n_root: i64| -> Vec<f64> {
            // n = n_root^2 so that n^{1/2} stays rational
            let b: Vec<BigRational> = beta
                .iter()
                .enumerate()
                .map(|(i, bk)| {
                    let k = i + 3;
                    bk / BigRational::from_integer(n_root.pow((k - 2) as u32).into())
                })
                .collect();
            let a = lemma1_invert(&b).unwrap();
            // a[i] is a_{i+2}: normalize even orders by b_{k+1}, odd by b_3 b_k
            (0..a.len() - 1)
                .map(|i| {
                    let k = i + 2;
                    let denom = if k % 2 == 0 { b[k + 1 - 3].clone() } else { &b[0] * &b[k - 3] };
                    (&a[i] / denom).to_f64().unwrap()
                })
                .collect()
        };
        let (r2, r4, r6) = (ratios(10), ratios(100), ratios(1000));
        for i in 0..r2.len() {
            let d1 = (r4[i] - r2[i]).abs();
            let d2 = (r6[i] - r4[i]).abs();
            assert!(r6[i].abs() < 50.0, "ratio {i} unbounded: {}", r6[i]);
            assert!(d2 <= 0.2 * d1 + 1e-9, "ratio {i} not stabilizing: {d1} then {d2}");
        }
    }

    #[test]
    fn cornish_fisher_normal_case() {
        for &alpha in &[0.05, 0.33, 0.9] {
            let q = cornish_fisher_quantile(0.0, 0.0, 25, alpha);
            assert!((q - std_normal_quantile(alpha)).abs() < 1e-12);
        }
    }

    #[test]
    fn cornish_fisher_median_term() {
        // z = 0: only the (z^2 - 1) term survives
        let q = cornish_fisher_quantile(2.0 * 2.0_f64.sqrt(), 12.0, 10, 0.5);
        assert!((q - (-2.0 * 2.0_f64.sqrt() / (6.0 * 10.0_f64.sqrt()))).abs() < 1e-12);
    }

    #[test]
    fn cornish_fisher_tracks_chi2_quantile() {
        // theta_hat of N(0, theta) is a scaled chi2_n; the standardized
        // quantile from the expansion must approach the exact one at rate
        // better than first order: the alpha=0.95 error at n=80 is at most
        // half the n=20 error.
        let exact = |n: usize, alpha: f64| {
            let s = n as f64 / 2.0;
            (gamma_quantile(s, 1.0 / s, alpha) - 1.0) / (2.0 / n as f64).sqrt()
        };
        let rho3 = 2.0 * 2.0_f64.sqrt();
        let err = |n: usize| (cornish_fisher_quantile(rho3, 12.0, n, 0.95) - exact(n, 0.95)).abs();
        assert!(err(80) < 0.5 * err(20), "{} vs {}", err(80), err(20));
        assert!(err(20) < 1e-2);
    }

    #[test]
    fn edgeworth_vanishes_at_unit_u() {
        for &u in &[1.0, -1.0] {
            assert_eq!(edgeworth_tail(1.7, 13, u), std_normal_cdf(-u));
        }
        assert_eq!(edgeworth_tail(0.0, 40, 0.3), std_normal_cdf(-0.3));
    }

    #[test]
    fn edgeworth_close_to_chi2_tail() {
        // n = 40, u = 1.5: exact standardized upper tail of chi2_40
        let n = 40usize;
        let s = n as f64 / 2.0;
        let u = 1.5;
        let exact = 1.0 - crate::dist::gamma_cdf(s, 1.0 / s, 1.0 + (2.0 / n as f64).sqrt() * u);
        let approx = edgeworth_tail(2.0 * 2.0_f64.sqrt(), n, u);
        assert!((approx - exact).abs() < 5e-3, "gap {}", (approx - exact).abs());
        let exact160 = {
            let s = 80.0;
            1.0 - crate::dist::gamma_cdf(s, 1.0 / s, 1.0 + (2.0 / 160.0_f64).sqrt() * u)
        };
        let approx160 = edgeworth_tail(2.0 * 2.0_f64.sqrt(), 160, u);
        assert!((approx160 - exact160).abs() < (approx - exact).abs());
    }

    #[test]
    fn median_expansion_symmetric_family() {
        let m = ExpFamModel::normal_mean(12);
        assert_eq!(median_expansion(&m, 0.7), 0.7);
    }

    #[test]
    fn conjugate_point_symmetric_reflection() {
        // quadratic w: the conjugate point is the mirror image around b
        let m = ExpFamModel::normal_mean(6);
        let beta = 0.25;
        let that = 1.4;
        let star = conjugate_point(&m, beta, that).unwrap();
        assert!((star - (2.0 * beta - that)).abs() < 1e-9);
    }

    #[test]
    fn conjugate_point_matches_expansion() {
        // normal-variance, theta = 1, theta_hat at U = 1: compare the solved
        // root with the three-term expansion; the standardized gap contracts
        // ~ n^{-3/2}, so the fitted constant stays put as n quadruples
        let gap = |n: usize| {
            let m = ExpFamModel::normal_variance(n);
            let theta = 1.0;
            let sigma = m.sigma_theta(theta);
            let rho3 = m.rho3(theta);
            let b = gamma_quantile(n as f64 / 2.0, 2.0 / n as f64, 0.5) * theta;
            let that = theta + sigma;
            let star = conjugate_point(&m, b, that).unwrap();
            let u = 1.0;
            let r = rho3 / (3.0 * (n as f64).sqrt());
            let exp = theta + sigma * (-u + r * (u * u - 1.0) - r * r * (u * u * u - u));
            (star - exp).abs() / sigma
        };
        let cs = [gap(20) * 20.0_f64.powf(1.5), gap(80) * 80.0_f64.powf(1.5), gap(320) * 320.0_f64.powf(1.5)];
        let cmax = cs.iter().cloned().fold(f64::MIN, f64::max);
        let cmin = cs.iter().cloned().fold(f64::MAX, f64::min);
        assert!(cmax / cmin < 2.0, "fitted constants {cs:?} unstable");
    }

    #[test]
    fn conjugate_point_matches_eta_ratio_form() {
        // same root via the curvature-ratio coefficients at b(theta)
        let n = 80usize;
        let m = ExpFamModel::normal_variance(n);
        let theta = 1.0;
        let sigma = m.sigma_theta(theta);
        let b = gamma_quantile(n as f64 / 2.0, 2.0 / n as f64, 0.5) * theta;
        let that = theta + sigma;
        let star = conjugate_point(&m, b, that).unwrap();
        let a2 = m.eta_deriv2(b) * sigma / (3.0 * m.eta_deriv1(b));
        let x = (that - b) / sigma;
        let three_term = b + sigma * (-x - a2 * x * x - a2 * a2 * x * x * x);
        assert!(
            (star - three_term).abs() < 5.0 / (n as f64).powf(1.5) * sigma,
            "gap {}",
            (star - three_term).abs()
        );
    }
}
