//! One-parameter exponential families in the mean-value parametrization.
//!
//! The cumulant function is supplied per observation; interest quantities are
//! expressed for the sample through `theta = psi'(eta)`, with the scaling
//! `eta = n eta_bar`, `psi(eta) = n psi_bar(eta_bar)`.

use std::sync::Arc;

use crate::error::Result;
use crate::grid::Interval;

type F1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type Fk = Arc<dyn Fn(f64, usize) -> f64 + Send + Sync>;

/// Mean-parametrized exponential family with cumulant derivatives to order 4.
#[derive(Clone)]
pub struct ExpFamModel {
    n: usize,
    /// per-observation cumulant function eta_bar -> psi_bar(eta_bar)
    psi_bar: F1,
    /// k-th derivative of psi_bar, k = 1..=4
    psi_bar_deriv: Fk,
    /// inverse of psi_bar': theta -> eta_bar
    eta_bar_of_theta: F1,
    theta_domain: Interval,
    label: &'static str,
}

impl std::fmt::Debug for ExpFamModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExpFamModel")
            .field("label", &self.label)
            .field("n", &self.n)
            .field("theta_domain", &self.theta_domain)
            .finish()
    }
}

impl ExpFamModel {
    pub fn new(
        n: usize,
        psi_bar: F1,
        psi_bar_deriv: Fk,
        eta_bar_of_theta: F1,
        theta_domain: Interval,
        label: &'static str,
    ) -> Self {
        assert!(n >= 1);
        ExpFamModel { n, psi_bar, psi_bar_deriv, eta_bar_of_theta, theta_domain, label }
    }

    /// Variance parameter of N(0, theta): t(x) = x^2, psi_bar = -log(-eta)/2.
    pub fn normal_variance(n: usize) -> Self {
        Self::new(
            n,
            Arc::new(|e: f64| -0.5 * (-e).ln()),
            Arc::new(|e: f64, k: usize| match k {
                1 => -0.5 / e,
                2 => 0.5 / (e * e),
                3 => -1.0 / (e * e * e),
                4 => 3.0 / (e * e * e * e),
                _ => panic!("psi_bar derivative order {k} unsupported"),
            }),
            Arc::new(|theta: f64| -0.5 / theta),
            Interval::new(0.0, f64::INFINITY),
            "normal-variance",
        )
    }

    /// Mean of an exponential distribution: t(x) = x, psi_bar = -log(-eta).
    pub fn exponential_mean(n: usize) -> Self {
        Self::gamma_mean(1.0, n)
    }

    /// Mean of a Gamma with known shape k: psi_bar = -k log(-eta).
    pub fn gamma_mean(shape: f64, n: usize) -> Self {
        assert!(shape > 0.0);
        Self::new(
            n,
            Arc::new(move |e: f64| -shape * (-e).ln()),
            Arc::new(move |e: f64, k: usize| match k {
                1 => -shape / e,
                2 => shape / (e * e),
                3 => -2.0 * shape / (e * e * e),
                4 => 6.0 * shape / (e * e * e * e),
                _ => panic!("psi_bar derivative order {k} unsupported"),
            }),
            Arc::new(move |theta: f64| -shape / theta),
            Interval::new(0.0, f64::INFINITY),
            if shape == 1.0 { "exponential-mean" } else { "gamma-mean" },
        )
    }

    /// Normal mean with known unit variance: psi_bar = eta^2/2, theta = eta.
    pub fn normal_mean(n: usize) -> Self {
        Self::new(
            n,
            Arc::new(|e: f64| 0.5 * e * e),
            Arc::new(|e: f64, k: usize| match k {
                1 => e,
                2 => 1.0,
                _ => 0.0,
            }),
            Arc::new(|theta: f64| theta),
            Interval::new(f64::NEG_INFINITY, f64::INFINITY),
            "normal-mean",
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn label(&self) -> &'static str {
        self.label
    }

    pub fn theta_domain(&self) -> Interval {
        self.theta_domain
    }

    pub fn check_theta(&self, theta: f64) -> Result<()> {
        self.theta_domain.check(self.label, theta)
    }

    /// Per-sample canonical parameter eta = n eta_bar(theta).
    pub fn eta(&self, theta: f64) -> f64 {
        self.n as f64 * (self.eta_bar_of_theta)(theta)
    }

    /// Per-sample cumulant psi(eta(theta)) = n psi_bar(eta_bar).
    pub fn psi_at(&self, theta: f64) -> f64 {
        self.n as f64 * (self.psi_bar)((self.eta_bar_of_theta)(theta))
    }

    /// k-th derivative of the per-sample cumulant at eta(theta); O(n^{1-k}).
    pub fn psi_deriv_at(&self, theta: f64, k: usize) -> f64 {
        let nf = self.n as f64;
        nf.powi(1 - k as i32) * (self.psi_bar_deriv)((self.eta_bar_of_theta)(theta), k)
    }

    /// Standard error sigma_theta = psi''(eta)^{1/2}.
    pub fn sigma_theta(&self, theta: f64) -> f64 {
        self.psi_deriv_at(theta, 2).sqrt()
    }

    /// Standardized skewness rho_3 = n^{1/2} psi'''(eta) / sigma^3; O(1).
    pub fn rho3(&self, theta: f64) -> f64 {
        let s = self.sigma_theta(theta);
        (self.n as f64).sqrt() * self.psi_deriv_at(theta, 3) / (s * s * s)
    }

    /// Standardized kurtosis rho_4 = n psi''''(eta) / sigma^4; O(1).
    pub fn rho4(&self, theta: f64) -> f64 {
        let s2 = self.psi_deriv_at(theta, 2);
        self.n as f64 * self.psi_deriv_at(theta, 4) / (s2 * s2)
    }

    /// eta'(x) = 1 / psi''(eta(x)).
    pub fn eta_deriv1(&self, x: f64) -> f64 {
        1.0 / self.psi_deriv_at(x, 2)
    }

    /// eta''(x) = -psi'''(eta(x)) / psi''(eta(x))^3.
    pub fn eta_deriv2(&self, x: f64) -> f64 {
        let p2 = self.psi_deriv_at(x, 2);
        -self.psi_deriv_at(x, 3) / (p2 * p2 * p2)
    }

    /// eta'''(x) = (3 psi'''^2 - psi'''' psi'') / psi''^5.
    pub fn eta_deriv3(&self, x: f64) -> f64 {
        let p2 = self.psi_deriv_at(x, 2);
        let p3 = self.psi_deriv_at(x, 3);
        let p4 = self.psi_deriv_at(x, 4);
        (3.0 * p3 * p3 - p4 * p2) / p2.powi(5)
    }

    /// Log-likelihood ratio w(theta) given the observed mean-value MLE.
    ///
    /// w = 2[theta_hat (eta_hat - eta) - (psi(eta_hat) - psi(eta))]; convex in
    /// both arguments with minimum 0 at theta = theta_hat.
    pub fn loglik_ratio(&self, theta_hat: f64, theta: f64) -> Result<f64> {
        self.check_theta(theta)?;
        self.check_theta(theta_hat)?;
        let w = 2.0 * (theta_hat * (self.eta(theta_hat) - self.eta(theta)) - (self.psi_at(theta_hat) - self.psi_at(theta)));
        Ok(w.max(0.0))
    }
}
