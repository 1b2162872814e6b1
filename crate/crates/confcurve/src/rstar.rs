//! Directed likelihood r(theta), the modified directed likelihood r*(theta)
//! for one-parameter exponential families in the mean parametrization, and
//! the median-corrected directed likelihood r(b(theta)).

use crate::error::{Error, Result};
use crate::expfam::ExpFamModel;
use crate::mbc::MedianFunction;

/// Relative half-width of the removable-singularity window around theta_hat.
const SERIES_WINDOW: f64 = 0.01;

/// Directed-likelihood machinery for an observed mean-value estimate.
#[derive(Debug, Clone)]
pub struct DirectedLikelihood {
    model: ExpFamModel,
    theta_hat: f64,
}

impl DirectedLikelihood {
    pub fn new(model: ExpFamModel, theta_hat: f64) -> Result<Self> {
        model.check_theta(theta_hat)?;
        Ok(DirectedLikelihood { model, theta_hat })
    }

    pub fn theta_hat(&self) -> f64 {
        self.theta_hat
    }

    pub fn model(&self) -> &ExpFamModel {
        &self.model
    }

    /// r(theta) = sign(theta_hat - theta) w(theta)^{1/2}.
    pub fn r(&self, theta: f64) -> Result<f64> {
        let w = self.model.loglik_ratio(self.theta_hat, theta)?;
        Ok((self.theta_hat - theta).signum() * w.sqrt())
    }

    /// Exponential-family score pivot u(theta) = (eta_hat - eta) psi''(eta_hat)^{1/2}.
    pub fn u(&self, theta: f64) -> Result<f64> {
        self.model.check_theta(theta)?;
        let d2 = self.model.psi_deriv_at(self.theta_hat, 2);
        Ok((self.model.eta(self.theta_hat) - self.model.eta(theta)) * d2.sqrt())
    }

    /// Modified directed likelihood r*(theta) = r - log(r/u)/r.
    ///
    /// On |theta - theta_hat| < 0.01 sigma the quotient is 0/0; there the
    /// value comes from three-term expansions of r and log(r/u)/r around
    /// theta_hat, which extend r* smoothly through the singularity.
    pub fn rstar(&self, theta: f64) -> Result<f64> {
        self.model.check_theta(theta)?;
        let sigma_hat = self.model.sigma_theta(self.theta_hat);
        if (theta - self.theta_hat).abs() < SERIES_WINDOW * sigma_hat {
            return Ok(self.rstar_series(theta));
        }
        let r = self.r(theta)?;
        let u = self.u(theta)?;
        let ratio = r / u;
        if !(ratio > 0.0) {
            return Err(Error::Invalid(format!("r/u = {ratio} not positive at theta = {theta}")));
        }
        Ok(r - ratio.ln() / r)
    }

    /// Three-term expansions in d = theta - theta_hat, with
    /// c = eta''(theta_hat)/eta'(theta_hat) and q = eta'''/eta':
    ///   r      = -d sqrt(eta') (1 + c d/3 + (q/8 - c^2/18) d^2)
    ///   log(r/u)/r = [c/6 - (c^2/72 - q/24) d] / (sqrt(eta') (1 + c d/3))
    fn rstar_series(&self, theta: f64) -> f64 {
        let d = theta - self.theta_hat;
        let e1 = self.model.eta_deriv1(self.theta_hat);
        let c = self.model.eta_deriv2(self.theta_hat) / e1;
        let q = self.model.eta_deriv3(self.theta_hat) / e1;
        let s = e1.sqrt();
        let r = -d * s * (1.0 + c * d / 3.0 + (q / 8.0 - c * c / 18.0) * d * d);
        let corr = (c / 6.0 - (c * c / 72.0 - q / 24.0) * d) / (s * (1.0 + c * d / 3.0));
        r - corr
    }

    /// Median bias corrected directed likelihood r(b(theta)).
    pub fn r_median(&self, median: &MedianFunction, theta: f64) -> Result<f64> {
        let b = median.eval(theta)?;
        let w = self.model.loglik_ratio(self.theta_hat, b)?;
        Ok((self.theta_hat - b).signum() * w.sqrt())
    }
}
