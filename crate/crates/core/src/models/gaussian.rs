use super::{clamp_weight, Coefficients, DetectionModel, ErrorProbabilities};
use crate::error::{Error, Result};
use crate::simplex::SimplexPoint;

/// Upper tail of the standard normal, `Q(x) = erfc(x / sqrt 2) / 2`.
pub fn gaussian_tail(alpha: f64) -> f64 {
    if alpha > 40.0 {
        0.0
    } else if alpha < -40.0 {
        1.0
    } else {
        0.5 * libm::erfc(alpha / std::f64::consts::SQRT_2)
    }
}

/// Binary detection of a known shift `mu` in Gaussian noise of variance
/// `sigma2`, with costs `c10` (type I) and `c01` (type II).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BinaryGaussianModel {
    mu: f64,
    sigma2: f64,
    c10: f64,
    c01: f64,
}

impl BinaryGaussianModel {
    pub fn new(mu: f64, sigma2: f64, c10: f64, c01: f64) -> Result<Self> {
        let finite = [mu, sigma2, c10, c01].iter().all(|x| x.is_finite());
        if !finite || mu == 0.0 || sigma2 <= 0.0 || c10 <= 0.0 || c01 <= 0.0 {
            return Err(Error::InvalidModel(format!(
                "gaussian requires mu != 0, sigma2 > 0, c10 > 0, c01 > 0 \
                 (got mu={mu}, sigma2={sigma2}, c10={c10}, c01={c01})"
            )));
        }
        Ok(Self { mu, sigma2, c10, c01 })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }
    pub fn c10(&self) -> f64 {
        self.c10
    }
    pub fn c01(&self) -> f64 {
        self.c01
    }

    /// Error probabilities for a weight already known to be in (0, 1).
    fn error_probabilities_raw(&self, a: f64) -> ErrorProbabilities {
        // The sign of the shift only mirrors the observation axis.
        let mu = self.mu.abs();
        let sigma = self.sigma2.sqrt();
        let shift = 0.5 * mu / sigma;
        let log_term = (sigma / mu) * ((self.c10 * a) / (self.c01 * (1.0 - a))).ln();
        ErrorProbabilities { p_i: gaussian_tail(shift + log_term), p_ii: gaussian_tail(shift - log_term) }
    }
}

/// Type I and type II error probabilities of the likelihood ratio test with
/// decision weight `a`.
pub fn error_probabilities_gaussian(model: &BinaryGaussianModel, a: f64) -> Result<ErrorProbabilities> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::Domain(format!("weight {a} not in (0, 1)")));
    }
    Ok(model.error_probabilities_raw(a))
}

impl DetectionModel for BinaryGaussianModel {
    fn hypotheses(&self) -> usize {
        2
    }

    fn coefficients(&self, a: &SimplexPoint) -> Coefficients {
        let a0 = clamp_weight(a).coords()[0];
        let e = self.error_probabilities_raw(a0);
        [self.c10 * e.p_i, self.c01 * e.p_ii, 0.0]
    }
}
