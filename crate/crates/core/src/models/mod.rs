//! Detection models.
//!
//! Every model exposes its mismatched Bayes risk through the per-hypothesis
//! error coefficients `c_m(a)`: with the decision rule tuned to the weight
//! `a`, the risk under the prior `p` is `J(p, a) = sum_m p_m c_m(a)`. The
//! Bayes risk is `J(p) = J(p, p)`, and since `J(., a)` is the tangent plane
//! of the concave `J` at `a`, the chart gradient is
//! `dJ/dp_m = c_m(a) - c_{M-1}(a)`.

mod exponential;
mod gaussian;

pub use exponential::ExponentialTernaryModel;
pub use gaussian::{error_probabilities_gaussian, gaussian_tail, BinaryGaussianModel};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simplex::{SimplexPoint, INTERIOR_MARGIN, MAX_HYPOTHESES};

/// Type I / type II error probabilities of a binary decision rule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorProbabilities {
    pub p_i: f64,
    pub p_ii: f64,
}

/// Per-hypothesis cost-weighted error probabilities; unused slots are zero.
pub type Coefficients = [f64; MAX_HYPOTHESES];

pub trait DetectionModel: Sync {
    /// Number of hypotheses M.
    fn hypotheses(&self) -> usize;

    /// Error coefficients of the rule tuned to `a`. The weight is pulled to
    /// the interior margin first, so boundary inputs are accepted.
    fn coefficients(&self, a: &SimplexPoint) -> Coefficients;

    /// `J(p, a)`. The decision weight must not sit on the simplex boundary.
    fn risk_mismatched(&self, p: &SimplexPoint, a: &SimplexPoint) -> Result<f64> {
        self.check_dim(p)?;
        self.check_dim(a)?;
        if a.min_coord() <= 0.0 {
            return Err(Error::Domain(format!("decision weight {a:?} is not interior")));
        }
        Ok(p.dot(&self.coefficients(a)))
    }

    /// Bayes risk `J(p)`, continuously extended to zero at the vertices.
    fn risk(&self, p: &SimplexPoint) -> f64 {
        if p.is_vertex() {
            return 0.0;
        }
        p.dot(&self.coefficients(p))
    }

    /// Chart gradient of `J` at `a` (length M - 1).
    fn gradient(&self, a: &SimplexPoint) -> Result<Vec<f64>> {
        self.check_dim(a)?;
        if a.min_coord() <= 0.0 {
            return Err(Error::Domain(format!("decision weight {a:?} is not interior")));
        }
        Ok(chart_gradient(&self.coefficients(a), self.hypotheses()).to_vec())
    }

    fn check_dim(&self, p: &SimplexPoint) -> Result<()> {
        if p.dim() != self.hypotheses() {
            return Err(Error::Domain(format!(
                "point has {} coordinates, model has {} hypotheses",
                p.dim(),
                self.hypotheses()
            )));
        }
        Ok(())
    }
}

/// Chart gradient from error coefficients, padded to two entries.
pub fn chart_gradient(c: &Coefficients, m: usize) -> [f64; 2] {
    let last = c[m - 1];
    let mut g = [0.0; 2];
    for i in 0..m - 1 {
        g[i] = c[i] - last;
    }
    g
}

/// `J'(a)` for a binary model: `c10 pI(a) - c01 pII(a)`.
pub fn derivative_binary<M: DetectionModel + ?Sized>(model: &M, a: f64) -> Result<f64> {
    if model.hypotheses() != 2 {
        return Err(Error::UnsupportedDimension(model.hypotheses()));
    }
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::Domain(format!("weight {a} not in (0, 1)")));
    }
    Ok(binary_slope(model, a))
}

pub(crate) fn binary_slope<M: DetectionModel + ?Sized>(model: &M, a: f64) -> f64 {
    let c = model.coefficients(&binary_point(a));
    c[0] - c[1]
}

pub(crate) fn binary_risk<M: DetectionModel + ?Sized>(model: &M, p0: f64) -> f64 {
    model.risk(&binary_point(p0))
}

/// `J(p0, a)` for a binary model with the weight clamped to the interior.
pub(crate) fn binary_mismatched<M: DetectionModel + ?Sized>(model: &M, p0: f64, a: f64) -> f64 {
    let c = model.coefficients(&binary_point(a));
    p0 * c[0] + (1.0 - p0) * c[1]
}

/// Binary point without validation; callers guarantee `p0` in `[0, 1]`.
pub(crate) fn binary_point(p0: f64) -> SimplexPoint {
    SimplexPoint::binary(p0.clamp(0.0, 1.0)).expect("clamped prior")
}

pub(crate) fn clamp_weight(a: &SimplexPoint) -> SimplexPoint {
    a.clamp_interior(INTERIOR_MARGIN)
}

/// Model selected at run time (CLI, JSON files, FFI).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelSpec", into = "ModelSpec")]
pub enum Model {
    Gaussian(BinaryGaussianModel),
    Exponential(ExponentialTernaryModel),
}

/// Wire form of [`Model`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelSpec {
    Gaussian { mu: f64, sigma2: f64, c10: f64, c01: f64 },
    Exponential { lambda: [f64; 3] },
}

impl TryFrom<ModelSpec> for Model {
    type Error = Error;

    fn try_from(spec: ModelSpec) -> Result<Self> {
        Ok(match spec {
            ModelSpec::Gaussian { mu, sigma2, c10, c01 } => {
                Model::Gaussian(BinaryGaussianModel::new(mu, sigma2, c10, c01)?)
            }
            ModelSpec::Exponential { lambda } => {
                Model::Exponential(ExponentialTernaryModel::new(lambda[0], lambda[1], lambda[2])?)
            }
        })
    }
}

impl From<Model> for ModelSpec {
    fn from(m: Model) -> Self {
        match m {
            Model::Gaussian(g) => ModelSpec::Gaussian { mu: g.mu(), sigma2: g.sigma2(), c10: g.c10(), c01: g.c01() },
            Model::Exponential(e) => ModelSpec::Exponential { lambda: e.lambdas() },
        }
    }
}

impl DetectionModel for Model {
    fn hypotheses(&self) -> usize {
        match self {
            Model::Gaussian(m) => m.hypotheses(),
            Model::Exponential(m) => m.hypotheses(),
        }
    }

    fn coefficients(&self, a: &SimplexPoint) -> Coefficients {
        match self {
            Model::Gaussian(m) => m.coefficients(a),
            Model::Exponential(m) => m.coefficients(a),
        }
    }
}

impl From<BinaryGaussianModel> for Model {
    fn from(m: BinaryGaussianModel) -> Self {
        Model::Gaussian(m)
    }
}

impl From<ExponentialTernaryModel> for Model {
    fn from(m: ExponentialTernaryModel) -> Self {
        Model::Exponential(m)
    }
}
