//! Bayes risk error divergence `d(p || a) = J(p, a) - J(p)` and the global
//! minimax decision weight.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{binary_slope, DetectionModel};
use crate::numeric::bisect;
use crate::simplex::{SimplexPoint, INTERIOR_MARGIN};
use crate::simplex_quant::inverse_gradient;

/// Nonnegative divergence value (risk units). Rounding may leave values as
/// low as `-1e-12`; constructors clip anything below that.
#[derive(Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DivergenceValue(f64);

impl DivergenceValue {
    pub const ZERO_FLOOR: f64 = -1e-12;

    pub fn new(v: f64) -> Self {
        Self(v.max(Self::ZERO_FLOOR))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl fmt::Debug for DivergenceValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for DivergenceValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

/// `d(p || a)` with the weight clamped to the interior. Evaluated as
/// `sum_m p_m (c_m(a) - c_m(p))` so that `p == a` gives exactly zero.
pub(crate) fn divergence_raw<M: DetectionModel + ?Sized>(model: &M, p: &SimplexPoint, a: &SimplexPoint) -> f64 {
    let ca = model.coefficients(a);
    if p.is_vertex() {
        return p.dot(&ca);
    }
    let cp = model.coefficients(p);
    p.coords().iter().enumerate().map(|(m, &pm)| pm * (ca[m] - cp[m])).sum()
}

pub(crate) fn binary_divergence<M: DetectionModel + ?Sized>(model: &M, p0: f64, a: f64) -> f64 {
    divergence_raw(model, &crate::models::binary_point(p0), &crate::models::binary_point(a))
}

/// Bayes risk error divergence of the prior `p` from the decision weight `a`.
pub fn bre_divergence<M: DetectionModel + ?Sized>(
    model: &M,
    p: &SimplexPoint,
    a: &SimplexPoint,
) -> Result<DivergenceValue> {
    model.check_dim(p)?;
    model.check_dim(a)?;
    if a.min_coord() <= 0.0 {
        return Err(Error::Domain(format!("decision weight {a:?} is not interior")));
    }
    Ok(DivergenceValue::new(divergence_raw(model, p, a)))
}

/// Largest divergence from `a` over the simplex. The divergence is convex in
/// its first argument, so only the vertices need checking.
pub fn worst_vertex_divergence<M: DetectionModel + ?Sized>(model: &M, a: &SimplexPoint) -> DivergenceValue {
    let m = model.hypotheses();
    let worst = (0..m)
        .map(|k| {
            let v = SimplexPoint::vertex(m, k).expect("vertex index");
            divergence_raw(model, &v, a)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    DivergenceValue::new(worst)
}

/// The minimax decision weight (peak of the Bayes risk) and its worst-case
/// divergence.
pub fn minimax_weight<M: DetectionModel + ?Sized>(model: &M) -> Result<(SimplexPoint, DivergenceValue)> {
    let a = match model.hypotheses() {
        2 => {
            let lo = INTERIOR_MARGIN;
            let hi = 1.0 - INTERIOR_MARGIN;
            // J' is decreasing; its root is the peak.
            let a0 = bisect(|a| binary_slope(model, a), lo, hi, 1e-15, 200);
            SimplexPoint::binary(a0)?
        }
        3 => inverse_gradient(model, &[0.0, 0.0])?,
        m => return Err(Error::UnsupportedDimension(m)),
    };
    Ok((a, worst_vertex_divergence(model, &a)))
}
