use super::{clamp_weight, Coefficients, DetectionModel};
use crate::error::{Error, Result};
use crate::simplex::SimplexPoint;

/// Ternary test between exponential service-time likelihoods
/// `lambda_m exp(-lambda_m y)`, with 0-1 costs.
///
/// The MAP rule decides `h0` for `y < t0`, `h1` for `t0 <= y < t1` and `h2`
/// beyond `t1`. When the weights make the middle region empty the rule
/// collapses to a single `h0`/`h2` threshold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExponentialTernaryModel {
    lambda: [f64; 3],
}

impl ExponentialTernaryModel {
    pub fn new(lambda0: f64, lambda1: f64, lambda2: f64) -> Result<Self> {
        let ok = [lambda0, lambda1, lambda2].iter().all(|x| x.is_finite())
            && lambda0 > lambda1
            && lambda1 > lambda2
            && lambda2 > 0.0;
        if !ok {
            return Err(Error::InvalidModel(format!(
                "exponential requires lambda0 > lambda1 > lambda2 > 0 \
                 (got {lambda0}, {lambda1}, {lambda2})"
            )));
        }
        Ok(Self { lambda: [lambda0, lambda1, lambda2] })
    }

    pub fn lambdas(&self) -> [f64; 3] {
        self.lambda
    }

    fn log_ratio(&self, a: &[f64], i: usize, j: usize) -> f64 {
        ((a[i] * self.lambda[i]) / (a[j] * self.lambda[j])).ln()
    }

    fn raw_threshold(&self, a: &[f64], i: usize, j: usize) -> f64 {
        self.log_ratio(a, i, j) / (self.lambda[i] - self.lambda[j])
    }

    /// The two clamped thresholds `(gamma01, gamma12)` as written for the
    /// three-region rule, without the empty-middle fallback.
    pub fn thresholds(&self, a: &SimplexPoint) -> Result<(f64, f64)> {
        self.check_dim(a)?;
        let a = clamp_weight(a);
        let c = a.coords();
        Ok((self.raw_threshold(c, 0, 1).max(0.0), self.raw_threshold(c, 1, 2).max(0.0)))
    }

    /// Thresholds of the rule actually applied: equal to [`Self::thresholds`]
    /// unless `gamma01 > gamma12`, in which case both become the `h0`/`h2`
    /// threshold.
    pub fn decision_thresholds(&self, a: &SimplexPoint) -> (f64, f64) {
        let a = clamp_weight(a);
        let c = a.coords();
        let g01 = self.raw_threshold(c, 0, 1).max(0.0);
        let g12 = self.raw_threshold(c, 1, 2).max(0.0);
        if g01 > g12 {
            let g02 = self.raw_threshold(c, 0, 2).max(0.0);
            (g02, g02)
        } else {
            (g01, g12)
        }
    }

    fn coefficients_from_thresholds(&self, t0: f64, t1: f64) -> Coefficients {
        let [l0, l1, l2] = self.lambda;
        [(-l0 * t0).exp(), 1.0 - (-l1 * t0).exp() + (-l1 * t1).exp(), 1.0 - (-l2 * t1).exp()]
    }

    /// Mismatched risk from the three-region closed form only. Fails when the
    /// weights order the thresholds the other way round.
    pub fn closed_form_risk(&self, p: &SimplexPoint, a: &SimplexPoint) -> Result<f64> {
        self.check_dim(p)?;
        let (g01, g12) = self.thresholds(a)?;
        if g01 > g12 {
            return Err(Error::InconsistentThresholds { gamma01: g01, gamma12: g12 });
        }
        Ok(p.dot(&self.coefficients_from_thresholds(g01, g12)))
    }

    /// Smallest distance, in log-ratio units, from `a` to a locus where a
    /// threshold clamp switches on or the middle region closes. The risk is
    /// continuously differentiable across these loci but not twice
    /// differentiable.
    pub fn kink_distance(&self, a: &SimplexPoint) -> f64 {
        let a = clamp_weight(a);
        let c = a.coords();
        let r01 = self.raw_threshold(c, 0, 1);
        let r12 = self.raw_threshold(c, 1, 2);
        let r02 = self.raw_threshold(c, 0, 2);
        [
            self.log_ratio(c, 0, 1).abs(),
            self.log_ratio(c, 1, 2).abs(),
            self.log_ratio(c, 0, 2).abs(),
            (r01 - r12).abs(),
            (r01 - r02).abs(),
        ]
        .into_iter()
        .fold(f64::INFINITY, f64::min)
    }
}

impl DetectionModel for ExponentialTernaryModel {
    fn hypotheses(&self) -> usize {
        3
    }

    fn coefficients(&self, a: &SimplexPoint) -> Coefficients {
        let (t0, t1) = self.decision_thresholds(a);
        self.coefficients_from_thresholds(t0, t1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> ExponentialTernaryModel {
        ExponentialTernaryModel::new(5.0, 4.0, 3.0).unwrap()
    }

    fn pt(c: &[f64]) -> SimplexPoint {
        SimplexPoint::new(c).unwrap()
    }

    /// Error coefficients of the MAP rule computed by integrating the
    /// likelihoods over the regions where each hypothesis wins, located on a
    /// fine grid in `y`. Independent of the threshold formulas.
    fn brute_coefficients(m: &ExponentialTernaryModel, a: &[f64]) -> [f64; 3] {
        let l = m.lambdas();
        let dy = 1e-4;
        let mut err = [0.0; 3];
        let mut y = 0.5 * dy;
        while y < 40.0 {
            let score = |k: usize| a[k] * l[k] * (-l[k] * y).exp();
            let winner = (0..3).fold(0, |b, k| if score(k) > score(b) { k } else { b });
            for h in 0..3 {
                if h != winner {
                    err[h] += l[h] * (-l[h] * y).exp() * dy;
                }
            }
            y += dy;
        }
        err
    }

    #[test]
    fn rejects_unordered_rates() {
        assert!(ExponentialTernaryModel::new(3.0, 4.0, 5.0).is_err());
        assert!(ExponentialTernaryModel::new(5.0, 5.0, 3.0).is_err());
        assert!(ExponentialTernaryModel::new(5.0, 4.0, 0.0).is_err());
    }

    #[test]
    fn thresholds_at_uniform_weight() {
        let m = model();
        let (g01, g12) = m.thresholds(&SimplexPoint::uniform(3).unwrap()).unwrap();
        assert!((g01 - (5.0f64 / 4.0).ln()).abs() < 1e-12);
        assert!((g12 - (4.0f64 / 3.0).ln()).abs() < 1e-12);
        // a0 l0 = a1 l1 puts gamma01 exactly at zero
        let (g01, _) = m.thresholds(&pt(&[0.4, 0.5, 0.1])).unwrap();
        assert!(g01.abs() < 1e-12);
        // a0 l0 < a1 l1 clamps
        let (g01, _) = m.thresholds(&pt(&[0.2, 0.5, 0.3])).unwrap();
        assert_eq!(g01, 0.0);
    }

    #[test]
    fn uniform_risk_matches_exact_powers() {
        let m = model();
        let u = SimplexPoint::uniform(3).unwrap();
        let a = 0.8f64.powi(5);
        let b = 1.0 - 0.8f64.powi(4) + 0.75f64.powi(4);
        let c = 1.0 - 0.75f64.powi(3);
        let expected = (a + b + c) / 3.0;
        assert!((m.risk(&u) - expected).abs() < 1e-14);
        assert!((expected - 0.604_205).abs() < 2e-6);
        assert!((m.risk_mismatched(&u, &u).unwrap() - expected).abs() < 1e-14);
        let g = m.gradient(&u).unwrap();
        assert!((g[0] - (a - c)).abs() < 1e-14);
        assert!((g[1] - (b - c)).abs() < 1e-14);
        assert!((g[0] + 0.250_445).abs() < 1e-6);
        assert!((g[1] - 0.328_681).abs() < 1e-6);
    }

    #[test]
    fn closed_form_refuses_empty_middle_region() {
        let m = model();
        // a1 tiny: middle hypothesis never wins
        let a = pt(&[0.5, 0.01, 0.49]);
        let p = SimplexPoint::uniform(3).unwrap();
        assert!(matches!(m.closed_form_risk(&p, &a), Err(Error::InconsistentThresholds { .. })));
        // the general path still evaluates
        assert!(m.risk_mismatched(&p, &a).unwrap() > 0.0);
        let ok = SimplexPoint::uniform(3).unwrap();
        assert_eq!(m.closed_form_risk(&p, &ok).unwrap(), m.risk_mismatched(&p, &ok).unwrap());
    }

    #[test]
    fn coefficients_match_direct_integration_of_the_map_rule() {
        let m = model();
        for a in
            [[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], [0.5, 0.01, 0.49], [0.2, 0.5, 0.3], [0.1, 0.2, 0.7], [0.7, 0.2, 0.1]]
        {
            let c = m.coefficients(&pt(&a));
            let b = brute_coefficients(&m, &a);
            for k in 0..3 {
                assert!((c[k] - b[k]).abs() < 1e-3, "a={a:?} k={k}: {} vs {}", c[k], b[k]);
            }
        }
    }

    #[test]
    fn risk_vanishes_only_at_vertices() {
        let m = model();
        for k in 0..3 {
            assert_eq!(m.risk(&SimplexPoint::vertex(3, k).unwrap()), 0.0);
        }
        // edges carry the binary risk of the remaining pair
        assert!(m.risk(&pt(&[0.5, 0.0, 0.5])) > 0.0);
        assert!(m.risk(&pt(&[0.5, 0.5, 0.0])) > 0.0);
    }
}
