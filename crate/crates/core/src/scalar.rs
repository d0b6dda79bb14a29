//! Minimax Bayes risk error quantizers on `[0, 1]` for binary tests.
//!
//! The design alternates the two optimality conditions:
//!
//! * centroid: inside `[b_lo, b_hi]` the weight solves
//!   `J'(a) = (J(b_hi) - J(b_lo)) / (b_hi - b_lo)`, which equalises the
//!   divergence at both cell ends;
//! * boundary: between weights `a_k < a_{k+1}` the boundary is where the two
//!   tangent lines of `J` cross.
//!
//! A minimum-mean-divergence design with the same boundary rule is provided
//! for comparison.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::divergence::{binary_divergence, minimax_weight, DivergenceValue};
use crate::error::{Error, Result};
use crate::models::{binary_mismatched, binary_risk, binary_slope, DetectionModel};
use crate::numeric::{adaptive_simpson, bisect, golden_max, Anderson};
use crate::simplex::INTERIOR_MARGIN;

/// K decision weights interleaved with K - 1 cell boundaries.
///
/// Cells are `[0, b_1]`, `(b_1, b_2]`, ..., `(b_{K-1}, 1]`; indices are
/// zero-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarQuantizer {
    boundaries: Vec<f64>,
    weights: Vec<f64>,
}

impl ScalarQuantizer {
    pub fn new(boundaries: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || boundaries.len() + 1 != weights.len() {
            return Err(Error::Domain(format!(
                "{} weights need {} boundaries, got {}",
                weights.len(),
                weights.len().saturating_sub(1),
                boundaries.len()
            )));
        }
        let q = Self { boundaries, weights };
        if !q.is_interleaved() {
            return Err(Error::Domain("weights and boundaries are not interleaved".into()));
        }
        Ok(q)
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn cells(&self) -> usize {
        self.weights.len()
    }

    /// Edges of cell `k`.
    pub fn cell_edges(&self, k: usize) -> (f64, f64) {
        let lo = if k == 0 { 0.0 } else { self.boundaries[k - 1] };
        let hi = if k + 1 == self.cells() { 1.0 } else { self.boundaries[k] };
        (lo, hi)
    }

    /// `0 < a_1 < b_1 < a_2 < ... < b_{K-1} < a_K < 1`.
    pub fn is_interleaved(&self) -> bool {
        let mut seq = Vec::with_capacity(2 * self.weights.len() + 1);
        seq.push(0.0);
        for (k, &a) in self.weights.iter().enumerate() {
            seq.push(a);
            if let Some(&b) = self.boundaries.get(k) {
                seq.push(b);
            }
        }
        seq.push(1.0);
        seq.windows(2).all(|w| w[0] < w[1])
    }
}

/// Outcome of an iterative design.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignReport {
    pub iterations: usize,
    pub converged: bool,
    pub max_divergence: DivergenceValue,
    pub cell_maxima: Vec<DivergenceValue>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarDesignOptions {
    /// Stop when no boundary or weight moves by more than this.
    pub tol: f64,
    pub max_iter: usize,
    /// Extra runs from randomly perturbed uniform partitions; the run with
    /// the smallest maximum divergence is kept.
    pub multistart: usize,
    pub seed: u64,
    /// Anderson mixing depth on the weight iteration; 0 runs plain steps.
    pub anderson: usize,
}

impl Default for ScalarDesignOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 10_000, multistart: 0, seed: 0, anderson: 5 }
    }
}

fn ensure_binary<M: DetectionModel + ?Sized>(model: &M) -> Result<()> {
    match model.hypotheses() {
        2 => Ok(()),
        m => Err(Error::UnsupportedDimension(m)),
    }
}

/// Minimax centroid of the cell `[b_lo, b_hi]`.
pub fn centroid<M: DetectionModel + ?Sized>(model: &M, b_lo: f64, b_hi: f64) -> Result<f64> {
    ensure_binary(model)?;
    if !(0.0 <= b_lo && b_lo < b_hi && b_hi <= 1.0) {
        return Err(Error::Domain(format!("cell [{b_lo}, {b_hi}] is not a subinterval of [0, 1]")));
    }
    centroid_unchecked(model, b_lo, b_hi)
}

fn centroid_unchecked<M: DetectionModel + ?Sized>(model: &M, b_lo: f64, b_hi: f64) -> Result<f64> {
    let slope = (binary_risk(model, b_hi) - binary_risk(model, b_lo)) / (b_hi - b_lo);
    let lo = b_lo.max(INTERIOR_MARGIN);
    let hi = b_hi.min(1.0 - INTERIOR_MARGIN);
    if hi <= lo {
        return Ok(0.5 * (b_lo + b_hi));
    }
    let d_lo = binary_slope(model, lo);
    let d_hi = binary_slope(model, hi);
    let slack = 1e-9 * (1.0 + slope.abs());
    if slope > d_lo + slack || slope < d_hi - slack {
        return Err(Error::Bracket { slope, lo: d_lo, hi: d_hi });
    }
    if slope >= d_lo {
        return Ok(lo);
    }
    if slope <= d_hi {
        return Ok(hi);
    }
    Ok(bisect(|a| binary_slope(model, a) - slope, lo, hi, 0.0, 200))
}

/// Boundary between adjacent weights `a_k < a_k1`: the abscissa where the
/// tangent lines of `J` at the two weights intersect.
pub fn boundary<M: DetectionModel + ?Sized>(model: &M, a_k: f64, a_k1: f64) -> Result<f64> {
    ensure_binary(model)?;
    if !(0.0 < a_k && a_k < a_k1 && a_k1 < 1.0) {
        return Err(Error::Degenerate(format!("weights {a_k}, {a_k1} are not increasing and interior")));
    }
    boundary_unchecked(model, a_k, a_k1)
}

fn boundary_unchecked<M: DetectionModel + ?Sized>(model: &M, a0: f64, a1: f64) -> Result<f64> {
    let g0 = binary_slope(model, a0);
    let g1 = binary_slope(model, a1);
    let j0 = binary_mismatched(model, a0, a0);
    let j1 = binary_mismatched(model, a1, a1);
    let den = g1 - g0;
    if den == 0.0 {
        return Err(Error::Degenerate(format!("weights {a0} and {a1} share a tangent slope")));
    }
    let b = (a1 * g1 - a0 * g0 - (j1 - j0)) / den;
    Ok(b.clamp(a0, a1))
}

/// Cell index (zero-based) and weight assigned to the prior `p0`.
pub fn quantize(q: &ScalarQuantizer, p0: f64) -> Result<(usize, f64)> {
    if !(0.0..=1.0).contains(&p0) {
        return Err(Error::Domain(format!("prior {p0} not in [0, 1]")));
    }
    let k = q.boundaries.partition_point(|&b| b < p0);
    Ok((k, q.weights[k]))
}

/// Per-cell maxima of the divergence (attained at the cell ends) and their
/// overall maximum.
pub fn max_divergence<M: DetectionModel + ?Sized>(
    model: &M,
    q: &ScalarQuantizer,
) -> (Vec<DivergenceValue>, DivergenceValue) {
    let cells: Vec<DivergenceValue> = (0..q.cells())
        .map(|k| {
            let (lo, hi) = q.cell_edges(k);
            let a = q.weights[k];
            DivergenceValue::new(binary_divergence(model, lo, a).max(binary_divergence(model, hi, a)))
        })
        .collect();
    let worst = cells.iter().copied().fold(DivergenceValue::new(0.0), |m, d| if d > m { d } else { m });
    (cells, worst)
}

/// The 2K endpoint divergences `d(b_{k-1} || a_k), d(b_k || a_k)` in order.
pub fn endpoint_divergences<M: DetectionModel + ?Sized>(model: &M, q: &ScalarQuantizer) -> Vec<f64> {
    (0..q.cells())
        .flat_map(|k| {
            let (lo, hi) = q.cell_edges(k);
            let a = q.weights[k];
            [binary_divergence(model, lo, a), binary_divergence(model, hi, a)]
        })
        .collect()
}

fn uniform_boundaries(k: usize) -> Vec<f64> {
    (1..k).map(|i| i as f64 / k as f64).collect()
}

fn perturbed_boundaries(k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let h = 1.0 / k as f64;
    (1..k).map(|i| i as f64 * h + rng.gen_range(-0.3..0.3) * h).collect()
}

type CentroidFn<'a, M> = dyn Fn(&M, f64, f64) -> Result<f64> + 'a;

/// Lloyd–Max alternation from the given boundaries, with optional Anderson
/// mixing on the weights.
fn lloyd<M: DetectionModel + ?Sized>(
    model: &M,
    mut b: Vec<f64>,
    centroid_fn: &CentroidFn<'_, M>,
    opts: &ScalarDesignOptions,
) -> Result<(ScalarQuantizer, usize, bool)> {
    let centroids = |b: &[f64]| -> Result<Vec<f64>> {
        let k = b.len() + 1;
        (0..k)
            .map(|i| {
                let lo = if i == 0 { 0.0 } else { b[i - 1] };
                let hi = if i + 1 == k { 1.0 } else { b[i] };
                centroid_fn(model, lo, hi)
            })
            .collect()
    };
    let boundaries =
        |a: &[f64]| -> Result<Vec<f64>> { a.windows(2).map(|w| boundary_unchecked(model, w[0], w[1])).collect() };
    let mut mixer = Anderson::new(opts.anderson);
    let mut a = centroids(&b)?;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        iterations += 1;
        let b_new = boundaries(&a)?;
        let a_new = centroids(&b_new)?;
        let change = b.iter().zip(&b_new).chain(a.iter().zip(&a_new)).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        b = b_new;
        if change < opts.tol {
            a = a_new;
            converged = true;
            break;
        }
        let proposal = mixer.push(a, a_new.clone());
        let ordered = proposal.windows(2).all(|w| w[0] < w[1])
            && proposal.first().is_none_or(|&x| x > 0.0)
            && proposal.last().is_none_or(|&x| x < 1.0);
        a = if ordered {
            proposal
        } else {
            mixer.reset();
            a_new
        };
    }
    let q = ScalarQuantizer { boundaries: b, weights: a };
    if !q.is_interleaved() {
        log::warn!("design lost interleaving after {iterations} iterations");
    }
    Ok((q, iterations, converged))
}

fn run_multistart<M, F>(
    model: &M,
    k: usize,
    opts: &ScalarDesignOptions,
    centroid_fn: &CentroidFn<'_, M>,
    score: F,
) -> Result<(ScalarQuantizer, usize, bool)>
where
    M: DetectionModel + ?Sized,
    F: Fn(&ScalarQuantizer) -> f64,
{
    let mut best = lloyd(model, uniform_boundaries(k), centroid_fn, opts)?;
    let mut best_score = score(&best.0);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.multistart {
        let run = lloyd(model, perturbed_boundaries(k, &mut rng), centroid_fn, opts)?;
        let s = score(&run.0);
        if s < best_score {
            best_score = s;
            best = run;
        }
    }
    Ok(best)
}

/// Minimax Bayes risk error quantizer with `k` cells.
pub fn design_minimax<M: DetectionModel + ?Sized>(
    model: &M,
    k: usize,
    opts: &ScalarDesignOptions,
) -> Result<(ScalarQuantizer, DesignReport)> {
    ensure_binary(model)?;
    if k == 0 {
        return Err(Error::Domain("at least one cell is required".into()));
    }
    if k == 1 {
        let (a, worst) = minimax_weight(model)?;
        let q = ScalarQuantizer { boundaries: vec![], weights: vec![a.coords()[0]] };
        let report = DesignReport { iterations: 0, converged: true, max_divergence: worst, cell_maxima: vec![worst] };
        return Ok((q, report));
    }
    let (q, iterations, converged) =
        run_multistart(model, k, opts, &|m: &M, lo, hi| centroid_unchecked(m, lo, hi), |q| {
            max_divergence(model, q).1.value()
        })?;
    let (cell_maxima, max_divergence) = max_divergence(model, &q);
    if !converged {
        log::warn!("minimax design with K={k} did not converge in {iterations} iterations");
    }
    Ok((q, DesignReport { iterations, converged, max_divergence, cell_maxima }))
}

/// Mean divergence of `a` over `[lo, hi]` under a uniform prior density, by
/// adaptive quadrature.
fn cell_mean_divergence<M: DetectionModel + ?Sized>(model: &M, lo: f64, hi: f64, a: f64) -> f64 {
    adaptive_simpson(&|p| binary_divergence(model, p, a), lo, hi, 1e-14)
}

/// Weight minimising the mean divergence over `[b_lo, b_hi]`.
pub fn mean_centroid<M: DetectionModel + ?Sized>(model: &M, b_lo: f64, b_hi: f64) -> Result<f64> {
    ensure_binary(model)?;
    if !(0.0 <= b_lo && b_lo < b_hi && b_hi <= 1.0) {
        return Err(Error::Domain(format!("cell [{b_lo}, {b_hi}] is not a subinterval of [0, 1]")));
    }
    Ok(mean_centroid_unchecked(model, b_lo, b_hi))
}

fn mean_centroid_unchecked<M: DetectionModel + ?Sized>(model: &M, b_lo: f64, b_hi: f64) -> f64 {
    let lo = b_lo.max(INTERIOR_MARGIN);
    let hi = b_hi.min(1.0 - INTERIOR_MARGIN);
    golden_max(|a| -cell_mean_divergence(model, b_lo, b_hi, a), lo, hi, 1e-13, 200).0
}

/// Total divergence `sum_k integral_{cell k} d(p || a_k) dp` (uniform density).
pub fn mean_divergence<M: DetectionModel + ?Sized>(model: &M, q: &ScalarQuantizer) -> f64 {
    (0..q.cells())
        .map(|k| {
            let (lo, hi) = q.cell_edges(k);
            cell_mean_divergence(model, lo, hi, q.weights[k])
        })
        .sum()
}

/// Minimum mean Bayes risk error quantizer (uniform prior density), designed
/// with the same boundary rule. Returns the quantizer, its mean divergence
/// and the design report (whose divergence fields refer to the maximum, for
/// comparison with the minimax design).
pub fn design_mean_bre<M: DetectionModel + ?Sized>(
    model: &M,
    k: usize,
    opts: &ScalarDesignOptions,
) -> Result<(ScalarQuantizer, f64, DesignReport)> {
    ensure_binary(model)?;
    if k == 0 {
        return Err(Error::Domain("at least one cell is required".into()));
    }
    // golden-section resolution bounds the attainable parameter change
    let opts = ScalarDesignOptions { tol: opts.tol.max(1e-8), ..opts.clone() };
    let (q, iterations, converged) = if k == 1 {
        let a = mean_centroid_unchecked(model, 0.0, 1.0);
        (ScalarQuantizer { boundaries: vec![], weights: vec![a] }, 0, true)
    } else {
        run_multistart(model, k, &opts, &|m: &M, lo, hi| Ok(mean_centroid_unchecked(m, lo, hi)), |q| {
            mean_divergence(model, q)
        })?
    };
    let (cell_maxima, max_div) = max_divergence(model, &q);
    let mean = mean_divergence(model, &q);
    Ok((q, mean, DesignReport { iterations, converged, max_divergence: max_div, cell_maxima }))
}
