use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::divergence::{divergence_raw, minimax_weight, DivergenceValue};
use crate::error::{Error, Result};
use crate::models::{Coefficients, DetectionModel};
use crate::numeric::Anderson;
use crate::scalar::DesignReport;
use crate::simplex::{SimplexPoint, INTERIOR_MARGIN};

use super::centroid::minimax_center;
use super::geometry::{cell_from_coefficients, cell_max_divergence, polygon_from_chart, CellPolygon};

/// Seeds and their Voronoi cells on the ternary simplex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimplexQuantizer {
    pub seeds: Vec<SimplexPoint>,
    pub cells: Vec<CellPolygon>,
}

impl SimplexQuantizer {
    pub fn len(&self) -> usize {
        self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seeds.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimplexDesignOptions {
    /// Stop once no seed moves by more than this (chart max-norm).
    pub tol: f64,
    pub max_iter: usize,
    /// Number of independent starts; the best run is kept.
    pub multistart: usize,
    pub seed: u64,
    /// Anderson mixing depth applied to the Lloyd iteration; 0 runs plain
    /// Lloyd steps.
    pub anderson: usize,
}

impl Default for SimplexDesignOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 500, multistart: 8, seed: 0, anderson: 5 }
    }
}

/// Minimum distance kept between seeds and the simplex boundary.
const SEED_MARGIN: f64 = 1e-6;

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Point `i` of the base-(2, 3) Halton sequence folded onto the triangle.
fn halton_point(i: u64) -> SimplexPoint {
    let (mut u, mut v) = (radical_inverse(i, 2), radical_inverse(i, 3));
    if u + v > 1.0 {
        u = 1.0 - u;
        v = 1.0 - v;
    }
    SimplexPoint::from_chart_lossy(&[u, v]).clamp_interior(SEED_MARGIN)
}

fn initial_seeds(k: usize, start: usize, seed: u64) -> Vec<SimplexPoint> {
    let base = 1 + seed.wrapping_mul(7919) + (start * k) as u64;
    (0..k as u64).map(|i| halton_point(base + i)).collect()
}

fn voronoi(coeffs: &[Coefficients]) -> Vec<Vec<[f64; 2]>> {
    (0..coeffs.len()).into_par_iter().map(|k| cell_from_coefficients(coeffs, k, 3)).collect()
}

struct Run {
    seeds: Vec<SimplexPoint>,
    iterations: usize,
    converged: bool,
}

/// Vertex of a non-empty cell farthest from its own seed.
fn worst_covered(seeds: &[SimplexPoint], cells: &[Vec<[f64; 2]>], model: &dyn DetectionModel) -> SimplexPoint {
    let mut best = (f64::NEG_INFINITY, SimplexPoint::uniform(3).expect("ternary"));
    for (s, cell) in seeds.iter().zip(cells) {
        for v in cell {
            let p = SimplexPoint::from_chart_lossy(v);
            let d = divergence_raw(model, &p, s);
            if d > best.0 {
                best = (d, p);
            }
        }
    }
    best.1
}

/// Lloyd map: Voronoi cells of the seeds, then each cell's minimax centroid.
/// Empty cells come back as `None`.
/// Centroids (None for empty cells) and the chart polygons they came from.
type LloydStep = (Vec<Option<SimplexPoint>>, Vec<Vec<[f64; 2]>>);

fn lloyd_map(model: &dyn DetectionModel, seeds: &[SimplexPoint]) -> Result<LloydStep> {
    let coeffs: Vec<Coefficients> = seeds.iter().map(|s| model.coefficients(s)).collect();
    let cells = voronoi(&coeffs);
    let next = cells
        .par_iter()
        .map(|poly| {
            if poly.is_empty() {
                return Ok(None);
            }
            let vs: Vec<SimplexPoint> = poly.iter().map(|v| SimplexPoint::from_chart_lossy(v)).collect();
            Ok(Some(minimax_center(model, &vs)?.center.clamp_interior(INTERIOR_MARGIN)))
        })
        .collect::<Result<_>>()?;
    Ok((next, cells))
}

fn flatten(seeds: &[SimplexPoint]) -> Vec<f64> {
    seeds.iter().flat_map(|s| s.chart2()).collect()
}

fn unflatten(x: &[f64]) -> Vec<SimplexPoint> {
    x.chunks(2).map(|c| SimplexPoint::from_chart_lossy(c).clamp_interior(INTERIOR_MARGIN)).collect()
}

fn lloyd(model: &dyn DetectionModel, mut seeds: Vec<SimplexPoint>, opts: &SimplexDesignOptions) -> Result<Run> {
    let mut iterations = 0;
    let mut converged = false;
    let mut mixer = Anderson::new(opts.anderson);
    while iterations < opts.max_iter {
        iterations += 1;
        let (next, cells) = lloyd_map(model, &seeds)?;
        if next.iter().any(Option::is_none) {
            let mut next = next;
            for k in 0..next.len() {
                if next[k].is_none() {
                    let p = worst_covered(&seeds, &cells, model).clamp_interior(SEED_MARGIN);
                    log::debug!("cell {k} empty at iteration {iterations}; reseeding at {p:?}");
                    next[k] = Some(p);
                    // later empty cells should not land on the same point
                    seeds[k] = p;
                }
            }
            seeds = next.into_iter().map(|p| p.expect("filled")).collect();
            mixer.reset();
            continue;
        }
        let next: Vec<SimplexPoint> = next.into_iter().map(|p| p.expect("filled")).collect();
        let movement = seeds.iter().zip(&next).map(|(a, b)| a.chart_distance(b)).fold(0.0, f64::max);
        log::trace!("iteration {iterations}: seed movement {movement:e}");
        if movement < opts.tol {
            seeds = next;
            converged = true;
            break;
        }
        seeds = unflatten(&mixer.push(flatten(&seeds), flatten(&next)));
    }
    Ok(Run { seeds, iterations, converged })
}

/// Per-cell worst divergences of a quantizer and their maximum. Empty cells
/// contribute zero.
pub fn simplex_max_divergence<M: DetectionModel + ?Sized>(
    model: &M,
    q: &SimplexQuantizer,
) -> Result<(Vec<DivergenceValue>, DivergenceValue)> {
    let mut cell_maxima = Vec::with_capacity(q.cells.len());
    for (cell, seed) in q.cells.iter().zip(&q.seeds) {
        if cell.is_empty() {
            cell_maxima.push(DivergenceValue::new(0.0));
        } else {
            cell_maxima.push(DivergenceValue::new(cell_max_divergence(model, cell, seed)?.0));
        }
    }
    let max = cell_maxima.iter().copied().fold(DivergenceValue::new(0.0), |a, b| if b > a { b } else { a });
    Ok((cell_maxima, max))
}

impl SimplexQuantizer {
    /// Seeds together with their Voronoi cells.
    pub fn from_seeds<M: DetectionModel + ?Sized>(model: &M, seeds: Vec<SimplexPoint>) -> Result<Self> {
        for s in &seeds {
            model.check_dim(s)?;
        }
        if model.hypotheses() != 3 {
            return Err(Error::UnsupportedDimension(model.hypotheses()));
        }
        let coeffs: Vec<Coefficients> = seeds.iter().map(|s| model.coefficients(s)).collect();
        let cells = voronoi(&coeffs).iter().enumerate().map(|(k, poly)| polygon_from_chart(k, poly)).collect();
        Ok(Self { seeds, cells })
    }
}

fn finish(model: &dyn DetectionModel, run: Run) -> Result<(SimplexQuantizer, DesignReport)> {
    let q = SimplexQuantizer::from_seeds(model, run.seeds)?;
    let (cell_maxima, max_divergence) = simplex_max_divergence(model, &q)?;
    let report = DesignReport {
        iterations: run.iterations,
        converged: run.converged && q.cells.iter().all(|c| !c.is_empty()),
        max_divergence,
        cell_maxima,
    };
    Ok((q, report))
}

/// Minimax Bayes risk error quantizer with `k` cells on the ternary simplex.
///
/// Each start runs the Lloyd alternation from low-discrepancy seeds; the run
/// with the smallest worst-case divergence wins, converged runs first.
pub fn design_minimax_simplex<M: DetectionModel + ?Sized>(
    model: &M,
    k: usize,
    opts: &SimplexDesignOptions,
) -> Result<(SimplexQuantizer, DesignReport)> {
    if model.hypotheses() != 3 {
        return Err(Error::UnsupportedDimension(model.hypotheses()));
    }
    if k == 0 {
        return Err(Error::Domain("at least one cell is required".into()));
    }
    let model = &ModelRef(model);
    if k == 1 {
        let (a, _) = minimax_weight(model)?;
        return finish(model, Run { seeds: vec![a], iterations: 0, converged: true });
    }
    let starts = opts.multistart.max(1);
    let runs: Vec<Result<(SimplexQuantizer, DesignReport)>> = (0..starts)
        .into_par_iter()
        .map(|s| finish(model, lloyd(model, initial_seeds(k, s, opts.seed), opts)?))
        .collect();
    let mut best: Option<(SimplexQuantizer, DesignReport)> = None;
    let mut first_err = None;
    for run in runs {
        match run {
            Ok(r) => {
                let better = match &best {
                    None => true,
                    Some((_, b)) => {
                        (r.1.converged, -r.1.max_divergence.value()) > (b.converged, -b.max_divergence.value())
                    }
                };
                if better {
                    best = Some(r);
                }
            }
            Err(e) => {
                log::warn!("start failed: {e}");
                first_err.get_or_insert(e);
            }
        }
    }
    match best {
        Some(b) => {
            if !b.1.converged {
                log::warn!("ternary design with K={k} did not converge");
            }
            Ok(b)
        }
        None => Err(first_err.expect("at least one start")),
    }
}

/// Adapter giving `&dyn DetectionModel` for possibly unsized models.
struct ModelRef<'a, M: ?Sized>(&'a M);

impl<M: DetectionModel + ?Sized> DetectionModel for ModelRef<'_, M> {
    fn hypotheses(&self) -> usize {
        self.0.hypotheses()
    }

    fn coefficients(&self, a: &SimplexPoint) -> Coefficients {
        self.0.coefficients(a)
    }
}

/// Cell of `p`: the seed with the smallest divergence, lowest index on ties.
pub fn quantize_simplex<M: DetectionModel + ?Sized>(
    model: &M,
    q: &SimplexQuantizer,
    p: &SimplexPoint,
) -> Result<(usize, SimplexPoint)> {
    model.check_dim(p)?;
    if q.is_empty() {
        return Err(Error::Domain("quantizer has no seeds".into()));
    }
    // J(p) is common to every candidate, so compare p . c_k only
    let mut best = (0, f64::INFINITY);
    for (k, s) in q.seeds.iter().enumerate() {
        let v = p.dot(&model.coefficients(s));
        if v < best.1 - 1e-12 {
            best = (k, v);
        }
    }
    Ok((best.0, q.seeds[best.0]))
}
