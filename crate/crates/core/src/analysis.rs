//! Distortion-versus-K sweeps, log-log slope fits and brute-force oracles.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::divergence::{binary_divergence, divergence_raw, worst_vertex_divergence, DivergenceValue};
use crate::error::{Error, Result};
use crate::models::{binary_risk, binary_slope, DetectionModel};
use crate::numeric::bisect;
use crate::scalar::{design_minimax, ScalarDesignOptions, ScalarQuantizer};
use crate::simplex::{SimplexPoint, INTERIOR_MARGIN};
use crate::simplex_quant::{design_minimax_simplex, CellPolygon, SimplexDesignOptions};

/// Smallest K used in slope fits by default; the first few K sit off the
/// asymptotic line.
pub const DEFAULT_K_MIN: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub k: usize,
    /// Worst-case divergence of the design; absent when the design failed.
    pub d: Option<DivergenceValue>,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub entries: Vec<SweepEntry>,
}

impl SweepResult {
    /// `(K, D)` of converged entries.
    pub fn converged_points(&self) -> Vec<(usize, f64)> {
        self.entries.iter().filter(|e| e.converged).filter_map(|e| e.d.map(|d| (e.k, d.value()))).collect()
    }

    /// True when D never rises by more than `tol` between converged entries.
    pub fn is_nonincreasing(&self, tol: f64) -> bool {
        self.converged_points().windows(2).all(|w| w[1].1 <= w[0].1 + tol)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DesignOptions {
    pub scalar: ScalarDesignOptions,
    pub simplex: SimplexDesignOptions,
}

/// Designs a quantizer for each K (ascending) and records the worst-case
/// divergence. Failed designs are kept as unconverged entries.
pub fn sweep<M: DetectionModel + ?Sized>(model: &M, ks: &[usize], opts: &DesignOptions) -> Result<SweepResult> {
    if ks.is_empty() {
        return Err(Error::Domain("empty K list".into()));
    }
    if ks[0] == 0 || ks.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain(format!("K list must be positive and strictly increasing: {ks:?}")));
    }
    let m = model.hypotheses();
    if m != 2 && m != 3 {
        return Err(Error::UnsupportedDimension(m));
    }
    let entries = ks
        .par_iter()
        .map(|&k| {
            let report = if m == 2 {
                design_minimax(model, k, &opts.scalar).map(|(_, r)| r)
            } else {
                design_minimax_simplex(model, k, &opts.simplex).map(|(_, r)| r)
            };
            match report {
                Ok(r) => SweepEntry { k, d: Some(r.max_divergence), converged: r.converged, iterations: r.iterations },
                Err(e) => {
                    log::warn!("design with K={k} failed: {e}");
                    SweepEntry { k, d: None, converged: false, iterations: 0 }
                }
            }
        })
        .collect();
    Ok(SweepResult { entries })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub k_min_used: usize,
}

/// Least-squares line through `(ln K, ln D)` over converged entries with
/// `K >= k_min`.
pub fn loglog_slope(s: &SweepResult, k_min: usize) -> Result<SlopeFit> {
    let pts: Vec<(f64, f64)> = s
        .converged_points()
        .into_iter()
        .filter(|&(k, d)| k >= k_min && d > 0.0)
        .map(|(k, d)| ((k as f64).ln(), d.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} converged entries with K >= {k_min}; at least 3 needed",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    Ok(SlopeFit { slope, intercept: my - slope * mx, r2, k_min_used: k_min })
}

/// Root-mean-square distance of scalar weights from `center`.
pub fn spread_about(weights: &[f64], center: f64) -> f64 {
    (weights.iter().map(|a| (a - center).powi(2)).sum::<f64>() / weights.len() as f64).sqrt()
}

/// Weight of the cell `[lo, hi]` that equalises the end divergences,
/// found by bisection on `J'(a)` against the chord slope.
fn oracle_centroid<M: DetectionModel + ?Sized>(model: &M, lo: f64, hi: f64) -> f64 {
    let chord = (binary_risk(model, hi) - binary_risk(model, lo)) / (hi - lo);
    let a_lo = lo.max(INTERIOR_MARGIN);
    let a_hi = hi.min(1.0 - INTERIOR_MARGIN);
    bisect(|a| binary_slope(model, a) - chord, a_lo, a_hi, 1e-13, 200)
}

fn oracle_cell_cost<M: DetectionModel + ?Sized>(model: &M, lo: f64, hi: f64) -> (f64, f64) {
    let a = oracle_centroid(model, lo, hi);
    let d = binary_divergence(model, lo, a).max(binary_divergence(model, hi, a));
    (a, d)
}

/// Exhaustive search over boundary tuples on a grid of spacing `grid_step`,
/// each cell taking its equalising weight. `K = 1` returns the grid maximiser
/// of `J`.
pub fn grid_oracle_scalar<M: DetectionModel + ?Sized>(
    model: &M,
    k: usize,
    grid_step: f64,
) -> Result<(ScalarQuantizer, DivergenceValue)> {
    if model.hypotheses() != 2 {
        return Err(Error::UnsupportedDimension(model.hypotheses()));
    }
    if !(1..=3).contains(&k) {
        return Err(Error::Domain(format!("grid oracle supports K in 1..=3, got {k}")));
    }
    if !(grid_step > 0.0 && grid_step <= 1e-3) {
        return Err(Error::Domain(format!("grid step must be in (0, 1e-3], got {grid_step}")));
    }
    let n = (1.0 / grid_step).round() as usize;
    let x = |i: usize| i as f64 / n as f64;
    match k {
        1 => {
            let (i, _) = (1..n).map(|i| (i, binary_risk(model, x(i)))).fold((1, f64::NEG_INFINITY), |b, c| {
                if c.1 > b.1 {
                    c
                } else {
                    b
                }
            });
            let a = x(i);
            let q = ScalarQuantizer::new(vec![], vec![a])?;
            let worst = worst_vertex_divergence(model, &SimplexPoint::binary(a)?);
            Ok((q, worst))
        }
        2 => {
            let (i, d) = (1..n)
                .into_par_iter()
                .map(|i| (i, oracle_cell_cost(model, 0.0, x(i)).1.max(oracle_cell_cost(model, x(i), 1.0).1)))
                .reduce(|| (0, f64::INFINITY), |b, c| if c.1 < b.1 || (c.1 == b.1 && c.0 < b.0) { c } else { b });
            let b1 = x(i);
            let a = vec![oracle_centroid(model, 0.0, b1), oracle_centroid(model, b1, 1.0)];
            Ok((ScalarQuantizer::new(vec![b1], a)?, DivergenceValue::new(d)))
        }
        _ => {
            let first: Vec<f64> =
                (0..=n).map(|i| if i == 0 { f64::INFINITY } else { oracle_cell_cost(model, 0.0, x(i)).1 }).collect();
            let last: Vec<f64> =
                (0..=n).map(|j| if j == n { f64::INFINITY } else { oracle_cell_cost(model, x(j), 1.0).1 }).collect();
            let (i, j, d) = (1..n)
                .into_par_iter()
                .map(|i| {
                    ((i + 1)..n)
                        .map(|j| {
                            let d = first[i].max(last[j]);
                            if d >= f64::INFINITY {
                                return (i, j, d);
                            }
                            (i, j, d.max(oracle_cell_cost(model, x(i), x(j)).1))
                        })
                        .fold((0, 0, f64::INFINITY), |b, c| if c.2 < b.2 { c } else { b })
                })
                .reduce(
                    || (0, 0, f64::INFINITY),
                    |b, c| if c.2 < b.2 || (c.2 == b.2 && (c.0, c.1) < (b.0, b.1)) { c } else { b },
                );
            let (b1, b2) = (x(i), x(j));
            let a =
                vec![oracle_centroid(model, 0.0, b1), oracle_centroid(model, b1, b2), oracle_centroid(model, b2, 1.0)];
            Ok((ScalarQuantizer::new(vec![b1, b2], a)?, DivergenceValue::new(d)))
        }
    }
}

fn max_vertex_divergence<M: DetectionModel + ?Sized>(model: &M, cell: &CellPolygon, a: &SimplexPoint) -> f64 {
    cell.vertices.iter().map(|v| divergence_raw(model, v, a)).fold(f64::NEG_INFINITY, f64::max)
}

/// Brute-force minimax centroid: the in-cell point of a barycentric grid with
/// spacing `grid_step` whose largest vertex divergence is smallest. Segment
/// cells are sampled along the segment; cells too small to contain a grid
/// point get a local grid of the same resolution relative to their extent.
/// The best point is then refined twice on a tenfold finer local grid.
pub fn grid_oracle_centroid_simplex<M: DetectionModel + ?Sized>(
    model: &M,
    cell: &CellPolygon,
    grid_step: f64,
) -> Result<(SimplexPoint, DivergenceValue)> {
    if cell.is_empty() {
        return Err(Error::EmptyCell(cell.seed_index));
    }
    if !(grid_step > 0.0 && grid_step <= 2e-3) {
        return Err(Error::Domain(format!("grid step must be in (0, 2e-3], got {grid_step}")));
    }
    for v in &cell.vertices {
        model.check_dim(v)?;
    }
    let vs = &cell.vertices;
    let n = (1.0 / grid_step).round() as usize;
    let pick = |cands: Vec<SimplexPoint>| {
        cands
            .into_par_iter()
            .filter(|p| p.min_coord() > 0.0)
            .map(|p| (max_vertex_divergence(model, cell, &p), p))
            .reduce_with(|b, c| if c.0 < b.0 { c } else { b })
    };
    let best = match vs.len() {
        1 => Some((0.0, vs[0])),
        2 => pick((0..=n).map(|i| vs[0].lerp(&vs[1], i as f64 / n as f64)).collect()),
        _ => {
            let grid: Vec<SimplexPoint> = (0..=n)
                .flat_map(|i| (0..=n - i).map(move |j| (i, j)))
                .map(|(i, j)| SimplexPoint::from_chart_lossy(&[i as f64 / n as f64, j as f64 / n as f64]))
                .filter(|p| cell.contains(p, 1e-12))
                .collect();
            if grid.is_empty() {
                let cv = cell.chart_vertices();
                let lo = [0, 1].map(|c| cv.iter().map(|v| v[c]).fold(f64::INFINITY, f64::min));
                let hi = [0, 1].map(|c| cv.iter().map(|v| v[c]).fold(f64::NEG_INFINITY, f64::max));
                let local: Vec<SimplexPoint> = (0..=n)
                    .flat_map(|i| (0..=n).map(move |j| (i, j)))
                    .map(|(i, j)| {
                        let t = [i as f64 / n as f64, j as f64 / n as f64];
                        SimplexPoint::from_chart_lossy(&[
                            lo[0] + t[0] * (hi[0] - lo[0]),
                            lo[1] + t[1] * (hi[1] - lo[1]),
                        ])
                    })
                    .filter(|p| cell.contains(p, 1e-12))
                    .collect();
                pick(local)
            } else {
                pick(grid)
            }
        }
    };
    let (mut d, mut p) = best.ok_or_else(|| Error::Degenerate("no interior grid point in the cell".into()))?;
    if vs.len() > 1 {
        let mut h = grid_step;
        for _ in 0..2 {
            let c = p.chart2();
            let local: Vec<SimplexPoint> = (-10..=10)
                .flat_map(|i| (-10..=10).map(move |j| (i, j)))
                .map(|(i, j)| SimplexPoint::from_chart_lossy(&[c[0] + h * i as f64 / 10.0, c[1] + h * j as f64 / 10.0]))
                .filter(|q| cell.contains(q, 1e-12))
                .collect();
            if let Some((dl, pl)) = pick(local) {
                if dl < d {
                    (d, p) = (dl, pl);
                }
            }
            h /= 10.0;
        }
    }
    Ok((p, DivergenceValue::new(d)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{BinaryGaussianModel, ExponentialTernaryModel};
    use crate::simplex_quant::minimax_centroid;

    fn unit() -> BinaryGaussianModel {
        BinaryGaussianModel::new(1.0, 1.0, 1.0, 1.0).unwrap()
    }

    fn synthetic(ks: &[usize], f: impl Fn(f64) -> f64) -> SweepResult {
        SweepResult {
            entries: ks
                .iter()
                .map(|&k| SweepEntry { k, d: Some(DivergenceValue::new(f(k as f64))), converged: true, iterations: 0 })
                .collect(),
        }
    }

    #[test]
    fn exact_power_law_slope() {
        let s = synthetic(&[4, 5, 8, 13, 20], |k| k.powi(-2));
        let fit = loglog_slope(&s, 4).unwrap();
        assert!((fit.slope + 2.0).abs() < 1e-12);
        assert!(fit.intercept.abs() < 1e-12);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
        let s = synthetic(&[1, 2, 3, 4, 5, 6], |k| 3.0 / k);
        let fit = loglog_slope(&s, 2).unwrap();
        assert!((fit.slope + 1.0).abs() < 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn slope_needs_three_points() {
        let s = synthetic(&[1, 4, 5], |k| 1.0 / k);
        assert!(matches!(loglog_slope(&s, 4), Err(Error::InsufficientData(_))));
        let mut s = synthetic(&[4, 5, 6], |k| 1.0 / k);
        s.entries[1].converged = false;
        assert!(loglog_slope(&s, 4).is_err());
    }

    #[test]
    fn sweep_first_entries() {
        let s = sweep(&unit(), &[1, 2], &DesignOptions::default()).unwrap();
        let d: Vec<f64> = s.entries.iter().map(|e| e.d.unwrap().value()).collect();
        assert!((d[0] - 0.308_538).abs() < 1e-5);
        assert!((d[1] - 0.0688).abs() < 1e-3);
        assert!(s.is_nonincreasing(1e-9));
        assert!(sweep(&unit(), &[2, 1], &DesignOptions::default()).is_err());
        assert!(sweep(&unit(), &[], &DesignOptions::default()).is_err());
    }

    #[test]
    fn single_k_matches_minimax_weight() {
        let m = ExponentialTernaryModel::new(5.0, 4.0, 3.0).unwrap();
        let s = sweep(&m, &[1], &DesignOptions::default()).unwrap();
        let (_, worst) = crate::divergence::minimax_weight(&m).unwrap();
        assert_eq!(s.entries[0].d, Some(worst));
    }

    #[test]
    fn scalar_oracle_single_cell_is_grid_peak() {
        let (q, d) = grid_oracle_scalar(&unit(), 1, 1e-3).unwrap();
        assert!((q.weights()[0] - 0.5).abs() < 1e-12);
        assert!((d.value() - 0.308_538).abs() < 1e-5);
        assert!(grid_oracle_scalar(&unit(), 4, 1e-3).is_err());
        assert!(grid_oracle_scalar(&unit(), 2, 1e-2).is_err());
    }

    #[test]
    fn scalar_oracle_asymmetric_boundary_moves_left() {
        let m = BinaryGaussianModel::new(1.0, 1.0, 10.0, 1.0).unwrap();
        let (q, _) = grid_oracle_scalar(&m, 2, 1e-3).unwrap();
        assert!(q.boundaries()[0] < 0.5);
    }

    #[test]
    fn centroid_oracle_trivial_cells() {
        let m = ExponentialTernaryModel::new(5.0, 4.0, 3.0).unwrap();
        let v = SimplexPoint::new(&[0.2, 0.3, 0.5]).unwrap();
        let (p, d) = grid_oracle_centroid_simplex(&m, &CellPolygon { seed_index: 0, vertices: vec![v] }, 2e-3).unwrap();
        assert_eq!(p, v);
        assert_eq!(d.value(), 0.0);
        let whole = CellPolygon::simplex(0);
        let (_, d) = grid_oracle_centroid_simplex(&m, &whole, 2e-3).unwrap();
        let c = minimax_centroid(&m, &whole).unwrap();
        assert!(d.value() >= c.radius.value() - 1e-12);
        assert!(d.value() - c.radius.value() < 1e-4);
    }

    #[test]
    fn spread() {
        assert!((spread_about(&[0.4, 0.6], 0.5) - 0.1).abs() < 1e-15);
        assert_eq!(spread_about(&[0.5], 0.5), 0.0);
    }
}
