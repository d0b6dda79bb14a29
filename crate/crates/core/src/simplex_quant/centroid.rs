//! Minimax centroids of polygonal cells and the inverse risk gradient.
//!
//! For a cell with vertices `b_i` the centroid minimises
//! `g(a) = max_i d(b_i || a)`. Writing `a` as a mixture `sum_i w_i b_i`, the
//! mixture weights solve the concave program
//!
//! ```text
//! maximise  J(sum_i w_i b_i) - sum_i w_i J(b_i)   over the probability simplex,
//! ```
//!
//! whose partial derivative in `w_i` is exactly `d(b_i || a)`. Its optimum
//! value is the minimax radius and the mixture point is the centroid; at the
//! optimum every support vertex (`w_i > 0`) sits at the common maximal
//! divergence.
//!
//! For a fixed mixture point `m` the cheapest weights give the lower convex
//! envelope `L` of the lifted vertices `(b_i, J(b_i))`, so the optimum is the
//! maximum of the concave `J - L` over the cell. `L` is affine on each
//! lower-hull triangle, which leaves one smooth problem per triangle: an
//! interior point with `grad J` equal to the triangle's slope, or a point on
//! an edge where the two end divergences agree. A few pairwise Frank–Wolfe
//! steps go first, which settles most cells; Frank–Wolfe also continues from
//! the direct solution if that leaves a duality gap.

use serde::{Deserialize, Serialize};

use crate::divergence::{divergence_raw, DivergenceValue};
use crate::error::{Error, Result};
use crate::models::{chart_gradient, DetectionModel};
use crate::numeric::{bisect, golden_max};
use crate::simplex::{SimplexPoint, INTERIOR_MARGIN};

use super::geometry::CellPolygon;

/// Mixture weights over the cell vertices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    pub w: Vec<f64>,
}

impl WeightVector {
    /// Indices with positive weight.
    pub fn support(&self) -> Vec<usize> {
        self.w.iter().enumerate().filter(|(_, &x)| x > 1e-12).map(|(i, _)| i).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MinimaxCentroid {
    pub center: SimplexPoint,
    pub weights: WeightVector,
    /// `max_i d(b_i || center)`.
    pub radius: DivergenceValue,
    /// Frank–Wolfe steps taken.
    pub iterations: usize,
}

const CENTROID_MAX_ITER: usize = 20_000;

/// Minimax centroid of a non-empty cell.
pub fn minimax_centroid<M: DetectionModel + ?Sized>(model: &M, cell: &CellPolygon) -> Result<MinimaxCentroid> {
    if cell.is_empty() {
        return Err(Error::EmptyCell(cell.seed_index));
    }
    for v in &cell.vertices {
        model.check_dim(v)?;
    }
    minimax_center(model, &cell.vertices)
}

pub(crate) fn minimax_center<M: DetectionModel + ?Sized>(model: &M, b: &[SimplexPoint]) -> Result<MinimaxCentroid> {
    let n = b.len();
    if n == 1 {
        return Ok(MinimaxCentroid {
            center: b[0],
            weights: WeightVector { w: vec![1.0] },
            radius: DivergenceValue::new(0.0),
            iterations: 0,
        });
    }
    let prob = Program { model, b, jb: b.iter().map(|v| model.risk(v)).collect() };
    let mut w = vec![1.0 / n as f64; n];
    let mut d = prob.divergences(&w);
    let mut iterations = 0;
    let mut direct_tried = false;
    loop {
        let gap = prob.gap(&w, &d);
        if prob.accept(gap, &d) {
            break;
        }
        if !direct_tried && iterations >= QUICK_STEPS {
            direct_tried = true;
            if let Some((wd, dd)) = prob.direct() {
                if prob.accept(prob.gap(&wd, &dd), &dd) {
                    (w, d) = (wd, dd);
                    break;
                }
                if Program::<M>::value(&wd, &dd) > Program::<M>::value(&w, &d) {
                    (w, d) = (wd, dd);
                }
            }
            log::debug!("direct centroid solve left a gap; continuing Frank–Wolfe");
            continue;
        }
        if iterations == CENTROID_MAX_ITER || !prob.pairwise_step(&mut w, &d) {
            if gap > 1e-9 * (1.0 + max_of(&d).abs()) {
                return Err(Error::Convergence { what: format!("minimax centroid (duality gap {gap:e})"), iterations });
            }
            break;
        }
        iterations += 1;
        d = prob.divergences(&w);
    }
    Ok(prob.finish((w, d), iterations))
}

/// Frank–Wolfe steps tried before the direct solve.
const QUICK_STEPS: usize = 30;

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// The weight program for one vertex set.
struct Program<'a, M: ?Sized> {
    model: &'a M,
    b: &'a [SimplexPoint],
    jb: Vec<f64>,
}

type Candidate = (Vec<f64>, Vec<f64>);

impl<M: DetectionModel + ?Sized> Program<'_, M> {
    fn divergences(&self, w: &[f64]) -> Vec<f64> {
        let c = self.model.coefficients(&SimplexPoint::combine(self.b, w));
        self.b.iter().zip(&self.jb).map(|(v, j)| v.dot(&c) - j).collect()
    }

    fn value(w: &[f64], d: &[f64]) -> f64 {
        w.iter().zip(d).map(|(wi, di)| wi * di).sum()
    }

    /// Duality gap `max_i d_i - sum_i w_i d_i`.
    fn gap(&self, w: &[f64], d: &[f64]) -> f64 {
        max_of(d) - Self::value(w, d)
    }

    fn accept(&self, gap: f64, d: &[f64]) -> bool {
        gap <= 1e-13 + 1e-9 * max_of(d).abs()
    }

    fn finish(&self, (w, d): Candidate, iterations: usize) -> MinimaxCentroid {
        MinimaxCentroid {
            center: SimplexPoint::combine(self.b, &w),
            weights: WeightVector { w },
            radius: DivergenceValue::new(max_of(&d)),
            iterations,
        }
    }

    fn chart(&self, i: usize) -> [f64; 2] {
        self.b[i].chart2()
    }

    /// Lower-hull triangles of the lifted vertices and the remaining pairs
    /// worth an edge solve.
    fn lower_hull(&self) -> (Vec<[usize; 3]>, Vec<[usize; 2]>) {
        let n = self.b.len();
        let mut tris = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    let Some((g, c0)) = self.plane([i, j, k]) else { continue };
                    let below = (0..n).any(|l| {
                        let p = self.chart(l);
                        let h = c0 + g[0] * p[0] + g[1] * p[1];
                        self.jb[l] < h - 1e-12 * (1.0 + h.abs())
                    });
                    if !below {
                        tris.push([i, j, k]);
                    }
                }
            }
        }
        let mut pairs: Vec<[usize; 2]> = if tris.is_empty() {
            (0..n).flat_map(|i| (i + 1..n).map(move |j| [i, j])).collect()
        } else {
            tris.iter().flat_map(|t| [[t[0], t[1]], [t[0], t[2]], [t[1], t[2]]]).collect()
        };
        pairs.sort_unstable();
        pairs.dedup();
        (tris, pairs)
    }

    /// Slope and intercept of the plane through three lifted vertices.
    fn plane(&self, t: [usize; 3]) -> Option<([f64; 2], f64)> {
        let p = t.map(|i| self.chart(i));
        let e1 = [p[1][0] - p[0][0], p[1][1] - p[0][1]];
        let e2 = [p[2][0] - p[0][0], p[2][1] - p[0][1]];
        let det = e1[0] * e2[1] - e1[1] * e2[0];
        if det.abs() < 1e-14 {
            return None;
        }
        let (h1, h2) = (self.jb[t[1]] - self.jb[t[0]], self.jb[t[2]] - self.jb[t[0]]);
        let g = [(h1 * e2[1] - h2 * e1[1]) / det, (e1[0] * h2 - e2[0] * h1) / det];
        Some((g, self.jb[t[0]] - g[0] * p[0][0] - g[1] * p[0][1]))
    }

    /// Best of the per-triangle and per-edge solves.
    fn direct(&self) -> Option<Candidate> {
        let (tris, pairs) = self.lower_hull();
        let mut best: Option<(f64, Candidate)> = None;
        let mut consider = |w: Vec<f64>| {
            let d = self.divergences(&w);
            let v = Self::value(&w, &d);
            if best.as_ref().is_none_or(|(bv, _)| v > *bv) {
                best = Some((v, (w, d)));
            }
        };
        for [i, j] in pairs {
            if let Some(w) = self.segment(i, j) {
                consider(w);
            }
        }
        for t in tris {
            if let Some(w) = self.triangle(t) {
                consider(w);
            }
        }
        best.map(|(_, c)| c)
    }

    /// Moves mass from the nearest support vertex to the farthest vertex
    /// with an exact line search. Returns false when no move is possible.
    fn pairwise_step(&self, w: &mut [f64], d: &[f64]) -> bool {
        let far = argmax(d, |_| true);
        let away = argmin(d, |i| w[i] > 0.0);
        if far == away || d[far] <= d[away] {
            return false;
        }
        let cap = w[away];
        let slope = |t: f64| {
            let mut wt = w.to_vec();
            wt[far] += t;
            wt[away] -= t;
            let c = self.model.coefficients(&SimplexPoint::combine(self.b, &wt));
            (self.b[far].dot(&c) - self.jb[far]) - (self.b[away].dot(&c) - self.jb[away])
        };
        let step = if slope(cap) >= 0.0 { cap } else { bisect(slope, 0.0, cap, 0.0, 80) };
        if step <= 0.0 {
            return false;
        }
        w[far] += step;
        w[away] -= step;
        if step == cap {
            w[away] = 0.0;
        }
        true
    }

    /// Point of the segment where both end divergences agree.
    fn segment(&self, i: usize, j: usize) -> Option<Vec<f64>> {
        let (bi, bj) = (self.b[i], self.b[j]);
        let f = |t: f64| {
            let c = self.model.coefficients(&bi.lerp(&bj, t));
            (bi.dot(&c) - self.jb[i]) - (bj.dot(&c) - self.jb[j])
        };
        if f(0.0) > 0.0 || f(1.0) < 0.0 {
            return None;
        }
        let t = bisect(f, 0.0, 1.0, 0.0, 100);
        let mut w = vec![0.0; self.b.len()];
        w[i] = 1.0 - t;
        w[j] = t;
        Some(w)
    }

    /// Maximiser of `J - plane` inside the triangle, or `None` when it lies
    /// on the boundary (the edge solves cover that case).
    fn triangle(&self, t: [usize; 3]) -> Option<Vec<f64>> {
        let (g, _) = self.plane(t)?;
        let p = t.map(|i| self.chart(i));
        let e1 = [p[1][0] - p[0][0], p[1][1] - p[0][1]];
        let e2 = [p[2][0] - p[0][0], p[2][1] - p[0][1]];
        let det = e1[0] * e2[1] - e1[1] * e2[0];
        let start = [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0];
        let x = newton(self.model, g, start);
        let r = [x[0] - p[0][0], x[1] - p[0][1]];
        let l1 = (r[0] * e2[1] - r[1] * e2[0]) / det;
        let l2 = (e1[0] * r[1] - e1[1] * r[0]) / det;
        let mut bary = [1.0 - l1 - l2, l1, l2];
        if residual(self.model, g, x) < INVERSE_TOL {
            // a stationary point outside puts the maximum on an edge
            if bary.iter().any(|&v| v < -1e-12) {
                return None;
            }
        } else {
            // Newton stalls where the risk is affine along a direction;
            // maximise the concave J - g.x directly
            let at = |l1: f64, l2: f64| [p[0][0] + l1 * e1[0] + l2 * e2[0], p[0][1] + l1 * e1[1] + l2 * e2[1]];
            let inner =
                |l1: f64| golden_max(|l2| conjugate_objective(self.model, g, at(l1, l2)), 0.0, 1.0 - l1, 1e-12, 80);
            let (l1, _) = golden_max(|l1| inner(l1).1, 0.0, 1.0, 1e-12, 80);
            let l2 = inner(l1).0;
            bary = [1.0 - l1 - l2, l1, l2];
            if bary.iter().any(|&v| v < 1e-10) {
                return None;
            }
        }
        let s: f64 = bary.iter().map(|v| v.max(0.0)).sum();
        let mut w = vec![0.0; self.b.len()];
        for (k, &i) in t.iter().enumerate() {
            w[i] = bary[k].max(0.0) / s;
        }
        Some(w)
    }
}

fn argmax(v: &[f64], keep: impl Fn(usize) -> bool) -> usize {
    (0..v.len())
        .filter(|&i| keep(i))
        .fold(None, |b: Option<usize>, i| match b {
            Some(j) if v[j] >= v[i] => Some(j),
            _ => Some(i),
        })
        .unwrap_or(0)
}

fn argmin(v: &[f64], keep: impl Fn(usize) -> bool) -> usize {
    (0..v.len())
        .filter(|&i| keep(i))
        .fold(None, |b: Option<usize>, i| match b {
            Some(j) if v[j] <= v[i] => Some(j),
            _ => Some(i),
        })
        .unwrap_or(0)
}

/// Divergence of every vertex from `center`.
pub fn vertex_divergences<M: DetectionModel + ?Sized>(
    model: &M,
    cell: &CellPolygon,
    center: &SimplexPoint,
) -> Vec<f64> {
    cell.vertices.iter().map(|v| divergence_raw(model, v, center)).collect()
}

const INVERSE_TOL: f64 = 1e-9;

/// Point whose risk gradient equals `g` (chart coordinates, length M - 1).
///
/// Where the risk is affine along a segment the gradient is constant on it;
/// any preimage is returned.
pub fn inverse_gradient<M: DetectionModel + ?Sized>(model: &M, g: &[f64]) -> Result<SimplexPoint> {
    let m = model.hypotheses();
    if g.len() + 1 != m {
        return Err(Error::Domain(format!("gradient of length {} for M = {m}", g.len())));
    }
    if g.iter().any(|x| !x.is_finite()) {
        return Err(Error::OutOfImage(g.to_vec()));
    }
    match m {
        2 => inverse_binary(model, g[0]),
        3 => inverse_ternary(model, [g[0], g[1]]),
        _ => Err(Error::UnsupportedDimension(m)),
    }
}

fn inverse_binary<M: DetectionModel + ?Sized>(model: &M, g: f64) -> Result<SimplexPoint> {
    let slope = |a: f64| crate::models::binary_slope(model, a) - g;
    let lo = INTERIOR_MARGIN;
    let hi = 1.0 - INTERIOR_MARGIN;
    if slope(lo) < -INVERSE_TOL || slope(hi) > INVERSE_TOL {
        return Err(Error::OutOfImage(vec![g]));
    }
    let a = bisect(slope, lo, hi, 0.0, 200);
    SimplexPoint::binary(a)
}

fn grad3<M: DetectionModel + ?Sized>(model: &M, x: [f64; 2]) -> [f64; 2] {
    chart_gradient(&model.coefficients(&SimplexPoint::from_chart_lossy(&x)), 3)
}

/// `J(x) - g . x`, maximised where the gradient equals `g`.
fn conjugate_objective<M: DetectionModel + ?Sized>(model: &M, g: [f64; 2], x: [f64; 2]) -> f64 {
    let p = SimplexPoint::from_chart_lossy(&x);
    model.risk(&p) - g[0] * x[0] - g[1] * x[1]
}

fn residual<M: DetectionModel + ?Sized>(model: &M, g: [f64; 2], x: [f64; 2]) -> f64 {
    let r = grad3(model, x);
    (r[0] - g[0]).abs().max((r[1] - g[1]).abs())
}

fn inside(x: [f64; 2], margin: f64) -> bool {
    x[0] >= margin && x[1] >= margin && 1.0 - x[0] - x[1] >= margin
}

/// Damped Newton on `grad J(x) = g` with a finite-difference Jacobian.
fn newton<M: DetectionModel + ?Sized>(model: &M, g: [f64; 2], mut x: [f64; 2]) -> [f64; 2] {
    const H: f64 = 1e-6;
    for _ in 0..60 {
        let r0 = grad3(model, x);
        let r = [r0[0] - g[0], r0[1] - g[1]];
        if r[0].abs().max(r[1].abs()) < 1e-14 {
            break;
        }
        let mut jac = [[0.0; 2]; 2];
        for j in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[j] += H;
            xm[j] -= H;
            let gp = grad3(model, xp);
            let gm = grad3(model, xm);
            for i in 0..2 {
                jac[i][j] = (gp[i] - gm[i]) / (2.0 * H);
            }
        }
        // the Hessian of a concave function is negative semidefinite;
        // shift it to keep the system solvable on affine stretches
        let scale = jac[0][0].abs() + jac[1][1].abs() + 1e-300;
        let mu = 1e-10 * scale;
        let a = jac[0][0] - mu;
        let d = jac[1][1] - mu;
        let (b, c) = (jac[0][1], jac[1][0]);
        let det = a * d - b * c;
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let step = [-(d * r[0] - b * r[1]) / det, -(-c * r[0] + a * r[1]) / det];
        let f0 = conjugate_objective(model, g, x);
        let base = r[0].abs().max(r[1].abs());
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..40 {
            let xn = [x[0] + t * step[0], x[1] + t * step[1]];
            if inside(xn, INTERIOR_MARGIN)
                && (conjugate_objective(model, g, xn) >= f0 - 1e-15 || residual(model, g, xn) < base)
            {
                x = xn;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    x
}

/// Nested golden-section maximisation of `J(x) - g . x` over the triangle.
fn nested_search<M: DetectionModel + ?Sized>(model: &M, g: [f64; 2]) -> [f64; 2] {
    let inner = |x0: f64| golden_max(|x1| conjugate_objective(model, g, [x0, x1]), 0.0, 1.0 - x0, 1e-12, 120);
    let (x0, _) = golden_max(|x0| inner(x0).1, 0.0, 1.0, 1e-12, 120);
    [x0, inner(x0).0]
}

fn inverse_ternary<M: DetectionModel + ?Sized>(model: &M, g: [f64; 2]) -> Result<SimplexPoint> {
    let mut x = newton(model, g, [1.0 / 3.0, 1.0 / 3.0]);
    if residual(model, g, x) >= INVERSE_TOL {
        let coarse = nested_search(model, g);
        x = newton(model, g, coarse);
        if residual(model, g, coarse) < residual(model, g, x) {
            x = coarse;
        }
    }
    let res = residual(model, g, x);
    if res < INVERSE_TOL {
        return Ok(SimplexPoint::from_chart_lossy(&x));
    }
    if !inside(x, 1e-7) {
        return Err(Error::OutOfImage(g.to_vec()));
    }
    Err(Error::Convergence { what: format!("inverse gradient (residual {res:e})"), iterations: 60 })
}
