//! Bisectors and Voronoi cells on the 2-simplex, in the `(p0, p1)` chart.

use serde::{Deserialize, Serialize};

use crate::divergence::divergence_raw;
use crate::error::{Error, Result};
use crate::models::{Coefficients, DetectionModel};
use crate::simplex::SimplexPoint;

/// Vertex classification tolerance for clipping.
pub const CLIP_TOLERANCE: f64 = 1e-12;

/// Coefficient differences below this make two seeds indistinguishable.
const COINCIDENT: f64 = 1e-15;

/// Closed half-plane `{x : normal . x <= offset}` in the chart. For a
/// bisector the seed that owns the half-plane lies on this side.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Halfplane {
    pub normal: [f64; 2],
    pub offset: f64,
}

impl Halfplane {
    pub fn signed(&self, x: [f64; 2]) -> f64 {
        self.normal[0] * x[0] + self.normal[1] * x[1] - self.offset
    }

    pub fn contains(&self, x: [f64; 2], tol: f64) -> bool {
        self.signed(x) <= tol
    }

    /// For a one-dimensional chart, the point where the line crosses.
    pub fn binary_point(&self) -> f64 {
        self.offset / self.normal[0]
    }

    fn norm(&self) -> f64 {
        self.normal[0].hypot(self.normal[1])
    }
}

/// Half-plane of points no farther (in divergence) from the seed with
/// coefficients `own` than from the seed with coefficients `other`.
///
/// `d(x || a) - d(x || a')` equals `J(x, a) - J(x, a')`, which is affine in
/// `x`, so the bisector is a line.
fn dominance_halfplane(own: &Coefficients, other: &Coefficients, dim: usize) -> Halfplane {
    let mut diff = [0.0; 3];
    for i in 0..dim {
        diff[i] = own[i] - other[i];
    }
    let last = diff[dim - 1];
    let mut normal = [0.0; 2];
    for i in 0..dim - 1 {
        normal[i] = diff[i] - last;
    }
    Halfplane { normal, offset: -last }
}

/// Bisector between `a_k` and `a_k1`, returned as the half-plane owned by
/// `a_k`. Its boundary line is
/// `x . (grad J(a_k1) - grad J(a_k)) = a_k1 . grad J(a_k1) - a_k . grad J(a_k) - (J(a_k1) - J(a_k))`.
pub fn bisector<M: DetectionModel + ?Sized>(model: &M, a_k: &SimplexPoint, a_k1: &SimplexPoint) -> Result<Halfplane> {
    model.check_dim(a_k)?;
    model.check_dim(a_k1)?;
    if a_k.min_coord() <= 0.0 || a_k1.min_coord() <= 0.0 {
        return Err(Error::Domain("bisector seeds must be interior".into()));
    }
    let h = dominance_halfplane(&model.coefficients(a_k), &model.coefficients(a_k1), model.hypotheses());
    if h.norm() <= COINCIDENT {
        return Err(Error::Degenerate("seeds have the same risk gradient".into()));
    }
    Ok(h)
}

/// Convex cell of the Voronoi diagram, vertices counterclockwise. An empty
/// vertex list marks a cell with no area.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellPolygon {
    pub seed_index: usize,
    pub vertices: Vec<SimplexPoint>,
}

impl CellPolygon {
    pub fn v_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Chart coordinates of the vertices.
    pub fn chart_vertices(&self) -> Vec<[f64; 2]> {
        self.vertices.iter().map(|v| v.chart2()).collect()
    }

    pub fn area(&self) -> f64 {
        polygon_area(&self.chart_vertices())
    }

    /// Closed membership with tolerance `tol` on each edge.
    pub fn contains(&self, p: &SimplexPoint, tol: f64) -> bool {
        let x = p.chart2();
        let vs = self.chart_vertices();
        let n = vs.len();
        match n {
            0 => false,
            1 => (vs[0][0] - x[0]).abs() <= tol && (vs[0][1] - x[1]).abs() <= tol,
            _ => (0..n).all(|i| {
                let a = vs[i];
                let b = vs[(i + 1) % n];
                let len = (b[0] - a[0]).hypot(b[1] - a[1]);
                if len == 0.0 {
                    return true;
                }
                let cross = (b[0] - a[0]) * (x[1] - a[1]) - (b[1] - a[1]) * (x[0] - a[0]);
                cross / len >= -tol
            }),
        }
    }

    /// The whole simplex as a single cell.
    pub fn simplex(seed_index: usize) -> Self {
        Self { seed_index, vertices: TRIANGLE.iter().map(|v| SimplexPoint::from_chart_lossy(v)).collect() }
    }
}

/// Upper bound `C(K - 1, M - 2) + M` on the vertex count of a cell.
pub fn vertex_bound(k: usize, m: usize) -> usize {
    binomial(k.saturating_sub(1), m.saturating_sub(2)) + m
}

/// Upper bound `(K - 1) + (M - 1)` on the face count of a cell.
pub fn face_bound(k: usize, m: usize) -> usize {
    k.saturating_sub(1) + m.saturating_sub(1)
}

fn binomial(n: usize, r: usize) -> usize {
    if r > n {
        return 0;
    }
    (0..r).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

pub(crate) const TRIANGLE: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

pub(crate) fn polygon_area(vs: &[[f64; 2]]) -> f64 {
    let n = vs.len();
    if n < 3 {
        return 0.0;
    }
    0.5 * (0..n)
        .map(|i| {
            let a = vs[i];
            let b = vs[(i + 1) % n];
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
}

/// Clips a convex counterclockwise polygon by a half-plane.
pub(crate) fn clip(poly: &[[f64; 2]], h: &Halfplane) -> Vec<[f64; 2]> {
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        let sp = h.signed(p);
        let sq = h.signed(q);
        let p_in = sp <= CLIP_TOLERANCE;
        let q_in = sq <= CLIP_TOLERANCE;
        if p_in {
            out.push(p);
        }
        if p_in != q_in {
            let t = (sp / (sp - sq)).clamp(0.0, 1.0);
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    dedup_ring(out)
}

fn dedup_ring(mut vs: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    const EPS: f64 = 1e-13;
    let close = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).abs() <= EPS && (a[1] - b[1]).abs() <= EPS;
    vs.dedup_by(|a, b| close(*a, *b));
    while vs.len() > 1 && close(vs[0], vs[vs.len() - 1]) {
        vs.pop();
    }
    vs
}

/// Chart polygon of cell `k` given the seeds' error coefficients. Ties on
/// indistinguishable seeds go to the lower index.
pub(crate) fn cell_from_coefficients(coeffs: &[Coefficients], k: usize, dim: usize) -> Vec<[f64; 2]> {
    let mut poly = TRIANGLE.to_vec();
    for (j, other) in coeffs.iter().enumerate() {
        if j == k {
            continue;
        }
        let h = dominance_halfplane(&coeffs[k], other, dim);
        if h.norm() <= COINCIDENT {
            if j < k && h.offset >= -COINCIDENT {
                return Vec::new();
            }
            continue;
        }
        poly = clip(&poly, &h);
        if poly.len() < 3 {
            return Vec::new();
        }
    }
    if polygon_area(&poly) <= 1e-16 {
        return Vec::new();
    }
    poly
}

/// Cell `k` of the Voronoi diagram of `seeds` under the Bayes risk error
/// divergence. Requires a ternary model.
pub fn cell_polygon<M: DetectionModel + ?Sized>(model: &M, seeds: &[SimplexPoint], k: usize) -> Result<CellPolygon> {
    if model.hypotheses() != 3 {
        return Err(Error::UnsupportedDimension(model.hypotheses()));
    }
    if k >= seeds.len() {
        return Err(Error::Domain(format!("cell index {k} out of range")));
    }
    for s in seeds {
        model.check_dim(s)?;
        if s.min_coord() <= 0.0 {
            return Err(Error::Domain(format!("seed {s:?} is not interior")));
        }
    }
    let coeffs: Vec<Coefficients> = seeds.iter().map(|s| model.coefficients(s)).collect();
    Ok(polygon_from_chart(k, &cell_from_coefficients(&coeffs, k, 3)))
}

pub(crate) fn polygon_from_chart(k: usize, poly: &[[f64; 2]]) -> CellPolygon {
    CellPolygon { seed_index: k, vertices: poly.iter().map(|v| SimplexPoint::from_chart_lossy(v)).collect() }
}

/// Largest divergence from `seed` over the cell and the index of the vertex
/// attaining it. Convexity of the divergence in its first argument puts the
/// maximum on a vertex.
pub fn cell_max_divergence<M: DetectionModel + ?Sized>(
    model: &M,
    cell: &CellPolygon,
    seed: &SimplexPoint,
) -> Result<(f64, usize)> {
    if cell.is_empty() {
        return Err(Error::EmptyCell(cell.seed_index));
    }
    Ok(cell
        .vertices
        .iter()
        .enumerate()
        .map(|(i, v)| (divergence_raw(model, v, seed), i))
        .fold((f64::NEG_INFINITY, 0), |b, c| if c.0 > b.0 { c } else { b }))
}
