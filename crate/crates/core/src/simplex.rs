//! Points on the M-ary probability simplex.
//!
//! A [`SimplexPoint`] stores all M barycentric coordinates. The chart used by
//! gradients and geometry drops the last coordinate: `(p0, ..., p_{M-2})`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest number of hypotheses handled by the library.
pub const MAX_HYPOTHESES: usize = 3;

/// Margin used to pull weights and priors off the simplex boundary before
/// evaluating logarithms and thresholds.
pub const INTERIOR_MARGIN: f64 = 1e-9;

/// Tolerance on the coordinate sum.
pub const SUM_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, PartialEq)]
pub struct SimplexPoint {
    coords: [f64; MAX_HYPOTHESES],
    dim: usize,
}

impl SimplexPoint {
    /// Validates nonnegativity and the unit sum. Coordinates in
    /// `[-SUM_TOLERANCE, 0)` are snapped to zero.
    pub fn new(coords: &[f64]) -> Result<Self> {
        let dim = coords.len();
        if !(2..=MAX_HYPOTHESES).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        let mut c = [0.0; MAX_HYPOTHESES];
        for (slot, &x) in c.iter_mut().zip(coords) {
            if !x.is_finite() || x < -SUM_TOLERANCE {
                return Err(Error::InvalidPoint(format!("coordinate {x} out of range")));
            }
            *slot = x.max(0.0);
        }
        let sum: f64 = c[..dim].iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidPoint(format!("coordinates sum to {sum}")));
        }
        Ok(Self { coords: c, dim })
    }

    pub fn binary(p0: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p0) {
            return Err(Error::Domain(format!("prior {p0} not in [0, 1]")));
        }
        Ok(Self { coords: [p0, 1.0 - p0, 0.0], dim: 2 })
    }

    /// Builds a point from chart coordinates; the last coordinate is
    /// `1 - sum(chart)`.
    pub fn from_chart(chart: &[f64]) -> Result<Self> {
        let dim = chart.len() + 1;
        if !(2..=MAX_HYPOTHESES).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        let mut c = [0.0; MAX_HYPOTHESES];
        c[..dim - 1].copy_from_slice(chart);
        c[dim - 1] = 1.0 - chart.iter().sum::<f64>();
        Self::new(&c[..dim])
    }

    /// Projects an arbitrary chart point onto the simplex by clipping
    /// negative coordinates and renormalising. Used by geometry code whose
    /// vertices may stray by rounding error.
    pub(crate) fn from_chart_lossy(chart: &[f64]) -> Self {
        let dim = chart.len() + 1;
        let mut c = [0.0; MAX_HYPOTHESES];
        c[..dim - 1].copy_from_slice(chart);
        c[dim - 1] = 1.0 - chart.iter().sum::<f64>();
        for x in &mut c[..dim] {
            *x = x.max(0.0);
        }
        let s: f64 = c[..dim].iter().sum();
        for x in &mut c[..dim] {
            *x /= s;
        }
        Self { coords: c, dim }
    }

    pub fn uniform(dim: usize) -> Result<Self> {
        let v = vec![1.0 / dim as f64; dim];
        Self::new(&v)
    }

    pub fn vertex(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::Domain(format!("vertex {index} of a {dim}-simplex")));
        }
        let mut v = vec![0.0; dim];
        v[index] = 1.0;
        Self::new(&v)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.dim]
    }

    pub fn chart(&self) -> &[f64] {
        &self.coords[..self.dim - 1]
    }

    pub fn chart2(&self) -> [f64; 2] {
        [self.coords[0], if self.dim > 2 { self.coords[1] } else { 0.0 }]
    }

    pub fn min_coord(&self) -> f64 {
        self.coords().iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_interior(&self, margin: f64) -> bool {
        self.min_coord() >= margin
    }

    /// True when one coordinate carries all the mass.
    pub fn is_vertex(&self) -> bool {
        self.coords().iter().any(|&x| x >= 1.0)
    }

    /// Raises every coordinate to at least `margin` and renormalises.
    pub fn clamp_interior(&self, margin: f64) -> Self {
        if self.is_interior(margin) {
            return *self;
        }
        let mut c = self.coords;
        let n = self.dim;
        let deficit: f64 = c[..n].iter().map(|&x| (margin - x).max(0.0)).sum();
        let excess: f64 = c[..n].iter().map(|&x| (x - margin).max(0.0)).sum();
        for x in &mut c[..n] {
            if *x < margin {
                *x = margin;
            } else {
                *x -= (*x - margin) / excess * deficit;
            }
        }
        Self { coords: c, dim: n }
    }

    pub fn dot(&self, v: &[f64]) -> f64 {
        self.coords().iter().zip(v).map(|(a, b)| a * b).sum()
    }

    /// Maximum absolute difference of chart coordinates.
    pub fn chart_distance(&self, other: &Self) -> f64 {
        self.coords().iter().zip(other.coords()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// `(1 - t) * self + t * other`.
    pub fn lerp(&self, other: &Self, t: f64) -> Self {
        let mut c = [0.0; MAX_HYPOTHESES];
        for i in 0..self.dim {
            c[i] = (1.0 - t) * self.coords[i] + t * other.coords[i];
        }
        Self { coords: c, dim: self.dim }
    }

    /// Convex combination of points with the given weights.
    pub fn combine(points: &[SimplexPoint], weights: &[f64]) -> Self {
        let dim = points[0].dim;
        let mut c = [0.0; MAX_HYPOTHESES];
        for (p, &w) in points.iter().zip(weights) {
            for i in 0..dim {
                c[i] += w * p.coords[i];
            }
        }
        let s: f64 = c[..dim].iter().sum();
        for x in &mut c[..dim] {
            *x = (*x / s).max(0.0);
        }
        Self { coords: c, dim }
    }
}

impl fmt::Debug for SimplexPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("SimplexPoint").field(&self.coords()).finish()
    }
}

impl Serialize for SimplexPoint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.coords().serialize(s)
    }
}

impl<'de> Deserialize<'de> for SimplexPoint {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        SimplexPoint::new(&v).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sums_and_negatives() {
        assert!(SimplexPoint::new(&[0.5, 0.6]).is_err());
        assert!(SimplexPoint::new(&[-0.1, 1.1]).is_err());
        assert!(SimplexPoint::new(&[1.0]).is_err());
        assert!(SimplexPoint::new(&[0.25; 4]).is_err());
        assert!(SimplexPoint::new(&[0.2, 0.3, 0.5]).is_ok());
    }

    #[test]
    fn chart_round_trip() {
        let p = SimplexPoint::from_chart(&[0.2, 0.3]).unwrap();
        assert_eq!(p.dim(), 3);
        assert!((p.coords()[2] - 0.5).abs() < 1e-15);
        assert_eq!(p.chart(), &[0.2, 0.3]);
    }

    #[test]
    fn clamp_keeps_sum_and_margin() {
        let p = SimplexPoint::new(&[1.0, 0.0, 0.0]).unwrap();
        let q = p.clamp_interior(1e-6);
        assert!(q.min_coord() >= 1e-6 - 1e-18);
        assert!((q.coords().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let inner = SimplexPoint::uniform(3).unwrap();
        assert_eq!(inner.clamp_interior(1e-6), inner);
    }

    #[test]
    fn vertex_detection() {
        assert!(SimplexPoint::binary(1.0).unwrap().is_vertex());
        assert!(SimplexPoint::binary(0.0).unwrap().is_vertex());
        assert!(!SimplexPoint::binary(0.5).unwrap().is_vertex());
    }
}
