//! Quantizer files and plot-ready CSV tables.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::analysis::{DesignOptions, SlopeFit, SweepResult};
use crate::divergence::{divergence_raw, DivergenceValue};
use crate::error::{Error, Result};
use crate::models::{DetectionModel, Model};
use crate::scalar::{self, design_minimax, DesignReport, ScalarQuantizer};
use crate::simplex::SimplexPoint;
use crate::simplex_quant::{
    design_minimax_simplex, quantize_simplex, simplex_max_divergence, CellPolygon, SimplexQuantizer,
};

pub const TOOL_VERSION: &str = concat!("brequant ", env!("CARGO_PKG_VERSION"));

/// A designed quantizer of either dimension.
#[derive(Clone, Debug, PartialEq)]
pub enum Quantizer {
    Scalar(ScalarQuantizer),
    Simplex(SimplexQuantizer),
}

impl Quantizer {
    /// Minimax design with `k` cells, dispatched on the number of hypotheses.
    pub fn design<M: DetectionModel + ?Sized>(
        model: &M,
        k: usize,
        opts: &DesignOptions,
    ) -> Result<(Self, DesignReport)> {
        match model.hypotheses() {
            2 => design_minimax(model, k, &opts.scalar).map(|(q, r)| (Quantizer::Scalar(q), r)),
            3 => design_minimax_simplex(model, k, &opts.simplex).map(|(q, r)| (Quantizer::Simplex(q), r)),
            m => Err(Error::UnsupportedDimension(m)),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Quantizer::Scalar(q) => q.cells(),
            Quantizer::Simplex(q) => q.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn weights(&self) -> Vec<SimplexPoint> {
        match self {
            Quantizer::Scalar(q) => {
                q.weights().iter().map(|&a| SimplexPoint::binary(a).expect("interior weight")).collect()
            }
            Quantizer::Simplex(q) => q.seeds.clone(),
        }
    }

    /// Cell index and decision weight for the prior `p`.
    pub fn quantize<M: DetectionModel + ?Sized>(&self, model: &M, p: &SimplexPoint) -> Result<(usize, SimplexPoint)> {
        model.check_dim(p)?;
        match self {
            Quantizer::Scalar(q) => {
                let (k, a) = scalar::quantize(q, p.coords()[0])?;
                Ok((k, SimplexPoint::binary(a)?))
            }
            Quantizer::Simplex(q) => quantize_simplex(model, q, p),
        }
    }

    /// Worst-case divergence over the simplex.
    pub fn max_divergence<M: DetectionModel + ?Sized>(&self, model: &M) -> Result<DivergenceValue> {
        match self {
            Quantizer::Scalar(q) => Ok(scalar::max_divergence(model, q).1),
            Quantizer::Simplex(q) => Ok(simplex_max_divergence(model, q)?.1),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub seed: Vec<f64>,
    pub vertices: Vec<Vec<f64>>,
}

/// On-disk form of a designed quantizer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantizerFile {
    pub model: Model,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub weights: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundaries: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cells: Option<Vec<CellRecord>>,
    pub max_divergence: f64,
    pub converged: bool,
    pub iterations: usize,
    pub tool_version: String,
}

fn point(coords: &[f64], m: usize) -> Result<SimplexPoint> {
    if coords.len() != m {
        return Err(Error::Schema(format!("point {coords:?} must have {m} coordinates")));
    }
    SimplexPoint::new(coords).map_err(|e| Error::Schema(e.to_string()))
}

impl QuantizerFile {
    pub fn new(model: &Model, q: &Quantizer, report: &DesignReport) -> Self {
        let weights = q.weights().iter().map(|w| w.coords().to_vec()).collect();
        let (boundaries, cells) = match q {
            Quantizer::Scalar(s) => (Some(s.boundaries().to_vec()), None),
            Quantizer::Simplex(s) => (
                None,
                Some(
                    s.seeds
                        .iter()
                        .zip(&s.cells)
                        .map(|(seed, c)| CellRecord {
                            seed: seed.coords().to_vec(),
                            vertices: c.vertices.iter().map(|v| v.coords().to_vec()).collect(),
                        })
                        .collect(),
                ),
            ),
        };
        Self {
            model: model.clone(),
            m: model.hypotheses(),
            k: q.len(),
            weights,
            boundaries,
            cells,
            max_divergence: report.max_divergence.value(),
            converged: report.converged,
            iterations: report.iterations,
            tool_version: TOOL_VERSION.to_string(),
        }
    }

    /// Checks the schema and rebuilds the quantizer.
    pub fn quantizer(&self) -> Result<Quantizer> {
        let m = self.model.hypotheses();
        if self.m != m {
            return Err(Error::Schema(format!("M = {} but the model has {m} hypotheses", self.m)));
        }
        if self.k == 0 || self.weights.len() != self.k {
            return Err(Error::Schema(format!("K = {} with {} weights", self.k, self.weights.len())));
        }
        let weights = self.weights.iter().map(|w| point(w, m)).collect::<Result<Vec<_>>>()?;
        match (m, &self.boundaries, &self.cells) {
            (2, Some(b), None) => {
                let a = weights.iter().map(|w| w.coords()[0]).collect();
                Ok(Quantizer::Scalar(ScalarQuantizer::new(b.clone(), a).map_err(|e| Error::Schema(e.to_string()))?))
            }
            (3, None, Some(cells)) => {
                if cells.len() != self.k {
                    return Err(Error::Schema(format!("K = {} with {} cells", self.k, cells.len())));
                }
                let mut polys = Vec::with_capacity(cells.len());
                for (k, (c, w)) in cells.iter().zip(&weights).enumerate() {
                    if point(&c.seed, m)? != *w {
                        return Err(Error::Schema(format!("cell {k} seed differs from weight {k}")));
                    }
                    let vertices = c.vertices.iter().map(|v| point(v, m)).collect::<Result<Vec<_>>>()?;
                    polys.push(CellPolygon { seed_index: k, vertices });
                }
                Ok(Quantizer::Simplex(SimplexQuantizer { seeds: weights, cells: polys }))
            }
            (2, _, _) => Err(Error::Schema("binary quantizers need boundaries and no cells".into())),
            (3, _, _) => Err(Error::Schema("ternary quantizers need cells and no boundaries".into())),
            _ => Err(Error::UnsupportedDimension(m)),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Schema(e.to_string()))
    }
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

fn num(x: f64) -> String {
    format!("{x}")
}

/// Risk curve of a design: `J`, the quantized risk `J(p, q(p))` and their
/// difference on a grid (binary step 1e-3, ternary barycentric step 5e-3).
pub fn write_risk_curve<M: DetectionModel + ?Sized, W: Write>(model: &M, q: &Quantizer, w: W) -> Result<()> {
    let mut out = csv_writer(w);
    let row = |out: &mut csv::Writer<W>, p: SimplexPoint, chart: &[f64]| -> Result<()> {
        let (_, a) = q.quantize(model, &p)?;
        let j = model.risk(&p);
        let jq = p.dot(&model.coefficients(&a));
        let d = DivergenceValue::new(divergence_raw(model, &p, &a)).value();
        let mut rec: Vec<String> = chart.iter().map(|&x| num(x)).collect();
        rec.extend([num(j), num(jq), num(d)]);
        out.write_record(&rec)?;
        Ok(())
    };
    match model.hypotheses() {
        2 => {
            out.write_record(["p", "J", "J_quantized", "divergence"])?;
            for i in 0..=1000 {
                let p0 = i as f64 / 1000.0;
                row(&mut out, SimplexPoint::binary(p0)?, &[p0])?;
            }
        }
        3 => {
            out.write_record(["p0", "p1", "J", "J_quantized", "divergence"])?;
            let n = 200;
            for i in 0..=n {
                for j in 0..=n - i {
                    let c = [i as f64 / n as f64, j as f64 / n as f64];
                    row(&mut out, SimplexPoint::from_chart_lossy(&c), &c)?;
                }
            }
        }
        m => return Err(Error::UnsupportedDimension(m)),
    }
    out.flush()?;
    Ok(())
}

/// `(p0, q(p0))` on a 1e-3 grid.
pub fn write_staircase<W: Write>(q: &ScalarQuantizer, w: W) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(["p0", "q"])?;
    for i in 0..=1000 {
        let p0 = i as f64 / 1000.0;
        let (_, a) = scalar::quantize(q, p0)?;
        out.write_record([num(p0), num(a)])?;
    }
    out.flush()?;
    Ok(())
}

/// Sweep table; failed entries leave `D` and `logD` empty.
pub fn write_sweep<W: Write>(s: &SweepResult, w: W) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(["K", "D", "logK", "logD", "converged"])?;
    for e in &s.entries {
        let (d, logd) = match e.d {
            Some(d) => (num(d.value()), num(d.value().ln())),
            None => (String::new(), String::new()),
        };
        out.write_record([e.k.to_string(), d, num((e.k as f64).ln()), logd, e.converged.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

/// Companion of the sweep table: the fit, or the reason it is missing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub model: Model,
    pub k_min: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope_fit: Option<SlopeFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub tool_version: String,
}
