//! Minimax quantization of the ternary probability simplex.

mod centroid;
mod design;
mod geometry;

pub use centroid::{inverse_gradient, minimax_centroid, vertex_divergences, MinimaxCentroid, WeightVector};
pub use design::{
    design_minimax_simplex, quantize_simplex, simplex_max_divergence, SimplexDesignOptions, SimplexQuantizer,
};
pub use geometry::{
    bisector, cell_max_divergence, cell_polygon, face_bound, vertex_bound, CellPolygon, Halfplane, CLIP_TOLERANCE,
};
