//! Periodic grid fields and the Littlewood-Paley calculus on them.

pub mod cutoff;
mod field;
mod grid;
pub mod io;
pub mod lp;
pub mod random;

pub use cutoff::chi;
pub use field::SpectralField;
pub use grid::TorusGrid;
pub use lp::{
    apply_delta, apply_s, bernstein_check, block_annulus, decompose, h_norm, h_norm_sq, lip_norm, max_gradient,
    min_frequency, support_leak, DyadicDecomposition, LipNorm, NormMethod,
};
pub use random::{random_field, FieldSpec};
