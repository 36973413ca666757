//! Spectral harmonic-analysis toolkit on the periodic torus: moduli of
//! continuity and Carleman weights, Littlewood-Paley blocks, Bony's
//! paraproduct with its shifted variant, coefficient mollification and
//! Carleman-inequality probes.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the aliases
//! at the bottom fix `f64`, which every tolerance in the test-suite assumes.

pub mod carleman;
pub mod error;
pub mod modulus;
pub mod paraproduct;
pub mod quadrature;
pub mod scalar;
pub mod spectral;

pub use error::{Error, Result};
pub use scalar::{Cplx, Real};

pub type Modulus = modulus::Modulus<f64>;
pub type CarlemanWeight = modulus::CarlemanWeight<f64>;
pub type TorusGrid = spectral::TorusGrid<f64>;
pub type SpectralField = spectral::SpectralField<f64>;
pub type ParaproductConfig = paraproduct::ParaproductConfig<f64>;
pub type CoefficientMatrix = paraproduct::CoefficientMatrix<f64>;
pub type TimeGrid = carleman::TimeGrid<f64>;
pub type SpaceTimeField = carleman::SpaceTimeField<f64>;
pub type CoefficientSchedule = carleman::CoefficientSchedule<f64>;
pub type CarlemanProbeConfig = carleman::CarlemanProbeConfig<f64>;
