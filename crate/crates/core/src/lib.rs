//! Weighted L2 small-deviation constants for stationary Gaussian processes
//! and sequences, with eigenvalue, saddle-point and Monte Carlo oracles.
//!
//! Most types are generic over [`Real`] (`f32` or `f64`); the `*F64` aliases
//! below name the double-precision versions.

pub mod config;
pub mod eigensolve;
pub mod error;
pub mod operator;
pub mod quadrature;
pub mod scalar;
pub mod simulate;
pub mod smallball;
pub mod special;
pub mod spectrum;
pub mod weights;

pub use error::{Error, Result};
pub use scalar::Real;

pub type TailDescriptorF64 = spectrum::TailDescriptor<f64>;
pub type DiscreteSpectrumF64 = spectrum::DiscreteSpectrum<f64>;
pub type ContinuousSpectrumF64 = spectrum::ContinuousSpectrum<f64>;
pub type WeightF64 = weights::Weight<f64>;
pub type EigenSequenceF64 = eigensolve::EigenSequence<f64>;
pub type PowerLawFitF64 = eigensolve::PowerLawFit<f64>;
pub type SmallBallPredictionF64 = smallball::SmallBallPrediction<f64>;
pub type ChernoffResultF64 = smallball::ChernoffResult<f64>;
