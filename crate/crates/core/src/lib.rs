//! Aberrance repressed correlation filter (ARCF) tracking.
//!
//! A cropped-sample discriminative correlation filter trained per frame by
//! ADMM, with a penalty on abrupt change between consecutive response maps.
//! Setting the aberrance penalty to zero yields the background-aware
//! correlation filter (BACF) baseline.
//!
//! All numerical code is generic over [`Scalar`] (`f32` or `f64`); the type
//! aliases at the crate root fix the precision for common use.

pub mod cli;
pub mod error;
pub mod eval;
pub mod features;
pub mod grid;
pub mod scalar;
pub mod sequence;
pub mod solver;
pub mod spectral;
pub mod synth;
pub mod tracker;

pub use error::{Error, Result};
pub use grid::{ComplexChannels, ComplexGrid, Grid, MultiChannel, RealChannels, RealGrid};
pub use scalar::Scalar;
pub use eval::MapNormalization;
pub use tracker::{BoundingBox, TrackerConfig, TrackerState};

pub type Tracker32 = TrackerState<f32>;
pub type Tracker64 = TrackerState<f64>;
pub type FilterBank64 = solver::FilterBank<f64>;
pub type Fft2D64 = spectral::Fft2<f64>;
