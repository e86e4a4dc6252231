//! Shift spaces on ℤᵈ at finite scale.

// `!(x > 0.0)` is used on purpose so NaN is rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approx;
pub mod catalog;
pub mod entropy;
pub mod error;
pub mod geometry;
pub mod io;
pub mod pattern;
pub mod scalar;
pub mod spectrum;
pub mod tiling;

pub use error::{Error, Result};
pub use geometry::{FiniteRegion, GroupContext, GroupPoint};
pub use pattern::{Alphabet, Pattern, ShiftSpec, Symbol};
pub use scalar::Scalar;

/// `f64` instances of the generic reports.
pub type EntropyEstimate = entropy::EntropyEstimate<f64>;
pub type BoundCertificate = entropy::BoundCertificate<f64>;
pub type TilingBoundReport = entropy::TilingBoundReport<f64>;
pub type TilesetCertificate = tiling::TilesetCertificate<f64>;
pub type ApproxReport = approx::ApproxReport<f64>;
pub type ChainReport = approx::ChainReport<f64>;
pub type MarkerReport = spectrum::MarkerReport<f64>;
pub type SpectrumReport = spectrum::SpectrumReport<f64>;
pub type PremisesReport = spectrum::PremisesReport<f64>;
