//! Synthetic field-testing of multiple-choice items.
//!
//! The crate simulates examinees of graded ability, samples their responses,
//! calibrates 2PL item parameters (freely or anchored one item at a time),
//! scores abilities by MAP, and compares two calibrations with classical
//! test statistics. The numerical modules are generic over [`Scalar`]
//! (`f32`/`f64`); the aliases below fix the double-precision types used by
//! file I/O and the pipeline.

pub mod data;
pub mod error;
pub mod irt;
pub mod report;
pub mod scalar;
pub mod simulate;
pub mod stats;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type ItemParams = data::ItemParams2PL<f64>;
pub type Group = data::GroupDist<f64>;
pub type Ability = data::AbilityEstimate<f64>;
pub type Fit = irt::FitResult<f64>;
pub type Anchored = irt::AnchoredFit<f64>;
pub type Grid = irt::QuadratureGrid<f64>;
pub type Ctt = stats::CttTable<f64>;
pub type Comparison = stats::ComparisonSummary<f64>;

pub type ItemParams32 = data::ItemParams2PL<f32>;
pub type Group32 = data::GroupDist<f32>;
pub type Fit32 = irt::FitResult<f32>;
