//! Tracking-by-detection for time-lapse microscopy of rod-shaped microbes.
//!
//! Cells segmented in every frame are linked across consecutive frames with
//! an activity-scaled Gaussian measure: a per-cell "activity" (the mean
//! temporal standard deviation of intensity inside the cell mask) sets how
//! far a cell may have moved. Linking runs in two stages, a greedy pass over
//! growing cells ordered by activity and a linear assignment that lets each
//! remaining mother take up to two daughters. Results are lineage graphs that
//! can be written in the Cell Tracking Challenge layout and scored with TRA.
//!
//! The numeric core is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar for the common cases.

pub mod activity;
pub mod assignment;
pub mod error;
pub mod evaluation;
pub mod io;
pub mod lineage;
pub mod linking;
pub mod model;
pub mod pipeline;
mod scalar;
pub mod synthgen;

pub use error::{Error, Result};
pub use scalar::Real;

pub type ImageStack64 = model::ImageStack<f64>;
pub type ImageStack32 = model::ImageStack<f32>;
pub type CellInstance64 = model::CellInstance<f64>;
pub type CellInstance32 = model::CellInstance<f32>;
pub type StdField64 = activity::StdField<f64>;
pub type StdField32 = activity::StdField<f32>;
pub type LinkConfig64 = linking::LinkConfig<f64>;
pub type LinkConfig32 = linking::LinkConfig<f32>;
pub type CostMatrix64 = assignment::CostMatrix<f64>;
pub type CostMatrix32 = assignment::CostMatrix<f32>;
