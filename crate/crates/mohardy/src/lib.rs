//! Numerical laboratory for dyadic martingale Hardy spaces built on
//! Musielak-Orlicz functions.
//!
//! The crate samples every object on a dyadic grid of `2^N` leaves:
//!
//! * [`grid`]: dyadic grids, sampled functions, martingales, stopping times;
//! * [`musielak`]: Musielak-Orlicz functions, Luxemburg norms and sampled condition checks;
//! * [`operators`]: maximal, square and conditional square functions, transforms and weak-type values;
//! * [`atoms`]: atomic and Davis decompositions with validation;
//! * [`walsh`]: Walsh-Paley system, Fejér kernels and means;
//! * [`harness`]: random generators, inequality campaigns and reports.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod atoms;
pub mod error;
pub mod grid;
pub mod harness;
pub mod musielak;
pub mod operators;
pub mod walsh;

pub use error::{Error, Result};
pub use grid::{DyadicGrid, DyadicMartingale, SampledFunction};
pub use musielak::{builtin, luxemburg_norm, modular, MusielakFunction, TGrid};
