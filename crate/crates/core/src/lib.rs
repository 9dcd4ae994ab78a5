//! Numerical verification engine for first BGG operators in conformal spin
//! geometry: splitting operators, BGG operators, normality, and coupling
//! maps evaluated on explicit metrics with jet arithmetic.

#![allow(clippy::needless_range_loop, clippy::type_complexity)]

pub mod bgg;
pub mod clifford;
pub mod coupling;
pub mod error;
pub mod families;
pub mod field;
pub mod forms;
pub mod geometry;
pub mod invariants;
pub mod jet;
pub mod point;
pub mod poly;
pub mod random;
pub mod report;
pub mod scenario;
pub mod skew;
pub mod tractor;

pub use error::{Error, Result};
pub use jet::{Jet, MultiIndex};
pub use poly::{Polynomial, ScalarExpr};
