//! Numerical laboratory for Lieb-Robinson bounds, harmonic lattice Weyl
//! dynamics, the AKLT chain and gapped ground-state approximations.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision, clippy::needless_range_loop)]

pub mod aklt;
pub mod anharmonic;
pub mod clustering;
pub mod error;
pub mod gappedapprox;
pub mod harmonic;
pub mod lattice;
pub mod linalg;
pub mod lrbounds;
pub mod models;
pub mod quadrature;
pub mod quantum;
pub mod report;
pub mod scenarios;
pub mod thermolimit;

pub use error::{LabError, Result};
