//! Explicit finite-sample bounds on the distance between the law of a
//! maximum likelihood estimator and the normal distribution, with a Monte
//! Carlo harness for checking them.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN
#![allow(clippy::excessive_precision)] // reference constants are quoted to full published precision

pub mod boundary;
pub mod error;
pub mod expfam;
pub mod models;
pub mod montecarlo;
pub mod msebound;
pub mod quad;
pub mod report;
pub mod solve;
pub mod specfun;
pub mod steincore;
pub mod tables;

pub use error::{Error, Result};
