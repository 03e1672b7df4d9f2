//! Absolute technical efficiency estimation from a censored translog input
//! distance function.
//!
//! The response `ln D = -ln LF` (the log inverse load factor) is regressed on
//! a translog in inputs, output, and a time trend by maximum likelihood,
//! treating the zero bound as left censoring (type I Tobit) and the error
//! variance as multiplicative, `sigma^2 = exp(X alpha)`. Linear homogeneity
//! in inputs is imposed exactly through a null-space reparameterization.
//! Post-estimation modules derive the efficiency index `TEI = exp(-ln D)`,
//! input/output elasticities, returns to scale, technical change, and the
//! DTC/ETC/STC/SE decomposition of total factor productivity growth; a
//! simulation harness provides ground-truth recovery checks.
//!
//! Pipeline: [`panel`] loads and transforms data, [`design`] expands the
//! translog and builds restrictions, [`tobit`] fits, [`inference`] runs
//! nested LR tests, [`efficiency`] computes indices and the decomposition,
//! [`simulate`] generates synthetic panels.

pub mod design;
pub mod efficiency;
pub mod error;
pub mod inference;
pub mod optim;
pub mod panel;
pub mod simulate;
pub mod special;
pub mod tobit;

pub use error::{Error, Result};
