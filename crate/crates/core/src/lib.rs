//! Heavy-tailed vector autoregression with Catoni-type losses: simulation,
//! stochastic subgradient fitting, evaluation and theoretical bounds.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod error;
pub mod evaluation;
pub mod harness;
pub mod losses;
pub mod optimizer;
pub mod rng;
pub mod series;
pub mod tail_dist;
pub mod theory;
pub mod var_model;

pub use error::{Error, Result};
