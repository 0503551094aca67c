//! Reaction-diffusion models of information spreading on social networks.
//!
//! The crate ingests follower graphs and adoption cascades into density
//! fields `I(x, t)` over friendship-hop distance, solves scalar and
//! multi-component reaction-diffusion models on an interval, fits model
//! parameters to observed fields, and computes spreading diagnostics:
//! minimal wave speeds, principal eigenvalues of the steady-state problem
//! and free-boundary front speeds.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod calibrate;
pub mod cascade;
pub mod config;
pub mod error;
pub mod field;
pub mod linalg;
pub mod solver;
pub mod spectral;
pub mod spline;
pub mod stefan;

pub use error::{Error, Result};
