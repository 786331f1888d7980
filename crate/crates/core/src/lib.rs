//! Markov bridges and Doob h-transforms.
//!
//! Two Markov processes share all their bridges exactly when one is an
//! h-transform of the other by a positive eigenfunction. This crate makes
//! that statement checkable: closed-form kernels and their h-transforms
//! ([`measure_kernel`]), bridge densities, samplers and eigenfunction
//! extraction ([`bridges`]), exact finite-state versions ([`finite_chain`]),
//! and the simulation and test statistics used to compare laws
//! ([`montecarlo`]).
//!
//! Monte Carlo work is split into fixed chunks with one RNG stream each (see
//! [`par`]); with the default `parallel` feature the chunks run on rayon.

// `!(a < b)` is used on purpose so that NaN fails every check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bridges;
pub mod error;
pub mod finite_chain;
pub mod measure_kernel;
pub mod montecarlo;
pub mod par;
pub mod quadrature;

pub use error::{Error, Result};
pub use par::Exec;
pub use quadrature::Quadrature;
