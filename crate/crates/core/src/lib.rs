//! Optimal fluctuation paths, prehistory probabilities and time-reversed
//! dynamics for stochastic chemical reaction networks.
//!
//! - [`crn`]: networks, parsing, stoichiometry and propensities.
//! - [`kinetics`]: ODE limit, SSA, tau-leaping, Langevin and linear noise.
//! - [`ldp`]: Hamiltonian, Lagrangian, optimal paths and the quasipotential.
//! - [`cme`]: lattice master equation with Skellam tau-leap kernels.
//! - [`reversal`]: Bayes-reversed kernels and prehistory probabilities.
//! - [`revsim`]: sampling the reversed jump processes.
//! - [`gausslim`]: reversed drift and diffusion fields and limit covariances.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cme;
pub mod crn;
pub mod error;
pub mod gausslim;
pub mod io;
pub mod kinetics;
pub mod ldp;
pub mod reversal;
pub mod revsim;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
