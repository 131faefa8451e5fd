//! Simulation and verification toolkit for one-dimensional sticky Brownian
//! motion.
//!
//! - [`srw`]: sticky random walk generators, exact event-driven sampling,
//!   κ-rescaling and the modified-Donsker walk.
//! - [`sem`]: symmetrized Euler–Maruyama for `dX = F(X)dt + √2 dW` with
//!   reflection at 0.
//! - [`potentials`]: Morse and Lennard-Jones families with a prescribed
//!   sticky limit.
//! - [`feynman_kac`]: Monte Carlo solutions of heat and Poisson problems
//!   with Feller boundary data.
//! - [`reference`]: deterministic and closed-form oracles.
//! - [`stats`]: ensemble estimators.
//!
//! All Monte Carlo routines draw sample `i` from the counter-based stream
//! `(seed, i)` and reduce in fixed blocks, so results do not depend on the
//! number of worker threads.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ensemble;
pub mod error;
pub mod feynman_kac;
pub mod potentials;
pub mod quadrature;
pub mod reference;
pub mod rng;
pub mod sem;
pub mod srw;
pub mod stats;
pub mod tridiag;

pub use error::{Error, Result};
