//! Numerical laboratory for stochastic differential equations.
//!
//! * [`wiener`], [`ito`], [`sde`]: Brownian paths, stochastic sums, SDE
//!   models, Euler–Maruyama and exact solutions of linear equations.
//! * [`kolmogorov`]: generators and finite-difference Kolmogorov /
//!   Fokker–Planck solvers in one dimension, Monte Carlo semigroups.
//! * [`exit`]: Monte Carlo exit problems and their closed-form oracles.
//! * [`ergodicity`]: discretised kernels, drift/minorisation certificates,
//!   weighted total-variation contraction, Hilbert projective metric and
//!   Perron–Frobenius power iteration.
//! * [`ldp`]: rate functionals, action minimisation, quasipotentials and
//!   Arrhenius / Eyring–Kramers checks.

// `!(x > 0.0)` deliberately rejects NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod ergodicity;
pub mod error;
pub mod exit;
pub mod grid;
pub mod ito;
pub mod kolmogorov;
pub mod ldp;
mod par;
pub mod rng;
pub mod sde;
pub mod stats;
pub mod wiener;

pub use error::{Error, Result};
pub use grid::{Grid1D, TimeGrid};
pub use rng::{GaussianSource, GaussianStream};
pub use sde::{Estimate, Potential, SamplePath, SdeModel};
pub use wiener::WienerPath;
