//! Extreme eigenvalues of sample autocovariance matrices built from heavy-tailed
//! linear fields: simulation, order-statistic approximations, Poisson and
//! Fréchet limit laws, Tracy–Widom numerics and tail-index estimation.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod approx;
pub mod cli;
pub mod error;
pub mod estim;
pub mod limits;
pub mod linfield;
pub mod matrix;
pub mod mc;
mod quad;
pub mod rand_heavy;
pub mod rng;
pub mod spectra;
pub mod stats;
pub mod tracyw;
