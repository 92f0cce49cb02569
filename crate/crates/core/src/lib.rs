//! Computation engine for generalized multi-draw Pólya urn models.
//!
//! An urn holds `W0` white and `B0` black balls (or `r` colors). Each step
//! draws `m` balls, notes their colors, returns them, and adds balls
//! according to the model's replacement rule. This crate computes, exactly
//! where exactness is possible:
//!
//! * [`exact_moments`] — moments `E(W_n^s)` by recurrence, closed-form
//!   expectations, factorial moments, multi-color covariance, Friedman
//!   martingale coefficients; all in arbitrary-precision rationals.
//! * [`distribution_oracle`] — the full exact law of the state by dynamic
//!   programming, used as independent ground truth for everything else.
//! * [`asymptotics`] — characteristic polynomials and roots, Gamma-product
//!   prefactors, and the normalized limit moments `lim E(W_n^s)/n^s`.
//! * [`simulator`] — reproducible seeded Monte Carlo for all variants,
//!   including the non-balanced scheme where no exact formulas exist.
//!
//! Model variants are described on [`urn_model::ModelKind`].

pub mod asymptotics;
pub mod combinatorics;
pub mod distribution_oracle;
mod error;
pub mod exact_moments;
pub mod rational;
pub mod simulator;
pub mod urn_model;

pub use error::{Result, UrnError};
