//! Optimal singular harvesting of independent diffusions with
//! density-dependent prices.
//!
//! The crate provides four layers:
//!
//! - [`model`]: problem instances (dynamics, prices, discount rate) and the
//!   parameter regime dichotomy per component;
//! - [`analytic`]: closed-form values, characteristic roots, harvesting
//!   thresholds, and a grid verifier for candidate value functions;
//! - [`policy`] / [`sim`]: harvesting strategies and reproducible
//!   Euler-Maruyama Monte Carlo of the discounted yield;
//! - [`bounds`]: analytic lower/upper bounds on the attainable yield.
//!
//! The special-function kernel behind the logistic model lives in
//! [`specfun`].

pub mod analytic;
pub mod bounds;
pub mod error;
pub mod model;
pub mod policy;
pub mod sim;
pub mod specfun;

mod quad;
mod rng;

pub use error::{Error, Result};
