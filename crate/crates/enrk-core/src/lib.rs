//! Explicit nonstandard Runge-Kutta (ENRK) methods for autonomous ODE
//! systems: classical explicit stages with the step size h replaced by a
//! bounded denominator function phi(h), chosen so that positivity and the
//! linear stability of every equilibrium survive arbitrarily large steps
//! while the classical accuracy order is retained.
//!
//! The crate is organized around that pipeline:
//!
//! - [`tableau`]: the explicit coefficient schemes and their positivity
//!   radius R(A,b);
//! - [`stability`]: stability polynomials and the elementary-stability
//!   threshold phi*;
//! - [`positivity`]: the positivity step threshold H = R(A,b)/alpha and
//!   the combined threshold tau* = min{phi*, H};
//! - [`denominator`]: the phi(h) families and their parameter rules;
//! - [`integrator`]: the fixed-step ENRK stepper;
//! - [`models`]: bundled benchmark systems with equilibria and spectra;
//! - [`harness`]: reference solutions, error/rate tables, threshold reports.

pub mod denominator;
pub mod error;
pub mod harness;
pub mod integrator;
pub mod models;
pub mod positivity;
pub mod stability;
pub mod tableau;

pub use error::{Error, ErrorKind, Result};
