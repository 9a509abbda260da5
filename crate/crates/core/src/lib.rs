//! Coupling constructions for Lévy-type operators with a state-dependent
//! jump coefficient `c(x, z)`.
//!
//! The crate is `no_std` (with `alloc`) and purely computational:
//!
//! * [`kernels`]: Lévy measure families, coefficient fields, perturbation
//!   kernels, the displaced-minimum kernels of the refined basic coupling and
//!   the coefficient continuity moduli.
//! * [`quadrature`]: adaptive singular quadrature for the operator, its
//!   coupling operator, kernel masses and drift-condition quantities.
//! * [`modulus_functions`]: the concave test functions used as distances.
//! * [`simulator`]: thinning-based simulation of the jump process and of the
//!   coupled pair, with exact coupling-time detection.
//! * [`estimators`]: Monte Carlo estimators, rate fits and two-sample tests.
//!
//! IO, configuration and parallel execution live in the `levy-coupling-lab`
//! companion crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

mod error;
pub mod math;

pub mod estimators;
pub mod kernels;
pub mod modulus_functions;
pub mod quadrature;
pub mod simulator;

pub use error::{Error, Result};
pub use math::Point;
