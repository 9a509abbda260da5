//! Deterministic quadrature for the jump operator, its couplings, kernel
//! masses and the drift-condition quantities built from them.
//!
//! All integrals over jump space use the substitution `|z| = e^s`, split at
//! the points and surfaces where the integrand loses smoothness, and are
//! evaluated by a global adaptive Gauss-Kronrod rule (nested over the polar
//! angle in `d = 2`). Near `z = 0` the first-order-compensated difference is
//! replaced by its integral Taylor form, which is free of cancellation, and
//! the remaining ball `|z| < ε` is dropped with a rigorous bound.

mod drift;
pub mod functions;
mod geometry;
mod gk;
mod masses;
mod operators;
mod spatial;

use alloc::format;

pub use drift::{default_c2, drift_margin, lambda_psi, prop32_margin, Prop32Margin, Prop32Variant};
pub use functions::{
    BoundedFunction, Combination, Constant, DistanceProfile, Gaussian, HalfSpaceIndicator, HalfSpaceSign, Lorentzian,
    OfDistance, PairFunction, Separated, SmoothFunction, Wave,
};
pub use geometry::Geometry;
pub use masses::{j_nu, j_of_r, mass_mu, mass_nu_u, JReport};
pub use operators::{
    apply_coupling, apply_coupling_mu, apply_l, apply_l_mu, apply_l_star, apply_lc, apply_lr, lc_closed_form,
};

pub(crate) use gk::Budget;
pub(crate) use spatial::integrate_shell;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    /// Relative tolerance on `∫|integrand|`.
    pub tol: f64,
    /// Radius of the dropped ball around `z = 0`; chosen automatically when
    /// `None` so that its remainder bound stays below `tol / 10`.
    pub inner_cutoff: Option<f64>,
    pub max_subdivisions: usize,
    /// Largest radius integrated for untruncated measures; the tail beyond is
    /// bounded and added to the error estimate.
    pub radius_cap: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            tol: 1e-8,
            inner_cutoff: None,
            max_subdivisions: 20_000,
            radius_cap: 1e8,
        }
    }
}

impl QuadratureConfig {
    pub fn with_tol(tol: f64) -> Self {
        QuadratureConfig {
            tol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol <= 1e-2) {
            return Err(Error::param("quad.tol", format!("{} not in (0, 1e-2]", self.tol)));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::param("quad.max_subdiv", "must be positive"));
        }
        if let Some(e) = self.inner_cutoff {
            if !(e > 0.0 && e < 1.0) {
                return Err(Error::param("quad.eps", format!("{e} not in (0, 1)")));
            }
        }
        if !(self.radius_cap > 1.0) {
            return Err(Error::param("quad.radius_cap", "must exceed 1"));
        }
        Ok(())
    }

    pub(crate) fn budget(&self) -> Budget {
        Budget {
            rel_tol: self.tol,
            abs_floor: 1e-300,
            max_subdivisions: self.max_subdivisions,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OperatorResult {
    pub value: f64,
    /// Quadrature error estimate plus the bound on any truncated far field.
    pub error_estimate: f64,
    /// Bound on the dropped contribution of `|z| < ε`.
    pub shell_remainder_bound: f64,
}

impl OperatorResult {
    /// `error_estimate + shell_remainder_bound`
    pub fn total_error(&self) -> f64 {
        self.error_estimate + self.shell_remainder_bound
    }
}
