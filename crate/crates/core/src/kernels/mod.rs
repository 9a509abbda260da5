//! Lévy measure families, jump coefficients, perturbation kernels and the
//! kernels of the coupled jump system.

mod bundle;
mod coefficient;
mod measure;
mod moduli;
mod perturbation;

pub use bundle::{clip_displacement, coeff4, nu_u_density, Branch, KernelBundle};
pub use coefficient::{CoefficientFamily, CoefficientField};
pub use measure::{Cone, LevyFamily, LevyMeasureSpec};
pub(crate) use moduli::pair_moment as moduli_pair_moment;
pub use moduli::{
    modulus_w, modulus_w_mu, modulus_w_star, stable_bounds_check, BoundsReport, ModulusValue, MomentOrder,
};
pub use perturbation::{PerturbationFamily, PerturbationKernel};
