use alloc::format;

use super::functions::{DistanceProfile, OfDistance};
use super::masses::{j_nu, j_of_r, mass_mu};
use super::operators::{apply_coupling, check_dims};
use super::QuadratureConfig;
use crate::kernels::{moduli_pair_moment, modulus_w, CoefficientField, LevyMeasureSpec, MomentOrder};
use crate::math;
use crate::modulus_functions::ModulusFunction;
use crate::{Error, Result};

/// Direction grid used for `J_ν` by the drift quantities.
const DRIFT_DIRECTIONS: usize = 16;

/// `2 ν(|z| > 1) c^* ‖ψ‖_∞`, with `ψ` continued past its valid radius.
pub fn default_c2(spec: &LevyMeasureSpec, field: &CoefficientField, psi: &ModulusFunction) -> f64 {
    let tail = spec.tail_mass(1.0);
    if tail == 0.0 {
        return 0.0;
    }
    2.0 * tail * field.upper() * psi.extended().sup_norm()
}

/// `J_ν(r) r^2 ψ''(2r) + c1 w(r) ψ'(r)/r + c2` (second-moment form) or
/// `J_ν(r) r^2 ψ''(2r) + c1 w(r) ψ'(r) + c2` with the first-moment modulus.
///
/// For table coefficients `w` is replaced by its upper bound, so the margin
/// stays an upper bound.
#[allow(clippy::too_many_arguments)]
pub fn drift_margin(
    spec: &LevyMeasureSpec,
    field: &CoefficientField,
    psi: &ModulusFunction,
    r: f64,
    c1: f64,
    c2: f64,
    order: MomentOrder,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    check_dims("drift_margin", spec.dim(), &[field.dim()])?;
    if !(c1 >= 0.0 && c2 >= 0.0) {
        return Err(Error::param("drift.c1", format!("constants must be nonnegative, got {c1}, {c2}")));
    }
    if order == MomentOrder::First && !spec.has_first_moment() {
        return Err(Error::MissingFirstMoment("ν"));
    }
    let second = psi.second(2.0 * r)?;
    let first = psi.eval(r, 1)?;
    let jn = j_nu(spec, r, DRIFT_DIRECTIONS, cfg)?;
    let w = if field.is_x_independent() {
        0.0
    } else {
        modulus_w(spec, field, r, order, cfg)?.upper_bound
    };
    let coupling = match order {
        MomentOrder::Second => w * first / r,
        MomentOrder::First => w * first,
    };
    Ok(jn * r * r * second + c1 * coupling + c2)
}

/// `λ_ψ(ε) = -max_r J_ν(r) r^2 ψ''(2r)` over `grid` log-spaced radii in
/// `[10^{-4} ε, ε]`.
pub fn lambda_psi(
    spec: &LevyMeasureSpec,
    psi: &ModulusFunction,
    eps: f64,
    grid: usize,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::Domain { what: "λ_ψ", value: eps });
    }
    if grid < 2 {
        return Err(Error::InsufficientPoints { needed: 2, got: grid });
    }
    let (lo, hi) = (math::ln(1e-4 * eps), math::ln(eps));
    let mut best = f64::NEG_INFINITY;
    for i in 0..grid {
        let r = if i + 1 == grid {
            eps
        } else {
            math::exp(lo + (hi - lo) * i as f64 / (grid - 1) as f64)
        };
        let second = psi.second(2.0 * r)?;
        let v = j_nu(spec, r, DRIFT_DIRECTIONS, cfg)? * r * r * second;
        best = best.max(v);
    }
    Ok(-best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Prop32Variant {
    /// Second-moment remainder bound `∫|Δc| |z|^2 q · f'(r)/r`.
    P2,
    /// First-moment bound `4 ∫|Δc| |z| q · f'(r)`.
    P1,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prop32Margin {
    /// `rhs - lhs`.
    pub margin: f64,
    pub rhs: f64,
    /// `L̃ f(|x-y|)` by quadrature.
    pub lhs: f64,
    /// Quadrature error of `lhs` plus the error of the moment term.
    pub tolerance: f64,
    /// `J(|x-y|)` used in the leading term.
    pub j: f64,
}

/// Margin of the upper bound for `L̃ f(|x-y|)` over its quadrature value:
/// `½ J(r)(f(2r) - 2f(r)) + (remainder term) + 2 ν(|z|>1) c^* ‖f‖_∞ - L̃f(r)`.
///
/// `J(r)` is the minimum of a sampled `J` and the mass at the pair itself;
/// both bound the true infimum from above, and since `f(2r) - 2f(r) <= 0`
/// using either keeps the right-hand side an upper bound of the true one.
#[allow(clippy::too_many_arguments)]
pub fn prop32_margin<P: DistanceProfile + Clone>(
    spec: &LevyMeasureSpec,
    field: &CoefficientField,
    f: &P,
    x: &[f64],
    y: &[f64],
    kappa: f64,
    eps0: f64,
    variant: Prop32Variant,
    cfg: &QuadratureConfig,
) -> Result<Prop32Margin> {
    let d = spec.dim();
    check_dims("prop32_margin", d, &[field.dim(), x.len(), y.len()])?;
    let u = math::sub(x, y);
    let r = math::norm(&u);
    if !(r > 0.0 && r <= eps0 && eps0 <= kappa && kappa <= 1.0) {
        return Err(Error::Precondition(format!(
            "need 0 < |x-y| <= eps0 <= kappa <= 1, got |x-y| = {r}, eps0 = {eps0}, kappa = {kappa}"
        )));
    }
    if variant == Prop32Variant::P1 && !spec.has_first_moment() {
        return Err(Error::MissingFirstMoment("ν"));
    }
    check_profile(f)?;
    let order = match variant {
        Prop32Variant::P2 => MomentOrder::Second,
        Prop32Variant::P1 => MomentOrder::First,
    };
    let (fr, f2r, d1) = (f.value(r), f.value(2.0 * r), f.d1(r));
    let bracket = f2r - 2.0 * fr;
    let j = if bracket == 0.0 {
        0.0
    } else {
        let at_pair = mass_mu(spec, field, x, y, &u, cfg)?.value;
        let sampled = j_of_r(spec, field, r, kappa, 8, cfg)?.value;
        at_pair.min(sampled)
    };
    let (moment, moment_err) = if d1 == 0.0 {
        (0.0, 0.0)
    } else {
        moduli_pair_moment(spec, field, x, y, order, cfg)?
    };
    let remainder = match variant {
        Prop32Variant::P2 => moment * d1 / r,
        Prop32Variant::P1 => 4.0 * moment * d1,
    };
    let remainder_err = match variant {
        Prop32Variant::P2 => moment_err * d1 / r,
        Prop32Variant::P1 => 4.0 * moment_err * d1,
    };
    let tail = spec.tail_mass(1.0);
    let tail_term = if tail == 0.0 {
        0.0
    } else {
        2.0 * tail * field.upper() * f.sup_norm()
    };
    let rhs = 0.5 * j * bracket + remainder + tail_term;
    let lhs = if f.sup_norm() == 0.0 {
        Default::default()
    } else {
        apply_coupling(spec, field, &OfDistance(f.clone()), x, y, kappa, cfg)?
    };
    Ok(Prop32Margin {
        margin: rhs - lhs.value,
        rhs,
        lhs: lhs.value,
        tolerance: lhs.total_error() + remainder_err,
        j,
    })
}

/// Samples `f(0) = 0`, `f >= 0`, `f' >= 0`, `f'' <= 0` on `(0, 2]`.
fn check_profile<P: DistanceProfile>(f: &P) -> Result<()> {
    if f.value(0.0).abs() > 0.0 {
        return Err(Error::Precondition(format!("f(0) = {} != 0", f.value(0.0))));
    }
    let n = 400;
    for i in 0..=n {
        let s = math::exp(math::ln(1e-8) + (math::ln(2.0) - math::ln(1e-8)) * i as f64 / n as f64);
        let (v, d1, d2) = (f.value(s), f.d1(s), f.d2(s));
        let slack = 1e-12 * (1.0 + v.abs());
        if v < -slack || d1 < -slack * (1.0 + d1.abs()) || d2 > slack * (1.0 + d2.abs()) {
            return Err(Error::Precondition(format!(
                "f must be nonnegative, nondecreasing and concave on (0, 2]; at r = {s}: f = {v}, f' = {d1}, f'' = {d2}"
            )));
        }
    }
    Ok(())
}
