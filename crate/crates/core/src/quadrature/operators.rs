use alloc::format;

use super::functions::{DistanceProfile, OfDistance, PairFunction, SmoothFunction};
use super::geometry::Geometry;
use super::gk::Estimate;
use super::{integrate_shell, masses, OperatorResult, QuadratureConfig};
use crate::kernels::{Branch, CoefficientField, KernelBundle, LevyMeasureSpec, PerturbationKernel};
use crate::math::{self, Point, GL8_NODES, GL8_WEIGHTS};
use crate::{Error, Result};

/// Radius below which differences are evaluated in integral Taylor form.
pub(crate) const NEAR_FIELD: f64 = 1e-3;
const TINY: f64 = 1e-300;

pub(crate) fn check_dims(op: &'static str, dim: usize, others: &[usize]) -> Result<()> {
    if dim != 1 && dim != 2 {
        return Err(Error::UnsupportedDimension { op, dim });
    }
    if let Some(bad) = others.iter().find(|&&d| d != dim) {
        return Err(Error::Precondition(format!("{op}: dimension {bad} does not match {dim}")));
    }
    Ok(())
}

/// Largest `ε <= cap` with `bound(ε) <= target`, for a nondecreasing bound.
pub(crate) fn shell_radius(cfg: &QuadratureConfig, cap: f64, target: f64, bound: impl Fn(f64) -> f64) -> f64 {
    if let Some(e) = cfg.inner_cutoff {
        return e.min(cap);
    }
    if bound(cap) <= target {
        return cap;
    }
    let (mut lo, mut hi) = (math::ln(TINY), math::ln(cap));
    if bound(TINY) > target {
        return TINY;
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if bound(math::exp(mid)) <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    math::exp(lo)
}

/// Outer radius of integration and the kernel mass beyond it.
///
/// `support` is the radius outside which the kernel vanishes, `tail(ρ)` the
/// kernel mass of `{|z| > ρ}`. The radius is at least `min_radius`.
pub(crate) fn far_field(
    cfg: &QuadratureConfig,
    support: f64,
    min_radius: f64,
    target: f64,
    tail: impl Fn(f64) -> f64,
) -> (f64, f64) {
    if support <= cfg.radius_cap {
        return (support, 0.0);
    }
    let cap = cfg.radius_cap;
    let lo_r = min_radius.min(cap);
    if tail(lo_r) <= target {
        return (lo_r, tail(lo_r));
    }
    if tail(cap) > target {
        return (cap, tail(cap));
    }
    let (mut lo, mut hi) = (math::ln(lo_r), math::ln(cap));
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if tail(math::exp(mid)) <= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let r = math::exp(hi);
    (r, tail(r))
}

pub(crate) fn add_measure_features(g: &mut Geometry, spec: &LevyMeasureSpec, shift: &[f64]) {
    if spec.truncation().is_finite() {
        g.add_sphere(shift, spec.truncation());
    }
    if let Some(c) = spec.cone_restriction() {
        g.add_cone(shift, c.axis(), c.delta());
    }
    g.add_point(shift);
}

pub(crate) fn add_field_features(g: &mut Geometry, field: &CoefficientField, shift: &[f64]) {
    let e1 = math::unit(g.dim(), 0);
    for k in field.z_kinks() {
        g.add_plane(&e1, k + shift[0]);
    }
}

fn ball_volume(d: usize, r: f64) -> f64 {
    math::sphere_area(d) * math::powf(r, d as f64) / d as f64
}

/// `∫_0^1 (1 - s) z^T ∇²f(x + s z) z ds`
fn taylor_scalar<F: SmoothFunction + ?Sized>(f: &F, x: &[f64], z: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (t, w) in GL8_NODES.iter().zip(GL8_WEIGHTS.iter()) {
        let s = 0.5 * (1.0 + t);
        let p = math::axpy(x, s, z);
        acc += 0.5 * w * (1.0 - s) * f.second_directional(&p, z);
    }
    acc
}

fn taylor_pair<H: PairFunction + ?Sized>(h: &H, x: &[f64], y: &[f64], jx: &[f64], jy: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (t, w) in GL8_NODES.iter().zip(GL8_WEIGHTS.iter()) {
        let s = 0.5 * (1.0 + t);
        let px = math::axpy(x, s, jx);
        let py = math::axpy(y, s, jy);
        acc += 0.5 * w * (1.0 - s) * h.second_directional(&px, &py, jx, jy);
    }
    acc
}

struct Plan {
    geometry: Geometry,
    eps: f64,
    outer: f64,
    taylor: f64,
}

fn scalar_integral<F, K>(f: &F, x: &[f64], plan: &Plan, kernel: K, cfg: &QuadratureConfig) -> Result<Estimate>
where
    F: SmoothFunction + ?Sized,
    K: Fn(&[f64]) -> f64,
{
    let fx = f.value(x);
    integrate_shell(&plan.geometry, plan.eps, plan.outer, cfg.budget(), |z| {
        let k = kernel(z);
        if k == 0.0 {
            return 0.0;
        }
        let r = math::norm(z);
        let diff = if r < plan.taylor {
            taylor_scalar(f, x, z)
        } else {
            let moved = math::add(x, z);
            let grad = if r <= 1.0 { f.directional(x, z) } else { 0.0 };
            f.value(&moved) - fx - grad
        };
        diff * k
    })
}

fn scalar_plan(dim: usize, taylor: f64, eps: f64, outer: f64) -> Plan {
    let mut g = Geometry::new(dim);
    let o = math::zeros(dim);
    g.add_sphere(&o, 1.0);
    g.add_sphere(&o, taylor);
    Plan {
        geometry: g,
        eps,
        outer,
        taylor,
    }
}

/// `(Lf)(x) = ∫ (f(x+z) - f(x) - <∇f(x), z> 1{|z| <= 1}) c(x, z) q(z) dz`.
pub fn apply_l<F: SmoothFunction + ?Sized>(
    spec: &LevyMeasureSpec,
    field: &CoefficientField,
    f: &F,
    x: &[f64],
    cfg: &QuadratureConfig,
) -> Result<OperatorResult> {
    apply_l_star(spec, field, &PerturbationKernel::none(spec.dim()), f, x, cfg)
}

/// `L_* f = L f + L_μ f` with the combined kernel `c(x,z) q(z) + m(x,z)`,
/// integrated in a single pass.
pub fn apply_l_star<F: SmoothFunction + ?Sized>(
    spec: &LevyMeasureSpec,
    field: &CoefficientField,
    pert: &PerturbationKernel,
    f: &F,
    x: &[f64],
    cfg: &QuadratureConfig,
) -> Result<OperatorResult> {
    cfg.validate()?;
    let d = spec.dim();
    check_dims("apply_L", d, &[field.dim(), pert.dim(), x.len()])?;
    let cs = field.upper();
    let mm = if pert.is_zero() { 0.0 } else { pert.x_factor_max() };
    let (sup, hb) = (f.sup_norm(), f.hessian_bound());
    let target = 0.1 * cfg.tol * ((cs + mm) * sup.max(hb)).max(TINY);
    let mut taylor = NEAR_FIELD.min(0.5 * spec.truncation());
    if !pert.is_zero() {
        taylor = taylor.min(0.5 * pert.truncation());
    }
    let shell_of = |e: f64| 0.5 * hb * (cs * spec.ball_moment(2.0, e) + mm * pert.radial_moment(2.0, 0.0, e));
    let eps = shell_radius(cfg, 0.5 * taylor, target, shell_of);
    let support = if pert.is_zero() {
        spec.truncation()
    } else {
        spec.truncation().max(pert.truncation())
    };
    let tail_of = |r: f64| cs * spec.tail_mass(r) + mm * pert.radial_moment(0.0, r, f64::INFINITY);
    let (outer, tail) = far_field(cfg, support, 2.0, target / (2.0 * sup).max(TINY), tail_of);
    let mut plan = scalar_plan(d, taylor, eps, outer);
    let o = math::zeros(d);
    add_measure_features(&mut plan.geometry, spec, &o);
    add_field_features(&mut plan.geometry, field, &o);
    if !pert.is_zero() && pert.truncation().is_finite() {
        plan.geometry.add_sphere(&o, pert.truncation());
    }
    let est = scalar_integral(
        f,
        x,
        &plan,
        |z| {
            let q = spec.density(z);
            let base = if q == 0.0 { 0.0 } else { field.value(x, z) * q };
            base + pert.density(x, z)
        },
        cfg,
    )?;
    Ok(OperatorResult {
        value: est.value,
        error_estimate: est.error + 2.0 * sup * tail,
        shell_remainder_bound: shell_of(eps),
    })
}

/// `(L_μ f)(x)` with the kernel `m(x, z) dz` alone.
pub fn apply_l_mu<F: SmoothFunction + ?Sized>(
    pert: &PerturbationKernel,
    f: &F,
    x: &[f64],
    cfg: &QuadratureConfig,
) -> Result<OperatorResult> {
    cfg.validate()?;
    let d = pert.dim();
    check_dims("apply_L_mu", d, &[x.len()])?;
    if pert.is_zero() {
        return Ok(OperatorResult::default());
    }
    let mm = pert.x_factor_max();
    let (sup, hb) = (f.sup_norm(), f.hessian_bound());
    let target = 0.1 * cfg.tol * (mm * sup.max(hb)).max(TINY);
    let taylor = NEAR_FIELD.min(0.5 * pert.truncation());
    let shell_of = |e: f64| 0.5 * hb * mm * pert.radial_moment(2.0, 0.0, e);
    let eps = shell_radius(cfg, 0.5 * taylor, target, shell_of);
    let (outer, tail) = far_field(cfg, pert.truncation(), 2.0, target / (2.0 * sup).max(TINY), |r| {
        mm * pert.radial_moment(0.0, r, f64::INFINITY)
    });
    let mut plan = scalar_plan(d, taylor, eps, outer);
    if pert.truncation().is_finite() {
        plan.geometry.add_sphere(&math::zeros(d), pert.truncation());
    }
    let est = scalar_integral(f, x, &plan, |z| pert.density(x, z), cfg)?;
    Ok(OperatorResult {
        value: est.value,
        error_estimate: est.error + 2.0 * sup * tail,
        shell_remainder_bound: shell_of(eps),
    })
}

/// `ℓ¹` norm of the pair gradient, an upper bound for its Euclidean norm.
fn pair_gradient_l1<H: PairFunction + ?Sized>(h: &H, x: &[f64], y: &[f64]) -> f64 {
    let d = x.len();
    let o = math::zeros(d);
    let mut g = 0.0;
    for i in 0..d {
        let e = math::unit(d, i);
        g += h.directional(x, y, &e, &o).abs() + h.directional(x, y, &o, &e).abs();
    }
    g
}

#[allow(clippy::too_many_arguments)]
fn pair_integral<H, D>(
    h: &H,
    x: &[f64],
    y: &[f64],
    v: &[f64],
    mask: [bool; 5],
    densities: D,
    plan: &Plan,
    cfg: &QuadratureConfig,
) -> Result<Estimate>
where
    H: PairFunction + ?Sized,
    D: Fn(&[f64]) -> [f64; 5],
{
    let h0 = h.value(x, y);
    let o = math::zeros(x.len());
    integrate_shell(&plan.geometry, plan.eps, plan.outer, cfg.budget(), |z| {
        let dens = densities(z);
        let r = math::norm(z);
        let mut acc = 0.0;
        for (i, br) in Branch::ALL.iter().enumerate() {
            if !mask[i] || dens[i] == 0.0 {
                continue;
            }
            let (jx, jy) = br.jumps(z, v);
            let diff = if r < plan.taylor && i >= 2 {
                taylor_pair(h, x, y, &jx, &jy)
            } else {
                let gx: &[f64] = if math::norm(&jx) <= 1.0 { &jx } else { &o };
                let gy: &[f64] = if math::norm(&jy) <= 1.0 { &jy } else { &o };
                h.value(&math::add(x, &jx), &math::add(y, &jy)) - h0 - h.directional(x, y, gx, gy)
            };
            acc += dens[i] * diff;
        }
        acc
    })
}

const ALL_BRANCHES: [bool; 5] = [true; 5];
const LC_BRANCHES: [bool; 5] = [true, true, true, false, false];
const LR_BRANCHES: [bool; 5] = [false, false, false, true, true];

#[allow(clippy::too_many_arguments)]
fn coupling_with_mask<H: PairFunction + ?Sized>(
    op: &'static str,
    spec: &LevyMeasureSpec,
    field: &CoefficientField,
    h: &H,
    x: &[f64],
    y: &[f64],
    kappa: f64,
    mask: [bool; 5],
    cfg: &QuadratureConfig,
) -> Result<OperatorResult> {
    cfg.validate()?;
    let d = spec.dim();
    check_dims(op, d, &[field.dim(), x.len(), y.len()])?;
    if x == y {
        return Err(Error::Precondition(format!("{op} requires x != y")));
    }
    let bundle = KernelBundle::new(spec, field, x, y, kappa)?;
    let v = Point::from_slice(bundle.displacement());
    let r = math::norm(&math::sub(x, y));
    let vn = math::norm(&v);
    let cs = field.upper();
    let sup = h.sup_norm();
    let hb = h.hessian_bound_near(x, y);
    let gl1 = pair_gradient_l1(h, x, y);
    let taylor = NEAR_FIELD.min(0.25 * r).min(0.25 * vn).min(0.5 * spec.truncation());
    let target = 0.1 * cfg.tol * (cs * sup.max(hb).max(gl1)).max(TINY);
    let q_near_v = math::exp(spec.ln_radial(0.5 * vn));
    let shell_of = |e: f64| {
        // branches 3-5: (1/2) |H| |(jx, jy)|^2 with |(jx, jy)|^2 <= 2|z|^2 and d3+d4+d5 <= c^* q
        let singular = hb * cs * spec.ball_moment(2.0, e);
        // branches 1-2 have bounded densities on |z| < ε
        let bounded = cs * q_near_v * ball_volume(d, e) * (2.0 * sup + gl1 * (vn + 2.0 * e));
        singular + bounded
    };
    let eps = shell_radius(cfg, 0.5 * taylor, target, shell_of);
    let (outer, tail) = far_field(cfg, spec.truncation(), 2.0 + vn, target / (2.0 * sup * cs).max(TINY), |rr| {
        spec.tail_mass(rr)
    });
    let mut plan = scalar_plan(d, taylor, eps, outer);
    let o = math::zeros(d);
    let mv = math::neg(&v);
    for s in [&o, &v, &mv] {
        add_measure_features(&mut plan.geometry, spec, s);
        add_field_features(&mut plan.geometry, field, s);
        plan.geometry.add_sphere(s, 1.0);
    }
    let half = 0.5 * math::norm_sq(&v);
    plan.geometry.add_plane(&v, half);
    plan.geometry.add_plane(&v, -half);
    h.add_features(x, y, &mut plan.geometry);
    let est = pair_integral(h, x, y, &v, mask, |z| bundle.densities_unchecked(z), &plan, cfg)?;
    Ok(OperatorResult {
        value: est.value,
        error_estimate: est.error + 2.0 * sup * cs * tail,
        shell_remainder_bound: shell_of(eps),
    })
}

/// The coupling operator `(L̃h)(x, y)` of the five-branch jump system.
pub fn apply_coupling<H: PairFunction + ?Sized>(
    spec: &LevyMeasureSpec,
    field: &CoefficientField,
    h: &H,
    x: &[f64],
    y: &[f64],
    kappa: f64,
    cfg: &QuadratureConfig,
) -> Result<OperatorResult> {
    coupling_with_mask("apply_coupling", spec, field, h, x, y, kappa, ALL_BRANCHES, cfg)
}

/// `L̃_C f(|x-y|)`: branches 1-3 applied to `h(x, y) = f(|x - y|)`.
pub fn apply_lc<P: DistanceProfile + Clone>(
    spec: &LevyMeasureSpec,
    field: &CoefficientField,
    f: &P,
    x: &[f64],
    y: &[f64],
    kappa: f64,
    cfg: &QuadratureConfig,
) -> Result<OperatorResult> {
    let h = OfDistance(f.clone());
    coupling_with_mask("apply_LC", spec, field, &h, x, y, kappa, LC_BRANCHES, cfg)
}

/// `L̃_R f(|x-y|)`: the two marginal-remainder branches 4 and 5.
pub fn apply_lr<P: DistanceProfile + Clone>(
    spec: &LevyMeasureSpec,
    field: &CoefficientField,
    f: &P,
    x: &[f64],
    y: &[f64],
    kappa: f64,
    cfg: &QuadratureConfig,
) -> Result<OperatorResult> {
    let h = OfDistance(f.clone());
    coupling_with_mask("apply_LR", spec, field, &h, x, y, kappa, LR_BRANCHES, cfg)
}

/// `½ μ_{x,y,(x-y)_κ}(R^d) [f(r + κ∧r) + f(r - κ∧r) - 2 f(r)]` with `r = |x - y|`.
///
/// Equals [`apply_lc`] when `q` is symmetric and `c(x, ·)` is even, which
/// makes the first-order terms of branches 1 and 2 cancel.
pub fn lc_closed_form<P: DistanceProfile>(
    spec: &LevyMeasureSpec,
    field: &CoefficientField,
    f: &P,
    x: &[f64],
    y: &[f64],
    kappa: f64,
    cfg: &QuadratureConfig,
) -> Result<OperatorResult> {
    if x == y {
        return Err(Error::Precondition("lc_closed_form requires x != y".into()));
    }
    let bundle = KernelBundle::new(spec, field, x, y, kappa)?;
    let mass = masses::mass_mu(spec, field, x, y, bundle.displacement(), cfg)?;
    let r = math::norm(&math::sub(x, y));
    let k = kappa.min(r);
    let bracket = f.value(r + k) + f.value(r - k) - 2.0 * f.value(r);
    Ok(OperatorResult {
        value: 0.5 * mass.value * bracket,
        error_estimate: 0.5 * mass.error_estimate * bracket.abs(),
        shell_remainder_bound: 0.5 * mass.shell_remainder_bound * bracket.abs(),
    })
}

/// `(L̃_μ h)(x, y)`: synchronous jumps with density `m(x,z) ∧ m(y,z)` and the
/// two marginal remainders.
pub fn apply_coupling_mu<H: PairFunction + ?Sized>(
    pert: &PerturbationKernel,
    h: &H,
    x: &[f64],
    y: &[f64],
    cfg: &QuadratureConfig,
) -> Result<OperatorResult> {
    cfg.validate()?;
    let d = pert.dim();
    check_dims("apply_coupling_mu", d, &[x.len(), y.len()])?;
    if x == y {
        return Err(Error::Precondition("apply_coupling_mu requires x != y".into()));
    }
    if pert.is_zero() {
        return Ok(OperatorResult::default());
    }
    let r = math::norm(&math::sub(x, y));
    let mm = pert.x_factor_max();
    let sup = h.sup_norm();
    let hb = h.hessian_bound_near(x, y);
    let taylor = NEAR_FIELD.min(0.25 * r).min(0.5 * pert.truncation());
    let target = 0.1 * cfg.tol * (mm * sup.max(hb)).max(TINY);
    let shell_of = |e: f64| hb * mm * pert.radial_moment(2.0, 0.0, e);
    let eps = shell_radius(cfg, 0.5 * taylor, target, shell_of);
    let (outer, tail) = far_field(cfg, pert.truncation(), 2.0, target / (2.0 * sup).max(TINY), |rr| {
        mm * pert.radial_moment(0.0, rr, f64::INFINITY)
    });
    let mut plan = scalar_plan(d, taylor, eps, outer);
    if pert.truncation().is_finite() {
        plan.geometry.add_sphere(&math::zeros(d), pert.truncation());
    }
    h.add_features(x, y, &mut plan.geometry);
    let (fx, fy) = (pert.x_factor(x), pert.x_factor(y));
    let lo = fx.min(fy);
    let v = math::zeros(d);
    let est = pair_integral(
        h,
        x,
        y,
        &v,
        ALL_BRANCHES,
        |z| {
            let rad = pert.radial(z);
            [0.0, 0.0, lo * rad, (fx - lo) * rad, (fy - lo) * rad]
        },
        &plan,
        cfg,
    )?;
    Ok(OperatorResult {
        value: est.value,
        error_estimate: est.error + 2.0 * sup * tail,
        shell_remainder_bound: shell_of(eps),
    })
}
