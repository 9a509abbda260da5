use alloc::format;
use alloc::vec::Vec;

use super::{CoefficientField, Cone, LevyMeasureSpec, PerturbationKernel};
use crate::math::{self, Point};
use crate::quadrature::{integrate_shell, Geometry, QuadratureConfig};
use crate::{Error, Result};

/// Exponent `p` of the `|z|^p` weight in the continuity moduli.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MomentOrder {
    First,
    Second,
}

impl MomentOrder {
    pub fn from_exponent(p: u8) -> Result<Self> {
        match p {
            1 => Ok(MomentOrder::First),
            2 => Ok(MomentOrder::Second),
            other => Err(Error::MomentOrder(other)),
        }
    }

    pub fn exponent(self) -> f64 {
        match self {
            MomentOrder::First => 1.0,
            MomentOrder::Second => 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulusValue {
    /// Exact value, or the best sampled lower bound.
    pub value: f64,
    /// Upper bound; equals `value` when exact.
    pub upper_bound: f64,
    pub exact: bool,
    pub pairs_sampled: usize,
}

/// `w(r) = sup_{|x-y| = r} ∫_{|z| <= 1} |z|^p |c(x,z) - c(y,z)| q(z) dz`.
///
/// Separable families factorize and are exact. Tables are sampled on pairs
/// along `x_1`; the result is a lower bound and the Lipschitz upper bound is
/// reported alongside.
pub fn modulus_w(
    spec: &LevyMeasureSpec,
    field: &CoefficientField,
    r: f64,
    order: MomentOrder,
    cfg: &QuadratureConfig,
) -> Result<ModulusValue> {
    if !(r > 0.0) {
        return Err(Error::Domain { what: "w", value: r });
    }
    if order == MomentOrder::First && !spec.has_first_moment() {
        return Err(Error::MissingFirstMoment("ν"));
    }
    let p = order.exponent();
    let moment = spec.ball_moment(p, 1.0);
    let scaled = |osc: f64| if osc == 0.0 { 0.0 } else { osc * moment };
    if let Some(osc) = field.separable_oscillation(r) {
        let v = scaled(osc);
        return Ok(ModulusValue {
            value: v,
            upper_bound: v,
            exact: true,
            pairs_sampled: 0,
        });
    }
    let upper = scaled(field.oscillation_upper_bound(r));
    if !upper.is_finite() {
        return Err(Error::MissingFirstMoment("ν"));
    }
    let d = spec.dim();
    let nodes = field.x_nodes();
    let (lo, hi) = (nodes[0] - r, nodes[nodes.len() - 1] + r);
    let offsets: Vec<f64> = match d {
        1 => alloc::vec![r],
        _ => (0..8).map(|k| r * math::cos(math::PI * k as f64 / 16.0)).collect(),
    };
    let n = 32;
    let mut best: f64 = 0.0;
    let mut pairs = 0;
    for i in 0..=n {
        let x1 = lo + (hi - lo) * i as f64 / n as f64;
        for &dx in &offsets {
            let mut x: Point = math::zeros(d);
            x[0] = x1;
            let mut y = x.clone();
            y[0] = x1 - dx;
            let (v, err) = pair_moment(spec, field, &x, &y, order, cfg)?;
            pairs += 1;
            best = best.max(v - err);
        }
    }
    Ok(ModulusValue {
        value: best.max(0.0),
        upper_bound: upper,
        exact: false,
        pairs_sampled: pairs,
    })
}

/// `∫_{|z| <= 1} |z|^p |c(x,z) - c(y,z)| q(z) dz` at one pair, with an
/// error bound that includes the untreated shell around the origin.
pub(crate) fn pair_moment(
    spec: &LevyMeasureSpec,
    field: &CoefficientField,
    x: &[f64],
    y: &[f64],
    order: MomentOrder,
    cfg: &QuadratureConfig,
) -> Result<(f64, f64)> {
    let p = order.exponent();
    if field.is_z_independent() {
        let diff = (field.x_part(x) - field.x_part(y)).abs();
        if diff == 0.0 {
            return Ok((0.0, 0.0));
        }
        return Ok((diff * spec.ball_moment(p, 1.0), 0.0));
    }
    cfg.validate()?;
    let spread = field.upper() - field.lower();
    if p <= spec.alpha() {
        return Err(Error::MissingFirstMoment("ν"));
    }
    // the ball moment scales as ε^{p-α}, so this keeps the shell below tol/10 of the full-ball bound
    let eps = math::powf(0.1 * cfg.tol, 1.0 / (p - spec.alpha())).clamp(1e-300, 0.5);
    let shell = spread * spec.ball_moment(p, eps);
    let d = spec.dim();
    let mut g = Geometry::new(d);
    let o = math::zeros(d);
    g.add_sphere(&o, 1.0);
    let e1 = math::unit(d, 0);
    for k in field.z_kinks() {
        g.add_plane(&e1, k);
    }
    if spec.truncation().is_finite() {
        g.add_sphere(&o, spec.truncation());
    }
    if let Some(c) = spec.cone_restriction() {
        g.add_cone(&o, c.axis(), c.delta());
    }
    let est = integrate_shell(&g, eps, 1.0_f64.min(spec.truncation()), cfg.budget(), |z| {
        let q = spec.density(z);
        if q == 0.0 {
            return 0.0;
        }
        math::powf(math::norm(z), p) * (field.value(x, z) - field.value(y, z)).abs() * q
    })?;
    Ok((est.value + 0.5 * shell, est.error + 0.5 * shell))
}

/// `w_μ(r) = sup_{|x-y| = r} ∫_{|z| <= 1} |z|^p |m(x,z) - m(y,z)| dz`.
pub fn modulus_w_mu(pert: &PerturbationKernel, r: f64, order: MomentOrder) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Domain { what: "w_μ", value: r });
    }
    if order == MomentOrder::First && !pert.has_first_moment() {
        return Err(Error::MissingFirstMoment("perturbation kernel"));
    }
    let osc = pert.oscillation(r);
    if osc == 0.0 {
        return Ok(0.0);
    }
    Ok(osc * pert.radial_moment(order.exponent(), 0.0, 1.0))
}

/// `w_*(r) = w(r) + w_μ(r)`.
pub fn modulus_w_star(
    spec: &LevyMeasureSpec,
    field: &CoefficientField,
    pert: &PerturbationKernel,
    r: f64,
    order: MomentOrder,
    cfg: &QuadratureConfig,
) -> Result<ModulusValue> {
    let w = modulus_w(spec, field, r, order, cfg)?;
    let wm = modulus_w_mu(pert, r, order)?;
    Ok(ModulusValue {
        value: w.value + wm,
        upper_bound: w.upper_bound + wm,
        ..w
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsReport {
    pub pass: bool,
    /// `min q(z) / (c1 |z|^{-d-α₁})` over sampled `z` in the cone (`>= 1` passes).
    pub worst_lower_ratio: f64,
    /// `max q(z) / (c2 |z|^{-d-α₂})` over all sampled `z` (`<= 1` passes).
    pub worst_upper_ratio: f64,
    pub worst_lower_at: Point,
    pub worst_upper_at: Point,
    pub samples: usize,
}

/// Checks `c1 |z|^{-d-α₁} 1_V(z) <= q(z) <= c2 |z|^{-d-α₂}` on log-spaced
/// radii times a direction set, where `V = {|z| <= 1} ∩ cone` (the unit ball
/// without a cone).
pub fn stable_bounds_check(
    spec: &LevyMeasureSpec,
    alpha1: f64,
    alpha2: f64,
    c1: f64,
    c2: f64,
    cone: Option<&Cone>,
) -> Result<BoundsReport> {
    if !(alpha1 > 0.0 && alpha1 <= alpha2 && alpha2 < 2.0) {
        return Err(Error::param("alpha1", format!("need 0 < α₁ <= α₂ < 2, got {alpha1}, {alpha2}")));
    }
    if !(c1 > 0.0 && c2 > 0.0) {
        return Err(Error::param("c1", "comparison constants must be positive"));
    }
    let d = spec.dim();
    let mut dirs: Vec<Point> = Vec::new();
    match d {
        1 => {
            dirs.push(Point::from_slice(&[1.0]));
            dirs.push(Point::from_slice(&[-1.0]));
        }
        2 => {
            for k in 0..72 {
                let t = math::TAU * k as f64 / 72.0;
                dirs.push(Point::from_slice(&[math::cos(t), math::sin(t)]));
            }
        }
        _ => {
            for i in 0..d {
                dirs.push(math::unit(d, i));
                dirs.push(math::neg(&math::unit(d, i)));
            }
            let diag = 1.0 / math::sqrt(d as f64);
            dirs.push(Point::from_elem(diag, d));
            dirs.push(Point::from_elem(-diag, d));
        }
    }
    for c in [spec.cone_restriction(), cone].into_iter().flatten() {
        dirs.push(Point::from_slice(c.axis()));
    }
    let top = 4.0 * spec.truncation().clamp(1.0, 1e3);
    let (lo, hi) = (math::ln(1e-8), math::ln(top));
    let n_r = 120;
    let mut rep = BoundsReport {
        pass: true,
        worst_lower_ratio: f64::INFINITY,
        worst_upper_ratio: 0.0,
        worst_lower_at: math::zeros(d),
        worst_upper_at: math::zeros(d),
        samples: 0,
    };
    let dd = d as f64;
    for i in 0..n_r {
        let r = math::exp(lo + (hi - lo) * i as f64 / (n_r - 1) as f64);
        for e in &dirs {
            let z = math::scale(e, r);
            let q = spec.density(&z);
            rep.samples += 1;
            let upper = q / (c2 * math::powf(r, -dd - alpha2));
            if upper > rep.worst_upper_ratio {
                rep.worst_upper_ratio = upper;
                rep.worst_upper_at = z.clone();
            }
            let in_v = r <= 1.0 && cone.map_or(true, |c| c.contains(&z));
            if in_v {
                let lower = q / (c1 * math::powf(r, -dd - alpha1));
                if lower < rep.worst_lower_ratio {
                    rep.worst_lower_ratio = lower;
                    rep.worst_lower_at = z.clone();
                }
            }
        }
    }
    rep.pass = rep.worst_upper_ratio <= 1.0 + 1e-12 && rep.worst_lower_ratio >= 1.0 - 1e-12;
    Ok(rep)
}
