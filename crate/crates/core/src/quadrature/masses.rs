use alloc::vec::Vec;

use super::geometry::Geometry;
use super::operators::{add_field_features, add_measure_features, check_dims};
use super::{integrate_shell, OperatorResult, QuadratureConfig};
use crate::kernels::{coeff4, CoefficientField, CoefficientFamily, LevyMeasureSpec};
use crate::math::{self, Point};
use crate::{Error, Result};

/// `∫ w(z) (q(z) ∧ q(z - u)) dz` with `w_lo <= w <= w_hi`.
fn displaced_minimum_mass<W: Fn(&[f64]) -> f64>(
    spec: &LevyMeasureSpec,
    u: &[f64],
    w: W,
    w_lo: f64,
    w_hi: f64,
    mut geometry: Geometry,
    cfg: &QuadratureConfig,
) -> Result<OperatorResult> {
    cfg.validate()?;
    let d = spec.dim();
    let un = math::norm(u);
    if un == 0.0 {
        return Err(Error::Domain {
            what: "displaced-minimum mass (|u| = 0)",
            value: 0.0,
        });
    }
    // on |z| < ε the density is at most q(|u|/2)
    let eps = 1e-12 * un;
    let ball = math::sphere_area(d) * math::powf(eps, d as f64) / d as f64;
    let shell = w_hi * math::exp(spec.ln_radial(0.5 * un)) * ball;
    let (outer, tail) = if spec.truncation().is_finite() {
        (spec.truncation(), 0.0)
    } else {
        // q(z - u) >= 1.5^{-d-α} q(z) on |z| >= 2|u|, so this is a lower bound for the mass
        let lower = w_lo * math::powf(1.5, -(d as f64) - spec.alpha()) * spec.tail_mass(2.0 * un);
        let rho = spec.radius_for_tail(0.1 * cfg.tol * lower / w_hi).max(4.0 * un);
        (rho, w_hi * spec.tail_mass(rho))
    };
    let o = math::zeros(d);
    add_measure_features(&mut geometry, spec, &o);
    add_measure_features(&mut geometry, spec, u);
    geometry.add_plane(u, 0.5 * un * un);
    let est = integrate_shell(&geometry, eps, outer, cfg.budget(), |z| {
        let shifted = math::sub(z, u);
        let l = spec.ln_density(z).min(spec.ln_density(&shifted));
        if l == f64::NEG_INFINITY {
            0.0
        } else {
            w(z) * math::exp(l)
        }
    })?;
    Ok(OperatorResult {
        value: est.value,
        error_estimate: est.error + tail,
        shell_remainder_bound: shell,
    })
}

/// `ν_u(R^d) = ∫ q(z) ∧ q(z - u) dz`, finite for `u != 0`.
pub fn mass_nu_u(spec: &LevyMeasureSpec, u: &[f64], cfg: &QuadratureConfig) -> Result<OperatorResult> {
    check_dims("mass_nu_u", spec.dim(), &[u.len()])?;
    displaced_minimum_mass(spec, u, |_| 1.0, 1.0, 1.0, Geometry::new(spec.dim()), cfg)
}

/// `μ_{x,y,u}(R^d) = ∫ coeff4(x, y, u, z) (q(z) ∧ q(z - u)) dz`.
pub fn mass_mu(
    spec: &LevyMeasureSpec,
    field: &CoefficientField,
    x: &[f64],
    y: &[f64],
    u: &[f64],
    cfg: &QuadratureConfig,
) -> Result<OperatorResult> {
    check_dims("mass_mu", spec.dim(), &[field.dim(), x.len(), y.len(), u.len()])?;
    let mut g = Geometry::new(spec.dim());
    add_field_features(&mut g, field, &math::zeros(spec.dim()));
    add_field_features(&mut g, field, u);
    if field.is_z_independent() {
        let c = field.x_part(x).min(field.x_part(y));
        return displaced_minimum_mass(spec, u, |_| c, c, c, g, cfg);
    }
    displaced_minimum_mass(
        spec,
        u,
        |z| coeff4(field, x, y, u, z),
        field.lower(),
        field.upper(),
        g,
        cfg,
    )
}

fn directions(spec: &LevyMeasureSpec, grid: usize) -> Vec<Point> {
    let d = spec.dim();
    if spec.is_isotropic() {
        return alloc::vec![math::unit(d, 0)];
    }
    match d {
        1 => alloc::vec![Point::from_slice(&[1.0]), Point::from_slice(&[-1.0])],
        _ => {
            let n = grid.max(1);
            (0..n)
                .map(|k| {
                    let t = math::TAU * k as f64 / n as f64;
                    Point::from_slice(&[math::cos(t), math::sin(t)])
                })
                .collect()
        }
    }
}

/// `J_ν(r) = inf_{|u| = r} ν_u(R^d)`, as a minimum over a direction grid
/// (a single direction for rotation-invariant measures).
pub fn j_nu(spec: &LevyMeasureSpec, r: f64, direction_grid: usize, cfg: &QuadratureConfig) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Domain { what: "J_ν", value: r });
    }
    let mut best = f64::INFINITY;
    for e in directions(spec, direction_grid) {
        let m = mass_nu_u(spec, &math::scale(&e, r), cfg)?;
        best = best.min(m.value);
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct JReport {
    /// Minimum of `μ_{x,y,x-y}(R^d)` over the sampled pairs.
    pub value: f64,
    pub argmin_x: Point,
    pub argmin_y: Point,
    pub pairs: usize,
    /// `c_* J_ν(r)`, a lower bound every sampled mass must respect.
    pub lower_bound: f64,
    pub lower_bound_holds: bool,
}

/// `J(r) = inf_{|x-y| = r} μ_{x,y,x-y}(R^d)` over a deterministic sample of
/// pairs: `pair_samples` base points along `x_1` spanning the coefficient's
/// period or table range, and a direction grid for `x - y`.
pub fn j_of_r(
    spec: &LevyMeasureSpec,
    field: &CoefficientField,
    r: f64,
    kappa: f64,
    pair_samples: usize,
    cfg: &QuadratureConfig,
) -> Result<JReport> {
    if !(r > 0.0) {
        return Err(Error::Domain { what: "J", value: r });
    }
    if !(kappa > 0.0 && kappa <= 1.0) {
        return Err(Error::param("sim.kappa", "must lie in (0, 1]"));
    }
    let d = spec.dim();
    check_dims("j_of_r", d, &[field.dim()])?;
    let n = if field.is_x_independent() { 1 } else { pair_samples.max(1) };
    let (lo, hi) = match field.family() {
        CoefficientFamily::SeparableSinusoidal => {
            let k = field.params()[2].abs();
            (0.0, if k > 0.0 { math::TAU / k } else { 1.0 })
        }
        CoefficientFamily::SeparableHolder => (-1.5, 1.5),
        CoefficientFamily::UserTable => {
            let nodes = field.x_nodes();
            (nodes[0] - r, nodes[nodes.len() - 1] + r)
        }
        CoefficientFamily::Constant => (0.0, 1.0),
    };
    let dirs: Vec<Point> = match d {
        1 => alloc::vec![Point::from_slice(&[1.0]), Point::from_slice(&[-1.0])],
        _ => (0..8)
            .map(|k| {
                let t = math::TAU * k as f64 / 8.0;
                Point::from_slice(&[math::cos(t), math::sin(t)])
            })
            .collect(),
    };
    let jn = j_nu(spec, r, 16, cfg)?;
    let lower_bound = field.lower() * jn;
    let mut best = f64::INFINITY;
    let mut arg = (math::zeros(d), math::zeros(d));
    let mut pairs = 0;
    let mut holds = true;
    for i in 0..n {
        let mut x = math::zeros(d);
        x[0] = if n == 1 { lo } else { lo + (hi - lo) * i as f64 / n as f64 };
        for e in &dirs {
            let u = math::scale(e, r);
            let y = math::sub(&x, &u);
            let m = mass_mu(spec, field, &x, &y, &u, cfg)?;
            pairs += 1;
            if m.value < lower_bound - 10.0 * (m.error_estimate + m.shell_remainder_bound) - 1e-12 * lower_bound {
                holds = false;
            }
            if m.value < best {
                best = m.value;
                arg = (x.clone(), y);
            }
        }
    }
    Ok(JReport {
        value: best,
        argmin_x: arg.0,
        argmin_y: arg.1,
        pairs,
        lower_bound,
        lower_bound_holds: holds,
    })
}
