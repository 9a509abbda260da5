//! Integration over a spherical shell `{inner <= |z| <= outer}` in `d = 1, 2`
//! using the radial substitution `ρ = e^s`.

use alloc::vec::Vec;

use super::geometry::Geometry;
use super::gk::{self, Budget, Estimate, Sample};
use crate::math::{self, Point};
use crate::{Error, Result};

// widest panel handed to the adaptive rule, in s = ln ρ and in angle
const MAX_LOG_WIDTH: f64 = 4.0;
const MAX_ANGLE_WIDTH: f64 = math::PI / 4.0;

fn split_range(lo: f64, hi: f64, breaks: &mut Vec<f64>, max_width: f64, tag: usize, out: &mut Vec<(usize, f64, f64)>) {
    breaks.retain(|&b| b > lo && b < hi);
    breaks.sort_by(f64::total_cmp);
    let mut prev = lo;
    for &b in breaks.iter().chain(core::iter::once(&hi)) {
        if b - prev <= 1e-13 * (1.0 + prev.abs()) && b != hi {
            continue;
        }
        let pieces = math::floor((b - prev) / max_width) as usize + 1;
        let h = (b - prev) / pieces as f64;
        for k in 0..pieces {
            let a = prev + h * k as f64;
            let e = if k + 1 == pieces { b } else { a + h };
            if e > a {
                out.push((tag, a, e));
            }
        }
        prev = b;
    }
}

fn radial_segments(geometry: &Geometry, e: &[f64], inner: f64, outer: f64, tag: usize, out: &mut Vec<(usize, f64, f64)>) {
    let mut breaks = Vec::new();
    geometry.radial_breaks(e, &mut breaks);
    let mut logs: Vec<f64> = breaks.into_iter().map(math::ln).collect();
    split_range(math::ln(inner), math::ln(outer), &mut logs, MAX_LOG_WIDTH, tag, out);
}

/// `∫_{inner <= |z| <= outer} f(z) dz`.
pub(crate) fn integrate_shell<F>(geometry: &Geometry, inner: f64, outer: f64, budget: Budget, mut f: F) -> Result<Estimate>
where
    F: FnMut(&[f64]) -> f64,
{
    let dim = geometry.dim();
    if !(outer > inner) {
        return Ok(Estimate::default());
    }
    match dim {
        1 => {
            let mut segs = Vec::new();
            radial_segments(geometry, &[1.0], inner, outer, 0, &mut segs);
            radial_segments(geometry, &[-1.0], inner, outer, 1, &mut segs);
            let mut z = [0.0];
            gk::integrate(
                &segs,
                |tag, s| {
                    let rho = math::exp(s);
                    z[0] = if tag == 0 { rho } else { -rho };
                    Ok(Sample::from(f(&z) * rho))
                },
                budget,
            )
        }
        2 => {
            let mut angles = Vec::new();
            geometry.angular_breaks(&mut angles);
            angles.sort_by(f64::total_cmp);
            let start = angles.first().copied().unwrap_or(0.0);
            let mut outer_segs = Vec::new();
            split_range(start, start + math::TAU, &mut angles, MAX_ANGLE_WIDTH, 0, &mut outer_segs);
            let inner_budget = Budget {
                rel_tol: budget.rel_tol * 0.1,
                ..budget
            };
            let mut inner_segs = Vec::new();
            gk::integrate(
                &outer_segs,
                |_, theta| {
                    let e: Point = [math::cos(theta), math::sin(theta)].into_iter().collect();
                    inner_segs.clear();
                    radial_segments(geometry, &e, inner, outer, 0, &mut inner_segs);
                    let mut z = [0.0, 0.0];
                    let est = gk::integrate(
                        &inner_segs,
                        |_, s| {
                            let rho = math::exp(s);
                            z[0] = rho * e[0];
                            z[1] = rho * e[1];
                            Ok(Sample::from(f(&z) * rho * rho))
                        },
                        inner_budget,
                    )?;
                    Ok(Sample {
                        value: est.value,
                        abs: est.abs,
                        err: est.error,
                    })
                },
                budget,
            )
        }
        _ => Err(Error::UnsupportedDimension { op: "spatial quadrature", dim }),
    }
}
