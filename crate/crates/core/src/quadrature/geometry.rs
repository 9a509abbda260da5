use alloc::vec::Vec;

use crate::math::{self, Point};

#[derive(Debug, Clone)]
enum Feature {
    Sphere { center: Point, radius: f64 },
    Plane { normal: Point, offset: f64 },
    Cone { apex: Point, axis: Point, delta: f64 },
    Spot(Point),
}

/// Surfaces in jump space across which an integrand loses smoothness. The
/// quadrature splits its radial and angular ranges where these are crossed.
#[derive(Debug, Clone)]
pub struct Geometry {
    dim: usize,
    features: Vec<Feature>,
}

impl Geometry {
    pub fn new(dim: usize) -> Self {
        Geometry {
            dim,
            features: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `{z : |z - center| = radius}`
    pub fn add_sphere(&mut self, center: &[f64], radius: f64) {
        if radius > 0.0 && radius.is_finite() {
            self.features.push(Feature::Sphere {
                center: Point::from_slice(center),
                radius,
            });
        }
    }

    /// `{z : <z, normal> = offset}`
    pub fn add_plane(&mut self, normal: &[f64], offset: f64) {
        let n = math::norm(normal);
        if n > 0.0 {
            self.features.push(Feature::Plane {
                normal: math::scale(normal, 1.0 / n),
                offset: offset / n,
            });
        }
    }

    /// Boundary of `{z : <z - apex, axis> >= delta |z - apex|}`, unit `axis`.
    pub fn add_cone(&mut self, apex: &[f64], axis: &[f64], delta: f64) {
        self.features.push(Feature::Cone {
            apex: Point::from_slice(apex),
            axis: Point::from_slice(axis),
            delta,
        });
    }

    pub fn add_point(&mut self, p: &[f64]) {
        if p.iter().any(|&c| c != 0.0) {
            self.features.push(Feature::Spot(Point::from_slice(p)));
        }
    }

    /// Radii `ρ > 0` at which the ray `ρ e` (unit `e`) meets a feature.
    pub(crate) fn radial_breaks(&self, e: &[f64], out: &mut Vec<f64>) {
        let mut push = |r: f64| {
            if r > 0.0 && r.is_finite() {
                out.push(r);
            }
        };
        for f in &self.features {
            match f {
                Feature::Sphere { center, radius } => {
                    let b = math::dot(e, center);
                    let c = math::norm_sq(center) - radius * radius;
                    let disc = b * b - c;
                    if disc >= 0.0 {
                        let s = math::sqrt(disc);
                        push(b - s);
                        push(b + s);
                    }
                    push(b);
                }
                Feature::Plane { normal, offset } => {
                    let a = math::dot(e, normal);
                    if a != 0.0 {
                        push(offset / a);
                    }
                }
                Feature::Cone { apex, axis, delta } => {
                    let a = math::dot(e, axis);
                    let bp = math::dot(apex, axis);
                    let ep = math::dot(e, apex);
                    let d2 = delta * delta;
                    let qa = a * a - d2;
                    let qb = a * bp - d2 * ep;
                    let qc = bp * bp - d2 * math::norm_sq(apex);
                    if qa.abs() > 1e-300 {
                        let disc = qb * qb - qa * qc;
                        if disc >= 0.0 {
                            let s = math::sqrt(disc);
                            push((qb - s) / qa);
                            push((qb + s) / qa);
                        }
                    } else if qb != 0.0 {
                        push(qc / (2.0 * qb));
                    }
                    push(ep);
                }
                Feature::Spot(p) => push(math::dot(e, p)),
            }
        }
    }

    /// Polar angles in `[0, 2π)` where the radial structure changes (`d = 2`).
    pub(crate) fn angular_breaks(&self, out: &mut Vec<f64>) {
        let mut push = |t: f64| {
            let t = t - math::TAU * math::floor(t / math::TAU);
            if t.is_finite() {
                out.push(t);
            }
        };
        for f in &self.features {
            match f {
                Feature::Sphere { center, radius } => {
                    let n = math::norm(center);
                    if n > 0.0 {
                        let phi = math::atan2(center[1], center[0]);
                        push(phi);
                        if n > *radius {
                            let w = math::asin(radius / n);
                            push(phi - w);
                            push(phi + w);
                        } else if (n - radius).abs() <= 1e-12 * radius {
                            push(phi - math::PI / 2.0);
                            push(phi + math::PI / 2.0);
                        }
                    }
                }
                Feature::Plane { normal, .. } => {
                    let phi = math::atan2(normal[1], normal[0]);
                    push(phi);
                    push(phi + math::PI / 2.0);
                    push(phi - math::PI / 2.0);
                }
                Feature::Cone { apex, axis, delta } => {
                    if math::norm(apex) > 0.0 {
                        push(math::atan2(apex[1], apex[0]));
                    }
                    let phi = math::atan2(axis[1], axis[0]);
                    let w = math::acos(*delta);
                    for t in [phi - w, phi + w] {
                        push(t);
                        push(t + math::PI);
                    }
                }
                Feature::Spot(p) => push(math::atan2(p[1], p[0])),
            }
        }
    }
}
