use alloc::format;

use crate::math::{self, Point};
use crate::{Error, Result};

/// Parametric family of a stable-like Lévy measure `q(z) dz`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LevyFamily {
    /// `A |z|^{-d-α}` on all of `R^d`.
    HomogeneousStable,
    /// `A |z|^{-d-α}` on `{|z| <= R}`.
    TruncatedStable,
    /// `A |z|^{-d-α}` on `{|z| <= 1, <z, ξ> >= δ |z|}`.
    ConeStable,
}

impl LevyFamily {
    pub fn name(self) -> &'static str {
        match self {
            LevyFamily::HomogeneousStable => "homogeneous-stable",
            LevyFamily::TruncatedStable => "truncated-stable",
            LevyFamily::ConeStable => "cone-stable",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "homogeneous-stable" => Some(LevyFamily::HomogeneousStable),
            "truncated-stable" => Some(LevyFamily::TruncatedStable),
            "cone-stable" => Some(LevyFamily::ConeStable),
            _ => None,
        }
    }
}

/// The cone `{z : <z, ξ> >= δ |z|}` with unit axis `ξ` and aperture `δ ∈ (0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cone {
    axis: Point,
    delta: f64,
}

impl Cone {
    pub fn new(axis: &[f64], delta: f64) -> Result<Self> {
        let n = math::norm(axis);
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::param("levy.cone.xi", "axis must be a nonzero vector"));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::param("levy.cone.delta", format!("{delta} not in (0, 1)")));
        }
        Ok(Cone {
            axis: math::scale(axis, 1.0 / n),
            delta,
        })
    }

    pub fn axis(&self) -> &[f64] {
        &self.axis
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    #[inline]
    pub fn contains(&self, z: &[f64]) -> bool {
        math::dot(z, &self.axis) >= self.delta * math::norm(z)
    }
}

/// A stable-like Lévy measure with density `q(z) = A |z|^{-d-α}` on its support.
#[derive(Debug, Clone, PartialEq)]
pub struct LevyMeasureSpec {
    dim: usize,
    family: LevyFamily,
    alpha: f64,
    amplitude: f64,
    truncation: f64,
    cone: Option<Cone>,
    ln_amplitude: f64,
    /// `A · |angular support|`, the radial prefactor of every moment.
    radial_weight: f64,
}

impl LevyMeasureSpec {
    pub fn new(
        dim: usize,
        family: LevyFamily,
        alpha: f64,
        amplitude: f64,
        truncation: f64,
        cone: Option<Cone>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dimension", "must be positive"));
        }
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::param("levy.alpha", format!("{alpha} not in (0, 2)")));
        }
        if !(amplitude > 0.0 && amplitude.is_finite()) {
            return Err(Error::param("levy.amplitude", "must be positive and finite"));
        }
        let (truncation, cone) = match family {
            LevyFamily::HomogeneousStable => (f64::INFINITY, None),
            LevyFamily::TruncatedStable => {
                if !(truncation > 0.0 && truncation.is_finite()) {
                    return Err(Error::param(
                        "levy.truncation",
                        "truncated-stable needs a positive finite radius",
                    ));
                }
                (truncation, None)
            }
            LevyFamily::ConeStable => {
                let cone = cone.ok_or_else(|| Error::param("levy.cone.xi", "cone-stable needs a cone"))?;
                if cone.axis.len() != dim {
                    return Err(Error::param("levy.cone.xi", "axis dimension mismatch"));
                }
                (1.0, Some(cone))
            }
        };
        let angular = match &cone {
            Some(c) => math::sphere_area(dim) * math::cap_fraction(dim, c.delta),
            None => math::sphere_area(dim),
        };
        Ok(LevyMeasureSpec {
            dim,
            family,
            alpha,
            amplitude,
            truncation,
            cone,
            ln_amplitude: math::ln(amplitude),
            radial_weight: amplitude * angular,
        })
    }

    pub fn homogeneous(dim: usize, alpha: f64, amplitude: f64) -> Result<Self> {
        Self::new(dim, LevyFamily::HomogeneousStable, alpha, amplitude, f64::INFINITY, None)
    }

    pub fn truncated(dim: usize, alpha: f64, amplitude: f64, radius: f64) -> Result<Self> {
        Self::new(dim, LevyFamily::TruncatedStable, alpha, amplitude, radius, None)
    }

    pub fn cone(dim: usize, alpha: f64, amplitude: f64, axis: &[f64], delta: f64) -> Result<Self> {
        let cone = Cone::new(axis, delta)?;
        Self::new(dim, LevyFamily::ConeStable, alpha, amplitude, 1.0, Some(cone))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn family(&self) -> LevyFamily {
        self.family
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }
    /// Support radius; infinite for the homogeneous family.
    pub fn truncation(&self) -> f64 {
        self.truncation
    }
    pub fn cone_restriction(&self) -> Option<&Cone> {
        self.cone.as_ref()
    }

    /// Rotation invariant: no cone restriction.
    pub fn is_isotropic(&self) -> bool {
        self.cone.is_none()
    }

    /// `q(-z) = q(z)` for all `z`.
    pub fn is_symmetric(&self) -> bool {
        self.cone.is_none()
    }

    #[inline]
    pub fn in_support(&self, z: &[f64]) -> bool {
        let r = math::norm(z);
        r <= self.truncation && self.cone.as_ref().map_or(true, |c| c.contains(z))
    }

    /// `ln q(z)`: `-inf` off the support, `+inf` at the origin.
    #[inline]
    pub fn ln_density(&self, z: &[f64]) -> f64 {
        let r = math::norm(z);
        if r > self.truncation {
            return f64::NEG_INFINITY;
        }
        if let Some(c) = &self.cone {
            if math::dot(z, &c.axis) < c.delta * r {
                return f64::NEG_INFINITY;
            }
        }
        self.ln_radial(r)
    }

    /// `ln(A r^{-d-α})` ignoring the support.
    #[inline]
    pub fn ln_radial(&self, r: f64) -> f64 {
        self.ln_amplitude - (self.dim as f64 + self.alpha) * math::ln(r)
    }

    /// `q(z)`; infinite at the origin.
    #[inline]
    pub fn density(&self, z: &[f64]) -> f64 {
        math::exp(self.ln_density(z))
    }

    /// `∫_{a <= |z| <= b} |z|^p q(z) dz`, possibly infinite.
    pub fn radial_moment(&self, p: f64, a: f64, b: f64) -> f64 {
        let b = b.min(self.truncation);
        if b <= a {
            return 0.0;
        }
        let e = p - self.alpha;
        let integral = if e == 0.0 {
            if a == 0.0 || b.is_infinite() {
                f64::INFINITY
            } else {
                math::ln(b / a)
            }
        } else if e > 0.0 {
            if b.is_infinite() {
                f64::INFINITY
            } else {
                (math::powf(b, e) - math::powf(a, e)) / e
            }
        } else if a == 0.0 {
            f64::INFINITY
        } else {
            let hi = if b.is_infinite() { 0.0 } else { math::powf(b, e) };
            (math::powf(a, e) - hi) / -e
        };
        self.radial_weight * integral
    }

    /// `∫_{|z| < radius} |z|^p q(z) dz`.
    pub fn ball_moment(&self, p: f64, radius: f64) -> f64 {
        self.radial_moment(p, 0.0, radius)
    }

    /// `ν(|z| > radius)`.
    pub fn tail_mass(&self, radius: f64) -> f64 {
        self.radial_moment(0.0, radius, f64::INFINITY)
    }

    /// Whether `∫_{|z| <= 1} |z| q(z) dz < ∞`.
    pub fn has_first_moment(&self) -> bool {
        self.alpha < 1.0
    }

    /// Radius `ρ` with `ν(|z| > ρ) = mass` (infinite-support families only;
    /// returns the truncation radius when it is already below).
    pub fn radius_for_tail(&self, mass: f64) -> f64 {
        if mass <= 0.0 {
            return self.truncation;
        }
        let rho = math::powf(self.radial_weight / (self.alpha * mass), 1.0 / self.alpha);
        rho.min(self.truncation)
    }

    /// Radial prefactor `A · |angular support|`.
    pub fn radial_weight(&self) -> f64 {
        self.radial_weight
    }

    /// `∫_{a <= |z| <= b} z q(z) dz`, zero for symmetric specs.
    pub fn first_moment_vector(&self, a: f64, b: f64) -> Point {
        match &self.cone {
            None => math::zeros(self.dim),
            Some(c) => {
                let radial = self.amplitude * self.radial_integral(1.0, a, b);
                let angular = math::cap_first_moment(self.dim, c.delta);
                math::scale(&c.axis, radial * angular)
            }
        }
    }

    fn radial_integral(&self, p: f64, a: f64, b: f64) -> f64 {
        self.radial_moment(p, a, b) / self.radial_weight
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_alpha() {
        assert!(matches!(
            LevyMeasureSpec::truncated(1, 2.5, 1.0, 1.0),
            Err(Error::InvalidParameter { name: "levy.alpha", .. })
        ));
        assert!(LevyMeasureSpec::truncated(1, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn density_support() {
        let s = LevyMeasureSpec::truncated(1, 1.5, 2.0, 1.0).unwrap();
        assert_eq!(s.density(&[1.5]), 0.0);
        assert!((s.density(&[0.5]) - 2.0 * 0.5f64.powf(-2.5)).abs() < 1e-12);
        assert_eq!(s.density(&[0.0]), f64::INFINITY);

        let c = LevyMeasureSpec::cone(2, 1.0, 1.0, &[1.0, 0.0], 0.5).unwrap();
        assert_eq!(c.density(&[-0.2, 0.0]), 0.0);
        assert!(c.density(&[0.2, 0.1]) > 0.0);
        assert_eq!(c.density(&[0.2, 0.5]), 0.0);
    }

    #[test]
    fn moments_match_hand_integrals() {
        // d=1, α=1.5, A=1: ∫_{|z|<=1} z^2 q = 2/(2-α) = 4
        let s = LevyMeasureSpec::homogeneous(1, 1.5, 1.0).unwrap();
        assert!((s.ball_moment(2.0, 1.0) - 4.0).abs() < 1e-14);
        // ν(|z| > 1) = 2/α
        assert!((s.tail_mass(1.0) - 2.0 / 1.5).abs() < 1e-14);
        assert!((s.radius_for_tail(s.tail_mass(3.0)) - 3.0).abs() < 1e-12);
        assert!(s.ball_moment(1.0, 1.0).is_infinite());
    }

    #[test]
    fn cone_first_moment_in_one_dimension() {
        // support (0,1], α=0.5: ∫_{0.01}^1 z·z^{-1.5} dz = 2(1-0.1) = 1.8
        let s = LevyMeasureSpec::cone(1, 0.5, 1.0, &[1.0], 0.5).unwrap();
        let m = s.first_moment_vector(0.01, 1.0);
        assert!((m[0] - 1.8).abs() < 1e-12);
    }
}
