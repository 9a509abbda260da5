use alloc::format;

use crate::math;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PerturbationFamily {
    /// `m ≡ 0`.
    None,
    /// `m(x, z) = (a + b cos(k x_1)) A_m |z|^{-d-β} 1{|z| <= R_m}` with `a >= |b|`.
    CosineStable,
}

impl PerturbationFamily {
    pub fn name(self) -> &'static str {
        match self {
            PerturbationFamily::None => "none",
            PerturbationFamily::CosineStable => "cosine-stable",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "none" => Some(PerturbationFamily::None),
            "cosine-stable" => Some(PerturbationFamily::CosineStable),
            _ => None,
        }
    }
}

/// A nonnegative jump kernel `m(x, z)` added on top of `c(x, z) q(z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationKernel {
    dim: usize,
    family: PerturbationFamily,
    a: f64,
    b: f64,
    k: f64,
    beta: f64,
    amplitude: f64,
    truncation: f64,
    radial_weight: f64,
}

impl PerturbationKernel {
    pub fn none(dim: usize) -> Self {
        PerturbationKernel {
            dim,
            family: PerturbationFamily::None,
            a: 0.0,
            b: 0.0,
            k: 0.0,
            beta: 1.0,
            amplitude: 0.0,
            truncation: 1.0,
            radial_weight: 0.0,
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn cosine_stable(dim: usize, a: f64, b: f64, k: f64, beta: f64, amplitude: f64, truncation: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dimension", "must be positive"));
        }
        if ![a, b, k].iter().all(|v| v.is_finite()) {
            return Err(Error::param("pert.a", "coefficients must be finite"));
        }
        if a < b.abs() {
            return Err(Error::param("pert.a", format!("need a >= |b| for nonnegativity, got a={a}, b={b}")));
        }
        if !(beta > 0.0 && beta < 2.0) {
            return Err(Error::param("pert.beta", format!("{beta} not in (0, 2)")));
        }
        if !(amplitude >= 0.0 && amplitude.is_finite()) {
            return Err(Error::param("pert.amplitude", "must be nonnegative and finite"));
        }
        if !(truncation > 0.0) {
            return Err(Error::param("pert.truncation", "must be positive"));
        }
        Ok(PerturbationKernel {
            dim,
            family: PerturbationFamily::CosineStable,
            a,
            b,
            k,
            beta,
            amplitude,
            truncation,
            radial_weight: amplitude * math::sphere_area(dim),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn family(&self) -> PerturbationFamily {
        self.family
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn truncation(&self) -> f64 {
        self.truncation
    }

    pub fn is_zero(&self) -> bool {
        self.family == PerturbationFamily::None || self.amplitude == 0.0 || self.a == 0.0
    }

    /// `∫_{|z| <= 1} |z| m(x, z) dz < ∞` uniformly in `x`.
    pub fn has_first_moment(&self) -> bool {
        self.is_zero() || self.beta < 1.0
    }

    #[inline]
    pub fn x_factor(&self, x: &[f64]) -> f64 {
        self.a + self.b * math::cos(self.k * x[0])
    }

    /// `A_m |z|^{-d-β} 1{|z| <= R_m}`
    #[inline]
    pub fn radial(&self, z: &[f64]) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let r = math::norm(z);
        if r > self.truncation {
            0.0
        } else {
            self.amplitude * math::powf(r, -(self.dim as f64) - self.beta)
        }
    }

    #[inline]
    pub fn density(&self, x: &[f64], z: &[f64]) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        self.x_factor(x) * self.radial(z)
    }

    /// `sup_x m(x, z) / radial(z)`.
    pub fn x_factor_max(&self) -> f64 {
        self.a + self.b.abs()
    }

    /// `∫_{a <= |z| <= b} |z|^p A_m |z|^{-d-β} 1{|z| <= R_m} dz`.
    pub fn radial_moment(&self, p: f64, lo: f64, hi: f64) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let hi = hi.min(self.truncation);
        if hi <= lo {
            return 0.0;
        }
        let e = p - self.beta;
        let integral = if e == 0.0 {
            if lo == 0.0 || hi.is_infinite() {
                f64::INFINITY
            } else {
                math::ln(hi / lo)
            }
        } else if e > 0.0 {
            if hi.is_infinite() {
                f64::INFINITY
            } else {
                (math::powf(hi, e) - math::powf(lo, e)) / e
            }
        } else if lo == 0.0 {
            f64::INFINITY
        } else {
            let top = if hi.is_infinite() { 0.0 } else { math::powf(hi, e) };
            (math::powf(lo, e) - top) / -e
        };
        self.radial_weight * integral
    }

    /// `sup_x ∫ (1 ∧ |z|^2) m(x, z) dz`, the integrability certificate.
    pub fn integrability_bound(&self) -> f64 {
        self.x_factor_max() * (self.radial_moment(2.0, 0.0, 1.0) + self.radial_moment(0.0, 1.0, f64::INFINITY))
    }

    /// `sup_{|x-y| = r} |m(x, z) - m(y, z)| / radial(z)`.
    pub fn oscillation(&self, r: f64) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        self.b.abs() * 2.0 * math::sin((self.k.abs() * r).min(math::PI) / 2.0)
    }
}
