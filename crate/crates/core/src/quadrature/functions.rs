//! Test functions on `R^d` and on pairs `(x, y)`.

use super::geometry::Geometry;
use crate::math::{self, Point};

/// A bounded measurable function, enough for Monte Carlo estimators.
pub trait BoundedFunction {
    fn value(&self, x: &[f64]) -> f64;
    /// `sup |f|`
    fn sup_norm(&self) -> f64;
}

/// A bounded `C^2` function with bounded Hessian.
pub trait SmoothFunction: BoundedFunction {
    /// `<∇f(x), v>`
    fn directional(&self, x: &[f64], v: &[f64]) -> f64;
    /// `v^T ∇²f(x) v`
    fn second_directional(&self, x: &[f64], v: &[f64]) -> f64;
    /// `sup_x ||∇²f(x)||`
    fn hessian_bound(&self) -> f64;
}

/// A bounded function of a pair of points, `C^2` away from a null set.
pub trait PairFunction {
    fn value(&self, x: &[f64], y: &[f64]) -> f64;
    /// `<∇_x h, vx> + <∇_y h, vy>`
    fn directional(&self, x: &[f64], y: &[f64], vx: &[f64], vy: &[f64]) -> f64;
    /// `(vx, vy)^T ∇²h (vx, vy)`
    fn second_directional(&self, x: &[f64], y: &[f64], vx: &[f64], vy: &[f64]) -> f64;
    fn sup_norm(&self) -> f64;
    /// Bound on the pair Hessian on a neighbourhood of `(x, y)` of radius
    /// `|x - y| / 4`.
    fn hessian_bound_near(&self, x: &[f64], y: &[f64]) -> f64;
    /// Jump-space sets where `z ↦ h(x + jx(z), y + jy(z))` is not smooth.
    fn add_features(&self, _x: &[f64], _y: &[f64], _geometry: &mut Geometry) {}
}

/// A bounded `C^2` profile `f : [0, ∞) -> R` used as `h(x, y) = f(|x - y|)`.
pub trait DistanceProfile {
    fn value(&self, r: f64) -> f64;
    fn d1(&self, r: f64) -> f64;
    fn d2(&self, r: f64) -> f64;
    fn sup_norm(&self) -> f64;
    /// Radii where the profile is only `C^2` (second derivative has a kink).
    fn kinks(&self) -> &[f64] {
        &[]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constant(pub f64);

impl BoundedFunction for Constant {
    fn value(&self, _: &[f64]) -> f64 {
        self.0
    }
    fn sup_norm(&self) -> f64 {
        self.0.abs()
    }
}

impl SmoothFunction for Constant {
    fn directional(&self, _: &[f64], _: &[f64]) -> f64 {
        0.0
    }
    fn second_directional(&self, _: &[f64], _: &[f64]) -> f64 {
        0.0
    }
    fn hessian_bound(&self) -> f64 {
        0.0
    }
}

/// `amplitude · cos(<k, x> + phase)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Wave {
    pub wavevector: Point,
    pub phase: f64,
    pub amplitude: f64,
}

impl Wave {
    pub fn cosine(wavevector: &[f64]) -> Self {
        Wave {
            wavevector: Point::from_slice(wavevector),
            phase: 0.0,
            amplitude: 1.0,
        }
    }

    /// `sin(<k, x>)`
    pub fn sine(wavevector: &[f64]) -> Self {
        Wave {
            wavevector: Point::from_slice(wavevector),
            phase: -math::PI / 2.0,
            amplitude: 1.0,
        }
    }

    fn arg(&self, x: &[f64]) -> f64 {
        math::dot(&self.wavevector, x) + self.phase
    }
}

impl BoundedFunction for Wave {
    fn value(&self, x: &[f64]) -> f64 {
        self.amplitude * math::cos(self.arg(x))
    }
    fn sup_norm(&self) -> f64 {
        self.amplitude.abs()
    }
}

impl SmoothFunction for Wave {
    fn directional(&self, x: &[f64], v: &[f64]) -> f64 {
        -self.amplitude * math::sin(self.arg(x)) * math::dot(&self.wavevector, v)
    }
    fn second_directional(&self, x: &[f64], v: &[f64]) -> f64 {
        let kv = math::dot(&self.wavevector, v);
        -self.amplitude * math::cos(self.arg(x)) * kv * kv
    }
    fn hessian_bound(&self) -> f64 {
        self.amplitude.abs() * math::norm_sq(&self.wavevector)
    }
}

/// `exp(-|x|^2)`
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Gaussian;

impl BoundedFunction for Gaussian {
    fn value(&self, x: &[f64]) -> f64 {
        math::exp(-math::norm_sq(x))
    }
    fn sup_norm(&self) -> f64 {
        1.0
    }
}

impl SmoothFunction for Gaussian {
    fn directional(&self, x: &[f64], v: &[f64]) -> f64 {
        -2.0 * math::dot(x, v) * self.value(x)
    }
    fn second_directional(&self, x: &[f64], v: &[f64]) -> f64 {
        let xv = math::dot(x, v);
        (4.0 * xv * xv - 2.0 * math::norm_sq(v)) * self.value(x)
    }
    fn hessian_bound(&self) -> f64 {
        2.0
    }
}

/// `1 / (1 + |x|^2)`
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Lorentzian;

impl BoundedFunction for Lorentzian {
    fn value(&self, x: &[f64]) -> f64 {
        1.0 / (1.0 + math::norm_sq(x))
    }
    fn sup_norm(&self) -> f64 {
        1.0
    }
}

impl SmoothFunction for Lorentzian {
    fn directional(&self, x: &[f64], v: &[f64]) -> f64 {
        let g = self.value(x);
        -2.0 * math::dot(x, v) * g * g
    }
    fn second_directional(&self, x: &[f64], v: &[f64]) -> f64 {
        let g = self.value(x);
        let xv = math::dot(x, v);
        8.0 * xv * xv * g * g * g - 2.0 * math::norm_sq(v) * g * g
    }
    fn hessian_bound(&self) -> f64 {
        2.0
    }
}

/// `a f + b g`
#[derive(Debug, Clone, PartialEq)]
pub struct Combination<F, G> {
    pub a: f64,
    pub f: F,
    pub b: f64,
    pub g: G,
}

impl<F: BoundedFunction, G: BoundedFunction> BoundedFunction for Combination<F, G> {
    fn value(&self, x: &[f64]) -> f64 {
        self.a * self.f.value(x) + self.b * self.g.value(x)
    }
    fn sup_norm(&self) -> f64 {
        self.a.abs() * self.f.sup_norm() + self.b.abs() * self.g.sup_norm()
    }
}

impl<F: SmoothFunction, G: SmoothFunction> SmoothFunction for Combination<F, G> {
    fn directional(&self, x: &[f64], v: &[f64]) -> f64 {
        self.a * self.f.directional(x, v) + self.b * self.g.directional(x, v)
    }
    fn second_directional(&self, x: &[f64], v: &[f64]) -> f64 {
        self.a * self.f.second_directional(x, v) + self.b * self.g.second_directional(x, v)
    }
    fn hessian_bound(&self) -> f64 {
        self.a.abs() * self.f.hessian_bound() + self.b.abs() * self.g.hessian_bound()
    }
}

/// `sign(<n, x> - offset)` with `sign(0) = 0`; bounded but discontinuous.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpaceSign {
    pub normal: Point,
    pub offset: f64,
}

impl BoundedFunction for HalfSpaceSign {
    fn value(&self, x: &[f64]) -> f64 {
        let s = math::dot(&self.normal, x) - self.offset;
        if s > 0.0 {
            1.0
        } else if s < 0.0 {
            -1.0
        } else {
            0.0
        }
    }
    fn sup_norm(&self) -> f64 {
        1.0
    }
}

/// `1{<n, x> > offset}`
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpaceIndicator {
    pub normal: Point,
    pub offset: f64,
}

impl BoundedFunction for HalfSpaceIndicator {
    fn value(&self, x: &[f64]) -> f64 {
        if math::dot(&self.normal, x) > self.offset {
            1.0
        } else {
            0.0
        }
    }
    fn sup_norm(&self) -> f64 {
        1.0
    }
}

/// `h(x, y) = f(x) + g(y)`
#[derive(Debug, Clone, PartialEq)]
pub struct Separated<F, G> {
    pub first: F,
    pub second: G,
}

impl<F: SmoothFunction, G: SmoothFunction> PairFunction for Separated<F, G> {
    fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        self.first.value(x) + self.second.value(y)
    }
    fn directional(&self, x: &[f64], y: &[f64], vx: &[f64], vy: &[f64]) -> f64 {
        self.first.directional(x, vx) + self.second.directional(y, vy)
    }
    fn second_directional(&self, x: &[f64], y: &[f64], vx: &[f64], vy: &[f64]) -> f64 {
        self.first.second_directional(x, vx) + self.second.second_directional(y, vy)
    }
    fn sup_norm(&self) -> f64 {
        self.first.sup_norm() + self.second.sup_norm()
    }
    fn hessian_bound_near(&self, _: &[f64], _: &[f64]) -> f64 {
        self.first.hessian_bound() + self.second.hessian_bound()
    }
}

/// `h(x, y) = f(|x - y|)`
#[derive(Debug, Clone, PartialEq)]
pub struct OfDistance<P>(pub P);

impl<P: DistanceProfile> PairFunction for OfDistance<P> {
    fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        self.0.value(math::norm(&math::sub(x, y)))
    }

    fn directional(&self, x: &[f64], y: &[f64], vx: &[f64], vy: &[f64]) -> f64 {
        let w = math::sub(x, y);
        let r = math::norm(&w);
        let delta = math::sub(vx, vy);
        if r == 0.0 {
            // one-sided derivative along the direction of motion
            let n = math::norm(&delta);
            return if n == 0.0 { 0.0 } else { self.0.d1(0.0) * n };
        }
        self.0.d1(r) * math::dot(&w, &delta) / r
    }

    fn second_directional(&self, x: &[f64], y: &[f64], vx: &[f64], vy: &[f64]) -> f64 {
        let w = math::sub(x, y);
        let r = math::norm(&w);
        let delta = math::sub(vx, vy);
        if r == 0.0 {
            let n = math::norm_sq(&delta);
            return if n == 0.0 { 0.0 } else { self.0.d2(0.0) * n };
        }
        let along = math::dot(&w, &delta) / r;
        let across = (math::norm_sq(&delta) - along * along).max(0.0);
        self.0.d2(r) * along * along + self.0.d1(r) / r * across
    }

    fn sup_norm(&self) -> f64 {
        self.0.sup_norm()
    }

    fn hessian_bound_near(&self, x: &[f64], y: &[f64]) -> f64 {
        // pair Hessian has norm 2 max(|f''|, f'/r) in the difference direction
        let r = 0.5 * math::norm(&math::sub(x, y));
        2.0 * self.0.d2(r).abs().max((self.0.d1(r) / r).abs())
    }

    fn add_features(&self, x: &[f64], y: &[f64], geometry: &mut Geometry) {
        let w = math::sub(x, y);
        let mw = math::neg(&w);
        // first-only jumps reach x + z = y at z = -w, second-only at z = w
        geometry.add_point(&mw);
        geometry.add_point(&w);
        for &k in self.0.kinks() {
            geometry.add_sphere(&mw, k);
            geometry.add_sphere(&w, k);
        }
    }
}
