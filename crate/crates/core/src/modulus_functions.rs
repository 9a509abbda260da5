//! Concave moduli `ψ` used as distance functions in drift conditions.
//!
//! The two logarithmic families are written as `ψ(r) = r g(L)` with
//! `L = ln(1/r)`, so with `G_k = g^{(k)}(L)`:
//! `ψ' = G_0 - G_1`, `ψ'' = (G_2 - G_1)/r`, `ψ''' = (G_1 - G_3)/r^2`.

use alloc::format;
use alloc::vec::Vec;

use crate::math;
use crate::quadrature::DistanceProfile;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModulusFamily {
    /// `r (1 - ln^{-θ}(1/r))`
    LipLog,
    /// `r ln^θ(1/r)`
    LogWeighted,
    /// `r^θ`, `θ ∈ (0, 1)`
    Power,
}

impl ModulusFamily {
    pub fn name(self) -> &'static str {
        match self {
            ModulusFamily::LipLog => "lip-log",
            ModulusFamily::LogWeighted => "log-weighted",
            ModulusFamily::Power => "power",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "lip-log" => Some(ModulusFamily::LipLog),
            "log-weighted" => Some(ModulusFamily::LogWeighted),
            "power" => Some(ModulusFamily::Power),
            _ => None,
        }
    }
}

const LOG_RADIUS_MAX: f64 = 0.135_335_283_236_612_7; // e^{-2}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulusFunction {
    family: ModulusFamily,
    theta: f64,
    valid_radius: f64,
}

impl ModulusFunction {
    /// Validates `θ` and the radius. Without an explicit radius the largest
    /// `r_max <= e^{-2}` (log families) or `1` (power) is used on which
    /// `ψ' >= 0`, `ψ'' <= 0` and `ψ''' >= 0` all hold.
    pub fn new(family: ModulusFamily, theta: f64, valid_radius: Option<f64>) -> Result<Self> {
        match family {
            ModulusFamily::Power if !(theta > 0.0 && theta < 1.0) => {
                return Err(Error::param("psi.theta", format!("power family needs θ in (0, 1), got {theta}")));
            }
            _ if !(theta > 0.0 && theta.is_finite()) => {
                return Err(Error::param("psi.theta", format!("θ must be positive, got {theta}")));
            }
            _ => {}
        }
        let limit = Self::default_radius(family, theta);
        let radius = match valid_radius {
            None => limit,
            Some(r) => {
                let cap = if family == ModulusFamily::Power { f64::INFINITY } else { LOG_RADIUS_MAX };
                if !(r > 0.0 && r <= cap) {
                    return Err(Error::param("psi.radius", format!("{r} not in (0, {cap}]")));
                }
                r
            }
        };
        Ok(ModulusFunction {
            family,
            theta,
            valid_radius: radius,
        })
    }

    /// No parameter validation, for diagnosing shapes outside the admissible
    /// range (e.g. a convex power).
    pub fn new_unchecked(family: ModulusFamily, theta: f64, valid_radius: f64) -> Self {
        ModulusFunction {
            family,
            theta,
            valid_radius,
        }
    }

    /// Like [`new`](Self::new), additionally requiring `θ > 1` when the lower
    /// stability index is exactly `1`.
    pub fn for_regime(alpha1: f64, family: ModulusFamily, theta: f64, valid_radius: Option<f64>) -> Result<Self> {
        if alpha1 == 1.0 && theta <= 1.0 {
            return Err(Error::param("psi.theta", format!("α₁ = 1 requires θ > 1, got {theta}")));
        }
        Self::new(family, theta, valid_radius)
    }

    fn default_radius(family: ModulusFamily, theta: f64) -> f64 {
        // smallest L = ln(1/r) from which all sign conditions hold
        let l_min = match family {
            ModulusFamily::Power => return 1.0,
            ModulusFamily::LipLog => {
                // ψ' >= 0 ⇔ L^θ >= 1 + θ/L; ψ''' >= 0 ⇔ L^2 >= (θ+1)(θ+2)
                let third = math::sqrt((theta + 1.0) * (theta + 2.0));
                let first = |l: f64| math::powf(l, theta) - 1.0 - theta / l;
                let (mut lo, mut hi) = (1.0, 2.0);
                while first(hi) < 0.0 {
                    hi *= 2.0;
                }
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if first(mid) >= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                third.max(hi)
            }
            ModulusFamily::LogWeighted => {
                // ψ' >= 0 ⇔ L >= θ; ψ'' <= 0 ⇔ L >= θ - 1; ψ''' >= 0 ⇔ L^2 >= (θ-1)(θ-2)
                let p = (theta - 1.0) * (theta - 2.0);
                theta.max(if p > 0.0 { math::sqrt(p) } else { 0.0 })
            }
        };
        math::exp(-(2.0f64.max(1.01 * l_min)))
    }

    pub fn family(&self) -> ModulusFamily {
        self.family
    }
    pub fn theta(&self) -> f64 {
        self.theta
    }
    pub fn valid_radius(&self) -> f64 {
        self.valid_radius
    }

    /// `[g(L), g'(L), g''(L), g'''(L)]`
    fn g(&self, l: f64) -> [f64; 4] {
        let t = self.theta;
        match self.family {
            ModulusFamily::LogWeighted => {
                let p = math::powf(l, t);
                [p, t * p / l, t * (t - 1.0) * p / (l * l), t * (t - 1.0) * (t - 2.0) * p / (l * l * l)]
            }
            ModulusFamily::LipLog => {
                let p = math::powf(l, -t);
                [
                    1.0 - p,
                    t * p / l,
                    -t * (t + 1.0) * p / (l * l),
                    t * (t + 1.0) * (t + 2.0) * p / (l * l * l),
                ]
            }
            ModulusFamily::Power => unreachable!("power family has direct formulas"),
        }
    }

    /// Closed-form derivative of order `0..=3` without domain checks.
    pub(crate) fn raw(&self, r: f64, order: u8) -> f64 {
        if self.family == ModulusFamily::Power {
            let t = self.theta;
            let p = math::powf(r, t);
            return match order {
                0 => p,
                1 => t * p / r,
                2 => t * (t - 1.0) * p / (r * r),
                _ => t * (t - 1.0) * (t - 2.0) * p / (r * r * r),
            };
        }
        let g = self.g(math::ln(1.0 / r));
        match order {
            0 => r * g[0],
            1 => g[0] - g[1],
            2 => (g[2] - g[1]) / r,
            _ => (g[1] - g[3]) / (r * r),
        }
    }

    /// `ψ^{(order)}(r)` for `0 < r <= valid_radius`.
    pub fn eval(&self, r: f64, order: u8) -> Result<f64> {
        if order > 3 {
            return Err(Error::param("order", format!("{order} not in 0..=3")));
        }
        if !(r > 0.0 && r <= self.valid_radius) {
            return Err(Error::Domain { what: "ψ", value: r });
        }
        Ok(self.raw(r, order))
    }

    /// `ψ''(r)`, reported as an undefined derivative outside the domain.
    pub(crate) fn second(&self, r: f64) -> Result<f64> {
        if !(r > 0.0 && r <= self.valid_radius) {
            return Err(Error::UndefinedDerivative { order: 2, r });
        }
        Ok(self.raw(r, 2))
    }

    /// Bounded `C^2` extension of `ψ` to `[0, ∞)`.
    pub fn extended(&self) -> ExtendedModulus {
        let rm = self.valid_radius;
        let (v, d1, d2) = (self.raw(rm, 0), self.raw(rm, 1), self.raw(rm, 2));
        let len = -2.0 * d1 / d2;
        ExtendedModulus {
            base: *self,
            joins: [rm, rm + len],
            len,
            v,
            d1,
            d2,
        }
    }
}

/// `psi_eval`
pub fn psi_eval(m: &ModulusFunction, r: f64, order: u8) -> Result<f64> {
    m.eval(r, order)
}

/// `ψ` on `(0, r_m]`, continued by the cubic with `f'' = ψ''(r_m)(1 - s/ℓ)`
/// on `s = r - r_m ∈ [0, ℓ]`, `ℓ = -2ψ'(r_m)/ψ''(r_m)`, and constant after.
/// The continuation keeps `f' >= 0` and `f'' <= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtendedModulus {
    base: ModulusFunction,
    joins: [f64; 2],
    len: f64,
    v: f64,
    d1: f64,
    d2: f64,
}

impl ExtendedModulus {
    pub fn base(&self) -> &ModulusFunction {
        &self.base
    }

    #[inline]
    fn offset(&self, r: f64) -> f64 {
        (r - self.joins[0]).min(self.len)
    }
}

impl DistanceProfile for ExtendedModulus {
    fn value(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        if r <= self.joins[0] {
            return self.base.raw(r, 0);
        }
        let s = self.offset(r);
        self.v + self.d1 * s + self.d2 * (s * s / 2.0 - s * s * s / (6.0 * self.len))
    }

    fn d1(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return f64::INFINITY;
        }
        if r <= self.joins[0] {
            return self.base.raw(r, 1);
        }
        let s = self.offset(r);
        self.d1 + self.d2 * (s - s * s / (2.0 * self.len))
    }

    fn d2(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return f64::NEG_INFINITY;
        }
        if r <= self.joins[0] {
            return self.base.raw(r, 2);
        }
        let s = self.offset(r);
        self.d2 * (1.0 - s / self.len)
    }

    fn sup_norm(&self) -> f64 {
        self.v + self.d1 * self.len / 3.0
    }

    fn kinks(&self) -> &[f64] {
        &self.joins
    }
}

/// Worst margins of the shape conditions on a log grid; each margin is
/// nonnegative when its condition holds.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeReport {
    pub pass: bool,
    pub grid_size: usize,
    pub radius: f64,
    /// `min ψ`
    pub value_margin: f64,
    /// `min ψ'`
    pub first_margin: f64,
    /// `min -ψ''`
    pub second_margin: f64,
    /// `min ψ'''`
    pub third_margin: f64,
    /// `min [2ψ(r) - ψ(2r) + ψ''(2r) r^2]` over `2r <= radius`
    pub doubling_margin: f64,
    /// Grid points where any condition failed.
    pub failures: Vec<f64>,
}

/// Checks `ψ >= 0, ψ' >= 0, ψ'' <= 0, ψ''' >= 0` and the doubling inequality
/// on a log grid spanning six decades below the validity radius.
pub fn shape_check(m: &ModulusFunction, grid_size: usize) -> ShapeReport {
    let n = grid_size.max(2);
    let top = m.valid_radius;
    let lo = math::ln(top) - 6.0 * core::f64::consts::LN_10;
    let hi = math::ln(top);
    let mut rep = ShapeReport {
        pass: true,
        grid_size: n,
        radius: top,
        value_margin: f64::INFINITY,
        first_margin: f64::INFINITY,
        second_margin: f64::INFINITY,
        third_margin: f64::INFINITY,
        doubling_margin: f64::INFINITY,
        failures: Vec::new(),
    };
    for i in 0..n {
        let r = math::exp(lo + (hi - lo) * i as f64 / (n - 1) as f64).min(top);
        let vals = [m.raw(r, 0), m.raw(r, 1), -m.raw(r, 2), m.raw(r, 3)];
        let mut bad = vals.iter().any(|&v| !(v >= 0.0));
        rep.value_margin = rep.value_margin.min(vals[0]);
        rep.first_margin = rep.first_margin.min(vals[1]);
        rep.second_margin = rep.second_margin.min(vals[2]);
        rep.third_margin = rep.third_margin.min(vals[3]);
        let half = 0.5 * r;
        let dbl = 2.0 * m.raw(half, 0) - m.raw(r, 0) + m.raw(r, 2) * half * half;
        // relative slack for rounding in the difference
        let slack = 1e-12 * (m.raw(half, 0).abs() + m.raw(r, 0).abs());
        rep.doubling_margin = rep.doubling_margin.min(dbl);
        if dbl < -slack || dbl.is_nan() {
            bad = true;
        }
        if bad {
            rep.pass = false;
            rep.failures.push(r);
        }
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_examples() {
        let p = ModulusFunction::new(ModulusFamily::Power, 0.5, None).unwrap();
        assert!((p.eval(0.04, 0).unwrap() - 0.2).abs() < 1e-15);
        assert!((p.eval(0.04, 2).unwrap() + 31.25).abs() < 1e-10);
        let lw = ModulusFunction::new(ModulusFamily::LogWeighted, 1.0, None).unwrap();
        let r = (-4.0f64).exp();
        assert!((lw.eval(r, 0).unwrap() - 4.0 * r).abs() < 1e-15);
        assert!((lw.eval(r, 0).unwrap() - 0.073_262_555_554_936_7).abs() < 1e-12);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for (fam, th) in [
            (ModulusFamily::LipLog, 1.0),
            (ModulusFamily::LipLog, 0.4),
            (ModulusFamily::LogWeighted, 1.5),
            (ModulusFamily::Power, 0.3),
        ] {
            let m = ModulusFunction::new(fam, th, None).unwrap();
            for &r in &[1e-4, 3e-3, 0.02, 0.5 * m.valid_radius()] {
                let h = r * 1e-4;
                for k in 0..3u8 {
                    let fd = (m.raw(r + h, k) - m.raw(r - h, k)) / (2.0 * h);
                    let exact = m.raw(r, k + 1);
                    assert!((fd - exact).abs() <= 1e-6 * exact.abs(), "{fam:?} {th} r={r} k={k}: {fd} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn shape_examples() {
        let p = ModulusFunction::new(ModulusFamily::Power, 0.5, Some(0.1)).unwrap();
        assert!(shape_check(&p, 200).pass);
        let convex = ModulusFunction::new_unchecked(ModulusFamily::Power, 1.5, 0.1);
        let rep = shape_check(&convex, 200);
        assert!(!rep.pass);
        assert!(rep.second_margin < 0.0);
        let ll = ModulusFunction::new(ModulusFamily::LipLog, 1.0, None).unwrap();
        assert!(shape_check(&ll, 200).pass);
        // the third derivative changes sign at L = √6 for θ = 1
        let wide = ModulusFunction::new(ModulusFamily::LipLog, 1.0, Some(LOG_RADIUS_MAX)).unwrap();
        assert!(shape_check(&wide, 200).third_margin < 0.0);
    }

    #[test]
    fn regime_guard() {
        assert!(ModulusFunction::for_regime(1.0, ModulusFamily::LogWeighted, 1.0, None).is_err());
        assert!(ModulusFunction::for_regime(1.0, ModulusFamily::LogWeighted, 1.5, None).is_ok());
        assert!(ModulusFunction::for_regime(1.5, ModulusFamily::LipLog, 0.5, None).is_ok());
        assert!(ModulusFunction::new(ModulusFamily::Power, 1.0, None).is_err());
    }

    #[test]
    fn extension_is_c2_and_bounded() {
        let m = ModulusFunction::new(ModulusFamily::LipLog, 1.0, None).unwrap();
        let e = m.extended();
        let rm = m.valid_radius();
        for k in [0.0, 1e-12] {
            let (a, b) = (rm - k, rm + 1e-12);
            assert!((e.value(a) - e.value(b)).abs() < 1e-9);
            assert!((e.d1(a) - e.d1(b)).abs() < 1e-9);
            assert!((e.d2(a) - e.d2(b)).abs() < 1e-6);
        }
        assert!(e.d1(10.0).abs() < 1e-12);
        assert!((e.value(10.0) - e.sup_norm()).abs() < 1e-12);
        assert!(e.value(0.0) == 0.0);
    }
}
