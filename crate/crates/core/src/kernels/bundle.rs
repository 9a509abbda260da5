use alloc::format;

use super::{CoefficientField, LevyMeasureSpec};
use crate::math::{self, Point};
use crate::{Error, Result};

/// `(w)_κ = (1 ∧ κ/|w|) w`.
pub fn clip_displacement(w: &[f64], kappa: f64) -> Point {
    let r = math::norm(w);
    if r <= kappa || r == 0.0 {
        Point::from_slice(w)
    } else {
        math::scale(w, kappa / r)
    }
}

/// `c(x,z) ∧ c(y,z) ∧ c(x,z-u) ∧ c(y,z-u)`.
pub fn coeff4(field: &CoefficientField, x: &[f64], y: &[f64], u: &[f64], z: &[f64]) -> f64 {
    if field.is_z_independent() {
        return field.x_part(x).min(field.x_part(y));
    }
    let zu = math::sub(z, u);
    field
        .value(x, z)
        .min(field.value(y, z))
        .min(field.value(x, &zu))
        .min(field.value(y, &zu))
}

/// Density of `ν_u(dz) = (ν ∧ (δ_u * ν))(dz)`, i.e. `q(z) ∧ q(z - u)`.
pub fn nu_u_density(spec: &LevyMeasureSpec, u: &[f64], z: &[f64]) -> Result<f64> {
    let shifted = math::sub(z, u);
    let l = spec.ln_density(z).min(spec.ln_density(&shifted));
    if l == f64::INFINITY {
        return Err(Error::PoleEvaluation);
    }
    Ok(math::exp(l))
}

/// Index of a branch of the coupled jump system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Branch {
    /// `(z, z + (x-y)_κ)`: moves the second component towards the first.
    Toward = 1,
    /// `(z, z + (y-x)_κ)`.
    Away = 2,
    /// `(z, z)`.
    Parallel = 3,
    /// `(z, 0)`.
    FirstOnly = 4,
    /// `(0, z)`.
    SecondOnly = 5,
}

impl Branch {
    pub const ALL: [Branch; 5] = [
        Branch::Toward,
        Branch::Away,
        Branch::Parallel,
        Branch::FirstOnly,
        Branch::SecondOnly,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Jumps of the two components for a jump size `z` and clipped displacement `v = (x-y)_κ`.
    pub fn jumps(self, z: &[f64], v: &[f64]) -> (Point, Point) {
        let zero = math::zeros(z.len());
        match self {
            Branch::Toward => (Point::from_slice(z), math::add(z, v)),
            Branch::Away => (Point::from_slice(z), math::sub(z, v)),
            Branch::Parallel => (Point::from_slice(z), Point::from_slice(z)),
            Branch::FirstOnly => (Point::from_slice(z), zero),
            Branch::SecondOnly => (zero, Point::from_slice(z)),
        }
    }
}

/// The five branch densities of the refined basic coupling at a fixed pair
/// `(x, y)`.
#[derive(Debug, Clone)]
pub struct KernelBundle<'a> {
    spec: &'a LevyMeasureSpec,
    field: &'a CoefficientField,
    x: Point,
    y: Point,
    kappa: f64,
    v: Point,
    coincident: bool,
    // c(x), c(y) when the field ignores z
    cx: f64,
    cy: f64,
}

impl<'a> KernelBundle<'a> {
    pub fn new(spec: &'a LevyMeasureSpec, field: &'a CoefficientField, x: &[f64], y: &[f64], kappa: f64) -> Result<Self> {
        let d = spec.dim();
        if field.dim() != d || x.len() != d || y.len() != d {
            return Err(Error::Precondition(format!(
                "dimension mismatch: measure {d}, field {}, x {}, y {}",
                field.dim(),
                x.len(),
                y.len()
            )));
        }
        if !(kappa > 0.0 && kappa <= 1.0) {
            return Err(Error::param("sim.kappa", format!("{kappa} not in (0, 1]")));
        }
        let w = math::sub(x, y);
        let (cx, cy) = if field.is_z_independent() {
            (field.x_part(x), field.x_part(y))
        } else {
            (f64::NAN, f64::NAN)
        };
        Ok(KernelBundle {
            spec,
            field,
            x: Point::from_slice(x),
            y: Point::from_slice(y),
            kappa,
            v: clip_displacement(&w, kappa),
            coincident: x == y,
            cx,
            cy,
        })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }
    pub fn y(&self) -> &[f64] {
        &self.y
    }
    pub fn kappa(&self) -> f64 {
        self.kappa
    }
    /// `(x - y)_κ`
    pub fn displacement(&self) -> &[f64] {
        &self.v
    }
    pub fn is_coincident(&self) -> bool {
        self.coincident
    }

    #[inline]
    fn c_at(&self, p: &[f64], cp: f64, z: &[f64]) -> f64 {
        if cp.is_nan() {
            self.field.value(p, z)
        } else {
            cp
        }
    }

    /// `(c(x, z), c(y, z))`
    #[inline]
    pub fn coefficients(&self, z: &[f64]) -> (f64, f64) {
        (self.c_at(&self.x, self.cx, z), self.c_at(&self.y, self.cy, z))
    }

    /// Densities `[d1, ..., d5]` at `z`. Fails at `z = 0`, where branches 3-5
    /// have their pole.
    pub fn branch_densities(&self, z: &[f64]) -> Result<[f64; 5]> {
        if z.iter().all(|&c| c == 0.0) {
            return Err(Error::PoleEvaluation);
        }
        let (d, slack) = self.evaluate(z);
        if slack < 0.0 {
            return Err(Error::Internal(format!("branch 3 density negative ({slack:e}) at z = {z:?}")));
        }
        Ok(d)
    }

    /// Same as [`branch_densities`](Self::branch_densities) without the pole
    /// check; negative rounding residue in branch 3 is clamped to zero.
    #[inline]
    pub(crate) fn densities_unchecked(&self, z: &[f64]) -> [f64; 5] {
        self.evaluate(z).0
    }

    /// Branch densities plus the branch-3 value before clamping when it is
    /// negative beyond rounding (otherwise `0`).
    fn evaluate(&self, z: &[f64]) -> ([f64; 5], f64) {
        let lq = self.spec.ln_density(z);
        let q = math::exp(lq);
        let (cxz, cyz) = self.coefficients(z);
        let m = cxz.min(cyz);
        if self.coincident {
            return ([0.0, 0.0, m * q, 0.0, 0.0], 0.0);
        }
        let half_mu = |shifted: &[f64]| -> f64 {
            let l = lq.min(self.spec.ln_density(shifted));
            if l == f64::NEG_INFINITY {
                return 0.0;
            }
            let c = if self.field.is_z_independent() {
                m
            } else {
                m.min(self.field.value(&self.x, shifted)).min(self.field.value(&self.y, shifted))
            };
            0.5 * c * math::exp(l)
        };
        // branch 1 uses u = -v, so z - u = z + v
        let d1 = half_mu(&math::add(z, &self.v));
        let d2 = half_mu(&math::sub(z, &self.v));
        let mq = m * q;
        let raw3 = mq - d1 - d2;
        let mut slack = 0.0;
        if raw3 < -1e-12 * mq {
            slack = raw3;
        }
        let d3 = raw3.max(0.0);
        ([d1, d2, d3, (cxz - m) * q, (cyz - m) * q], slack)
    }

    /// `(c(x, z) ∧ c(y, z)) q(z)`, the density of `ν̃`.
    pub fn synchronous_density(&self, z: &[f64]) -> f64 {
        let (cxz, cyz) = self.coefficients(z);
        cxz.min(cyz) * self.spec.density(z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::CoefficientFamily;

    fn sinus() -> (LevyMeasureSpec, CoefficientField) {
        (
            LevyMeasureSpec::truncated(1, 1.5, 1.0, 1.0).unwrap(),
            CoefficientField::new(1, CoefficientFamily::SeparableSinusoidal, &[2.0, 1.0, 1.0], None, None).unwrap(),
        )
    }

    #[test]
    fn clip_examples() {
        let v = clip_displacement(&[3.0, 4.0], 1.0);
        assert!((v[0] - 0.6).abs() < 1e-15 && (v[1] - 0.8).abs() < 1e-15);
        assert_eq!(clip_displacement(&[0.3], 1.0).as_slice(), &[0.3]);
        assert_eq!(clip_displacement(&[0.0, 0.0], 0.5).as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn nu_u_example() {
        // d = 1, α = 0.5, A = 1: u = 0.5, z = 0.75 -> min(0.75^{-1.5}, 0.25^{-1.5})
        let s = LevyMeasureSpec::homogeneous(1, 0.5, 1.0).unwrap();
        let v = nu_u_density(&s, &[0.5], &[0.75]).unwrap();
        assert!((v - 0.75f64.powf(-1.5)).abs() < 1e-12);
        assert!((v - 1.539_600_717_839_002).abs() < 1e-12);
        assert_eq!(nu_u_density(&s, &[0.0], &[0.0]), Err(Error::PoleEvaluation));
        assert!(nu_u_density(&s, &[0.5], &[0.0]).unwrap().is_finite());
    }

    #[test]
    fn coeff4_example() {
        // 2 + sin(x_1) at x = 0, y = π/2, u = 0.1: min(2, 3) = 2
        let (_, c) = sinus();
        let v = coeff4(&c, &[0.0], &[core::f64::consts::FRAC_PI_2], &[0.1], &[0.3]);
        assert_eq!(v, 2.0);
    }

    #[test]
    fn branches_sum_to_max_coefficient() {
        let (s, c) = sinus();
        let b = KernelBundle::new(&s, &c, &[0.1], &[0.4], 1.0).unwrap();
        for &z in &[-0.9, -0.31, -0.05, 0.02, 0.3, 0.77] {
            let d = b.branch_densities(&[z]).unwrap();
            let (cx, cy) = b.coefficients(&[z]);
            let total: f64 = d.iter().sum();
            let expected = cx.max(cy) * s.density(&[z]);
            assert!((total - expected).abs() <= 1e-12 * expected);
            assert!(d.iter().all(|&v| v >= 0.0));
        }
        assert_eq!(b.branch_densities(&[0.0]), Err(Error::PoleEvaluation));
    }

    #[test]
    fn coincident_pair_uses_only_the_synchronous_branch() {
        let (s, c) = sinus();
        let b = KernelBundle::new(&s, &c, &[0.2], &[0.2], 1.0).unwrap();
        let d = b.branch_densities(&[0.5]).unwrap();
        assert_eq!(d[0], 0.0);
        assert_eq!(d[1], 0.0);
        assert_eq!(d[3], 0.0);
        assert_eq!(d[4], 0.0);
        assert!((d[2] - (2.0 + 0.2f64.sin()) * 0.5f64.powf(-2.5)).abs() < 1e-12);
    }
}
