use alloc::format;
use alloc::vec::Vec;

use crate::math;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CoefficientFamily {
    /// `c = c0`. Params `[c0]`.
    Constant,
    /// `c = a + b sin(k x_1)`. Params `[a, b, k]`.
    SeparableSinusoidal,
    /// `c = a + b min(1, |x_1|)^β`, `β ∈ (0, 1]`. Params `[a, b, β]`.
    SeparableHolder,
    /// Bilinear interpolation of a table over `(x_1, z_1)`, clamped outside.
    /// Params `[x_min, x_max, nx, z_min, z_max, nz, v_00, v_01, ...]` with the
    /// values stored row-major (one row per `x` node).
    UserTable,
}

impl CoefficientFamily {
    pub fn name(self) -> &'static str {
        match self {
            CoefficientFamily::Constant => "constant",
            CoefficientFamily::SeparableSinusoidal => "separable-sinusoidal",
            CoefficientFamily::SeparableHolder => "separable-holder",
            CoefficientFamily::UserTable => "user-table",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "constant" => Some(CoefficientFamily::Constant),
            "separable-sinusoidal" => Some(CoefficientFamily::SeparableSinusoidal),
            "separable-holder" => Some(CoefficientFamily::SeparableHolder),
            "user-table" => Some(CoefficientFamily::UserTable),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Table {
    x_min: f64,
    x_step: f64,
    nx: usize,
    z_min: f64,
    z_step: f64,
    nz: usize,
    values: Vec<f64>,
}

impl Table {
    fn parse(params: &[f64]) -> Result<Self> {
        if params.len() < 6 {
            return Err(Error::param("coeff.params", "user-table needs 6 header values"));
        }
        let count = |v: f64, name: &'static str| -> Result<usize> {
            if v >= 1.0 && v == math::floor(v) && v < 1e6 {
                Ok(v as usize)
            } else {
                Err(Error::param(name, format!("node count {v} is not a positive integer")))
            }
        };
        let nx = count(params[2], "coeff.params")?;
        let nz = count(params[5], "coeff.params")?;
        let values = &params[6..];
        if values.len() != nx * nz {
            return Err(Error::param(
                "coeff.params",
                format!("expected {} table values, got {}", nx * nz, values.len()),
            ));
        }
        let step = |lo: f64, hi: f64, n: usize| -> Result<f64> {
            if n == 1 {
                return Ok(1.0);
            }
            if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::param("coeff.params", "table range must be increasing"));
            }
            Ok((hi - lo) / (n - 1) as f64)
        };
        Ok(Table {
            x_min: params[0],
            x_step: step(params[0], params[1], nx)?,
            nx,
            z_min: params[3],
            z_step: step(params[3], params[4], nz)?,
            nz,
            values: values.to_vec(),
        })
    }

    /// Cell index and fractional offset along one clamped axis.
    #[inline]
    fn locate(t: f64, lo: f64, step: f64, n: usize) -> (usize, f64) {
        if n == 1 {
            return (0, 0.0);
        }
        let s = ((t - lo) / step).clamp(0.0, (n - 1) as f64);
        let i = (math::floor(s) as usize).min(n - 2);
        (i, s - i as f64)
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.nz + j]
    }

    fn eval(&self, x1: f64, z1: f64) -> f64 {
        let (i, fx) = Self::locate(x1, self.x_min, self.x_step, self.nx);
        let (j, fz) = Self::locate(z1, self.z_min, self.z_step, self.nz);
        let i1 = (i + 1).min(self.nx - 1);
        let j1 = (j + 1).min(self.nz - 1);
        let lo = self.at(i, j) * (1.0 - fz) + self.at(i, j1) * fz;
        let hi = self.at(i1, j) * (1.0 - fz) + self.at(i1, j1) * fz;
        lo * (1.0 - fx) + hi * fx
    }

    fn x_node(&self, i: usize) -> f64 {
        self.x_min + self.x_step * i as f64
    }

    fn z_nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.nz).map(|j| self.z_min + self.z_step * j as f64)
    }

    /// Largest slope in `x_1` over all cells, i.e. a Lipschitz constant.
    fn x_lipschitz(&self) -> f64 {
        let mut best: f64 = 0.0;
        for i in 0..self.nx.saturating_sub(1) {
            for j in 0..self.nz {
                best = best.max((self.at(i + 1, j) - self.at(i, j)).abs() / self.x_step);
            }
        }
        best
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Shape {
    Constant(f64),
    Sinusoidal { a: f64, b: f64, k: f64 },
    Holder { a: f64, b: f64, beta: f64 },
    Table(Table),
}

/// A jump coefficient `c(x, z)` together with declared bounds
/// `c_* <= c <= c^*`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    dim: usize,
    family: CoefficientFamily,
    params: Vec<f64>,
    pub(crate) shape: Shape,
    lower: f64,
    upper: f64,
}

impl CoefficientField {
    /// Builds a field and checks the declared bounds against the family's
    /// actual range. Missing bounds are taken from that range.
    pub fn new(
        dim: usize,
        family: CoefficientFamily,
        params: &[f64],
        lower: Option<f64>,
        upper: Option<f64>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dimension", "must be positive"));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::param("coeff.params", "parameters must be finite"));
        }
        let need = |n: usize| -> Result<()> {
            if params.len() == n {
                Ok(())
            } else {
                Err(Error::param(
                    "coeff.params",
                    format!("{} expects {n} parameters, got {}", family.name(), params.len()),
                ))
            }
        };
        let (shape, lo, hi) = match family {
            CoefficientFamily::Constant => {
                need(1)?;
                (Shape::Constant(params[0]), params[0], params[0])
            }
            CoefficientFamily::SeparableSinusoidal => {
                need(3)?;
                let (a, b, k) = (params[0], params[1], params[2]);
                let spread = if k == 0.0 { 0.0 } else { b.abs() };
                (Shape::Sinusoidal { a, b, k }, a - spread, a + spread)
            }
            CoefficientFamily::SeparableHolder => {
                need(3)?;
                let (a, b, beta) = (params[0], params[1], params[2]);
                if !(beta > 0.0 && beta <= 1.0) {
                    return Err(Error::param("coeff.params", format!("Hölder exponent {beta} not in (0, 1]")));
                }
                (Shape::Holder { a, b, beta }, a.min(a + b), a.max(a + b))
            }
            CoefficientFamily::UserTable => {
                let t = Table::parse(params)?;
                let lo = t.values.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = t.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                (Shape::Table(t), lo, hi)
            }
        };
        let lower = lower.unwrap_or(lo);
        let upper = upper.unwrap_or(hi);
        if !(lower > 0.0) {
            return Err(Error::param("coeff.clower", format!("lower bound {lower} must be positive")));
        }
        if lo < lower {
            return Err(Error::param(
                "coeff.clower",
                format!("coefficient reaches {lo}, below the declared lower bound {lower}"),
            ));
        }
        if !(upper.is_finite()) || hi > upper {
            return Err(Error::param(
                "coeff.cupper",
                format!("coefficient reaches {hi}, above the declared upper bound {upper}"),
            ));
        }
        Ok(CoefficientField {
            dim,
            family,
            params: params.to_vec(),
            shape,
            lower,
            upper,
        })
    }

    pub fn constant(dim: usize, c0: f64) -> Result<Self> {
        Self::new(dim, CoefficientFamily::Constant, &[c0], None, None)
    }

    /// `a + b sin(k x_1)`.
    pub fn sinusoidal(dim: usize, a: f64, b: f64, k: f64) -> Result<Self> {
        Self::new(dim, CoefficientFamily::SeparableSinusoidal, &[a, b, k], None, None)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn family(&self) -> CoefficientFamily {
        self.family
    }
    pub fn params(&self) -> &[f64] {
        &self.params
    }
    /// `c_*`
    pub fn lower(&self) -> f64 {
        self.lower
    }
    /// `c^*`
    pub fn upper(&self) -> f64 {
        self.upper
    }

    /// True when `c(x, z)` does not depend on `z`.
    pub fn is_z_independent(&self) -> bool {
        !matches!(self.shape, Shape::Table(_))
    }

    /// True when `c(x, z)` does not depend on `x`.
    pub fn is_x_independent(&self) -> bool {
        match &self.shape {
            Shape::Constant(_) => true,
            Shape::Sinusoidal { b, k, .. } => *b == 0.0 || *k == 0.0,
            Shape::Holder { b, .. } => *b == 0.0,
            Shape::Table(t) => t.nx == 1,
        }
    }

    #[inline]
    pub fn value(&self, x: &[f64], z: &[f64]) -> f64 {
        match &self.shape {
            Shape::Table(t) => t.eval(x[0], z[0]),
            _ => self.x_part(x),
        }
    }

    /// `c(x, ·)` for fields that do not depend on `z`; for tables this is the
    /// value at `z_1 = 0`.
    #[inline]
    pub fn x_part(&self, x: &[f64]) -> f64 {
        match &self.shape {
            Shape::Constant(c) => *c,
            Shape::Sinusoidal { a, b, k } => a + b * math::sin(k * x[0]),
            Shape::Holder { a, b, beta } => a + b * math::powf(x[0].abs().min(1.0), *beta),
            Shape::Table(t) => t.eval(x[0], 0.0),
        }
    }

    /// For separable fields, `sup_{|x-y| = r} |c(x) - c(y)|` in closed form.
    pub fn separable_oscillation(&self, r: f64) -> Option<f64> {
        match &self.shape {
            Shape::Constant(_) => Some(0.0),
            Shape::Sinusoidal { b, k, .. } => {
                Some(b.abs() * 2.0 * math::sin((k.abs() * r).min(math::PI) / 2.0))
            }
            Shape::Holder { b, beta, .. } => Some(b.abs() * math::powf(r.min(1.0), *beta)),
            Shape::Table(_) => None,
        }
    }

    /// Upper bound on `sup_z |c(x, z) - c(y, z)|` over `|x - y| = r` for any family.
    pub fn oscillation_upper_bound(&self, r: f64) -> f64 {
        match &self.shape {
            Shape::Table(t) => (t.x_lipschitz() * r).min(self.upper - self.lower),
            _ => self.separable_oscillation(r).unwrap_or(0.0),
        }
    }

    /// `x_1` nodes of a table field (empty otherwise).
    pub(crate) fn x_nodes(&self) -> Vec<f64> {
        match &self.shape {
            Shape::Table(t) => (0..t.nx).map(|i| t.x_node(i)).collect(),
            _ => Vec::new(),
        }
    }

    /// `z_1` coordinates where `c(x, ·)` has kinks (table nodes).
    pub(crate) fn z_kinks(&self) -> Vec<f64> {
        match &self.shape {
            Shape::Table(t) if t.nz > 1 => t.z_nodes().collect(),
            _ => Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn declared_bounds_are_validated() {
        assert!(CoefficientField::new(1, CoefficientFamily::SeparableSinusoidal, &[2.0, 1.0, 1.0], Some(1.0), Some(3.0)).is_ok());
        let err = CoefficientField::new(1, CoefficientFamily::SeparableSinusoidal, &[2.0, 1.0, 1.0], Some(1.5), Some(3.0));
        assert!(matches!(err, Err(Error::InvalidParameter { name: "coeff.clower", .. })));
        assert!(CoefficientField::new(1, CoefficientFamily::Constant, &[0.0], None, None).is_err());
    }

    #[test]
    fn table_interpolates_and_clamps() {
        // two x nodes (0, 1) and two z nodes (-1, 1)
        let p = [0.0, 1.0, 2.0, -1.0, 1.0, 2.0, 1.0, 2.0, 3.0, 4.0];
        let c = CoefficientField::new(1, CoefficientFamily::UserTable, &p, None, None).unwrap();
        assert_eq!(c.value(&[0.0], &[-1.0]), 1.0);
        assert_eq!(c.value(&[1.0], &[1.0]), 4.0);
        assert!((c.value(&[0.5], &[0.0]) - 2.5).abs() < 1e-15);
        assert_eq!(c.value(&[-7.0], &[9.0]), 2.0);
        assert_eq!((c.lower(), c.upper()), (1.0, 4.0));
        assert!(!c.is_z_independent());
        assert_eq!(c.z_kinks(), [-1.0, 1.0]);
    }

    #[test]
    fn sinusoid_oscillation() {
        let c = CoefficientField::sinusoidal(1, 2.0, 1.0, 1.0).unwrap();
        assert!((c.separable_oscillation(0.1).unwrap() - 2.0 * (0.05f64).sin()).abs() < 1e-15);
        assert_eq!(c.separable_oscillation(10.0).unwrap(), 2.0);
    }
}
