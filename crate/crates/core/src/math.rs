//! Scalar math (via `libm`) and small-vector helpers.

use smallvec::SmallVec;

/// A point or displacement in `R^d`. Stored inline for `d <= 4`.
pub type Point = SmallVec<[f64; 4]>;

pub const PI: f64 = core::f64::consts::PI;
pub const TAU: f64 = core::f64::consts::TAU;

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}
#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}
#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}
#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}
#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}
#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}
#[inline]
pub fn acos(x: f64) -> f64 {
    libm::acos(x.clamp(-1.0, 1.0))
}
#[inline]
pub fn asin(x: f64) -> f64 {
    libm::asin(x.clamp(-1.0, 1.0))
}
#[inline]
pub fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}
#[inline]
pub fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}
#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}
#[inline]
pub fn tgamma(x: f64) -> f64 {
    libm::tgamma(x)
}

pub fn zeros(d: usize) -> Point {
    smallvec::smallvec![0.0; d]
}

pub fn unit(d: usize, axis: usize) -> Point {
    let mut e = zeros(d);
    e[axis] = 1.0;
    e
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    // 1-d fast path keeps the simulator hot loop cheap
    if a.len() == 1 {
        a[0].abs()
    } else {
        sqrt(norm_sq(a))
    }
}

#[inline]
pub fn add(a: &[f64], b: &[f64]) -> Point {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

#[inline]
pub fn sub(a: &[f64], b: &[f64]) -> Point {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[inline]
pub fn scale(a: &[f64], s: f64) -> Point {
    a.iter().map(|x| x * s).collect()
}

/// `a + s * b`
#[inline]
pub fn axpy(a: &[f64], s: f64, b: &[f64]) -> Point {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

pub fn neg(a: &[f64]) -> Point {
    a.iter().map(|x| -x).collect()
}

/// Surface area of the unit sphere `S^{d-1}` (counting measure `2` for `d = 1`).
pub fn sphere_area(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => TAU,
        3 => 4.0 * PI,
        _ => {
            let h = d as f64 / 2.0;
            2.0 * powf(PI, h) / tgamma(h)
        }
    }
}

/// Fraction of `S^{d-1}` lying in the cap `{θ : <θ, ξ> >= δ}`.
pub fn cap_fraction(d: usize, delta: f64) -> f64 {
    let a = acos(delta);
    match d {
        1 => 0.5,
        2 => a / PI,
        3 => (1.0 - delta) / 2.0,
        _ => {
            let k = (d - 2) as i32;
            let w = |phi: f64| libm::pow(sin(phi), k as f64);
            fixed_gauss(&w, 0.0, a, 64) / fixed_gauss(&w, 0.0, PI, 64)
        }
    }
}

/// `∫_cap <θ, ξ> dσ(θ)` over the unit-sphere cap `{<θ, ξ> >= δ}`.
pub fn cap_first_moment(d: usize, delta: f64) -> f64 {
    let a = acos(delta);
    match d {
        1 => 1.0,
        _ => {
            // |S^{d-2}| ∫_0^a cos φ sin^{d-2} φ dφ = |S^{d-2}| sin^{d-1}(a) / (d-1)
            sphere_area(d - 1) * powf(sin(a), (d - 1) as f64) / (d - 1) as f64
        }
    }
}

pub(crate) const GL8_NODES: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329_0,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
pub(crate) const GL8_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_3,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362_0,
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Composite 8-point Gauss-Legendre over `[a, b]` with `panels` panels.
pub fn fixed_gauss<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + h * p as f64;
        let mid = lo + 0.5 * h;
        for (x, w) in GL8_NODES.iter().zip(GL8_WEIGHTS.iter()) {
            total += w * f(mid + 0.5 * h * x);
        }
    }
    total * 0.5 * h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_areas() {
        assert_eq!(sphere_area(1), 2.0);
        assert!((sphere_area(2) - TAU).abs() < 1e-15);
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-12);
        assert!((sphere_area(5) - 8.0 * PI * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn cap_fraction_matches_closed_forms() {
        for &delta in &[0.1, 0.5, 0.9] {
            // d = 4: ∫ sin^2 over [0,a] / (π/2) = (a - sin a cos a) / π
            let a = acos(delta);
            let expected = (a - sin(a) * cos(a)) / PI;
            assert!((cap_fraction(4, delta) - expected).abs() < 1e-13);
            assert!((cap_fraction(3, delta) - (1.0 - delta) / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn gauss_integrates_polynomials() {
        let v = fixed_gauss(&|x: f64| x.powi(7) + 3.0 * x * x, 0.0, 2.0, 1);
        assert!((v - (256.0 / 8.0 + 8.0)).abs() < 1e-12);
    }
}
