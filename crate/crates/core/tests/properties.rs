use proptest::prelude::*;

use levy_coupling_core::estimators::{fit_rate, ks_two_sample, wilson_interval};
use levy_coupling_core::kernels::{
    clip_displacement, coeff4, nu_u_density, CoefficientFamily, CoefficientField, KernelBundle, LevyMeasureSpec,
};
use levy_coupling_core::modulus_functions::{ModulusFamily, ModulusFunction};
use levy_coupling_core::quadrature::{mass_nu_u, DistanceProfile, QuadratureConfig};

/// `c(x, z)` varying in both arguments, values in `[1, 3]`.
fn table_field() -> CoefficientField {
    #[rustfmt::skip]
    let params = [
        -2.0, 2.0, 3.0, -1.0, 1.0, 3.0,
        1.0, 2.0, 3.0,
        2.5, 1.5, 1.0,
        3.0, 1.2, 2.0,
    ];
    CoefficientField::new(1, CoefficientFamily::UserTable, &params, None, None).unwrap()
}

fn nonzero() -> impl Strategy<Value = f64> {
    prop_oneof![-2.0..-1e-3f64, 1e-3..2.0f64]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn coeff4_reflection(x in -3.0..3.0f64, y in -3.0..3.0f64, u in -1.5..1.5f64, z in -1.5..1.5f64) {
        let f = table_field();
        let a = coeff4(&f, &[x], &[y], &[u], &[z]);
        let b = coeff4(&f, &[x], &[y], &[-u], &[z - u]);
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{a} vs {b}");
    }

    #[test]
    fn nu_u_density_reflection(u in nonzero(), z in nonzero(), alpha in 0.2..1.9f64) {
        prop_assume!((z + u).abs() > 1e-9);
        let spec = LevyMeasureSpec::truncated(1, alpha, 1.0, 1.5).unwrap();
        let a = nu_u_density(&spec, &[u], &[z + u]).unwrap();
        let b = nu_u_density(&spec, &[-u], &[z]).unwrap();
        // (z + u) - u is z only up to rounding
        prop_assert!((a - b).abs() <= 1e-13 * a.max(b), "{a} vs {b}");
    }

    #[test]
    fn first_four_branches_sum_to_marginal(
        x in -3.0..3.0f64,
        y in -3.0..3.0f64,
        z in nonzero(),
        kappa in 0.05..1.0f64,
    ) {
        let spec = LevyMeasureSpec::truncated(1, 1.3, 1.0, 2.0).unwrap();
        let field = table_field();
        let b = KernelBundle::new(&spec, &field, &[x], &[y], kappa).unwrap();
        let d = b.branch_densities(&[z]).unwrap();
        let (cx, _) = b.coefficients(&[z]);
        let target = cx * spec.density(&[z]);
        let sum = d[0] + d[1] + d[2] + d[3];
        prop_assert!((sum - target).abs() <= 1e-12 * target.max(1e-300), "{sum} vs {target}");
        prop_assert!(d.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn clipped_displacement_is_short_and_parallel(a in -5.0..5.0f64, b in -5.0..5.0f64, kappa in 0.01..1.0f64) {
        let v = clip_displacement(&[a, b], kappa);
        let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
        prop_assert!(n <= kappa * (1.0 + 1e-12));
        prop_assert!((v[0] * b - v[1] * a).abs() <= 1e-12 * (1.0 + a.abs() + b.abs()));
        prop_assert!(v[0] * a + v[1] * b >= 0.0);
    }

    #[test]
    fn mass_is_reflection_symmetric(u in nonzero(), alpha in 0.3..1.8f64) {
        let spec = LevyMeasureSpec::truncated(1, alpha, 1.0, 1.0).unwrap();
        let cfg = QuadratureConfig::default();
        let a = mass_nu_u(&spec, &[u], &cfg).unwrap().value;
        let b = mass_nu_u(&spec, &[-u], &cfg).unwrap().value;
        prop_assert!((a - b).abs() <= 1e-8 * a.abs().max(b.abs()));
    }

    #[test]
    fn homogeneous_mass_scales(u in 0.01..1.0f64, lambda in 0.1..10.0f64, alpha in 0.3..1.8f64) {
        let spec = LevyMeasureSpec::homogeneous(1, alpha, 1.0).unwrap();
        let cfg = QuadratureConfig::default();
        let a = mass_nu_u(&spec, &[lambda * u], &cfg).unwrap().value;
        let b = mass_nu_u(&spec, &[u], &cfg).unwrap().value * lambda.powf(-alpha);
        prop_assert!(((a - b) / b).abs() <= 1e-6);
    }

    #[test]
    fn psi_shape_and_doubling(theta in 0.1..0.95f64, family in 0usize..3, s in 0.0..1.0f64) {
        let family = [ModulusFamily::LipLog, ModulusFamily::LogWeighted, ModulusFamily::Power][family];
        let psi = ModulusFunction::new(family, theta, None).unwrap();
        let r = psi.valid_radius() * 0.5 * 10f64.powf(-6.0 * s);
        let (v, d1, d2) = (psi.eval(r, 0).unwrap(), psi.eval(r, 1).unwrap(), psi.eval(r, 2).unwrap());
        prop_assert!(v >= 0.0 && d1 >= 0.0 && d2 <= 0.0);
        let lhs = 2.0 * v - psi.eval(2.0 * r, 0).unwrap();
        let rhs = -psi.eval(2.0 * r, 2).unwrap() * r * r;
        prop_assert!(lhs >= rhs * (1.0 - 1e-9), "2ψ(r) - ψ(2r) = {lhs} < {rhs}");
    }

    #[test]
    fn extension_is_concave_and_nondecreasing(theta in 0.1..0.95f64, family in 0usize..3, r in 0.001..3.0f64) {
        let family = [ModulusFamily::LipLog, ModulusFamily::LogWeighted, ModulusFamily::Power][family];
        let f = ModulusFunction::new(family, theta, None).unwrap().extended();
        prop_assert!(f.value(r) >= 0.0);
        prop_assert!(f.d1(r) >= -1e-12);
        prop_assert!(f.d2(r) <= 1e-12);
    }

    #[test]
    fn ks_is_a_distance(a in prop::collection::vec(-5.0..5.0f64, 100..200), b in prop::collection::vec(-5.0..5.0f64, 100..200)) {
        let d = ks_two_sample(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert_eq!(d, ks_two_sample(&b, &a).unwrap());
        prop_assert_eq!(ks_two_sample(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn wilson_contains_the_proportion(n in 1usize..5000, frac in 0.0..1.0f64) {
        let k = ((n as f64) * frac) as usize;
        let (lo, hi) = wilson_interval(k, n, 1.96);
        let p = k as f64 / n as f64;
        prop_assert!(0.0 <= lo && lo <= p + 1e-12 && p <= hi + 1e-12 && hi <= 1.0);
    }

    #[test]
    fn noiseless_fit_recovers_exponent(k in -2.0..-0.1f64, c in 0.1..10.0f64) {
        let pts: Vec<(f64, f64, f64)> = [0.05, 0.1, 0.2, 0.4, 0.8].iter().map(|&t: &f64| (t, c * t.powf(k), 0.0)).collect();
        let fit = fit_rate(&pts, k, 1e-9).unwrap();
        prop_assert!((fit.slope - k).abs() < 1e-9 && fit.half_width < 1e-6 && fit.agrees);
    }
}
