use levy_coupling_core::kernels::{CoefficientField, LevyMeasureSpec, PerturbationKernel};
use levy_coupling_core::math::tgamma;
use levy_coupling_core::modulus_functions::{shape_check, ModulusFamily, ModulusFunction};
use levy_coupling_core::quadrature::{
    apply_coupling, apply_coupling_mu, apply_l, apply_l_mu, apply_l_star, Constant, Gaussian, Lorentzian,
    QuadratureConfig, Separated, Wave,
};

/// Constant making `∫ (f(x+z) - f(x) - f'(x) z 1{|z|<=1}) C |z|^{-1-α} dz`
/// the generator with symbol `-|ξ|^α`.
fn fractional_laplacian_constant(alpha: f64) -> f64 {
    alpha * 2f64.powf(alpha - 1.0) * tgamma((1.0 + alpha) / 2.0)
        / (std::f64::consts::PI.sqrt() * tgamma(1.0 - alpha / 2.0))
}

#[test]
fn fractional_laplacian_of_cosine() {
    let field = CoefficientField::constant(1, 1.0).unwrap();
    let cfg = QuadratureConfig::with_tol(1e-6);
    let f = Wave::cosine(&[1.0]);
    for alpha in [1.2, 1.5, 1.8] {
        let spec = LevyMeasureSpec::homogeneous(1, alpha, fractional_laplacian_constant(alpha)).unwrap();
        for x in [0.0, 0.7, 2.0] {
            let got = apply_l(&spec, &field, &f, &[x], &cfg).unwrap();
            let exact = -x.cos();
            assert!(
                (got.value - exact).abs() <= 1e-6,
                "α={alpha} x={x}: {} vs {exact}",
                got.value
            );
        }
    }
}

#[test]
fn fractional_laplacian_of_scaled_wave() {
    // symbol at ξ = 2 is -2^α
    let field = CoefficientField::constant(1, 1.0).unwrap();
    let cfg = QuadratureConfig::with_tol(1e-6);
    let alpha = 1.5;
    let spec = LevyMeasureSpec::homogeneous(1, alpha, fractional_laplacian_constant(alpha)).unwrap();
    let got = apply_l(&spec, &field, &Wave::sine(&[2.0]), &[0.4], &cfg).unwrap().value;
    let exact = -2f64.powf(alpha) * 0.8f64.sin();
    assert!((got - exact).abs() < 1e-5, "{got} vs {exact}");
}

#[test]
fn heavy_oscillating_tail_reports_budget() {
    // the far field of an untruncated α = 1/2 measure against cos cannot be
    // resolved within the subdivision budget; this must surface as an error
    let field = CoefficientField::constant(1, 1.0).unwrap();
    let spec = LevyMeasureSpec::homogeneous(1, 0.5, fractional_laplacian_constant(0.5)).unwrap();
    let err = apply_l(&spec, &field, &Wave::cosine(&[1.0]), &[0.7], &QuadratureConfig::default()).unwrap_err();
    assert!(err.is_budget(), "{err:?}");
}

#[test]
fn constants_are_annihilated() {
    let spec = LevyMeasureSpec::truncated(1, 1.5, 1.0, 2.0).unwrap();
    let field = CoefficientField::sinusoidal(1, 2.0, 1.0, 1.0).unwrap();
    let pert = PerturbationKernel::cosine_stable(1, 1.0, 0.5, 1.0, 0.8, 1.0, 1.0).unwrap();
    let cfg = QuadratureConfig::default();
    assert_eq!(apply_l(&spec, &field, &Constant(3.0), &[0.2], &cfg).unwrap().value, 0.0);
    assert_eq!(apply_l_star(&spec, &field, &pert, &Constant(3.0), &[0.2], &cfg).unwrap().value, 0.0);
}

#[test]
fn perturbed_operator_splits() {
    let spec = LevyMeasureSpec::truncated(1, 1.5, 1.0, 2.0).unwrap();
    let field = CoefficientField::sinusoidal(1, 2.0, 1.0, 1.0).unwrap();
    let pert = PerturbationKernel::cosine_stable(1, 1.0, 0.5, 1.0, 0.8, 1.0, 1.5).unwrap();
    let cfg = QuadratureConfig::default();
    for x in [-1.0, 0.3, 2.5] {
        let star = apply_l_star(&spec, &field, &pert, &Gaussian, &[x], &cfg).unwrap();
        let l = apply_l(&spec, &field, &Gaussian, &[x], &cfg).unwrap();
        let m = apply_l_mu(&pert, &Gaussian, &[x], &cfg).unwrap();
        let gap = (star.value - l.value - m.value).abs();
        assert!(gap <= 2.0 * cfg.tol * (1.0 + star.value.abs()), "x={x}: gap {gap:e}");
    }
    let none = PerturbationKernel::none(1);
    let star = apply_l_star(&spec, &field, &none, &Lorentzian, &[0.3], &cfg).unwrap().value;
    let l = apply_l(&spec, &field, &Lorentzian, &[0.3], &cfg).unwrap().value;
    assert_eq!(star, l);
}

#[test]
fn coupling_of_a_first_coordinate_function() {
    let spec = LevyMeasureSpec::truncated(1, 1.5, 1.0, 2.0).unwrap();
    let field = CoefficientField::sinusoidal(1, 2.0, 1.0, 1.0).unwrap();
    let cfg = QuadratureConfig::default();
    let h = Separated { first: Gaussian, second: Constant(0.0) };
    for &(x, y) in &[(0.3, -0.4), (1.0, 1.02)] {
        let lhs = apply_coupling(&spec, &field, &h, &[x], &[y], 1.0, &cfg).unwrap().value;
        let rhs = apply_l(&spec, &field, &Gaussian, &[x], &cfg).unwrap().value;
        assert!((lhs - rhs).abs() <= 1e-6 * (1.0 + rhs.abs()), "({x}, {y}): {lhs} vs {rhs}");
    }
    let flat = Separated { first: Constant(1.0), second: Constant(2.0) };
    assert_eq!(apply_coupling(&spec, &field, &flat, &[0.0], &[0.5], 1.0, &cfg).unwrap().value, 0.0);
}

#[test]
fn perturbation_coupling_reproduces_marginals() {
    let pert = PerturbationKernel::cosine_stable(1, 1.0, 0.8, 1.0, 0.7, 1.0, 1.5).unwrap();
    let cfg = QuadratureConfig::default();
    let h = Separated { first: Gaussian, second: Lorentzian };
    for &(x, y) in &[(0.3, -0.4), (2.0, 2.1)] {
        let lhs = apply_coupling_mu(&pert, &h, &[x], &[y], &cfg).unwrap().value;
        let lf = apply_l_mu(&pert, &Gaussian, &[x], &cfg).unwrap().value;
        let lg = apply_l_mu(&pert, &Lorentzian, &[y], &cfg).unwrap().value;
        let gap = (lhs - lf - lg).abs();
        assert!(gap <= 1e-6 * (1.0 + lf.abs() + lg.abs()), "({x}, {y}): gap {gap:e}");
    }
}

#[test]
fn shipped_families_pass_the_shape_check() {
    for (family, theta) in [
        (ModulusFamily::LipLog, 0.5),
        (ModulusFamily::LogWeighted, 1.0),
        (ModulusFamily::Power, 0.5),
        (ModulusFamily::Power, 0.3),
    ] {
        let m = ModulusFunction::new(family, theta, None).unwrap();
        let rep = shape_check(&m, 200);
        assert!(rep.pass, "{family:?} θ={theta}: {rep:?}");
        assert!(rep.doubling_margin >= 0.0);
    }
    let convex = ModulusFunction::new_unchecked(ModulusFamily::Power, 1.5, 0.1);
    assert!(!shape_check(&convex, 50).pass);
}
