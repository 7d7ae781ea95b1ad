use std::f64::consts::PI;

use normsol::grid::{ball_volume, lp_power, sphere_area, RadialFunction};
use normsol::{critical_exponent, gn_ratio, grad_norm_sq, h1_precondition, lp_norm, make_grid, Error, GridSpec};
use proptest::prelude::*;

fn gaussian_moments(n: usize, a: f64) -> (f64, f64) {
    // ∫e^{-2ar²}dx and ∫|∇e^{-ar²}|²dx over ℝᴺ
    let nn = n as f64;
    let mass = (PI / (2.0 * a)).powf(nn / 2.0);
    let grad = 4.0 * a * a * (nn / (4.0 * a)) * (PI / (2.0 * a)).powf(nn / 2.0);
    (mass, grad)
}

#[test]
fn gaussian_mass_and_gradient_match_closed_forms() {
    for n in [2, 3] {
        for grading in [1.0, 2.0] {
            let g = make_grid(n, 12.0, 2048, grading).unwrap();
            for a in [0.5, 1.0, 2.0] {
                let u = RadialFunction::from_fn(&g, |r| (-a * r * r).exp());
                let (mass, grad) = gaussian_moments(n, a);
                // graded grids carry P1 elements, second order only
                let tol = if grading == 1.0 { 1e-7 } else { 1e-4 };
                assert!((u.mass() - mass).abs() / mass < tol, "N={n} a={a} grading={grading}: {} vs {mass}", u.mass());
                assert!((grad_norm_sq(&u) - grad).abs() / grad < tol, "N={n} a={a}: {} vs {grad}", grad_norm_sq(&u));
            }
        }
    }
}

#[test]
fn lp_norms_of_gaussians() {
    let g = make_grid(3, 12.0, 2048, 1.0).unwrap();
    let u = RadialFunction::from_fn(&g, |r| (-r * r).exp());
    for p in [3.0, 4.0, 5.5] {
        let exact = (PI / p).powf(1.5);
        assert!((lp_power(&u, p) - exact).abs() / exact < 1e-8, "p={p}");
        assert!((lp_norm(&u, p).unwrap() - exact.powf(1.0 / p)).abs() < 1e-8);
    }
    assert!(lp_norm(&u, 0.5).is_err());
}

#[test]
fn sphere_and_ball_constants() {
    assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-14);
    assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-14);
    assert!((ball_volume(3, 2.0) - 32.0 * PI / 3.0).abs() < 1e-12);
    assert_eq!(critical_exponent(3), 6.0);
    assert!(critical_exponent(2).is_infinite());
}

#[test]
fn bad_grids_are_rejected() {
    assert!(matches!(make_grid(4, 10.0, 512, 1.0), Err(Error::InvalidGrid(_))));
    assert!(make_grid(3, -1.0, 512, 1.0).is_err());
    assert!(make_grid(3, 10.0, 16, 1.0).is_err());
    assert!(make_grid(3, 10.0, 512, 0.5).is_err());
}

#[test]
fn grid_spec_round_trips() {
    let g = make_grid(2, 15.0, 1000, 1.5).unwrap();
    let spec = GridSpec::of(&g);
    let back = spec.build().unwrap();
    assert_eq!(back.nodes(), g.nodes());
    let u = RadialFunction::from_fn(&g, |r| 1.0 / (1.0 + r * r));
    let again = RadialFunction::from_csv(&g, &u.to_csv()).unwrap();
    assert_eq!(again.values(), u.values());
}

#[test]
fn h1_preconditioner_inverts_the_helmholtz_operator() {
    // −Δw + w = f for w = e^{-r²} in ℝ³ gives f = (7 − 4r²)e^{-r²}
    let g = make_grid(3, 12.0, 2048, 1.0).unwrap();
    let f = RadialFunction::from_fn(&g, |r| (7.0 - 4.0 * r * r) * (-r * r).exp());
    let w = h1_precondition(&f, 1.0).unwrap();
    let exact = RadialFunction::from_fn(&g, |r| (-r * r).exp());
    let err = w.axpy(-1.0, &exact).max_abs();
    assert!(err < 1e-6, "max error {err}");
    assert!(h1_precondition(&f, 0.0).is_err());
}

#[test]
fn gn_ratio_is_invariant_under_scaling_and_dilation() {
    // no resampling: the dilated profile is evaluated in closed form
    for (n, p) in [(2usize, 5.0), (3, 4.0)] {
        let g = make_grid(n, 20.0, 4096, 1.0).unwrap();
        let nn = n as f64;
        let prof = |t: f64, c: f64| {
            RadialFunction::from_fn(&g, |r| c * t.powf(nn / 2.0) * (-(t * r).powi(2) / 3.0).exp() * (1.0 + 0.5 * (t * r).sin()))
        };
        let base = gn_ratio(&prof(1.0, 1.0), p).unwrap();
        for (t, c) in [(0.5, 1.0), (0.7, 3.0), (1.3, 0.2), (2.0, 1.0)] {
            let q = gn_ratio(&prof(t, c), p).unwrap();
            assert!((q - base).abs() / base < 1e-5, "N={n} t={t} c={c}: {q} vs {base}");
            let resampled = gn_ratio(&prof(1.0, c).dilated(t), p).unwrap();
            assert!((resampled - base).abs() / base < 1e-5, "N={n} t={t}: resampled {resampled} vs {base}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn dilation_preserves_mass_and_scales_the_gradient(t in 0.6f64..1.6, a in 0.3f64..2.0) {
        let g = make_grid(3, 20.0, 2048, 1.0).unwrap();
        let u = RadialFunction::from_fn(&g, |r| (-a * r * r).exp());
        let v = u.dilated(t);
        prop_assert!((v.mass() - u.mass()).abs() / u.mass() < 1e-6);
        let ratio = grad_norm_sq(&v) / grad_norm_sq(&u);
        prop_assert!((ratio - t * t).abs() / (t * t) < 1e-4, "ratio {} vs t² {}", ratio, t * t);
    }

    #[test]
    fn quadrature_is_linear(c in -3.0f64..3.0, a in 0.3f64..2.0) {
        let g = make_grid(2, 15.0, 1024, 1.0).unwrap();
        let u = RadialFunction::from_fn(&g, |r| (-a * r * r).exp());
        let v = RadialFunction::from_fn(&g, |r| 1.0 / (1.0 + r * r).powi(3));
        let lhs = u.axpy(c, &v).l2_dot(&v);
        let rhs = u.l2_dot(&v) + c * v.mass();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (lhs.abs() + rhs.abs() + 1.0));
    }
}
