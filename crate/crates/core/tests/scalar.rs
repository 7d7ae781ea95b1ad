use normsol::grid::RadialFunction;
use normsol::scalar::{dual_norm_di, riemannian_gradient, PowerTerm};
use normsol::sphere::random_tangent;
use normsol::{
    b0_estimate, energy_i, fiber_maximize, grad_norm_sq, ground_state_omega, make_grid, pohozaev_p, retract,
    validate_growth, CriticalPointReport, Error, PowerNonlinearity, SphereConstraint, Status,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn condition(e: Error) -> (String, String) {
    match e {
        Error::Condition { field, condition } => (field, condition),
        other => panic!("expected a condition error, got {other}"),
    }
}

#[test]
fn growth_bounds_accept_the_cubic_and_reject_the_rest() {
    assert!(PowerNonlinearity::new(3, &[(1.0, 4.0)]).is_ok());
    assert!(PowerNonlinearity::new(2, &[(1.0, 4.5), (0.3, 9.0)]).is_ok());

    let (field, msg) = condition(PowerNonlinearity::new(3, &[(1.0, 3.0)]).unwrap_err());
    assert_eq!(field, "terms[0].p");
    assert!(msg.contains("2+4/N"), "{msg}");

    let (_, msg) = condition(PowerNonlinearity::new(3, &[(1.0, 4.0), (1.0, 6.0)]).unwrap_err());
    assert!(msg.contains("2* = 6"), "{msg}");
    // mass-critical exponent is excluded
    assert!(PowerNonlinearity::new(2, &[(1.0, 4.0)]).is_err());
    let (field, _) = condition(PowerNonlinearity::new(3, &[(-1.0, 4.0)]).unwrap_err());
    assert_eq!(field, "terms[0].a");
    let spec = PowerNonlinearity { dimension: 4, terms: vec![PowerTerm { a: 1.0, p: 3.0 }], positive_part: false };
    assert!(validate_growth(&spec).is_err());
    assert!(SphereConstraint::new(0.0).is_err());
}

#[test]
fn nonlinearity_pieces_agree_with_their_definitions() {
    let spec = PowerNonlinearity::new(3, &[(1.0, 4.0), (0.5, 5.0)]).unwrap();
    for x in [-1.7f64, -0.2, 0.3, 2.1] {
        let g = x * x * x + 0.5 * x.abs().powi(3) * x;
        assert!((spec.g(x) - g).abs() < 1e-13);
        assert!((spec.g(-x) + spec.g(x)).abs() < 1e-13);
        let big = x.powi(4) / 4.0 + 0.1 * x.abs().powi(5);
        assert!((spec.big_g(x) - big).abs() < 1e-13);
        // G' = g by central difference
        let h = 1e-5;
        assert!(((spec.big_g(x + h) - spec.big_g(x - h)) / (2.0 * h) - g).abs() < 1e-8);
        assert!(((spec.g(x + h) - spec.g(x - h)) / (2.0 * h) - spec.g_prime(x)).abs() < 1e-7);
    }
    let pos = PowerNonlinearity::cubic_positive(2.0);
    assert_eq!(pos.g(-1.0), 0.0);
    assert!(!pos.odd());
}

#[test]
fn fiber_maximum_of_a_pure_power_is_explicit() {
    // I(u_t) = ½t²A − (a/p)t^γB with γ = (p−2)N/2: t₀^{γ−2} = pA/(aγB), I = t₀²A(½ − 1/γ)
    let g = make_grid(3, 20.0, 2048, 1.0).unwrap();
    let (a, p) = (1.3, 4.6);
    let spec = PowerNonlinearity::new(3, &[(a, p)]).unwrap();
    let u = RadialFunction::from_fn(&g, |r| 2.0 * (-0.4 * r * r).exp());
    let big_a = grad_norm_sq(&u);
    let big_b = normsol::grid::lp_power(&u, p);
    let gamma = (p - 2.0) * 1.5;
    let t0 = (p * big_a / (a * gamma * big_b)).powf(1.0 / (gamma - 2.0));
    let value = t0 * t0 * big_a * (0.5 - 1.0 / gamma);
    let (t, e) = fiber_maximize(&u, &spec).unwrap();
    assert!((t - t0).abs() / t0 < 1e-12, "{t} vs {t0}");
    assert!((e - value).abs() / value < 1e-12, "{e} vs {value}");
}

#[test]
fn pohozaev_is_the_dilation_derivative_of_the_energy() {
    for n in [2usize, 3] {
        let g = make_grid(n, 20.0, 4096, 1.0).unwrap();
        let nn = n as f64;
        let spec = if n == 3 {
            PowerNonlinearity::new(3, &[(1.0, 4.0), (0.5, 4.5)]).unwrap()
        } else {
            PowerNonlinearity::new(2, &[(1.0, 5.0), (0.5, 5.5)]).unwrap()
        };
        // u_t evaluated in closed form so no interpolation enters
        let u_t = |t: f64| RadialFunction::from_fn(&g, |r| 2.0 * t.powf(nn / 2.0) * (-(t * r).powi(2) / 3.0).exp() * (1.0 + 0.5 * (t * r).sin()));
        let dt = 1e-4;
        let fd = (energy_i(&u_t(1.0 + dt), &spec) - energy_i(&u_t(1.0 - dt), &spec)) / (2.0 * dt);
        let p = pohozaev_p(&u_t(1.0), &spec);
        assert!((fd - p).abs() / p.abs() < 1e-6, "N={n}: P = {p}, d/dt I = {fd}");
    }
}

#[test]
fn riemannian_gradient_matches_finite_differences() {
    let g = make_grid(3, 20.0, 4096, 1.0).unwrap();
    let spec = PowerNonlinearity::new(3, &[(1.0, 4.0), (0.5, 4.5)]).unwrap();
    let u = RadialFunction::from_fn(&g, |r| 2.0 * (-(r * r) / 3.0).exp() * (1.0 + 0.5 * r.sin()));
    let m = u.mass();
    let c = SphereConstraint::new(m).unwrap();
    let (grad, _) = riemannian_gradient(&u, &spec, &c).unwrap();
    // the gradient is tangent
    assert!(grad.l2_dot(&u).abs() < 1e-10 * grad.mass().sqrt() * m.sqrt());
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let v = random_tangent(&u, &mut rng);
        let pairing = g.dirichlet_pair(grad.values(), v.values()) + grad.l2_dot(&v);
        let s = 1e-4;
        let fd = (energy_i(&retract(&u.axpy(s, &v), m), &spec) - energy_i(&retract(&u.axpy(-s, &v), m), &spec)) / (2.0 * s);
        assert!((fd - pairing).abs() <= 1e-5 * pairing.abs().max(1e-3), "pairing {pairing} vs {fd}");
    }
    assert!(riemannian_gradient(&u.scaled(1.1), &spec, &c).is_err());
}

#[test]
fn ground_state_is_a_critical_point_at_its_own_mass() {
    let g = make_grid(3, 20.0, 4096, 1.0).unwrap();
    let gs = ground_state_omega(&g).unwrap();
    // ω(0) of the cubic ground state in ℝ³, from the literature
    assert!((gs.center_value - 4.33738768).abs() < 1e-5, "{}", gs.center_value);
    let spec = PowerNonlinearity::new(3, &[(1.0, 4.0)]).unwrap();
    let c = SphereConstraint::new(gs.mass).unwrap();
    let r = CriticalPointReport::evaluate(gs.omega.clone(), &spec, &c, Status::Converged).unwrap();
    assert!((r.lambda - 1.0).abs() < 1e-6, "λ = {}", r.lambda);
    assert!(r.relative_pohozaev() < 1e-6);
    assert!((r.energy - 0.5 * gs.mass).abs() / gs.mass < 1e-6);
    assert!((r.decay_rate - 1.0).abs() < 0.05, "decay {}", r.decay_rate);
    assert!(dual_norm_di(&gs.omega, &spec, &c).unwrap() < 1e-6);
}

#[test]
fn b0_of_the_cubic_is_half_the_ground_state_mass() {
    let g = make_grid(3, 20.0, 4096, 1.0).unwrap();
    let gs = ground_state_omega(&g).unwrap();
    let spec = PowerNonlinearity::new(3, &[(1.0, 4.0)]).unwrap();
    let c = SphereConstraint::new(gs.mass).unwrap();
    let b0 = b0_estimate(&g, &c, &spec, 2, 3).unwrap();
    let target = 0.5 * gs.mass;
    assert!((b0.value - target).abs() / target < 1e-3, "{} vs {target}", b0.value);
    assert_eq!(b0.per_seed.len(), 2);
}
