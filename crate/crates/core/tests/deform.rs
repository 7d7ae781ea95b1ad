use normsol::deform::{dj_norm, phi_cutoff, psi_cutoff, segment_distance};
use normsol::scalar::dual_norm_di;
use normsol::sphere::random_profile;
use normsol::{
    flow_integrate, ground_state_omega, make_grid, pohozaev_p, psp_monitor, retract, AugmentedPoint, FlowConfig,
    FlowOutcome, Functional, PowerNonlinearity, ScalarProblem, SphereConstraint, Status, SystemParams, SystemProblem,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn scalar_problem(m: f64) -> ScalarProblem {
    ScalarProblem { spec: PowerNonlinearity::new(3, &[(1.0, 4.0)]).unwrap(), constraint: SphereConstraint::new(m).unwrap() }
}

fn starts(problem: &dyn Functional, count: usize, seed: u64) -> Vec<AugmentedPoint> {
    let g = make_grid(3, 20.0, 2048, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let comps = problem.masses().iter().map(|m| retract(&random_profile(&g, &mut rng), *m)).collect();
            AugmentedPoint::lift(comps)
        })
        .collect()
}

fn check_monotone(problem: &dyn Functional, seed: u64) {
    for (k, start) in starts(problem, 10, seed).iter().enumerate() {
        let (j0, _) = problem.augmented(start.theta, &start.components);
        let config = FlowConfig::for_level(j0);
        let trace = flow_integrate(problem, start, &config, &[], 25).unwrap();
        assert!(trace.records.len() > 1, "start {k} did not move");
        for w in trace.records.windows(2) {
            assert!(w[1].j <= w[0].j, "start {k}: J rose from {} to {}", w[0].j, w[1].j);
        }
        let masses = problem.masses();
        for (c, m) in trace.end.components.iter().zip(&masses) {
            assert!((c.mass() - m).abs() <= 1e-10 * m);
        }
    }
}

#[test]
fn flows_decrease_the_energy() {
    check_monotone(&scalar_problem(10.0), 1);
    check_monotone(&SystemProblem { params: SystemParams::new(1.0, 1.0, -0.5, 10.0, 10.0).unwrap() }, 2);
}

#[test]
fn starts_below_the_window_do_not_move() {
    let problems: Vec<Box<dyn Functional>> = vec![
        Box::new(scalar_problem(10.0)),
        Box::new(SystemProblem { params: SystemParams::new(1.0, 2.0, -0.3, 8.0, 12.0).unwrap() }),
    ];
    for problem in &problems {
        for start in starts(problem.as_ref(), 10, 5) {
            let (j0, _) = problem.augmented(start.theta, &start.components);
            let mut config = FlowConfig::for_level(j0 + 10.0);
            config.eps_bar = 5.0;
            let trace = flow_integrate(problem.as_ref(), &start, &config, &[], 25).unwrap();
            assert_eq!(trace.outcome, FlowOutcome::Frozen);
            assert_eq!(trace.records.len(), 1);
            assert_eq!(trace.end.theta, start.theta);
            for (a, b) in trace.end.components.iter().zip(&start.components) {
                assert_eq!(a.values(), b.values());
            }
        }
    }
}

#[test]
fn odd_nonlinearities_give_odd_flows() {
    let problem = scalar_problem(10.0);
    assert!(problem.even());
    for start in starts(&problem, 10, 9) {
        let (j0, _) = problem.augmented(0.0, &start.components);
        let config = FlowConfig::for_level(j0);
        let a = flow_integrate(&problem, &start, &config, &[], 15).unwrap();
        let b = flow_integrate(&problem, &start.neg(), &config, &[], 15).unwrap();
        assert_eq!(a.records.len(), b.records.len());
        assert!((a.end.theta - b.end.theta).abs() <= 1e-8);
        let diff = a.end.components[0].axpy(1.0, &b.end.components[0]).max_abs();
        assert!(diff <= 1e-8 * a.end.components[0].max_abs(), "η(−u) + η(u) = {diff}");
    }
}

#[test]
fn critical_set_excision_freezes_nearby_points() {
    let problem = scalar_problem(10.0);
    let start = starts(&problem, 1, 4).remove(0);
    let (j0, _) = problem.augmented(0.0, &start.components);
    let config = FlowConfig::for_level(j0);
    assert_eq!(phi_cutoff(&start, &config, &[start.clone()], false), 0.0);
    // −u counts as critical too when the functional is even
    assert_eq!(phi_cutoff(&start, &config, &[start.neg()], true), 0.0);
    assert!(segment_distance(&start, &start.neg()) > config.rho);
    assert_eq!(phi_cutoff(&start, &config, &[start.neg()], false), 1.0);
    let trace = flow_integrate(&problem, &start, &config, &[start.clone()], 10).unwrap();
    assert_eq!(trace.outcome, FlowOutcome::Frozen);
    assert_eq!(psi_cutoff(j0, &config), 1.0);
    assert_eq!(psi_cutoff(j0 + 2.0 * config.eps_bar, &config), 0.0);
}

#[test]
fn augmented_derivative_norm_matches_the_unlifted_one() {
    let g = make_grid(3, 20.0, 4096, 1.0).unwrap();
    let gs = ground_state_omega(&g).unwrap();
    let problem = scalar_problem(gs.mass);
    let u = retract(&gs.omega.dilated(1.2), gs.mass);
    let at = AugmentedPoint::from_scalar(u.clone());
    let lhs = dj_norm(&problem, &at).unwrap();
    let p = pohozaev_p(&u, &problem.spec);
    let d = dual_norm_di(&u, &problem.spec, &problem.constraint).unwrap();
    assert!((lhs - (p * p + d * d).sqrt()).abs() <= 1e-12 * lhs);

    // (PSP) holds at the ground state and fails at its dilate
    let at_gs = AugmentedPoint::from_scalar(gs.omega.clone());
    let config = FlowConfig::for_level(0.5 * gs.mass);
    let trace = flow_integrate(&problem, &at_gs, &config, &[], 5).unwrap();
    assert_eq!(psp_monitor(&trace, &config).unwrap().status, Status::Converged);
    let mut far = FlowConfig::for_level(problem.augmented(0.0, &at.components).0);
    far.tol_grad = 1e-9;
    let trace = flow_integrate(&problem, &at, &far, &[], 1).unwrap();
    assert_ne!(psp_monitor(&trace, &far).unwrap().status, Status::Converged);
}

#[test]
fn bad_flow_settings_are_rejected() {
    let problem = scalar_problem(1.0);
    let start = starts(&problem, 1, 0).remove(0);
    let mut config = FlowConfig::for_level(1.0);
    config.rho = -1.0;
    assert!(flow_integrate(&problem, &start, &config, &[], 3).is_err());
    assert!(flow_integrate(&problem, &start, &FlowConfig::for_level(1.0), &[], 0).is_err());
}
