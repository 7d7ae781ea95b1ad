//! Deformation flow on the augmented space M = ℝ × S, where the extra
//! coordinate θ records a pending dilation Φ_θ.
//!
//! The metric at (θ,u) is κ² + e^{2θ}‖∇v‖² + ‖v‖². In closed form
//! ∂θJ(θ,u) = P(Φ_θu), and the u-gradient of J in this metric has the same
//! dual norm as dI(Φ_θu) in the H¹ metric. The flow therefore never needs
//! to resample u until the final projection π.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::RadialFunction;
use crate::scalar::{augmented_gradient, augmented_j, PowerNonlinearity, SphereConstraint, Status};
use crate::sphere::retract;
use crate::system::{augmented_jstar, augmented_system_gradient, SystemParams, SystemState};

/// A functional on a product of mass spheres that admits the augmented calculus.
pub trait Functional: Sync {
    fn masses(&self) -> Vec<f64>;
    /// (J(θ,u), ∂θJ(θ,u)).
    fn augmented(&self, theta: f64, u: &[RadialFunction]) -> (f64, f64);
    /// Tangent gradient of J(θ,·) in the metric at θ, and its dual norm.
    fn tangent_gradient(&self, theta: f64, u: &[RadialFunction]) -> Result<(Vec<RadialFunction>, f64)>;
    /// Whether J(θ,−u) = J(θ,u).
    fn even(&self) -> bool;
}

#[derive(Debug, Clone)]
pub struct ScalarProblem {
    pub spec: PowerNonlinearity,
    pub constraint: SphereConstraint,
}

impl Functional for ScalarProblem {
    fn masses(&self) -> Vec<f64> {
        vec![self.constraint.m]
    }
    fn augmented(&self, theta: f64, u: &[RadialFunction]) -> (f64, f64) {
        augmented_j(theta, &u[0], &self.spec)
    }
    fn tangent_gradient(&self, theta: f64, u: &[RadialFunction]) -> Result<(Vec<RadialFunction>, f64)> {
        let (g, _, n) = augmented_gradient(&u[0], &self.spec, self.constraint.m, theta)?;
        Ok((vec![g], n))
    }
    fn even(&self) -> bool {
        self.spec.odd()
    }
}

#[derive(Debug, Clone)]
pub struct SystemProblem {
    pub params: SystemParams,
}

impl SystemProblem {
    fn state(&self, u: &[RadialFunction]) -> SystemState {
        SystemState { u1: u[0].clone(), u2: u[1].clone(), params: self.params }
    }
}

impl Functional for SystemProblem {
    fn masses(&self) -> Vec<f64> {
        vec![self.params.m1, self.params.m2]
    }
    fn augmented(&self, theta: f64, u: &[RadialFunction]) -> (f64, f64) {
        augmented_jstar(theta, &self.state(u))
    }
    fn tangent_gradient(&self, theta: f64, u: &[RadialFunction]) -> Result<(Vec<RadialFunction>, f64)> {
        let g = augmented_system_gradient(&self.state(u), theta)?;
        let [a, b] = g.grads;
        Ok((vec![a, b], g.dual_norm))
    }
    fn even(&self) -> bool {
        false
    }
}

/// A point (θ, u) of M; `components` has one entry for the scalar problem and two for the system.
#[derive(Debug, Clone)]
pub struct AugmentedPoint {
    pub theta: f64,
    pub components: Vec<RadialFunction>,
}

impl AugmentedPoint {
    /// ι(u) = (0, u).
    pub fn lift(components: Vec<RadialFunction>) -> Self {
        Self { theta: 0.0, components }
    }
    pub fn from_scalar(u: RadialFunction) -> Self {
        Self::lift(vec![u])
    }
    pub fn from_system(s: &SystemState) -> Self {
        Self::lift(vec![s.u1.clone(), s.u2.clone()])
    }
    pub fn neg(&self) -> Self {
        Self { theta: self.theta, components: self.components.iter().map(|c| c.neg()).collect() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub eps_bar: f64,
    pub rho: f64,
    pub target_level: f64,
    pub max_step: f64,
    pub tol_grad: f64,
    /// Tolerance on |P| / ‖∇u‖².
    pub tol_pohozaev: f64,
    pub tol_energy: f64,
}

impl FlowConfig {
    pub fn for_level(b: f64) -> Self {
        Self {
            eps_bar: 0.1 * b.abs(),
            rho: 0.1,
            target_level: b,
            max_step: 0.5,
            tol_grad: 1e-6,
            tol_pohozaev: 1e-6,
            tol_energy: 1e-6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.eps_bar, self.rho, self.max_step, self.tol_grad, self.tol_pohozaev, self.tol_energy];
        if all.iter().all(|v| *v > 0.0 && v.is_finite()) && self.target_level.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("flow configuration has a non-positive entry: {self:?}")))
        }
    }
}

/// ‖(κ,v)‖ at (θ,u): (κ² + e^{2θ}Σ‖∇vᵢ‖² + Σ‖vᵢ‖²)^{1/2}.
pub fn metric_norm(kappa: f64, v: &[RadialFunction], at: &AugmentedPoint) -> f64 {
    let e2 = (2.0 * at.theta).exp();
    let s: f64 = v.iter().map(|c| e2 * crate::grid::grad_norm_sq(c) + c.mass()).sum();
    (kappa * kappa + s).sqrt()
}

/// ‖DJ(θ,u)‖ = (P(Φ_θu)² + ‖dI(Φ_θu)‖²)^{1/2}, evaluated without resampling.
pub fn dj_norm<F: Functional + ?Sized>(problem: &F, at: &AugmentedPoint) -> Result<f64> {
    let (_, p) = problem.augmented(at.theta, &at.components);
    let (_, n) = problem.tangent_gradient(at.theta, &at.components)?;
    Ok((p * p + n * n).sqrt())
}

/// The metric gradient W = (∂θJ, ∇_u J) of J at (θ,u).
pub fn pseudo_gradient<F: Functional + ?Sized>(
    problem: &F,
    at: &AugmentedPoint,
    tol_grad: f64,
) -> Result<(f64, Vec<RadialFunction>)> {
    let (_, kappa) = problem.augmented(at.theta, &at.components);
    let (v, n) = problem.tangent_gradient(at.theta, &at.components)?;
    if (kappa * kappa + n * n).sqrt() < tol_grad {
        return Err(Error::InvalidArgument("pseudo-gradient requested at a critical point".into()));
    }
    Ok((kappa, v))
}

/// Length of the straight segment between two points in the metric frozen at its midpoint.
pub fn segment_distance(a: &AugmentedPoint, b: &AugmentedPoint) -> f64 {
    let mid = 0.5 * (a.theta + b.theta);
    let e2 = (2.0 * mid).exp();
    let mut s = (a.theta - b.theta).powi(2);
    for (x, y) in a.components.iter().zip(&b.components) {
        let d = x.axpy(-1.0, y);
        s += e2 * crate::grid::grad_norm_sq(&d) + d.mass();
    }
    s.sqrt()
}

fn ramp(x: f64, zero_at: f64, one_at: f64) -> f64 {
    ((x - zero_at) / (one_at - zero_at)).clamp(0.0, 1.0)
}

/// ψ(J): 1 on [b − ε̄/2, b + ε̄/2], 0 outside [b − ε̄, b + ε̄], linear between.
pub fn psi_cutoff(j_value: f64, config: &FlowConfig) -> f64 {
    let d = (j_value - config.target_level).abs();
    1.0 - ramp(d, 0.5 * config.eps_bar, config.eps_bar)
}

/// φ: 0 within ρ/3 of the critical set, 1 beyond 2ρ/3, linear between.
pub fn phi_cutoff(at: &AugmentedPoint, config: &FlowConfig, critical_set: &[AugmentedPoint], even: bool) -> f64 {
    let mut d = f64::INFINITY;
    for k in critical_set {
        d = d.min(segment_distance(at, k));
        if even {
            d = d.min(segment_distance(at, &k.neg()));
        }
    }
    ramp(d, config.rho / 3.0, 2.0 * config.rho / 3.0)
}

/// φ·ψ at a point.
pub fn cutoffs(at: &AugmentedPoint, j_value: f64, config: &FlowConfig, critical_set: &[AugmentedPoint], even: bool) -> f64 {
    let psi = psi_cutoff(j_value, config);
    if psi == 0.0 {
        return 0.0;
    }
    psi * phi_cutoff(at, config, critical_set, even)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowRecord {
    pub t: f64,
    pub j: f64,
    pub p: f64,
    pub grad_norm: f64,
    pub theta: f64,
    pub step: f64,
    pub cutoff: f64,
    /// ‖∇(Φ_θu)‖², the scale for the Pohozaev tolerance.
    pub kinetic: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowOutcome {
    /// φ·ψ vanished, so the point does not move.
    Frozen,
    /// ‖DJ‖ fell below tol_grad.
    Critical,
    /// The step budget ran out; the trace is incomplete.
    Budget,
    /// The line search underflowed.
    Stalled,
}

#[derive(Debug, Clone)]
pub struct FlowTrace {
    pub records: Vec<FlowRecord>,
    pub end: AugmentedPoint,
    pub outcome: FlowOutcome,
}

impl FlowTrace {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,J,P,grad_norm,theta,step,cutoff\n");
        for r in &self.records {
            s.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                r.t, r.j, r.p, r.grad_norm, r.theta, r.step, r.cutoff
            ));
        }
        s
    }

    pub fn is_complete(&self) -> bool {
        self.outcome != FlowOutcome::Budget
    }
}

fn kinetic_at(at: &AugmentedPoint) -> f64 {
    let e2 = (2.0 * at.theta).exp();
    at.components.iter().map(|c| e2 * crate::grid::grad_norm_sq(c)).sum()
}

/// Integrates dη/dt = −φψ W/‖W‖ by explicit Euler steps with Armijo
/// backtracking (factor ½, slope ¼), retracting u onto its spheres after
/// every step. At most `budget` steps are taken.
pub fn flow_integrate<F: Functional + ?Sized>(
    problem: &F,
    start: &AugmentedPoint,
    config: &FlowConfig,
    critical_set: &[AugmentedPoint],
    budget: usize,
) -> Result<FlowTrace> {
    config.validate()?;
    if budget == 0 {
        return Err(Error::InvalidArgument("flow budget must be at least 1".into()));
    }
    let masses = problem.masses();
    let even = problem.even();
    let mut at = start.clone();
    let (mut j, mut p) = problem.augmented(at.theta, &at.components);
    let (mut v, mut gn) = problem.tangent_gradient(at.theta, &at.components)?;
    let mut cut = cutoffs(&at, j, config, critical_set, even);
    let mut records = vec![FlowRecord {
        t: 0.0,
        j,
        p,
        grad_norm: gn,
        theta: at.theta,
        step: 0.0,
        cutoff: cut,
        kinetic: kinetic_at(&at),
    }];
    let mut t = 0.0;
    let mut dt = config.max_step;
    let mut steps = 0;
    let outcome = loop {
        if cut == 0.0 {
            break FlowOutcome::Frozen;
        }
        let wn = (p * p + gn * gn).sqrt();
        if wn < config.tol_grad {
            break FlowOutcome::Critical;
        }
        if steps == budget {
            break FlowOutcome::Budget;
        }
        let cap = config.max_step * (wn / config.tol_grad).min(1.0);
        dt = (2.0 * dt).min(cap);
        let mut accepted = None;
        while dt > 1e-14 * config.max_step {
            let h = cut * dt / wn;
            let theta = at.theta - h * p;
            let comps: Vec<RadialFunction> =
                at.components.iter().zip(&v).zip(&masses).map(|((u, g), m)| retract(&u.axpy(-h, g), *m)).collect();
            let (jn, pn) = problem.augmented(theta, &comps);
            if jn <= j - 0.25 * cut * dt * wn {
                accepted = Some((AugmentedPoint { theta, components: comps }, jn, pn));
                break;
            }
            dt *= 0.5;
        }
        let Some((next, jn, pn)) = accepted else {
            break FlowOutcome::Stalled;
        };
        steps += 1;
        t += dt;
        at = next;
        j = jn;
        p = pn;
        let (nv, ngn) = problem.tangent_gradient(at.theta, &at.components)?;
        v = nv;
        gn = ngn;
        cut = cutoffs(&at, j, config, critical_set, even);
        records.push(FlowRecord { t, j, p, grad_norm: gn, theta: at.theta, step: dt, cutoff: cut, kinetic: kinetic_at(&at) });
    };
    Ok(FlowTrace { records, end: at, outcome })
}

/// π(θ,u) = Φ_θu, by resampling.
pub fn project_pi(at: &AugmentedPoint) -> Vec<RadialFunction> {
    let t = at.theta.exp();
    at.components.iter().map(|c| c.dilated(t)).collect()
}

/// π followed by renormalization, so the result lies exactly on the spheres.
pub fn project_retract(at: &AugmentedPoint, masses: &[f64]) -> Vec<RadialFunction> {
    project_pi(at).iter().zip(masses).map(|(c, m)| retract(c, *m)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PspResiduals {
    pub energy_gap: f64,
    pub grad_norm: f64,
    pub pohozaev: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PspStatus {
    pub status: Status,
    pub residuals: PspResiduals,
}

/// (PSP) test at the tail of a trace: |J − b|, ‖dI‖ and |P|/‖∇u‖² all small.
pub fn psp_monitor(trace: &FlowTrace, config: &FlowConfig) -> Result<PspStatus> {
    let last = trace.records.last().ok_or_else(|| Error::InvalidArgument("empty flow trace".into()))?;
    let residuals = PspResiduals {
        energy_gap: (last.j - config.target_level).abs(),
        grad_norm: last.grad_norm,
        pohozaev: last.p.abs() / last.kinetic.max(f64::MIN_POSITIVE),
    };
    let ok = residuals.energy_gap <= config.tol_energy
        && residuals.grad_norm <= config.tol_grad
        && residuals.pohozaev <= config.tol_pohozaev;
    let status = if ok {
        Status::Converged
    } else if trace.outcome == FlowOutcome::Stalled {
        Status::Stalled
    } else {
        Status::Flowing
    };
    Ok(PspStatus { status, residuals })
}
