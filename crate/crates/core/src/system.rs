//! The repulsive cubic system in ℝ³:
//!
//! −Δu₁ + λ₁u₁ = μ₁u₁₊³ + βu₁u₂², −Δu₂ + λ₂u₂ = μ₂u₂₊³ + βu₁²u₂,
//! with ‖uᵢ‖₂² = mᵢ and β < 0.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{grad_norm_sq, RadialFunction, RadialGrid};
use crate::scalar::{decay_rate, Status};
use crate::sphere::{dot, mass_defect, tangent_riesz};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub mu1: f64,
    pub mu2: f64,
    pub beta: f64,
    pub m1: f64,
    pub m2: f64,
}

impl SystemParams {
    pub fn new(mu1: f64, mu2: f64, beta: f64, m1: f64, m2: f64) -> Result<Self> {
        let p = Self { mu1, mu2, beta, m1, m2 };
        p.validate()?;
        Ok(p)
    }

    /// Decoupled or attractive parameters, for tests that exploit β = 0.
    #[doc(hidden)]
    pub fn with_any_coupling(mu1: f64, mu2: f64, beta: f64, m1: f64, m2: f64) -> Self {
        Self { mu1, mu2, beta, m1, m2 }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Condition { field: name.into(), condition: format!("{name} must be > 0 ({what}), got {v}") })
            }
        };
        pos("mu1", self.mu1, "focusing self-interaction")?;
        pos("mu2", self.mu2, "focusing self-interaction")?;
        pos("m1", self.m1, "prescribed mass")?;
        pos("m2", self.m2, "prescribed mass")?;
        if !(self.beta < 0.0 && self.beta.is_finite()) {
            return Err(Error::Condition {
                field: "beta".into(),
                condition: format!("beta must be < 0 (repulsive coupling β<0), got {}", self.beta),
            });
        }
        Ok(())
    }

    pub fn mass(&self, i: usize) -> f64 {
        if i == 0 {
            self.m1
        } else {
            self.m2
        }
    }

    pub fn mu(&self, i: usize) -> f64 {
        if i == 0 {
            self.mu1
        } else {
            self.mu2
        }
    }

    /// G(u₁,u₂) = μ₁/4 u₁₊⁴ + μ₂/4 u₂₊⁴ + β/2 u₁²u₂².
    #[inline]
    pub fn big_g(&self, a: f64, b: f64) -> f64 {
        let (ap, bp) = (a.max(0.0), b.max(0.0));
        0.25 * self.mu1 * (ap * ap) * (ap * ap) + 0.25 * self.mu2 * (bp * bp) * (bp * bp) + 0.5 * self.beta * a * a * b * b
    }

    /// (∂G/∂u₁, ∂G/∂u₂).
    #[inline]
    pub fn force(&self, a: f64, b: f64) -> (f64, f64) {
        let (ap, bp) = (a.max(0.0), b.max(0.0));
        (self.mu1 * ap * ap * ap + self.beta * a * b * b, self.mu2 * bp * bp * bp + self.beta * a * a * b)
    }

    /// Hessian of G: (G₁₁, G₁₂, G₂₂).
    #[inline]
    pub fn force_jacobian(&self, a: f64, b: f64) -> (f64, f64, f64) {
        let (ap, bp) = (a.max(0.0), b.max(0.0));
        (3.0 * self.mu1 * ap * ap + self.beta * b * b, 2.0 * self.beta * a * b, 3.0 * self.mu2 * bp * bp + self.beta * a * a)
    }
}

#[derive(Debug, Clone)]
pub struct SystemState {
    pub u1: RadialFunction,
    pub u2: RadialFunction,
    pub params: SystemParams,
}

impl SystemState {
    pub fn new(u1: RadialFunction, u2: RadialFunction, params: SystemParams) -> Result<Self> {
        if !Arc::ptr_eq(u1.grid(), u2.grid()) && crate::grid::GridSpec::of(u1.grid()) != crate::grid::GridSpec::of(u2.grid()) {
            return Err(Error::InvalidArgument("components live on different grids".into()));
        }
        for (u, m) in [(&u1, params.m1), (&u2, params.m2)] {
            let d = mass_defect(u, m);
            if d > 1e-8 {
                return Err(Error::OffConstraint(d));
            }
        }
        Ok(Self { u1, u2, params })
    }

    /// Builds a state after renormalizing both components onto their spheres.
    pub fn normalized(u1: &RadialFunction, u2: &RadialFunction, params: SystemParams) -> Self {
        Self {
            u1: crate::sphere::retract(u1, params.m1),
            u2: crate::sphere::retract(u2, params.m2),
            params,
        }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        self.u1.grid()
    }

    pub fn component(&self, i: usize) -> &RadialFunction {
        if i == 0 {
            &self.u1
        } else {
            &self.u2
        }
    }

    /// Φ_a(u₁,u₂) with dilation factor t = e^a.
    pub fn dilated(&self, t: f64) -> Self {
        Self { u1: self.u1.dilated(t), u2: self.u2.dilated(t), params: self.params }
    }

    /// ∫G(u₁,u₂).
    pub fn potential(&self) -> f64 {
        let g = self.grid();
        g.weights()
            .iter()
            .zip(self.u1.values().iter().zip(self.u2.values()))
            .map(|(w, (a, b))| w * self.params.big_g(*a, *b))
            .sum()
    }

    pub fn kinetic(&self) -> f64 {
        grad_norm_sq(&self.u1) + grad_norm_sq(&self.u2)
    }
}

pub fn energy_istar(s: &SystemState) -> f64 {
    0.5 * s.kinetic() - s.potential()
}

pub fn pohozaev_pstar(s: &SystemState) -> f64 {
    s.kinetic() - 3.0 * s.potential()
}

/// (J_*(θ,u), ∂θJ_*(θ,u)) in closed form: ½e^{2θ}A − e^{3θ}∫G.
pub fn augmented_jstar(theta: f64, s: &SystemState) -> (f64, f64) {
    let (a, q) = (s.kinetic(), s.potential());
    let (e2, e3) = ((2.0 * theta).exp(), (3.0 * theta).exp());
    (0.5 * e2 * a - e3 * q, e2 * a - 3.0 * e3 * q)
}

/// (Iᵢ(u), Pᵢ(u)) = (½‖∇u‖² − μ/4‖u₊‖₄⁴, ‖∇u‖² − 3μ/4‖u₊‖₄⁴).
pub fn component_ip(u: &RadialFunction, mu: f64) -> (f64, f64) {
    let a = grad_norm_sq(u);
    let q: f64 = u.grid().weights().iter().zip(u.values()).map(|(w, v)| w * v.max(0.0).powi(4)).sum();
    (0.5 * a - 0.25 * mu * q, a - 0.75 * mu * q)
}

/// Weak derivatives of u ↦ J_*(θ,u) for both components.
pub(crate) fn weak_derivatives(s: &SystemState, theta: f64) -> [Vec<f64>; 2] {
    let g = s.grid();
    let (e2, e3) = ((2.0 * theta).exp(), (3.0 * theta).exp());
    let mut k1 = g.apply_stiffness(s.u1.values());
    let mut k2 = g.apply_stiffness(s.u2.values());
    let n = g.len();
    let (a, b, w) = (s.u1.values(), s.u2.values(), g.weights());
    for i in 0..n - 1 {
        let (f1, f2) = s.params.force(a[i], b[i]);
        k1[i] = e2 * k1[i] - e3 * w[i] * f1;
        k2[i] = e2 * k2[i] - e3 * w[i] * f2;
    }
    k1[n - 1] = 0.0;
    k2[n - 1] = 0.0;
    [k1, k2]
}

pub(crate) struct SystemGradient {
    pub grads: [RadialFunction; 2],
    pub lambdas: [f64; 2],
    pub dual_norm: f64,
}

pub(crate) fn augmented_system_gradient(s: &SystemState, theta: f64) -> Result<SystemGradient> {
    let g = s.grid();
    let e = weak_derivatives(s, theta);
    let op = g.metric_operator((2.0 * theta).exp(), 1.0)?;
    let (g1, n1) = tangent_riesz(g, &op, s.u1.values(), &e[0]);
    let (g2, n2) = tangent_riesz(g, &op, s.u2.values(), &e[1]);
    Ok(SystemGradient {
        lambdas: [-dot(&e[0], s.u1.values()) / s.params.m1, -dot(&e[1], s.u2.values()) / s.params.m2],
        grads: [s.u1.with_values(g1), s.u2.with_values(g2)],
        dual_norm: (n1 + n2).sqrt(),
    })
}

/// Componentwise tangent H¹ gradients and L² multipliers.
pub fn system_gradient(s: &SystemState) -> Result<(RadialFunction, RadialFunction, f64, f64)> {
    for i in 0..2 {
        let d = mass_defect(s.component(i), s.params.mass(i));
        if d > 1e-8 {
            return Err(Error::OffConstraint(d));
        }
    }
    let sg = augmented_system_gradient(s, 0.0)?;
    let [g1, g2] = sg.grads;
    Ok((g1, g2, sg.lambdas[0], sg.lambdas[1]))
}

/// Dual norm of dI_* on the tangent space of the product sphere.
pub fn system_dual_norm(s: &SystemState) -> Result<f64> {
    Ok(augmented_system_gradient(s, 0.0)?.dual_norm)
}

#[derive(Debug, Clone)]
pub struct GroundState {
    pub omega: RadialFunction,
    pub mass: f64,
    pub center_value: f64,
    /// (‖∇ω‖²/‖ω‖², ‖ω‖₄⁴/‖ω‖²).
    pub identities: (f64, f64),
}

/// Positive radial solution of −Δω + ω = ω₊³ in ℝ³ by bisection shooting on ω(0).
pub fn ground_state_omega(grid: &Arc<RadialGrid>) -> Result<GroundState> {
    if grid.dimension() != 3 {
        return Err(Error::InvalidArgument(format!("ground state needs N = 3, grid has N = {}", grid.dimension())));
    }
    let nodes = grid.nodes();
    let r_max = grid.r_max();
    let (mut lo, mut hi) = (1.5, 10.0);
    let (c_lo, _) = shoot(nodes, lo);
    let (c_hi, _) = shoot(nodes, hi);
    if c_lo != Shot::Under || c_hi != Shot::Over {
        return Err(Error::Shooting(format!("bracket [{lo}, {hi}] does not enclose the ground state")));
    }
    let mut settled = None;
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        let (c, prof) = shoot(nodes, mid);
        match c {
            Shot::Over => hi = mid,
            Shot::Under => lo = mid,
            Shot::Settled => {
                settled = Some(prof);
                break;
            }
        }
    }
    let profile = match settled {
        Some(p) => p,
        None => {
            let (_, a) = shoot(nodes, lo);
            let (_, b) = shoot(nodes, hi);
            splice_tail(nodes, r_max, &a, &b)
        }
    };
    let omega = RadialFunction::new(grid.clone(), profile)?;
    let mass = omega.mass();
    let quartic = crate::grid::lp_power(&omega, 4.0);
    let ids = (grad_norm_sq(&omega) / mass, quartic / mass);
    if (ids.0 - 3.0).abs() > 1e-3 || (ids.1 - 4.0).abs() > 1e-3 {
        return Err(Error::Resolution(format!(
            "ground-state identity ratios ({:.6}, {:.6}) differ from (3, 4) by more than 1e-3",
            ids.0, ids.1
        )));
    }
    Ok(GroundState { center_value: omega.values()[0], omega, mass, identities: ids })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shot {
    Over,
    Under,
    Settled,
}

fn rhs(r: f64, u: f64, v: f64) -> (f64, f64) {
    let f = u - u.max(0.0).powi(3);
    if r == 0.0 {
        // u'' + (2/r)u' → 3u''(0)
        (v, f / 3.0)
    } else {
        (v, f - 2.0 * v / r)
    }
}

/// Integrates from ω(0) = a with RK4 (four substeps per cell) until the
/// trajectory crosses zero, turns upward, or reaches r_max settled.
fn shoot(nodes: &[f64], a: f64) -> (Shot, Vec<f64>) {
    let mut out = vec![0.0; nodes.len()];
    let (mut u, mut v) = (a, 0.0);
    out[0] = a;
    for i in 0..nodes.len() - 1 {
        let (r0, r1) = (nodes[i], nodes[i + 1]);
        let sub = 4;
        let h = (r1 - r0) / sub as f64;
        for k in 0..sub {
            let r = r0 + k as f64 * h;
            let (k1u, k1v) = rhs(r, u, v);
            let (k2u, k2v) = rhs(r + 0.5 * h, u + 0.5 * h * k1u, v + 0.5 * h * k1v);
            let (k3u, k3v) = rhs(r + 0.5 * h, u + 0.5 * h * k2u, v + 0.5 * h * k2v);
            let (k4u, k4v) = rhs(r + h, u + h * k3u, v + h * k3v);
            u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
            v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        }
        out[i + 1] = u;
        if u < 0.0 {
            return (Shot::Over, out);
        }
        if v > 0.0 && r1 > 0.5 {
            return (Shot::Under, out);
        }
    }
    if u.abs() <= 1e-8 {
        (Shot::Settled, out)
    } else if u < 0.0 {
        (Shot::Over, out)
    } else {
        (Shot::Under, out)
    }
}

/// Keeps the bracketing trajectories while they agree to 1e-9 relative and
/// continues with the exact linear tail u ∝ sinh(r_max − r)/r that carries the
/// Dirichlet condition.
fn splice_tail(nodes: &[f64], r_max: f64, a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut cut = 1;
    for i in 1..n - 1 {
        let (x, y) = (a[i], b[i]);
        let m = 0.5 * (x + y);
        if m <= 0.0 || (x - y).abs() > 1e-9 * m {
            break;
        }
        cut = i;
    }
    let mut out: Vec<f64> = (0..n).map(|i| 0.5 * (a[i] + b[i])).collect();
    let rc = nodes[cut];
    let uc = out[cut];
    let denom = (r_max - rc).sinh() / rc;
    for i in cut + 1..n {
        let r = nodes[i];
        out[i] = uc * ((r_max - r).sinh() / r) / denom;
    }
    out[n - 1] = 0.0;
    out
}

/// λᵢ = (‖ω‖²/(μᵢmᵢ))² and bᵢ = ½‖ω‖⁴/(μᵢ²mᵢ).
pub fn scalar_b_i(mi: f64, mui: f64, gs: &GroundState) -> (f64, f64) {
    let w = gs.mass;
    ((w / (mui * mi)).powi(2), 0.5 * w * w / (mui * mui * mi))
}

/// The minimizer of Iᵢ on S_{mᵢ}: u(λ; r) = (λ/μᵢ)^{1/2} ω(λ^{1/2} r).
pub fn scalar_minimizer(mi: f64, mui: f64, gs: &GroundState) -> RadialFunction {
    let (lambda, _) = scalar_b_i(mi, mui, gs);
    let t = lambda.sqrt();
    // u_t has amplitude t^{3/2}; the target amplitude is t/μ^{1/2}
    let u = gs.omega.dilated(t).scaled(1.0 / (t.sqrt() * mui.sqrt()));
    crate::sphere::retract(&u, mi)
}

#[derive(Debug, Clone)]
pub struct SystemReport {
    pub state: SystemState,
    pub lambda1: f64,
    pub lambda2: f64,
    pub energy: f64,
    pub pohozaev_residual: f64,
    pub kinetic: f64,
    pub gradient_dual_norm: f64,
    /// Relative residuals of A = 6c, ∫G = 2c and λ₁m₁ + λ₂m₂ = 2c.
    pub identity_residuals: [f64; 3],
    pub positivity: [bool; 2],
    pub decay_rates: [f64; 2],
    pub decay_consistent: [bool; 2],
    pub status: Status,
}

impl SystemReport {
    pub fn relative_pohozaev(&self) -> f64 {
        self.pohozaev_residual.abs() / self.kinetic
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.identity_residuals.iter().all(|r| *r < tol)
            && self.lambda1 > 0.0
            && self.lambda2 > 0.0
            && self.positivity.iter().all(|p| *p)
    }
}

/// Reports identity residuals, signs, positivity and tail decay. Never fails.
pub fn validate_solution(s: &SystemState, lambda1: f64, lambda2: f64, c: f64) -> SystemReport {
    let a = s.kinetic();
    let q = s.potential();
    let p = &s.params;
    let rel = |x: f64, y: f64| (x - y).abs() / y.abs().max(f64::MIN_POSITIVE);
    let identity_residuals = [rel(a, 6.0 * c), rel(q, 2.0 * c), rel(lambda1 * p.m1 + lambda2 * p.m2, 2.0 * c)];
    let positive = |u: &RadialFunction| {
        let mx = u.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mn = u.values().iter().cloned().fold(f64::INFINITY, f64::min);
        mx > 0.0 && mn > -1e-8 * mx
    };
    let decay_rates = [decay_rate(&s.u1), decay_rate(&s.u2)];
    let consistent = |k: f64, l: f64| l > 0.0 && ((k - l.sqrt()) / l.sqrt()).abs() <= 0.1;
    let gradient_dual_norm = system_dual_norm(s).unwrap_or(f64::NAN);
    SystemReport {
        lambda1,
        lambda2,
        energy: c,
        pohozaev_residual: pohozaev_pstar(s),
        kinetic: a,
        gradient_dual_norm,
        identity_residuals,
        positivity: [positive(&s.u1), positive(&s.u2)],
        decay_rates,
        decay_consistent: [consistent(decay_rates[0], lambda1), consistent(decay_rates[1], lambda2)],
        status: Status::Flowing,
        state: s.clone(),
    }
}

#[derive(Serialize)]
struct SystemReportJson<'a> {
    params: SystemParams,
    lambda1: f64,
    lambda2: f64,
    energy: f64,
    pohozaev_residual: f64,
    kinetic: f64,
    gradient_dual_norm: f64,
    identity_residuals: [f64; 3],
    positivity: [bool; 2],
    decay_rates: [f64; 2],
    decay_consistent: [bool; 2],
    status: Status,
    grid: crate::grid::GridSpec,
    u1: &'a [f64],
    u2: &'a [f64],
}

impl Serialize for SystemReport {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SystemReportJson {
            params: self.state.params,
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            energy: self.energy,
            pohozaev_residual: self.pohozaev_residual,
            kinetic: self.kinetic,
            gradient_dual_norm: self.gradient_dual_norm,
            identity_residuals: self.identity_residuals,
            positivity: self.positivity,
            decay_rates: self.decay_rates,
            decay_consistent: self.decay_consistent,
            status: self.status,
            grid: crate::grid::GridSpec::of(self.state.grid()),
            u1: self.state.u1.values(),
            u2: self.state.u2.values(),
        }
        .serialize(s)
    }
}
