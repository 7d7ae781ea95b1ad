//! The single equation −Δu + λu = g(u) on S_m with g a sum of powers.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{critical_exponent, grad_norm_sq, lp_power, RadialFunction, RadialGrid};
use crate::sphere::{mass_defect, random_profile, retract, tangent_riesz};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerTerm {
    pub a: f64,
    pub p: f64,
}

/// g(ξ) = Σ aₖ|ξ|^{pₖ−2}ξ, or Σ aₖ ξ₊^{pₖ−1} when `positive_part` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerNonlinearity {
    pub dimension: usize,
    pub terms: Vec<PowerTerm>,
    #[serde(default)]
    pub positive_part: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthBounds {
    pub alpha: f64,
    pub beta_growth: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereConstraint {
    pub m: f64,
}

impl SphereConstraint {
    pub fn new(m: f64) -> Result<Self> {
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::Condition { field: "m".into(), condition: format!("mass must be positive, got {m}") });
        }
        Ok(Self { m })
    }
}

impl PowerNonlinearity {
    pub fn new(dimension: usize, terms: &[(f64, f64)]) -> Result<Self> {
        let spec = Self {
            dimension,
            terms: terms.iter().map(|&(a, p)| PowerTerm { a, p }).collect(),
            positive_part: false,
        };
        validate_growth(&spec)?;
        Ok(spec)
    }

    /// The cubic μu₊³ of the system, as a scalar nonlinearity in ℝ³.
    pub fn cubic_positive(mu: f64) -> Self {
        Self { dimension: 3, terms: vec![PowerTerm { a: mu, p: 4.0 }], positive_part: true }
    }

    pub fn odd(&self) -> bool {
        !self.positive_part
    }

    #[inline]
    fn base(&self, x: f64) -> f64 {
        if self.positive_part {
            x.max(0.0)
        } else {
            x.abs()
        }
    }

    pub fn g(&self, x: f64) -> f64 {
        let b = self.base(x);
        let sign = if self.positive_part { 1.0 } else { x.signum() };
        self.terms.iter().map(|t| t.a * pow(b, t.p - 1.0)).sum::<f64>() * sign
    }

    /// G(ξ) = ∫₀^ξ g.
    pub fn big_g(&self, x: f64) -> f64 {
        let b = self.base(x);
        self.terms.iter().map(|t| t.a / t.p * pow(b, t.p)).sum()
    }

    pub fn g_prime(&self, x: f64) -> f64 {
        let b = self.base(x);
        self.terms.iter().map(|t| t.a * (t.p - 1.0) * pow(b, t.p - 2.0)).sum()
    }

    /// w̃G(ξ) = ½g(ξ)ξ − G(ξ).
    pub fn w_tilde(&self, x: f64) -> f64 {
        0.5 * self.g(x) * x - self.big_g(x)
    }

    /// ∫|u|^{pₖ} (or ∫u₊^{pₖ}) for every term.
    pub fn moments(&self, u: &RadialFunction) -> Vec<f64> {
        if self.positive_part {
            let w = u.grid().weights();
            self.terms
                .iter()
                .map(|t| w.iter().zip(u.values()).map(|(w, v)| w * pow(v.max(0.0), t.p)).sum())
                .collect()
        } else {
            self.terms.iter().map(|t| lp_power(u, t.p)).collect()
        }
    }

    /// Exponent (p−2)N/2 with which ∫|u_t|ᵖ scales.
    fn scaling_exponent(&self, p: f64) -> f64 {
        (p - 2.0) * self.dimension as f64 / 2.0
    }

    /// Closed-form fiber energy t ↦ I(u_t) given A = ‖∇u‖² and the moments.
    pub fn fiber_energy(&self, a: f64, moments: &[f64], t: f64) -> f64 {
        0.5 * t * t * a
            - self.terms.iter().zip(moments).map(|(k, b)| k.a / k.p * t.powf(self.scaling_exponent(k.p)) * b).sum::<f64>()
    }

    /// Closed-form fiber Pohozaev value t ↦ P(u_t).
    pub fn fiber_pohozaev(&self, a: f64, moments: &[f64], t: f64) -> f64 {
        let n = self.dimension as f64;
        t * t * a
            - n * self
                .terms
                .iter()
                .zip(moments)
                .map(|(k, b)| k.a * (0.5 - 1.0 / k.p) * t.powf(self.scaling_exponent(k.p)) * b)
                .sum::<f64>()
    }

    /// Pointwise force weighted for dilation e^θ: Σ aₖ e^{(pₖ−2)Nθ/2}|ξ|^{pₖ−2}ξ.
    pub(crate) fn scaled_force(&self, theta: f64, x: f64) -> f64 {
        let b = self.base(x);
        let sign = if self.positive_part { 1.0 } else { x.signum() };
        sign * self
            .terms
            .iter()
            .map(|t| t.a * (self.scaling_exponent(t.p) * theta).exp() * pow(b, t.p - 1.0))
            .sum::<f64>()
    }
}

#[inline]
fn pow(b: f64, e: f64) -> f64 {
    if b == 0.0 {
        0.0
    } else if e == 2.0 {
        b * b
    } else if e == 3.0 {
        b * b * b
    } else if e == 4.0 {
        (b * b) * (b * b)
    } else {
        b.powf(e)
    }
}

/// Checks 2 + 4/N < pₖ < 2* and aₖ > 0, then spot-checks the growth and
/// monotonicity inequalities on a sample of ξ values.
pub fn validate_growth(spec: &PowerNonlinearity) -> Result<GrowthBounds> {
    let n = spec.dimension;
    if n != 2 && n != 3 {
        return Err(Error::Condition {
            field: "dimension".into(),
            condition: format!("dimension must be 2 or 3, got {n}"),
        });
    }
    if spec.terms.is_empty() {
        return Err(Error::Condition { field: "terms".into(), condition: "at least one power term is required".into() });
    }
    let lo = 2.0 + 4.0 / n as f64;
    let hi = critical_exponent(n);
    for (k, t) in spec.terms.iter().enumerate() {
        if !(t.p > lo && t.p < hi) {
            let hi_s = if hi.is_finite() { format!("{hi}") } else { "inf".into() };
            return Err(Error::Condition {
                field: format!("terms[{k}].p"),
                condition: format!(
                    "exponent p = {} must lie strictly between the mass-supercritical bound 2+4/N = {:.6} and the Sobolev bound 2* = {hi_s}",
                    t.p, lo
                ),
            });
        }
        if !(t.a > 0.0 && t.a.is_finite()) {
            return Err(Error::Condition {
                field: format!("terms[{k}].a"),
                condition: format!("coefficient a = {} must be positive", t.a),
            });
        }
    }
    let alpha = spec.terms.iter().map(|t| t.p).fold(f64::INFINITY, f64::min);
    let beta = spec.terms.iter().map(|t| t.p).fold(f64::NEG_INFINITY, f64::max);
    let sharp = 2.0 + 4.0 / n as f64;
    for i in 1..=200 {
        let x = 1e-3 * 1.07f64.powi(i);
        for xi in [x, -x] {
            if spec.positive_part && xi < 0.0 {
                continue;
            }
            let (g, gg, w) = (spec.g(xi) * xi, spec.big_g(xi), spec.w_tilde(xi));
            let slack = 1e-12 * g.abs();
            let ok_growth = alpha * gg <= g + slack && g <= beta * gg + slack && gg > 0.0;
            let ok_g3 = w_tilde_derivative(spec, xi) * xi > sharp * w;
            if !(ok_growth && ok_g3) {
                return Err(Error::Condition {
                    field: "terms".into(),
                    condition: format!("growth inequalities fail at xi = {xi}"),
                });
            }
        }
    }
    Ok(GrowthBounds { alpha, beta_growth: beta })
}

fn w_tilde_derivative(spec: &PowerNonlinearity, x: f64) -> f64 {
    // d/dξ (½gξ − G) = ½(g'ξ − g)
    0.5 * (spec.g_prime(x) * x - spec.g(x))
}

pub fn energy_i(u: &RadialFunction, spec: &PowerNonlinearity) -> f64 {
    let b = spec.moments(u);
    spec.fiber_energy(grad_norm_sq(u), &b, 1.0)
}

pub fn pohozaev_p(u: &RadialFunction, spec: &PowerNonlinearity) -> f64 {
    let b = spec.moments(u);
    spec.fiber_pohozaev(grad_norm_sq(u), &b, 1.0)
}

/// u_t(r) = t^{N/2} u(t r).
pub fn scale(u: &RadialFunction, t: f64) -> Result<RadialFunction> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("dilation factor must be positive, got {t}")));
    }
    Ok(u.dilated(t))
}

/// (J(θ,u), ∂θJ(θ,u)) = (I(Φ_θu), P(Φ_θu)) in closed form.
pub fn augmented_j(theta: f64, u: &RadialFunction, spec: &PowerNonlinearity) -> (f64, f64) {
    let a = grad_norm_sq(u);
    let b = spec.moments(u);
    let t = theta.exp();
    (spec.fiber_energy(a, &b, t), spec.fiber_pohozaev(a, &b, t))
}

/// The unique maximizer t₀ of t ↦ I(u_t) and the maximal value.
pub fn fiber_maximize(u: &RadialFunction, spec: &PowerNonlinearity) -> Result<(f64, f64)> {
    if u.is_zero() {
        return Err(Error::InvalidArgument("fiber of the zero function".into()));
    }
    let a = grad_norm_sq(u);
    let b = spec.moments(u);
    fiber_maximize_moments(spec, a, &b)
}

pub(crate) fn fiber_maximize_moments(spec: &PowerNonlinearity, a: f64, b: &[f64]) -> Result<(f64, f64)> {
    // K(t) = P(u_t)/(N t²), strictly decreasing
    let k = |s: f64| spec.fiber_pohozaev(a, b, s.exp()) * (-2.0 * s).exp();
    let (mut lo, mut hi) = (1e-6f64.ln(), 1e6f64.ln());
    if !(k(lo) > 0.0 && k(hi) < 0.0) {
        return Err(Error::Fiber(format!(
            "K has no sign change on [1e-6, 1e6] (K(lo) = {:.3e}, K(hi) = {:.3e}); the grid may be underresolved",
            k(lo),
            k(hi)
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if k(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t0 = (0.5 * (lo + hi)).exp();
    Ok((t0, spec.fiber_energy(a, b, t0)))
}

/// λ from the L² pairing of the residual with u, and the tangent gradient
/// of I in the H¹ metric ‖∇v‖² + ‖v‖².
pub fn riemannian_gradient(
    u: &RadialFunction,
    spec: &PowerNonlinearity,
    constraint: &SphereConstraint,
) -> Result<(RadialFunction, f64)> {
    check_on_sphere(u, constraint.m)?;
    let (g, lambda, _) = augmented_gradient(u, spec, constraint.m, 0.0)?;
    Ok((g, lambda))
}

pub fn dual_norm_di(u: &RadialFunction, spec: &PowerNonlinearity, constraint: &SphereConstraint) -> Result<f64> {
    check_on_sphere(u, constraint.m)?;
    Ok(augmented_gradient(u, spec, constraint.m, 0.0)?.2)
}

pub(crate) fn check_on_sphere(u: &RadialFunction, m: f64) -> Result<()> {
    let d = mass_defect(u, m);
    if d > 1e-8 {
        return Err(Error::OffConstraint(d));
    }
    Ok(())
}

/// Weak derivative of u ↦ J(θ,u): e^{2θ}Ku − W·f_θ(u).
pub(crate) fn weak_derivative(u: &RadialFunction, spec: &PowerNonlinearity, theta: f64) -> Vec<f64> {
    let g = u.grid();
    let mut e = g.apply_stiffness(u.values());
    let s = (2.0 * theta).exp();
    let n = g.len();
    for i in 0..n - 1 {
        e[i] = s * e[i] - g.weights()[i] * spec.scaled_force(theta, u.values()[i]);
    }
    e[n - 1] = 0.0;
    e
}

/// Tangent gradient of J(θ,·) at u in the metric e^{2θ}‖∇v‖² + ‖v‖², the
/// multiplier λ = −⟨e, u⟩/m and the dual norm.
pub(crate) fn augmented_gradient(
    u: &RadialFunction,
    spec: &PowerNonlinearity,
    m: f64,
    theta: f64,
) -> Result<(RadialFunction, f64, f64)> {
    let grid = u.grid();
    let e = weak_derivative(u, spec, theta);
    let lambda = -crate::sphere::dot(&e, u.values()) / m;
    let op = grid.metric_operator((2.0 * theta).exp(), 1.0)?;
    let (g, n2) = tangent_riesz(grid, &op, u.values(), &e);
    Ok((u.with_values(g), lambda, n2.sqrt()))
}

/// h₀(u) = m^{1/2} u_{t(u)} / ‖u‖₂ with t(u) = ‖u‖₂.
pub fn normalize_h0(u: &RadialFunction, constraint: &SphereConstraint) -> Result<RadialFunction> {
    if u.is_zero() {
        return Err(Error::InvalidArgument("h0 of the zero function".into()));
    }
    let norm = u.mass().sqrt();
    Ok(u.dilated(norm).scaled(constraint.m.sqrt() / norm))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct B0Estimate {
    pub value: f64,
    pub per_seed: Vec<f64>,
    pub iterations: Vec<usize>,
}

/// Descending estimate of b₀ = inf over S_m of the fiber maximum, by
/// alternating the exact fiber maximization with preconditioned tangential
/// descent from `seeds` random starts.
pub fn b0_estimate(
    grid: &Arc<RadialGrid>,
    constraint: &SphereConstraint,
    spec: &PowerNonlinearity,
    seeds: usize,
    rng_seed: u64,
) -> Result<B0Estimate> {
    validate_growth(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut per_seed = Vec::with_capacity(seeds);
    let mut iterations = Vec::with_capacity(seeds);
    for _ in 0..seeds.max(1) {
        let u0 = retract(&random_profile(grid, &mut rng), constraint.m);
        let (v, it, _) = descend_fiber_max(u0, spec, constraint.m, 1e-10, 50, 4000)?;
        per_seed.push(v);
        iterations.push(it);
    }
    let value = per_seed.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(B0Estimate { value, per_seed, iterations })
}

/// Minimizes F(u) = max_θ J(θ,u) over S_m. Returns (F, iterations, (θ*, u)).
pub(crate) fn descend_fiber_max(
    mut u: RadialFunction,
    spec: &PowerNonlinearity,
    m: f64,
    tol: f64,
    window: usize,
    max_iter: usize,
) -> Result<(f64, usize, (f64, RadialFunction))> {
    let (mut t0, mut f) = fiber_maximize(&u, spec)?;
    let mut history = vec![f];
    let mut tau: f64 = 1.0;
    let mut it = 0;
    while it < max_iter {
        it += 1;
        if t0.ln().abs() > 0.05 {
            // keep the iterate at its natural scale so truncation does not bias F
            u = retract(&u.dilated(t0), m);
            let (t1, f1) = fiber_maximize(&u, spec)?;
            t0 = t1;
            f = f1;
            history.clear();
            history.push(f);
        }
        let theta = t0.ln();
        let (g, _, gn) = augmented_gradient(&u, spec, m, theta)?;
        if gn < 1e-13 {
            break;
        }
        let mut accepted = false;
        tau = (tau * 2.0).min(2.0);
        while tau > 1e-12 {
            let trial = retract(&u.axpy(-tau, &g), m);
            if let Ok((t1, f1)) = fiber_maximize(&trial, spec) {
                if f1 <= f - 0.25 * tau * gn * gn {
                    u = trial;
                    t0 = t1;
                    f = f1;
                    accepted = true;
                    break;
                }
            }
            tau *= 0.5;
        }
        history.push(f);
        if !accepted {
            break;
        }
        if history.len() > window && history[history.len() - 1 - window] - f < tol {
            break;
        }
    }
    Ok((f, it, (t0.ln(), u)))
}

/// Fitted exponential decay rate of the tail, from the slope of
/// log(r^{(N−1)/2}|u|) over r ∈ [0.5, 0.8]·r_max.
pub fn decay_rate(u: &RadialFunction) -> f64 {
    let g = u.grid();
    let k = (g.dimension() as f64 - 1.0) / 2.0;
    let (lo, hi) = (0.5 * g.r_max(), 0.8 * g.r_max());
    let pts: Vec<(f64, f64)> = g
        .nodes()
        .iter()
        .zip(u.values())
        .filter(|(r, v)| **r >= lo && **r <= hi && v.abs() > 0.0)
        .map(|(r, v)| (*r, (r.powf(k) * v.abs()).ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    -sxy / sxx
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    Flowing,
    Stalled,
}

#[derive(Debug, Clone)]
pub struct CriticalPointReport {
    pub solution: RadialFunction,
    pub lambda: f64,
    pub energy: f64,
    /// Signed P(u*).
    pub pohozaev_residual: f64,
    /// ‖∇u*‖², the scale against which P is judged.
    pub kinetic: f64,
    pub gradient_dual_norm: f64,
    pub decay_rate: f64,
    pub status: Status,
}

impl CriticalPointReport {
    pub fn evaluate(u: RadialFunction, spec: &PowerNonlinearity, constraint: &SphereConstraint, status: Status) -> Result<Self> {
        let (_, lambda, gn) = augmented_gradient(&u, spec, constraint.m, 0.0)?;
        Ok(Self {
            lambda,
            energy: energy_i(&u, spec),
            pohozaev_residual: pohozaev_p(&u, spec),
            kinetic: grad_norm_sq(&u),
            gradient_dual_norm: gn,
            decay_rate: decay_rate(&u),
            status,
            solution: u,
        })
    }

    pub fn relative_pohozaev(&self) -> f64 {
        self.pohozaev_residual.abs() / self.kinetic
    }
}

#[derive(Serialize)]
struct ReportJson<'a> {
    lambda: f64,
    energy: f64,
    pohozaev_residual: f64,
    kinetic: f64,
    gradient_dual_norm: f64,
    decay_rate: f64,
    status: Status,
    grid: crate::grid::GridSpec,
    solution: &'a [f64],
}

impl Serialize for CriticalPointReport {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ReportJson {
            lambda: self.lambda,
            energy: self.energy,
            pohozaev_residual: self.pohozaev_residual,
            kinetic: self.kinetic,
            gradient_dual_norm: self.gradient_dual_norm,
            decay_rate: self.decay_rate,
            status: self.status,
            grid: crate::grid::GridSpec::of(self.solution.grid()),
            solution: self.solution.values(),
        }
        .serialize(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fiber_closed_form_for_cubic() {
        // A = 3, C = 1 means ‖u‖₄⁴ = 4 for p = 4, a = 1
        let spec = PowerNonlinearity::new(3, &[(1.0, 4.0)]).unwrap();
        let (t0, v) = fiber_maximize_moments(&spec, 3.0, &[4.0]).unwrap();
        assert!((t0 - 1.0).abs() < 1e-12);
        assert!((v - 0.5).abs() < 1e-12);
    }

    #[test]
    fn open_interval_enforced() {
        assert!(PowerNonlinearity::new(2, &[(1.0, 4.0)]).is_err());
        assert!(PowerNonlinearity::new(3, &[(1.0, 6.0)]).is_err());
        assert!(PowerNonlinearity::new(3, &[(-1.0, 4.0)]).is_err());
        let b = validate_growth(&PowerNonlinearity::new(3, &[(2.0, 3.5), (1.0, 5.0)]).unwrap()).unwrap();
        assert_eq!((b.alpha, b.beta_growth), (3.5, 5.0));
    }
}
