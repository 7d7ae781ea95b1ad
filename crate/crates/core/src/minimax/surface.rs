//! Surfaces on S_{m₁}×S_{m₂}, the explicit admissible surface built from
//! dilated single-component minimizers, and the two-parameter minimax.

use std::sync::Arc;

use serde::Serialize;

use super::degree::{degree_intersection, JointZero};
use super::lmm::{local_minimax, LocalMinimax};
use super::{argmax, sweep, CriticalReport, MinimaxConfig, MinimaxReport};
use crate::deform::SystemProblem;
use crate::error::{Error, Result};
use crate::grid::{RadialFunction, RadialGrid};
use crate::newton::newton_polish;
use crate::scalar::{fiber_maximize, PowerNonlinearity, Status};
use crate::sphere::retract;
use crate::system::{
    component_ip, energy_istar, ground_state_omega, scalar_b_i, scalar_minimizer, validate_solution, GroundState,
    SystemParams, SystemState,
};

/// Minimum node count per side of a surface.
pub const MIN_SURFACE_NODES: usize = 17;

/// A surface γ: [0,1]² → S_{m₁}×S_{m₂} sampled on a uniform ns×nt grid,
/// node (i,j) at (s,t) = (i/(ns−1), j/(nt−1)). Inside a cell the surface
/// is the bilinear blend of the corner nodes, renormalized.
#[derive(Debug, Clone)]
pub struct SurfaceOnProduct {
    ns: usize,
    nt: usize,
    nodes: Vec<SystemState>,
    params: SystemParams,
}

impl SurfaceOnProduct {
    pub fn new(ns: usize, nt: usize, nodes: Vec<SystemState>, params: SystemParams) -> Result<Self> {
        if ns < MIN_SURFACE_NODES || nt < MIN_SURFACE_NODES {
            return Err(Error::InvalidArgument(format!(
                "a surface needs at least {MIN_SURFACE_NODES}×{MIN_SURFACE_NODES} nodes, got {ns}×{nt}"
            )));
        }
        if nodes.len() != ns * nt {
            return Err(Error::InvalidArgument(format!("expected {} surface nodes, got {}", ns * nt, nodes.len())));
        }
        for (k, s) in nodes.iter().enumerate() {
            for i in 0..2 {
                let d = crate::sphere::mass_defect(s.component(i), params.mass(i));
                if d > 1e-8 {
                    return Err(Error::InvalidArgument(format!("surface node {k} is off the spheres (defect {d:.2e})")));
                }
            }
        }
        Ok(Self { ns, nt, nodes, params })
    }

    pub fn size(&self) -> (usize, usize) {
        (self.ns, self.nt)
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.ns + i
    }

    pub fn node(&self, i: usize, j: usize) -> &SystemState {
        &self.nodes[self.index(i, j)]
    }

    pub fn nodes(&self) -> &[SystemState] {
        &self.nodes
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        self.nodes[0].grid()
    }

    /// Replaces one node; used by tests that perturb a surface.
    pub fn set_node(&mut self, i: usize, j: usize, s: SystemState) {
        let k = self.index(i, j);
        self.nodes[k] = s;
    }

    pub fn is_boundary(&self, k: usize) -> bool {
        let (i, j) = (k % self.ns, k / self.ns);
        i == 0 || j == 0 || i == self.ns - 1 || j == self.nt - 1
    }

    pub fn energies(&self) -> Vec<f64> {
        self.nodes.iter().map(energy_istar).collect()
    }

    pub fn boundary_max(&self) -> f64 {
        self.energies()
            .iter()
            .enumerate()
            .filter(|(k, _)| self.is_boundary(*k))
            .map(|(_, e)| *e)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// γ(s,t) for any (s,t) ∈ [0,1]².
    pub fn at(&self, s: f64, t: f64) -> SystemState {
        let x = s.clamp(0.0, 1.0) * (self.ns - 1) as f64;
        let y = t.clamp(0.0, 1.0) * (self.nt - 1) as f64;
        let i = (x.floor() as usize).min(self.ns - 2);
        let j = (y.floor() as usize).min(self.nt - 2);
        let (a, b) = (x - i as f64, y - j as f64);
        let corners = [
            (self.node(i, j), (1.0 - a) * (1.0 - b)),
            (self.node(i + 1, j), a * (1.0 - b)),
            (self.node(i, j + 1), (1.0 - a) * b),
            (self.node(i + 1, j + 1), a * b),
        ];
        let nonzero: Vec<_> = corners.iter().filter(|c| c.1 != 0.0).collect();
        if nonzero.len() == 1 && nonzero[0].1 == 1.0 {
            return nonzero[0].0.clone();
        }
        let blend = |c: usize| {
            let g = self.grid();
            let mut v = vec![0.0; g.len()];
            for (st, w) in &corners {
                for (o, x) in v.iter_mut().zip(st.component(c).values()) {
                    *o += w * x;
                }
            }
            RadialFunction::new(g.clone(), v).expect("grid length")
        };
        SystemState::normalized(&blend(0), &blend(1), self.params)
    }

    /// Rows s,t,I_*,P₁,P₂ over all nodes, for heatmaps.
    pub fn heatmap_csv(&self) -> String {
        let mut out = String::from("s,t,I,P1,P2\n");
        for j in 0..self.nt {
            for i in 0..self.ns {
                let st = self.node(i, j);
                let (_, p1) = component_ip(&st.u1, self.params.mu1);
                let (_, p2) = component_ip(&st.u2, self.params.mu2);
                out.push_str(&format!(
                    "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                    i as f64 / (self.ns - 1) as f64,
                    j as f64 / (self.nt - 1) as f64,
                    energy_istar(st),
                    p1,
                    p2
                ));
            }
        }
        out
    }
}

/// Checks every Γ_* boundary inequality on the boundary nodes:
/// P₁ > 0 and I₁ < b₁ on s = 0, P₁ < 0 and I₁ < b₁ on s = 1, the same for
/// the second component on t = 0 and t = 1, and I_* < b̄ everywhere on ∂.
pub fn admissible_surface_check(surface: &SurfaceOnProduct, b1: f64, b2: f64, bbar: f64) -> Result<bool> {
    if !(bbar > b1.max(b2) && bbar < b1 + b2) {
        return Err(Error::Condition {
            field: "bbar".into(),
            condition: format!("bbar must lie in (max{{b1,b2}}, b1+b2) = ({}, {}), got {bbar}", b1.max(b2), b1 + b2),
        });
    }
    let (ns, nt) = surface.size();
    let p = surface.params();
    for j in 0..nt {
        for (i, sign) in [(0, 1.0), (ns - 1, -1.0)] {
            let (e, q) = component_ip(&surface.node(i, j).u1, p.mu1);
            if !(sign * q > 0.0 && e < b1) {
                return Ok(false);
            }
        }
    }
    for i in 0..ns {
        for (j, sign) in [(0, 1.0), (nt - 1, -1.0)] {
            let (e, q) = component_ip(&surface.node(i, j).u2, p.mu2);
            if !(sign * q > 0.0 && e < b2) {
                return Ok(false);
            }
        }
    }
    Ok(surface.boundary_max() < bbar)
}

/// inf{t ≥ 1 : I_*(c_t) < 0} for the joint dilation of `state`, by
/// bisection on t ↦ ½t²A − t³∫G. Equals max{1, A/(2∫G)}.
pub fn joint_dilation_time(state: &SystemState) -> Result<f64> {
    let (a, q) = (state.kinetic(), state.potential());
    if !(q > 0.0) {
        return Err(Error::Construction(format!("∫G = {q:.3e} ≤ 0, so no dilation makes I_* negative")));
    }
    let f = |t: f64| 0.5 * t * t * a - t * t * t * q;
    if f(1.0) < 0.0 {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (1.0f64, 2.0f64);
    while f(hi) >= 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

#[derive(Debug, Clone)]
pub struct SurfaceConstruction {
    pub surface: SurfaceOnProduct,
    /// Cut-off, fiber-maximized approximants of the component minimizers.
    pub w: [RadialFunction; 2],
    pub nu: f64,
    pub l: f64,
    pub delta: f64,
    /// T(s) along the top edge and its analogue along the right edge.
    pub top_times: Vec<f64>,
    pub right_times: Vec<f64>,
}

fn smooth_cutoff(r: f64, r0: f64, r1: f64) -> f64 {
    let x = ((r - r0) / (r1 - r0)).clamp(0.0, 1.0);
    1.0 - x * x * x * (10.0 - 15.0 * x + 6.0 * x * x)
}

fn approximant(mi: f64, mui: f64, gs: &GroundState, bi: f64, delta: f64) -> Result<RadialFunction> {
    let grid = gs.omega.grid();
    let rm = grid.r_max();
    let u = scalar_minimizer(mi, mui, gs);
    let cut: Vec<f64> = grid.nodes().iter().zip(u.values()).map(|(r, v)| v * smooth_cutoff(*r, 0.4 * rm, 0.6 * rm)).collect();
    let u = retract(&RadialFunction::new(grid.clone(), cut)?, mi);
    let spec = PowerNonlinearity::cubic_positive(mui);
    let (t0, e) = fiber_maximize(&u, &spec)?;
    if !(e >= bi - delta && e <= bi + delta) {
        return Err(Error::Construction(format!(
            "the cut-off minimizer has fiber maximum {e:.6} outside [b - δ, b + δ] = [{:.6}, {:.6}]",
            bi - delta,
            bi + delta
        )));
    }
    Ok(retract(&u.dilated(t0), mi))
}

/// The explicit admissible surface: the left and bottom edges are the
/// dilation families (w_{1ν}, w_{2,ν+(L−ν)t}) and (w_{1,ν+(L−ν)s}, w_{2ν});
/// the top edge is the normalized segment c(s) from (w_{1ν}, w_{2L}) to
/// (w_{1L}, w_{2L}) dilated by T(s), the right edge its analogue; the
/// interior is the Coons patch of the four edges, renormalized.
///
/// ν and L are chosen by checking the admissibility inequalities on the
/// edges directly.
pub fn initial_surface(params: &SystemParams, gs: &GroundState, delta: f64, nodes: usize) -> Result<SurfaceConstruction> {
    params.validate()?;
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("delta must be > 0, got {delta}")));
    }
    let n = nodes.max(MIN_SURFACE_NODES);
    let (_, b1) = scalar_b_i(params.m1, params.mu1, gs);
    let (_, b2) = scalar_b_i(params.m2, params.mu2, gs);
    let bbar = 0.5 * (b1.max(b2) + b1 + b2);
    let w = [approximant(params.m1, params.mu1, gs, b1, delta)?, approximant(params.m2, params.mu2, gs, b2, delta)?];
    let h = gs.omega.grid().min_spacing();
    let dil = |i: usize, s: f64| retract(&w[i].dilated(s), params.mass(i));
    let state = |u1: RadialFunction, u2: RadialFunction| SystemState { u1, u2, params: *params };
    let e = |u1: &RadialFunction, u2: &RadialFunction| energy_istar(&state(u1.clone(), u2.clone()));

    let (mut nu, mut l) = (0.5, 2.0);
    let mut found = false;
    for _ in 0..40 {
        let (w1n, w2n, w1l, w2l) = (dil(0, nu), dil(1, nu), dil(0, l), dil(1, l));
        let corners_negative = e(&w1l, &w2n) < 0.0 && e(&w1n, &w2l) < 0.0 && e(&w1l, &w2l) < 0.0;
        if !corners_negative {
            l *= 1.25;
            if l * 20.0 * h > 1.0 {
                break;
            }
            continue;
        }
        let edge_ok = (0..n).all(|k| {
            let x = nu + (l - nu) * k as f64 / (n - 1) as f64;
            let (u1, u2) = (dil(0, x), dil(1, x));
            e(&w1n, &u2) < bbar && e(&u1, &w2n) < bbar
        });
        let (i1, p1) = component_ip(&w1n, params.mu1);
        let (i2, p2) = component_ip(&w2n, params.mu2);
        if edge_ok && p1 > 0.0 && p2 > 0.0 && i1 < b1 && i2 < b2 {
            found = true;
            break;
        }
        nu *= 0.8;
        if nu < 0.05 {
            break;
        }
    }
    if !found {
        return Err(Error::Construction(format!(
            "no dilation range [ν, L] satisfies the boundary inequalities on this grid (stopped at ν = {nu:.3}, L = {l:.3}); increase r_max or n"
        )));
    }

    let (w1n, w2n, w1l, w2l) = (dil(0, nu), dil(1, nu), dil(0, l), dil(1, l));
    let par = |k: usize| k as f64 / (n - 1) as f64;
    let x_of = |k: usize| nu + (l - nu) * par(k);
    let left: Vec<SystemState> = (0..n).map(|j| state(w1n.clone(), dil(1, x_of(j)))).collect();
    let bottom: Vec<SystemState> = (0..n).map(|i| state(dil(0, x_of(i)), w2n.clone())).collect();

    let segment = |a: &RadialFunction, b: &RadialFunction, s: f64, m: f64| retract(&a.scaled(1.0 - s).axpy(s, b), m);
    let capped = |c: SystemState| -> Result<(SystemState, f64)> {
        if !(c.potential() > 0.0) {
            let need = 8.0 * l / (nu * nu);
            return Err(Error::Construction(format!(
                "∫G ≤ 0 along the top or right edge; separating the component supports needs r_max ≈ {need:.0}"
            )));
        }
        let t = joint_dilation_time(&c)?;
        let s = if t == 1.0 { c } else { SystemState::normalized(&c.u1.dilated(t), &c.u2.dilated(t), *params) };
        Ok((s, t))
    };
    let mut top = Vec::with_capacity(n);
    let mut top_times = Vec::with_capacity(n);
    let mut right = Vec::with_capacity(n);
    let mut right_times = Vec::with_capacity(n);
    for k in 0..n {
        let (a, ta) = capped(state(segment(&w1n, &w1l, par(k), params.m1), w2l.clone()))?;
        let (b, tb) = capped(state(w1l.clone(), segment(&w2n, &w2l, par(k), params.m2)))?;
        top.push(a);
        top_times.push(ta);
        right.push(b);
        right_times.push(tb);
    }
    // the corners come from the dilation edges; the caps are 1 there
    for (times, k) in [(&top_times, 0), (&top_times, n - 1), (&right_times, 0), (&right_times, n - 1)] {
        if times[k] != 1.0 {
            return Err(Error::Construction(format!("a surface corner has I_* ≥ 0 (T = {})", times[k])));
        }
    }
    top[0] = left[n - 1].clone();
    right[0] = bottom[n - 1].clone();
    top[n - 1] = state(w1l.clone(), w2l.clone());
    right[n - 1] = top[n - 1].clone();

    let glen = gs.omega.grid().len();
    let mut grid_nodes = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let node = if j == 0 {
                bottom[i].clone()
            } else if j == n - 1 {
                top[i].clone()
            } else if i == 0 {
                left[j].clone()
            } else if i == n - 1 {
                right[j].clone()
            } else {
                let (s, t) = (par(i), par(j));
                let comp = |c: usize| {
                    let v = |st: &SystemState| st.component(c).values().to_vec();
                    let (b, tp, lf, rt) = (v(&bottom[i]), v(&top[i]), v(&left[j]), v(&right[j]));
                    let (c00, c10, c01, c11) = (v(&bottom[0]), v(&bottom[n - 1]), v(&top[0]), v(&top[n - 1]));
                    let vals: Vec<f64> = (0..glen)
                        .map(|q| {
                            (1.0 - t) * b[q] + t * tp[q] + (1.0 - s) * lf[q] + s * rt[q]
                                - ((1.0 - s) * (1.0 - t) * c00[q] + s * (1.0 - t) * c10[q] + (1.0 - s) * t * c01[q]
                                    + s * t * c11[q])
                        })
                        .collect();
                    RadialFunction::new(gs.omega.grid().clone(), vals)
                };
                let (u1, u2) = (comp(0)?, comp(1)?);
                if u1.is_zero() || u2.is_zero() {
                    return Err(Error::Construction("the interior interpolant vanishes".into()));
                }
                SystemState::normalized(&u1, &u2, *params)
            };
            grid_nodes.push(node);
        }
    }
    let surface = SurfaceOnProduct::new(n, n, grid_nodes, *params)?;
    Ok(SurfaceConstruction { surface, w, nu, l, delta, top_times, right_times })
}

/// The surface maximum used by the sweeps: the largest of the node
/// energies, the energies at cell centres of the interpolated surface and
/// the energy at its joint Pohozaev zero. Deformed nodes may slide apart,
/// and then node values alone underestimate the maximum of the surface
/// they span. Returns the level, the state carrying it and the joint zero.
pub(crate) fn surface_level(surface: &SurfaceOnProduct) -> Result<(f64, SystemState, JointZero)> {
    let e = surface.energies();
    let (k, mut level) = argmax(&e);
    let mut top = surface.nodes()[k].clone();
    let (ns, nt) = surface.size();
    for j in 0..nt - 1 {
        for i in 0..ns - 1 {
            let st = surface.at((i as f64 + 0.5) / (ns - 1) as f64, (j as f64 + 0.5) / (nt - 1) as f64);
            let v = energy_istar(&st);
            if v > level {
                level = v;
                top = st;
            }
        }
    }
    let zero = degree_intersection(surface)?;
    let st = surface.at(zero.s, zero.t);
    let v = energy_istar(&st);
    if v > level {
        level = v;
        top = st;
    }
    Ok((level, top, zero))
}

#[derive(Debug, Clone, Serialize)]
pub struct MinimaxCandidate {
    pub origin: String,
    pub level: f64,
    pub dual_norm: f64,
    pub lambdas: [f64; 2],
    pub converged: bool,
}

/// Two-parameter minimax for b_* over Γ_*.
///
/// The explicit surface is deformed by sweeps over all nodes (the energy
/// cutoff keeps the boundary fixed) until the maximum stagnates. Starting
/// from the surface maximizer and from the joint Pohozaev zero, a local
/// minimax descent over the two component dilations finds critical points;
/// Newton polishes them and the lowest one is reported.
pub fn surface_minimax(grid: &Arc<RadialGrid>, params: &SystemParams, config: &MinimaxConfig) -> Result<MinimaxReport> {
    params.validate()?;
    let gs = ground_state_omega(grid)?;
    let (_, b1) = scalar_b_i(params.m1, params.mu1, &gs);
    let (_, b2) = scalar_b_i(params.m2, params.mu2, &gs);
    let bbar = 0.5 * (b1.max(b2) + b1 + b2);
    let delta = 0.01 * b1.min(b2);
    let construction = initial_surface(params, &gs, delta, config.nodes)?;
    let mut surface = construction.surface;
    if !admissible_surface_check(&surface, b1, b2, bbar)? {
        return Err(Error::Construction("the initial surface violates a boundary inequality".into()));
    }
    let first_zero = degree_intersection(&surface)?;
    let intersection_level = energy_istar(&surface.at(first_zero.s, first_zero.t));

    let problem = SystemProblem { params: *params };
    let (mut level, mut top, mut zero) = surface_level(&surface)?;
    let mut history = vec![(0, level)];
    let boundary = surface.boundary_max();
    for it in 1..=config.max_sweeps {
        let flow = config.flow_for(level, boundary);
        let comps: Vec<Vec<RadialFunction>> = surface.nodes().iter().map(|s| vec![s.u1.clone(), s.u2.clone()]).collect();
        let swept = sweep(&problem, &comps, &flow, config.flow_budget)?;
        for (k, c) in swept.iter().enumerate() {
            if surface.is_boundary(k) && (c[0].values() != comps[k][0].values() || c[1].values() != comps[k][1].values()) {
                return Err(Error::Construction(format!("boundary node {k} moved during a sweep")));
            }
        }
        let nodes: Vec<SystemState> =
            swept.into_iter().map(|mut c| {
                let u2 = c.pop().expect("two components");
                let u1 = c.pop().expect("two components");
                SystemState { u1, u2, params: *params }
            }).collect();
        let next = SurfaceOnProduct { nodes, ..surface.clone() };
        let (new_level, new_top, new_zero) = surface_level(&next)?;
        if new_level < level {
            let drop = (level - new_level) / level.abs();
            surface = next;
            level = new_level;
            top = new_top;
            zero = new_zero;
            history.push((it, level));
            if drop < config.sweep_tol {
                break;
            }
        } else {
            history.push((it, level));
            break;
        }
    }
    let (imax, _) = argmax(&surface.energies());

    let mut starts: Vec<(String, SystemState)> = Vec::new();
    let offsets = [(0.0, 0.0), (0.5, -0.5), (-0.5, 0.5)];
    for (name, base) in [("surface_max", top), ("joint_zero", surface.at(zero.s, zero.t))] {
        for (a, b) in offsets {
            let st = if a == 0.0 && b == 0.0 {
                base.clone()
            } else {
                SystemState::normalized(&base.u1.dilated(f64::exp(a)), &base.u2.dilated(f64::exp(b)), *params)
            };
            starts.push((format!("{name}{a:+}{b:+}"), st));
        }
    }
    let runs: Vec<(String, Result<LocalMinimax>)> = {
        use rayon::prelude::*;
        starts.into_par_iter().map(|(name, st)| (name, local_minimax(&st, 1e-4, 400))).collect()
    };
    let mut candidates = Vec::new();
    let mut best: Option<(f64, SystemState, [f64; 2], f64)> = None;
    for (origin, run) in runs {
        let Ok(run) = run else { continue };
        let polished = newton_polish(params, &[run.state.u1.clone(), run.state.u2.clone()], &[params.m1, params.m2], 1e-11, 40);
        let Ok(p) = polished else { continue };
        let st = SystemState { u1: p.components[0].clone(), u2: p.components[1].clone(), params: *params };
        let lev = energy_istar(&st);
        let lambdas = [p.lambdas[0], p.lambdas[1]];
        let converged = p.dual_norm <= config.tol_grad && lambdas[0] > 0.0 && lambdas[1] > 0.0;
        candidates.push(MinimaxCandidate { origin, level: lev, dual_norm: p.dual_norm, lambdas, converged });
        if converged && best.as_ref().map_or(true, |b| lev < b.0) {
            best = Some((lev, st, lambdas, p.dual_norm));
        }
    }
    let Some((crit_level, st, lambdas, dual)) = best else {
        return Err(Error::Construction(format!(
            "no local minimax run converged to a critical point with positive multipliers; surface level {level:.6}"
        )));
    };
    let mut report = validate_solution(&st, lambdas[0], lambdas[1], crit_level);
    let ok = dual <= config.tol_grad && report.relative_pohozaev() <= config.tol_pohozaev;
    report.status = if ok { Status::Converged } else { Status::Stalled };
    if crit_level <= level {
        history.push((history.len(), crit_level));
    }
    let mut diagnostics = vec![
        ("b1".to_string(), b1),
        ("b2".to_string(), b2),
        ("bbar".to_string(), bbar),
        ("delta".to_string(), delta),
        ("nu".to_string(), construction.nu),
        ("L".to_string(), construction.l),
        ("initial_intersection_level".to_string(), intersection_level),
        ("intersection_s".to_string(), zero.s),
        ("intersection_t".to_string(), zero.t),
        ("intersection_level".to_string(), energy_istar(&surface.at(zero.s, zero.t))),
        ("surface_max".to_string(), level),
        ("gap_to_b1_plus_b2".to_string(), crit_level - (b1 + b2)),
    ];
    for c in &candidates {
        diagnostics.push((format!("candidate_{}", c.origin), c.level));
    }
    Ok(MinimaxReport {
        level: crit_level,
        maximizer: imax,
        history,
        status: report.status,
        critical: CriticalReport::System(report),
        diagnostics,
        profile: surface.heatmap_csv(),
    })
}
