//! Paths on S_m and the single-equation mountain pass.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{argmax, sweep, CriticalReport, MinimaxConfig, MinimaxReport};
use crate::deform::{flow_integrate, AugmentedPoint, ScalarProblem};
use crate::error::{Error, Result};
use crate::grid::{RadialFunction, RadialGrid};
use crate::newton::newton_polish;
use crate::scalar::{
    b0_estimate, descend_fiber_max, energy_i, fiber_maximize, pohozaev_p, validate_growth, CriticalPointReport,
    PowerNonlinearity, SphereConstraint,
};
use crate::sphere::{mass_defect, random_profile, retract};

/// Minimum node count of a path.
pub const MIN_PATH_NODES: usize = 17;

/// A path on S_m sampled at uniform parameters t_k = k/(n−1). Between
/// nodes the path is the retracted linear interpolant.
#[derive(Debug, Clone)]
pub struct PathOnSphere {
    nodes: Vec<RadialFunction>,
    m: f64,
}

impl PathOnSphere {
    pub fn new(nodes: Vec<RadialFunction>, m: f64) -> Result<Self> {
        if nodes.len() < MIN_PATH_NODES {
            return Err(Error::InvalidArgument(format!(
                "a path needs at least {MIN_PATH_NODES} nodes, got {}",
                nodes.len()
            )));
        }
        for (k, u) in nodes.iter().enumerate() {
            let d = mass_defect(u, m);
            if d > 1e-8 {
                return Err(Error::InvalidArgument(format!("path node {k} is off the sphere (defect {d:.2e})")));
            }
        }
        Ok(Self { nodes, m })
    }

    pub fn nodes(&self) -> &[RadialFunction] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn mass(&self) -> f64 {
        self.m
    }

    pub fn parameter(&self, k: usize) -> f64 {
        k as f64 / (self.nodes.len() - 1) as f64
    }

    /// γ(t) for any t ∈ [0,1].
    pub fn at(&self, t: f64) -> RadialFunction {
        let n = self.nodes.len();
        let x = t.clamp(0.0, 1.0) * (n - 1) as f64;
        let k = (x.floor() as usize).min(n - 2);
        let tau = x - k as f64;
        interpolate(&self.nodes[k], &self.nodes[k + 1], tau, self.m)
    }

    pub fn energies(&self, spec: &PowerNonlinearity) -> Vec<f64> {
        self.nodes.iter().map(|u| energy_i(u, spec)).collect()
    }

    pub fn pohozaev(&self, spec: &PowerNonlinearity) -> Vec<f64> {
        self.nodes.iter().map(|u| pohozaev_p(u, spec)).collect()
    }

    /// Per-node (t, I, P) rows for plotting.
    pub fn profile_csv(&self, spec: &PowerNonlinearity) -> String {
        let mut s = String::from("t,I,P\n");
        for (k, u) in self.nodes.iter().enumerate() {
            s.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", self.parameter(k), energy_i(u, spec), pohozaev_p(u, spec)));
        }
        s
    }
}

fn interpolate(a: &RadialFunction, b: &RadialFunction, tau: f64, m: f64) -> RadialFunction {
    if tau == 0.0 {
        return a.clone();
    }
    if tau == 1.0 {
        return b.clone();
    }
    retract(&a.scaled(1.0 - tau).axpy(tau, b), m)
}

/// The dilation path k ↦ retract(u_{s_k}) between factors `lo` and `hi`.
/// Factors are spaced linearly, s = lo(1−t) + hi·t, or geometrically.
pub fn dilation_path(
    u: &RadialFunction,
    m: f64,
    lo: f64,
    hi: f64,
    nodes: usize,
    geometric: bool,
) -> Result<PathOnSphere> {
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidArgument(format!("dilation range must satisfy 0 < lo < hi, got [{lo}, {hi}]")));
    }
    let n = nodes.max(2);
    let factor = |k: usize| {
        let t = k as f64 / (n - 1) as f64;
        if geometric {
            lo * (hi / lo).powf(t)
        } else {
            lo * (1.0 - t) + hi * t
        }
    };
    let base = retract(u, m);
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let v = base.dilated(factor(k));
        if v.is_zero() {
            return Err(Error::Resolution(format!("dilation by {:.3e} leaves nothing on the grid", factor(k))));
        }
        out.push(retract(&v, m));
    }
    PathOnSphere::new(out, m)
}

/// Endpoint conditions of Γ: P(γ(0)) > 0 > P(γ(1)) and I(γ(0)), I(γ(1)) < b₀/2.
/// Returns false for non-positive `b0`.
pub fn admissible_path_check(path: &PathOnSphere, spec: &PowerNonlinearity, b0: f64) -> bool {
    if !(b0 > 0.0) || path.is_empty() {
        return false;
    }
    let first = &path.nodes[0];
    let last = &path.nodes[path.len() - 1];
    pohozaev_p(first, spec) > 0.0
        && pohozaev_p(last, spec) < 0.0
        && energy_i(first, spec) < 0.5 * b0
        && energy_i(last, spec) < 0.5 * b0
}

#[derive(Debug, Clone)]
pub struct PathCrossing {
    /// Node k with the crossing in [t_k, t_{k+1}].
    pub index: usize,
    /// Path parameter of the crossing.
    pub parameter: f64,
    pub point: RadialFunction,
    pub pohozaev: f64,
}

/// Locates the first sign change of P along the path and bisects the
/// parameter to 1e−8.
pub fn path_pohozaev_crossing(path: &PathOnSphere, spec: &PowerNonlinearity) -> Result<PathCrossing> {
    let p = path.pohozaev(spec);
    let k = (0..p.len() - 1)
        .find(|&k| p[k] == 0.0 || p[k].signum() != p[k + 1].signum())
        .ok_or_else(|| Error::InvalidArgument("P keeps one sign along the path; the path is not admissible".into()))?;
    Ok(crossing_in_segment(path, spec, k, &p))
}

fn crossing_in_segment(path: &PathOnSphere, spec: &PowerNonlinearity, k: usize, p: &[f64]) -> PathCrossing {
    let n1 = (path.len() - 1) as f64;
    if p[k] == 0.0 {
        return PathCrossing { index: k, parameter: k as f64 / n1, point: path.nodes[k].clone(), pohozaev: 0.0 };
    }
    let positive_left = p[k] > 0.0;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while (hi - lo) / n1 > 1e-8 {
        let mid = 0.5 * (lo + hi);
        let v = pohozaev_p(&interpolate(&path.nodes[k], &path.nodes[k + 1], mid, path.m), spec);
        if (v > 0.0) == positive_left {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tau = 0.5 * (lo + hi);
    let point = interpolate(&path.nodes[k], &path.nodes[k + 1], tau, path.m);
    let pohozaev = pohozaev_p(&point, spec);
    PathCrossing { index: k, parameter: (k as f64 + tau) / n1, point, pohozaev }
}

/// The path maximum for the sweep bookkeeping: the largest node energy or,
/// if larger, the energy where the interpolated path crosses P = 0. Nodes
/// can slide off both sides of the ridge, so node values alone would
/// underestimate the maximum. Returns the level and the point carrying it.
pub(crate) fn path_level(path: &PathOnSphere, spec: &PowerNonlinearity) -> (f64, usize, RadialFunction) {
    let e = path.energies(spec);
    let p = path.pohozaev(spec);
    let (mut k, mut level) = argmax(&e);
    let mut point = path.nodes[k].clone();
    for j in 0..p.len() - 1 {
        if p[j] == 0.0 || p[j].signum() != p[j + 1].signum() {
            let c = crossing_in_segment(path, spec, j, &p);
            let ec = energy_i(&c.point, spec);
            if ec > level {
                level = ec;
                k = if e[j] >= e[j + 1] { j } else { j + 1 };
                point = c.point;
            }
        }
    }
    (level, k, point)
}

/// Redistributes the interior nodes uniformly in L² arclength. The
/// endpoints and the node count are kept exactly.
pub fn reparametrize(path: &PathOnSphere) -> PathOnSphere {
    let n = path.len();
    let mut cum = vec![0.0; n];
    for k in 1..n {
        let d = path.nodes[k].axpy(-1.0, &path.nodes[k - 1]).mass().sqrt();
        cum[k] = cum[k - 1] + d;
    }
    let total = cum[n - 1];
    if !(total > 0.0) {
        return path.clone();
    }
    let mut nodes = Vec::with_capacity(n);
    nodes.push(path.nodes[0].clone());
    let mut seg = 0;
    for j in 1..n - 1 {
        let target = total * j as f64 / (n - 1) as f64;
        while seg < n - 2 && cum[seg + 1] < target {
            seg += 1;
        }
        let len = cum[seg + 1] - cum[seg];
        let tau = if len > 0.0 { ((target - cum[seg]) / len).clamp(0.0, 1.0) } else { 0.0 };
        nodes.push(interpolate(&path.nodes[seg], &path.nodes[seg + 1], tau, path.m));
    }
    nodes.push(path.nodes[n - 1].clone());
    PathOnSphere { nodes, m: path.m }
}

/// Builds an admissible dilation path around `seed`: the lower factor is
/// halved until P > 0 and I < b₀/2 hold there, the upper one doubled until
/// P < 0 and I < b₀/2.
pub(crate) fn initial_path(
    seed: &RadialFunction,
    spec: &PowerNonlinearity,
    m: f64,
    b0: f64,
    nodes: usize,
) -> Result<PathOnSphere> {
    let (t0, _) = fiber_maximize(seed, spec)?;
    let centred = retract(&seed.dilated(t0), m);
    let grid = centred.grid().clone();
    let at = |s: f64| retract(&centred.dilated(s), m);
    let mut lo = 0.5;
    for _ in 0..12 {
        let v = at(lo);
        if pohozaev_p(&v, spec) > 0.0 && energy_i(&v, spec) < 0.5 * b0 {
            break;
        }
        lo *= 0.5;
    }
    let mut hi = 2.0;
    while hi * 20.0 * grid.min_spacing() <= 1.0 {
        let v = at(hi);
        if pohozaev_p(&v, spec) < 0.0 && energy_i(&v, spec) < 0.5 * b0 {
            break;
        }
        hi *= 2.0;
    }
    let path = dilation_path(&centred, m, lo, hi, nodes, true)?;
    if !admissible_path_check(&path, spec, b0) {
        return Err(Error::Construction(format!(
            "no admissible dilation path with factors in [{lo:.3e}, {hi:.3e}] on this grid; increase r_max or n"
        )));
    }
    Ok(path)
}

/// The seed of the initial path: a Gaussian, or a random bump profile when
/// `seed` is nonzero.
pub(crate) fn path_seed(grid: &std::sync::Arc<RadialGrid>, m: f64, seed: u64) -> RadialFunction {
    let u = if seed == 0 {
        let z = crate::sphere::seed_scale(grid);
        RadialFunction::from_fn(grid, |r| (-0.5 * (r * z).powi(2)).exp())
    } else {
        random_profile(grid, &mut ChaCha8Rng::seed_from_u64(seed))
    };
    retract(&u, m)
}

/// The admissible dilation path the mountain pass starts from, seeded by
/// `config.seed`.
pub fn initial_dilation_path(
    grid: &std::sync::Arc<RadialGrid>,
    constraint: &SphereConstraint,
    spec: &PowerNonlinearity,
    b0: f64,
    config: &MinimaxConfig,
) -> Result<PathOnSphere> {
    let seed = path_seed(grid, constraint.m, config.seed);
    initial_path(&seed, spec, constraint.m, b0, config.nodes.max(MIN_PATH_NODES))
}

/// Numerical mountain pass for b = inf over Γ of max I along the path.
///
/// Deformation sweeps lower the path maximum until it stagnates; the
/// maximizing node is then refined by descending the fiber maximum and a
/// Newton polish, and its (PSP) residuals decide the status.
pub fn mountain_pass_single(
    grid: &std::sync::Arc<RadialGrid>,
    constraint: &SphereConstraint,
    spec: &PowerNonlinearity,
    config: &MinimaxConfig,
) -> Result<MinimaxReport> {
    validate_growth(spec)?;
    let m = constraint.m;
    let problem = ScalarProblem { spec: spec.clone(), constraint: *constraint };
    let b0 = b0_estimate(grid, constraint, spec, 2, config.seed)?.value;
    let mut path = initial_dilation_path(grid, constraint, spec, b0, config)?;
    let mut energies = path.energies(spec);
    let (mut level, mut imax, mut top) = path_level(&path, spec);
    let mut history = vec![(0, level)];
    for it in 1..=config.max_sweeps {
        let boundary = energies[0].max(energies[energies.len() - 1]);
        let flow = config.flow_for(level, boundary);
        let comps: Vec<Vec<RadialFunction>> = path.nodes().iter().map(|u| vec![u.clone()]).collect();
        let swept: Vec<RadialFunction> = sweep(&problem, &comps, &flow, config.flow_budget)?
            .into_iter()
            .map(|mut c| c.pop().expect("one component"))
            .collect();
        let ends = [0, path.len() - 1];
        if ends.iter().any(|&k| swept[k].values() != path.nodes()[k].values()) {
            return Err(Error::Construction("path endpoint moved during a sweep; the energy cutoff failed".into()));
        }
        let swept = PathOnSphere { nodes: swept, m };
        let repar = reparametrize(&swept);
        let (ls, lr) = (path_level(&swept, spec), path_level(&repar, spec));
        let (next, (new_level, k, pt)) = if lr.0 <= ls.0 { (repar, lr) } else { (swept, ls) };
        if new_level < level {
            let drop = (level - new_level) / level.abs();
            energies = next.energies(spec);
            path = next;
            level = new_level;
            imax = k;
            top = pt;
            history.push((it, level));
            if drop < config.sweep_tol {
                break;
            }
        } else {
            history.push((it, level));
            break;
        }
    }
    let (_, _, (theta, u)) = descend_fiber_max(top, spec, m, 1e-12, 20, 2000)?;
    let u = retract(&u.dilated(theta.exp()), m);
    let polished = newton_polish(spec, std::slice::from_ref(&u), &[m], 1e-11, 30)?;
    let sol = polished.components.into_iter().next().expect("one component");
    let psp = {
        let mut f = config.flow_for(energy_i(&sol, spec), f64::NEG_INFINITY);
        f.target_level = energy_i(&sol, spec);
        let mut trace = flow_integrate(&problem, &AugmentedPoint::from_scalar(sol.clone()), &f, &[], 1)?;
        trace.records.truncate(1);
        crate::deform::psp_monitor(&trace, &f)?
    };
    let report = CriticalPointReport::evaluate(sol, spec, constraint, psp.status)?;
    let final_level = report.energy;
    if final_level <= level {
        history.push((history.len(), final_level));
    }
    Ok(MinimaxReport {
        level: final_level,
        maximizer: imax,
        history,
        status: report.status,
        critical: CriticalReport::Scalar(report),
        diagnostics: vec![("b0".into(), b0), ("path_max".into(), level)],
        profile: path.profile_csv(spec),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn reparametrize_pins_endpoints() {
        let g = make_grid(3, 20.0, 512, 1.0).unwrap();
        let spec = PowerNonlinearity::cubic_positive(1.0);
        let seed = path_seed(&g, 10.0, 0);
        let p = dilation_path(&seed, 10.0, 0.3, 3.0, 17, false).unwrap();
        let q = reparametrize(&p);
        assert_eq!(q.len(), p.len());
        assert_eq!(q.nodes()[0].values(), p.nodes()[0].values());
        assert_eq!(q.nodes()[16].values(), p.nodes()[16].values());
        assert!(q.pohozaev(&spec)[0] > 0.0);
    }
}
