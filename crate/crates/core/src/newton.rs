//! Newton iteration on the bordered Euler–Lagrange system
//!
//!   K uⱼ + λⱼ W uⱼ − W fⱼ(u) = 0,   ½(uⱼᵀW uⱼ − mⱼ) = 0,
//!
//! used to polish a point found by descent into a critical point to
//! round-off accuracy. Components are interleaved node by node so the
//! Jacobian stays banded; the multiplier borders are eliminated with a
//! Schur complement.

use crate::banded::BandMatrix;
use crate::error::{Error, Result};
use crate::grid::{RadialFunction, STIFFNESS_BAND};
use crate::scalar::PowerNonlinearity;
use crate::sphere::{dot, retract, tangent_riesz};
use crate::system::SystemParams;

/// Pointwise force f(u) = ∇G(u) at one node and its Jacobian.
pub trait LocalForce {
    fn ncomp(&self) -> usize;
    fn eval(&self, u: &[f64], f: &mut [f64], jac: &mut [f64]);
}

impl LocalForce for PowerNonlinearity {
    fn ncomp(&self) -> usize {
        1
    }
    fn eval(&self, u: &[f64], f: &mut [f64], jac: &mut [f64]) {
        f[0] = self.g(u[0]);
        jac[0] = self.g_prime(u[0]);
    }
}

impl LocalForce for SystemParams {
    fn ncomp(&self) -> usize {
        2
    }
    fn eval(&self, u: &[f64], f: &mut [f64], jac: &mut [f64]) {
        let (f1, f2) = self.force(u[0], u[1]);
        let (a, b, c) = self.force_jacobian(u[0], u[1]);
        f[0] = f1;
        f[1] = f2;
        jac[0] = a;
        jac[1] = b;
        jac[2] = b;
        jac[3] = c;
    }
}

#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub components: Vec<RadialFunction>,
    pub lambdas: Vec<f64>,
    pub dual_norm: f64,
    pub iterations: usize,
}

struct Eval {
    weak: Vec<Vec<f64>>,
    lambdas: Vec<f64>,
    dual: f64,
}

fn evaluate<F: LocalForce>(force: &F, comps: &[RadialFunction], masses: &[f64]) -> Result<Eval> {
    let c = force.ncomp();
    let grid = comps[0].grid();
    let n = grid.len();
    let w = grid.weights();
    let mut weak: Vec<Vec<f64>> = comps.iter().map(|u| grid.apply_stiffness(u.values())).collect();
    let mut uu = vec![0.0; c];
    let mut f = vec![0.0; c];
    let mut jac = vec![0.0; c * c];
    for i in 0..n - 1 {
        for j in 0..c {
            uu[j] = comps[j].values()[i];
        }
        force.eval(&uu, &mut f, &mut jac);
        for j in 0..c {
            weak[j][i] -= w[i] * f[j];
        }
    }
    for e in weak.iter_mut() {
        e[n - 1] = 0.0;
    }
    let lambdas: Vec<f64> = (0..c).map(|j| -dot(&weak[j], comps[j].values()) / masses[j]).collect();
    let op = grid.metric_operator(1.0, 1.0)?;
    let mut d2 = 0.0;
    for j in 0..c {
        d2 += tangent_riesz(grid, &op, comps[j].values(), &weak[j]).1;
    }
    Ok(Eval { weak, lambdas, dual: d2.sqrt() })
}

/// Damped Newton polish. Stops when the tangent dual norm of dI drops below
/// `tol` or stops decreasing.
pub fn newton_polish<F: LocalForce>(
    force: &F,
    start: &[RadialFunction],
    masses: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<NewtonOutcome> {
    let c = force.ncomp();
    assert_eq!(start.len(), c);
    let grid = start[0].grid().clone();
    let free = grid.free();
    let w = grid.weights();
    let band = STIFFNESS_BAND * c + (c - 1);
    let mut comps: Vec<RadialFunction> = start.iter().zip(masses).map(|(u, m)| retract(u, *m)).collect();
    let mut ev = evaluate(force, &comps, masses)?;
    let mut iterations = 0;
    let mut uu = vec![0.0; c];
    let mut f = vec![0.0; c];
    let mut jac = vec![0.0; c * c];
    while iterations < max_iter && ev.dual > tol {
        iterations += 1;
        let k = grid.stiffness();
        let mut h = BandMatrix::zeros(free * c, band, band);
        for i in 0..free {
            for ii in i.saturating_sub(STIFFNESS_BAND)..=(i + STIFFNESS_BAND).min(free - 1) {
                let v = k.get(i, ii);
                if v != 0.0 {
                    for j in 0..c {
                        h.add(i * c + j, ii * c + j, v);
                    }
                }
            }
            for j in 0..c {
                uu[j] = comps[j].values()[i];
            }
            force.eval(&uu, &mut f, &mut jac);
            for j in 0..c {
                for l in 0..c {
                    let lam = if j == l { ev.lambdas[j] } else { 0.0 };
                    h.add(i * c + j, i * c + l, w[i] * (lam - jac[j * c + l]));
                }
            }
        }
        let lu = h.factor()?;
        // residual R = e + λ W u, borders Bⱼ = W uⱼ
        let mut r = vec![0.0; free * c];
        let mut borders = vec![vec![0.0; free * c]; c];
        for i in 0..free {
            for j in 0..c {
                let wu = w[i] * comps[j].values()[i];
                r[i * c + j] = ev.weak[j][i] + ev.lambdas[j] * wu;
                borders[j][i * c + j] = wu;
            }
        }
        let y0 = lu.solve(&r);
        let ys: Vec<Vec<f64>> = borders.iter().map(|b| lu.solve(b)).collect();
        let mut s = vec![0.0; c * c];
        let mut rhs = vec![0.0; c];
        for j in 0..c {
            let cj = 0.5 * (comps[j].mass() - masses[j]);
            rhs[j] = cj - dot(&borders[j], &y0);
            for l in 0..c {
                s[j * c + l] = dot(&borders[j], &ys[l]);
            }
        }
        let dl = solve_small(&s, &rhs, c)?;
        let mut dx = vec![0.0; free * c];
        for q in 0..free * c {
            let mut v = -y0[q];
            for l in 0..c {
                v -= ys[l][q] * dl[l];
            }
            dx[q] = v;
        }
        let mut alpha = 1.0;
        let mut improved = false;
        for _ in 0..12 {
            let trial: Vec<RadialFunction> = (0..c)
                .map(|j| {
                    let mut vals = comps[j].values().to_vec();
                    for i in 0..free {
                        vals[i] += alpha * dx[i * c + j];
                    }
                    retract(&comps[j].with_values(vals), masses[j])
                })
                .collect();
            let tev = evaluate(force, &trial, masses)?;
            if tev.dual < ev.dual {
                comps = trial;
                ev = tev;
                improved = true;
                break;
            }
            alpha *= 0.5;
        }
        if !improved {
            break;
        }
    }
    Ok(NewtonOutcome { components: comps, lambdas: ev.lambdas, dual_norm: ev.dual, iterations })
}

fn solve_small(a: &[f64], b: &[f64], n: usize) -> Result<Vec<f64>> {
    match n {
        1 => {
            if a[0] == 0.0 {
                return Err(Error::Singular("bordered Schur complement".into()));
            }
            Ok(vec![b[0] / a[0]])
        }
        2 => {
            let det = a[0] * a[3] - a[1] * a[2];
            if det == 0.0 || !det.is_finite() {
                return Err(Error::Singular("bordered Schur complement".into()));
            }
            Ok(vec![(b[0] * a[3] - a[1] * b[1]) / det, (a[0] * b[1] - a[2] * b[0]) / det])
        }
        _ => Err(Error::InvalidArgument("more than two components".into())),
    }
}
