//! Local minimax descent for the system: each iterate is moved to the peak
//! of I_* over independent dilations of its two components, then stepped
//! along the negative tangent gradient with an Armijo rule on the peak value.

use crate::error::{Error, Result};
use crate::system::{energy_istar, system_gradient, system_dual_norm, SystemState};

#[derive(Debug, Clone)]
pub struct LocalMinimax {
    pub state: SystemState,
    pub level: f64,
    pub dual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn dilate_pair(s: &SystemState, a: f64, b: f64) -> SystemState {
    let d = |u: &crate::grid::RadialFunction, x: f64| if x == 0.0 { u.clone() } else { u.dilated(x.exp()) };
    SystemState::normalized(&d(&s.u1, a), &d(&s.u2, b), s.params)
}

/// Nelder–Mead maximization of I_* over log-dilations (a, b) of the two
/// components. There is no optimization crate in the dependency set, and a
/// two-variable simplex is short.
fn peak(s: &SystemState) -> (SystemState, f64) {
    let f = |x: [f64; 2]| -energy_istar(&dilate_pair(s, x[0], x[1]));
    let mut simplex = [[0.0, 0.0], [0.1, 0.0], [0.0, 0.1]];
    let mut vals = simplex.map(f);
    for _ in 0..200 {
        let mut order = [0, 1, 2];
        order.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
        simplex = order.map(|i| simplex[i]);
        vals = order.map(|i| vals[i]);
        let size = (simplex[1][0] - simplex[0][0]).abs().max((simplex[1][1] - simplex[0][1]).abs())
            .max((simplex[2][0] - simplex[0][0]).abs())
            .max((simplex[2][1] - simplex[0][1]).abs());
        if size < 1e-7 || (vals[2] - vals[0]).abs() <= 1e-13 * vals[0].abs() {
            break;
        }
        let c = [0.5 * (simplex[0][0] + simplex[1][0]), 0.5 * (simplex[0][1] + simplex[1][1])];
        let along = |k: f64| [c[0] + k * (simplex[2][0] - c[0]), c[1] + k * (simplex[2][1] - c[1])];
        let xr = along(-1.0);
        let fr = f(xr);
        if fr < vals[0] {
            let xe = along(-2.0);
            let fe = f(xe);
            if fe < fr {
                simplex[2] = xe;
                vals[2] = fe;
            } else {
                simplex[2] = xr;
                vals[2] = fr;
            }
        } else if fr < vals[1] {
            simplex[2] = xr;
            vals[2] = fr;
        } else {
            let xc = if fr < vals[2] { along(-0.5) } else { along(0.5) };
            let fc = f(xc);
            if fc < vals[2].min(fr) {
                simplex[2] = xc;
                vals[2] = fc;
            } else {
                for k in 1..3 {
                    simplex[k] = [
                        0.5 * (simplex[0][0] + simplex[k][0]),
                        0.5 * (simplex[0][1] + simplex[k][1]),
                    ];
                    vals[k] = f(simplex[k]);
                }
            }
        }
    }
    let k = (0..3).min_by(|&i, &j| vals[i].total_cmp(&vals[j])).unwrap_or(0);
    (dilate_pair(s, simplex[k][0], simplex[k][1]), -vals[k])
}

/// Runs the descent from `start` until the tangent dual norm at the peak
/// falls below `tol` or `max_iter` steps have been taken.
pub fn local_minimax(start: &SystemState, tol: f64, max_iter: usize) -> Result<LocalMinimax> {
    if start.u1.is_zero() || start.u2.is_zero() {
        return Err(Error::InvalidArgument("local minimax needs two nonzero components".into()));
    }
    let (mut s, mut level) = peak(start);
    let mut tau: f64 = 1.0;
    let mut iterations = 0;
    let mut gn = system_dual_norm(&s)?;
    while iterations < max_iter && gn > tol {
        iterations += 1;
        let (g1, g2, _, _) = system_gradient(&s)?;
        let mut accepted = false;
        tau = (2.0 * tau).min(4.0);
        while tau > 1e-10 {
            let trial = SystemState::normalized(&s.u1.axpy(-tau, &g1), &s.u2.axpy(-tau, &g2), s.params);
            let (t, lt) = peak(&trial);
            if lt <= level - 0.1 * tau * gn * gn {
                s = t;
                level = lt;
                accepted = true;
                break;
            }
            tau *= 0.5;
        }
        if !accepted {
            break;
        }
        gn = system_dual_norm(&s)?;
    }
    Ok(LocalMinimax { converged: gn <= tol, state: s, level, dual_norm: gn, iterations })
}
