//! Geometry of the mass sphere S_m = {‖u‖₂² = m}: retraction, tangent Riesz
//! representatives and seed functions.

use std::sync::Arc;

use rand::Rng;

use crate::grid::{MetricOperator, RadialFunction, RadialGrid};

/// Renormalizes onto S_m.
pub fn retract(u: &RadialFunction, m: f64) -> RadialFunction {
    let mass = u.mass();
    u.scaled((m / mass).sqrt())
}

/// Relative mass defect |‖u‖² − m| / m.
pub fn mass_defect(u: &RadialFunction, m: f64) -> f64 {
    ((u.mass() - m) / m).abs()
}

/// Riesz representative, in the metric of `op`, of the covector `e`
/// restricted to the tangent space {v : ⟨v, u⟩_{L²} = 0}.
///
/// Returns the representative and its squared metric norm.
pub(crate) fn tangent_riesz(grid: &RadialGrid, op: &MetricOperator, u: &[f64], e: &[f64]) -> (Vec<f64>, f64) {
    let w = grid.weights();
    let wu: Vec<f64> = w.iter().zip(u).map(|(a, b)| a * b).collect();
    let gfull = op.solve_weak(e);
    let z = op.solve_weak(&wu);
    let alpha = dot(&wu, &gfull) / dot(&wu, &z);
    let g: Vec<f64> = gfull.iter().zip(&z).map(|(a, b)| a - alpha * b).collect();
    // the metric norm of g itself; pairing g with e would cancel badly near critical points
    let (a, c) = op.coefficients();
    let norm2 = a * grid.dirichlet(&g) + c * grid.dot(&g, &g);
    (g, norm2)
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A random smooth positive bump profile: a sum of up to three Gaussians.
pub fn random_profile<R: Rng>(grid: &Arc<RadialGrid>, rng: &mut R) -> RadialFunction {
    let z = seed_scale(grid);
    let k = rng.gen_range(1..=3);
    let bumps: Vec<(f64, f64, f64)> = (0..k)
        .map(|_| (rng.gen_range(0.2..1.0), rng.gen_range(0.0..2.5), rng.gen_range(0.8..2.5)))
        .collect();
    RadialFunction::from_fn(grid, |r| {
        let r = r * z;
        bumps.iter().map(|&(c, r0, s)| c * (-((r - r0) / s).powi(2)).exp()).sum::<f64>()
    })
}

/// Seeds are sized for a domain of radius 20; smaller domains compress them
/// so they still decay well inside the box.
pub(crate) fn seed_scale(grid: &RadialGrid) -> f64 {
    (20.0 / grid.r_max()).max(1.0)
}

/// A random tangent direction at `u` (L²-orthogonal to u), smooth and decaying.
pub fn random_tangent<R: Rng>(u: &RadialFunction, rng: &mut R) -> RadialFunction {
    let grid = u.grid();
    let c: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let s = rng.gen_range(1.0..2.5);
    let z = seed_scale(grid);
    let v = RadialFunction::from_fn(grid, |r| {
        let x = r * z / s;
        (-(x * x)).exp() * (c[0] + c[1] * x + c[2] * x * x + c[3] * (3.0 * x).cos())
    });
    let a = v.l2_dot(u) / u.mass();
    v.axpy(-a, u)
}
