//! Radial grids, quadrature, the discrete Dirichlet form and resampling.
//!
//! Uniform grids use a fourth-order staggered difference for u' at cell
//! midpoints, with the regularity condition u'(0) = 0 imposed by even
//! reflection and the Dirichlet condition u(r_max) = 0 by odd reflection.
//! The Dirichlet form is the midpoint rule over these derivatives, so the
//! discrete energy is an honest quadrature of ½∫|∇u|² and its gradient is
//! the symmetric matrix K = DᵀCD. Graded grids fall back to P1 elements.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::banded::{BandLu, BandMatrix};
use crate::error::{Error, Result};

/// Surface area of the unit sphere in ℝᴺ.
pub fn sphere_area(dimension: usize) -> f64 {
    match dimension {
        2 => 2.0 * std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI,
        _ => f64::NAN,
    }
}

/// Volume of the ball of radius `r` in ℝᴺ.
pub fn ball_volume(dimension: usize, r: f64) -> f64 {
    sphere_area(dimension) * r.powi(dimension as i32) / dimension as f64
}

#[derive(Debug, Clone, Copy)]
struct EdgeRow {
    cols: [usize; 4],
    coefs: [f64; 4],
    len: usize,
    weight: f64,
}

impl EdgeRow {
    #[inline]
    fn apply(&self, u: &[f64]) -> f64 {
        let mut s = 0.0;
        for k in 0..self.len {
            s += self.coefs[k] * u[self.cols[k]];
        }
        s
    }
}

#[derive(Debug)]
pub struct RadialGrid {
    dimension: usize,
    r_max: f64,
    grading: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    edges: Vec<EdgeRow>,
    stiffness: BandMatrix,
}

/// Half bandwidth of the stiffness matrix on the free nodes.
pub(crate) const STIFFNESS_BAND: usize = 3;

pub fn make_grid(dimension: usize, r_max: f64, n: usize, grading: f64) -> Result<Arc<RadialGrid>> {
    if dimension != 2 && dimension != 3 {
        return Err(Error::InvalidGrid(format!("dimension must be 2 or 3, got {dimension}")));
    }
    if n < 64 {
        return Err(Error::InvalidGrid(format!("need at least 64 nodes, got {n}")));
    }
    if !(r_max > 0.0 && r_max.is_finite()) {
        return Err(Error::InvalidGrid(format!("r_max must be positive, got {r_max}")));
    }
    if !(grading >= 1.0 && grading.is_finite()) {
        return Err(Error::InvalidGrid(format!("grading must be >= 1, got {grading}")));
    }
    let grid = if grading == 1.0 {
        uniform(dimension, r_max, n)
    } else {
        graded(dimension, r_max, n, grading)
    };
    Ok(Arc::new(grid))
}

fn uniform(dim: usize, r_max: f64, n: usize) -> RadialGrid {
    let h = r_max / (n - 1) as f64;
    let s = sphere_area(dim);
    let nodes: Vec<f64> = (0..n).map(|i| if i == n - 1 { r_max } else { i as f64 * h }).collect();
    let pw = (dim - 1) as i32;
    let mut weights: Vec<f64> = nodes.iter().map(|r| s * h * r.powi(pw)).collect();
    weights[n - 1] *= 0.5;
    if dim == 2 {
        // Euler-Maclaurin end correction for the r·f(r) integrand at the origin
        weights[0] = s * h * h / 12.0;
    }
    fix_tail_moments(dim, r_max, &nodes, &mut weights);

    let free = n - 1;
    let c = 1.0 / (24.0 * h);
    let mut edges = Vec::with_capacity(free);
    for e in 0..free {
        // u_{e-1}, u_e, u_{e+1}, u_{e+2} with u_{-1} = u_1, u_n = -u_{n-2}, u_{n-1} = 0
        let raw = [(e as isize - 1, c), (e as isize, -27.0 * c), (e as isize + 1, 27.0 * c), (e as isize + 2, -c)];
        let mut cols = [0usize; 4];
        let mut coefs = [0.0; 4];
        let mut len = 0;
        for (j, v) in raw {
            let (jj, vv) = if j < 0 {
                (-j, v)
            } else if j as usize >= n {
                (2 * (n as isize - 1) - j, -v)
            } else {
                (j, v)
            };
            let jj = jj as usize;
            if jj >= free {
                continue;
            }
            if let Some(k) = cols[..len].iter().position(|&x| x == jj) {
                coefs[k] += vv;
            } else {
                cols[len] = jj;
                coefs[len] = vv;
                len += 1;
            }
        }
        let mid = (e as f64 + 0.5) * h;
        edges.push(EdgeRow { cols, coefs, len, weight: s * h * mid.powi(pw) });
    }
    let stiffness = assemble(&edges, free);
    RadialGrid { dimension: dim, r_max, grading: 1.0, nodes, weights, edges, stiffness }
}

/// Adjusts the last two weights so that ∫r^{N-1} and ∫r^N over the ball are exact.
/// The solutions vanish there, so the change is harmless and the volume becomes exact.
fn fix_tail_moments(dim: usize, r_max: f64, nodes: &[f64], w: &mut [f64]) {
    let n = nodes.len();
    let s = sphere_area(dim);
    let m0 = ball_volume(dim, r_max);
    let m1 = s * r_max.powi(dim as i32 + 1) / (dim as f64 + 1.0);
    let head0: f64 = w[..n - 2].iter().sum();
    let head1: f64 = w[..n - 2].iter().zip(nodes).map(|(a, r)| a * r).sum();
    let (ra, rb) = (nodes[n - 2], nodes[n - 1]);
    let (d0, d1) = (m0 - head0, m1 - head1);
    let wb = (d1 - ra * d0) / (rb - ra);
    w[n - 2] = d0 - wb;
    w[n - 1] = wb;
}

fn graded(dim: usize, r_max: f64, n: usize, grading: f64) -> RadialGrid {
    let s = sphere_area(dim);
    let cells = n - 1;
    let q = grading.powf(1.0 / (cells as f64 - 1.0));
    let h0 = r_max * (q - 1.0) / (q.powi(cells as i32) - 1.0);
    let mut nodes = Vec::with_capacity(n);
    let mut r = 0.0;
    nodes.push(0.0);
    for i in 0..cells {
        r += h0 * q.powi(i as i32);
        nodes.push(r);
    }
    nodes[n - 1] = r_max;
    let d = dim as f64;
    // exact P1 lumped weights: ∫ φ_i r^{N-1} dr on each adjacent cell
    let mut weights = vec![0.0; n];
    for e in 0..cells {
        let (a, b) = (nodes[e], nodes[e + 1]);
        let hh = b - a;
        let ma = (b.powf(d + 1.0) - a.powf(d + 1.0)) / (d + 1.0);
        let m0 = (b.powf(d) - a.powf(d)) / d;
        // ∫ (b-r)/h r^{N-1} and ∫ (r-a)/h r^{N-1}
        weights[e] += s * (b * m0 - ma) / hh;
        weights[e + 1] += s * (ma - a * m0) / hh;
    }
    let free = n - 1;
    let mut edges = Vec::with_capacity(free);
    for e in 0..cells {
        let (a, b) = (nodes[e], nodes[e + 1]);
        let hh = b - a;
        let wgt = s * (b.powf(d) - a.powf(d)) / d;
        let mut cols = [0usize; 4];
        let mut coefs = [0.0; 4];
        let mut len = 0;
        cols[len] = e;
        coefs[len] = -1.0 / hh;
        len += 1;
        if e + 1 < free {
            cols[len] = e + 1;
            coefs[len] = 1.0 / hh;
            len += 1;
        }
        edges.push(EdgeRow { cols, coefs, len, weight: wgt });
    }
    let stiffness = assemble(&edges, free);
    RadialGrid { dimension: dim, r_max, grading, nodes, weights, edges, stiffness }
}

fn assemble(edges: &[EdgeRow], free: usize) -> BandMatrix {
    let mut k = BandMatrix::zeros(free, STIFFNESS_BAND, STIFFNESS_BAND);
    for e in edges {
        for a in 0..e.len {
            for b in 0..e.len {
                k.add(e.cols[a], e.cols[b], e.weight * e.coefs[a] * e.coefs[b]);
            }
        }
    }
    k
}

impl RadialGrid {
    pub fn dimension(&self) -> usize {
        self.dimension
    }
    pub fn r_max(&self) -> f64 {
        self.r_max
    }
    pub fn grading(&self) -> f64 {
        self.grading
    }
    pub fn len(&self) -> usize {
        self.nodes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
    /// Number of unknowns (all nodes but the Dirichlet node at r_max).
    pub fn free(&self) -> usize {
        self.nodes.len() - 1
    }
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn is_uniform(&self) -> bool {
        self.grading == 1.0
    }
    pub fn min_spacing(&self) -> f64 {
        self.nodes[1] - self.nodes[0]
    }

    /// Σ wᵢ aᵢ bᵢ, the discrete L² pairing.
    pub fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        self.weights.iter().zip(a).zip(b).map(|((w, x), y)| w * x * y).sum()
    }

    /// Discrete ∫|∇u|².
    pub fn dirichlet(&self, u: &[f64]) -> f64 {
        self.edges.iter().map(|e| e.weight * e.apply(u).powi(2)).sum()
    }

    /// Discrete ∫∇a·∇b.
    pub fn dirichlet_pair(&self, a: &[f64], b: &[f64]) -> f64 {
        self.edges.iter().map(|e| e.weight * e.apply(a) * e.apply(b)).sum()
    }

    /// K u on the free nodes, padded with a zero Dirichlet entry.
    pub fn apply_stiffness(&self, u: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.len()];
        for e in &self.edges {
            let d = e.weight * e.apply(u);
            for k in 0..e.len {
                y[e.cols[k]] += e.coefs[k] * d;
            }
        }
        y
    }

    pub(crate) fn stiffness(&self) -> &BandMatrix {
        &self.stiffness
    }

    /// Factorization of `a·K + c·W` on the free nodes.
    pub fn metric_operator(&self, a: f64, c: f64) -> Result<MetricOperator> {
        let free = self.free();
        let mut m = BandMatrix::zeros(free, STIFFNESS_BAND, STIFFNESS_BAND);
        for i in 0..free {
            for j in i.saturating_sub(STIFFNESS_BAND)..=(i + STIFFNESS_BAND).min(free - 1) {
                let v = self.stiffness.get(i, j);
                if v != 0.0 {
                    m.add(i, j, a * v);
                }
            }
            m.add(i, i, c * self.weights[i]);
        }
        Ok(MetricOperator { lu: m.factor()?, a, c })
    }

    /// Locates the cell containing `x` (clamped to the grid).
    fn cell(&self, x: f64) -> usize {
        let n = self.len();
        if self.is_uniform() {
            let h = self.nodes[1];
            ((x / h) as usize).min(n - 2)
        } else {
            self.nodes.partition_point(|&r| r <= x).saturating_sub(1).min(n - 2)
        }
    }
}

/// A factored operator `a·K + c·W`, the Riesz map of the metric a‖∇v‖² + c‖v‖².
#[derive(Debug, Clone)]
pub struct MetricOperator {
    lu: BandLu,
    a: f64,
    c: f64,
}

impl MetricOperator {
    /// Solves (aK + cW) x = rhs for a weak right-hand side (a covector); x[n-1] = 0.
    pub fn solve_weak(&self, rhs: &[f64]) -> Vec<f64> {
        let free = self.lu.dim();
        let mut x = rhs[..free].to_vec();
        self.lu.solve_in_place(&mut x);
        x.push(0.0);
        x
    }
    pub fn coefficients(&self) -> (f64, f64) {
        (self.a, self.c)
    }
}

/// A radial function sampled on a grid, with u(r_max) = 0.
#[derive(Debug, Clone)]
pub struct RadialFunction {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
}

impl RadialFunction {
    pub fn new(grid: Arc<RadialGrid>, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite value at node {i}")));
        }
        let n = values.len();
        values[n - 1] = 0.0;
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: &Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Self {
        let n = grid.len();
        let mut values: Vec<f64> = grid.nodes().iter().map(|&r| f(r)).collect();
        values[n - 1] = 0.0;
        Self { grid: grid.clone(), values }
    }

    pub fn zeros(grid: &Arc<RadialGrid>) -> Self {
        Self { grid: grid.clone(), values: vec![0.0; grid.len()] }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
    pub(crate) fn with_values(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.grid.len());
        Self { grid: self.grid.clone(), values }
    }

    /// ‖u‖₂².
    pub fn mass(&self) -> f64 {
        self.grid.dot(&self.values, &self.values)
    }

    pub fn l2_dot(&self, other: &RadialFunction) -> f64 {
        self.grid.dot(&self.values, &other.values)
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.with_values(self.values.iter().map(|v| c * v).collect())
    }

    pub fn neg(&self) -> Self {
        self.with_values(self.values.iter().map(|v| -v).collect())
    }

    pub fn axpy(&self, a: f64, x: &RadialFunction) -> Self {
        self.with_values(self.values.iter().zip(&x.values).map(|(u, v)| u + a * v).collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// The mass-preserving dilation t^{N/2} u(t r), by monotone cubic
    /// interpolation, zero beyond r_max.
    pub fn dilated(&self, t: f64) -> Self {
        if t == 1.0 {
            return self.clone();
        }
        let g = &self.grid;
        let n = g.len();
        let amp = t.powf(g.dimension() as f64 / 2.0);
        let slopes = pchip_slopes(g.nodes(), &self.values);
        let mut out = vec![0.0; n];
        for (o, &r) in out.iter_mut().zip(g.nodes()).take(n - 1) {
            let x = t * r;
            if x < g.r_max() {
                *o = amp * hermite_eval(g, &self.values, &slopes, x);
            }
        }
        self.with_values(out)
    }

    /// Evaluates the monotone cubic interpolant at arbitrary radii.
    pub fn eval_at(&self, radii: &[f64]) -> Vec<f64> {
        let slopes = pchip_slopes(self.grid.nodes(), &self.values);
        radii
            .iter()
            .map(|&x| if x >= self.grid.r_max() || x < 0.0 { 0.0 } else { hermite_eval(&self.grid, &self.values, &slopes, x) })
            .collect()
    }
}

fn hermite_eval(g: &RadialGrid, y: &[f64], d: &[f64], x: f64) -> f64 {
    let nodes = g.nodes();
    let i = g.cell(x);
    let (a, b) = (nodes[i], nodes[i + 1]);
    let h = b - a;
    let s = ((x - a) / h).clamp(0.0, 1.0);
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    h00 * y[i] + h10 * h * d[i] + h01 * y[i + 1] + h11 * h * d[i + 1]
}

/// Fritsch–Butland slopes; the even extension at r = 0 forces a zero slope there.
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let del: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        let (a, b) = (del[i - 1], del[i]);
        if a * b > 0.0 {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / a + w2 / b);
        }
    }
    // one-sided three-point end slope, limited to preserve shape
    let (h0, h1) = (h[n - 2], h[n - 3]);
    let (d0, d1) = (del[n - 2], del[n - 3]);
    let mut e = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if e * d0 <= 0.0 {
        e = 0.0;
    } else if d0 * d1 <= 0.0 && e.abs() > 3.0 * d0.abs() {
        e = 3.0 * d0;
    }
    d[n - 1] = e;
    d
}

/// Discrete Lᵖ norm (∫|u|ᵖ)^{1/p}.
pub fn lp_norm(u: &RadialFunction, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidArgument(format!("p must be >= 1, got {p}")));
    }
    Ok(lp_power(u, p).powf(1.0 / p))
}

/// ∫|u|ᵖ without the root.
pub fn lp_power(u: &RadialFunction, p: f64) -> f64 {
    let w = u.grid.weights();
    let v = &u.values;
    if p == 2.0 {
        return u.mass();
    }
    if p == 4.0 {
        return w.iter().zip(v).map(|(w, x)| w * (x * x) * (x * x)).sum();
    }
    w.iter().zip(v).map(|(w, x)| w * x.abs().powf(p)).sum()
}

pub fn grad_norm_sq(u: &RadialFunction) -> f64 {
    u.grid.dirichlet(&u.values)
}

/// Solves (−Δ + c) w = f with w'(0) = 0, w(r_max) = 0.
pub fn h1_precondition(f: &RadialFunction, c: f64) -> Result<RadialFunction> {
    if !(c > 0.0) {
        return Err(Error::InvalidArgument(format!("c must be positive, got {c}")));
    }
    let g = &f.grid;
    let op = g.metric_operator(1.0, c)?;
    let rhs: Vec<f64> = g.weights().iter().zip(&f.values).map(|(w, v)| w * v).collect();
    Ok(f.with_values(op.solve_weak(&rhs)))
}

/// Critical Sobolev exponent 2N/(N−2), infinite in the plane.
pub fn critical_exponent(dimension: usize) -> f64 {
    if dimension <= 2 {
        f64::INFINITY
    } else {
        2.0 * dimension as f64 / (dimension as f64 - 2.0)
    }
}

/// Gagliardo–Nirenberg quotient ‖u‖ₚᵖ / (‖∇u‖₂^{p'} ‖u‖₂^{p−p'}), p' = (p−2)N/2.
pub fn gn_ratio(u: &RadialFunction, p: f64) -> Result<f64> {
    let dim = u.grid.dimension();
    if !(p > 2.0 && p < critical_exponent(dim)) {
        return Err(Error::InvalidArgument(format!("p = {p} outside (2, 2*)")));
    }
    if u.is_zero() {
        return Err(Error::InvalidArgument("gn_ratio of the zero function".into()));
    }
    let pp = (p - 2.0) * dim as f64 / 2.0;
    let a = grad_norm_sq(u).sqrt();
    let m = u.mass().sqrt();
    Ok(lp_power(u, p) / (a.powf(pp) * m.powf(p - pp)))
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GridSpec {
    pub dimension: usize,
    pub r_max: f64,
    pub n: usize,
    pub grading: f64,
}

impl GridSpec {
    pub fn of(g: &RadialGrid) -> Self {
        Self { dimension: g.dimension(), r_max: g.r_max(), n: g.len(), grading: g.grading() }
    }
    pub fn build(&self) -> Result<Arc<RadialGrid>> {
        make_grid(self.dimension, self.r_max, self.n, self.grading)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FunctionSnapshot {
    grid: GridSpec,
    values: Vec<f64>,
}

impl RadialFunction {
    /// CSV with columns `r,value`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,value\n");
        for (r, v) in self.grid.nodes().iter().zip(&self.values) {
            s.push_str(&format!("{r:.16e},{v:.16e}\n"));
        }
        s
    }

    pub fn from_csv(grid: &Arc<RadialGrid>, text: &str) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len());
        for (k, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let v = line
                .split(',')
                .nth(1)
                .and_then(|x| x.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::Parse(format!("bad csv row {}", k + 1)))?;
            values.push(v);
        }
        Self::new(grid.clone(), values)
    }

    pub fn to_json(&self) -> String {
        let snap = FunctionSnapshot { grid: GridSpec::of(&self.grid), values: self.values.clone() };
        serde_json::to_string(&snap).expect("snapshot serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let snap: FunctionSnapshot = serde_json::from_str(text)?;
        Self::new(snap.grid.build()?, snap.values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_reproduce_ball_volume() {
        for (dim, n, grading) in [(3, 4096, 1.0), (2, 1024, 1.0), (3, 1000, 1.2), (2, 300, 3.0)] {
            let g = make_grid(dim, 20.0, n, grading).unwrap();
            let total: f64 = g.weights().iter().sum();
            let exact = ball_volume(dim, 20.0);
            assert!(((total - exact) / exact).abs() < 1e-10, "{dim} {n} {grading}");
            assert!(g.weights().iter().all(|&w| w >= 0.0));
        }
    }

    #[test]
    fn linear_moment_exact() {
        for dim in [2, 3] {
            let g = make_grid(dim, 7.0, 500, 1.0).unwrap();
            let m1: f64 = g.weights().iter().zip(g.nodes()).map(|(w, r)| w * r).sum();
            let exact = sphere_area(dim) * 7f64.powi(dim as i32 + 1) / (dim as f64 + 1.0);
            assert!(((m1 - exact) / exact).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(make_grid(4, 20.0, 4096, 1.0).is_err());
        assert!(make_grid(3, 20.0, 32, 1.0).is_err());
        assert!(make_grid(3, 20.0, 100, 0.5).is_err());
    }

    #[test]
    fn stiffness_matches_quadratic_form() {
        let g = make_grid(3, 10.0, 200, 1.0).unwrap();
        let u = RadialFunction::from_fn(&g, |r| (-(r * r) / 3.0).exp() * (1.0 + r.sin()));
        let ku = g.apply_stiffness(u.values());
        let q: f64 = ku.iter().zip(u.values()).map(|(a, b)| a * b).sum();
        assert!((q - grad_norm_sq(&u)).abs() < 1e-10 * q);
        let band = g.stiffness().matvec(&u.values()[..g.free()]);
        for (a, b) in band.iter().zip(&ku) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn pchip_zero_slope_at_origin_and_reproduces_nodes() {
        let g = make_grid(3, 10.0, 128, 1.0).unwrap();
        let u = RadialFunction::from_fn(&g, |r| (-r * r).exp());
        let d = pchip_slopes(g.nodes(), u.values());
        assert_eq!(d[0], 0.0);
        let back = u.eval_at(&g.nodes()[..127]);
        for (a, b) in back.iter().zip(u.values()) {
            assert!((a - b).abs() < 1e-15);
        }
    }
}
