//! Joint zeros of a planar map on [0,1]² located by winding numbers.
//!
//! The winding number of F = (F₁, F₂) around 0 along the boundary of a
//! rectangle equals the Brouwer degree, so a rectangle with nonzero winding
//! contains a zero. Cells of the node grid are scanned first, then the
//! selected cell is quartered until the residual is small, with a few
//! Newton steps to finish.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::surface::SurfaceOnProduct;
use crate::error::{Error, Result};
use crate::system::component_ip;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointZero {
    pub s: f64,
    pub t: f64,
    pub residual: (f64, f64),
    /// Winding number of the map along the full boundary.
    pub winding: i32,
    pub evaluations: usize,
}

struct Counted<F> {
    f: F,
    calls: std::cell::Cell<usize>,
}

impl<F: Fn(f64, f64) -> (f64, f64)> Counted<F> {
    fn eval(&self, s: f64, t: f64) -> (f64, f64) {
        self.calls.set(self.calls.get() + 1);
        (self.f)(s, t)
    }
}

enum Winding {
    Count(i32),
    /// The map vanishes exactly at a sampled point.
    Hit(f64, f64),
}

fn wrap(mut d: f64) -> f64 {
    while d > PI {
        d -= 2.0 * PI;
    }
    while d < -PI {
        d += 2.0 * PI;
    }
    d
}

/// Angle swept by F along the segment p→q, refined until each step turns by
/// less than a quarter turn.
fn segment_angle<F: Fn(f64, f64) -> (f64, f64)>(
    f: &Counted<F>,
    p: (f64, f64),
    fp: (f64, f64),
    q: (f64, f64),
    fq: (f64, f64),
    depth: usize,
) -> std::result::Result<f64, (f64, f64)> {
    let d = wrap(fq.1.atan2(fq.0) - fp.1.atan2(fp.0));
    if d.abs() <= 0.5 * PI || depth >= 24 {
        return Ok(d);
    }
    let m = (0.5 * (p.0 + q.0), 0.5 * (p.1 + q.1));
    let fm = f.eval(m.0, m.1);
    if fm == (0.0, 0.0) {
        return Err(m);
    }
    Ok(segment_angle(f, p, fp, m, fm, depth + 1)? + segment_angle(f, m, fm, q, fq, depth + 1)?)
}

/// Winding number along the counterclockwise boundary of the rectangle
/// [s0,s1]×[t0,t1], sampled at `per_side` segments per side.
fn rectangle_winding<F: Fn(f64, f64) -> (f64, f64)>(
    f: &Counted<F>,
    (s0, s1): (f64, f64),
    (t0, t1): (f64, f64),
    per_side: usize,
) -> Winding {
    let mut pts = Vec::with_capacity(4 * per_side);
    for k in 0..per_side {
        pts.push((s0 + (s1 - s0) * k as f64 / per_side as f64, t0));
    }
    for k in 0..per_side {
        pts.push((s1, t0 + (t1 - t0) * k as f64 / per_side as f64));
    }
    for k in 0..per_side {
        pts.push((s1 - (s1 - s0) * k as f64 / per_side as f64, t1));
    }
    for k in 0..per_side {
        pts.push((s0, t1 - (t1 - t0) * k as f64 / per_side as f64));
    }
    let vals: Vec<(f64, f64)> = pts.iter().map(|p| f.eval(p.0, p.1)).collect();
    if let Some(k) = vals.iter().position(|v| *v == (0.0, 0.0)) {
        return Winding::Hit(pts[k].0, pts[k].1);
    }
    let mut total = 0.0;
    for k in 0..pts.len() {
        let j = (k + 1) % pts.len();
        match segment_angle(f, pts[k], vals[k], pts[j], vals[j], 0) {
            Ok(a) => total += a,
            Err(p) => return Winding::Hit(p.0, p.1),
        }
    }
    Winding::Count((total / (2.0 * PI)).round() as i32)
}

/// Winding number of F around 0 along ∂[0,1]², sampled at the node grid.
pub fn boundary_winding<F: Fn(f64, f64) -> (f64, f64)>(f: F, ns: usize, nt: usize) -> i32 {
    let c = Counted { f, calls: Default::default() };
    match rectangle_winding(&c, (0.0, 1.0), (0.0, 1.0), ns.max(nt).max(2) - 1) {
        Winding::Count(w) => w,
        // a zero on the boundary: the degree is not defined there
        Winding::Hit(..) => 0,
    }
}

/// Finds (s,t) ∈ [0,1]² with F(s,t) = 0 to the tolerance decided by
/// `accept`, scanning an ns×nt cell grid.
pub fn find_joint_zero<F, A>(f: F, ns: usize, nt: usize, accept: A) -> Result<JointZero>
where
    F: Fn(f64, f64) -> (f64, f64),
    A: Fn(f64, f64, (f64, f64)) -> bool,
{
    let c = Counted { f, calls: Default::default() };
    let (ns, nt) = (ns.max(2), nt.max(2));
    let done = |s: f64, t: f64, w: i32, c: &Counted<F>| {
        let r = c.eval(s, t);
        JointZero { s, t, residual: r, winding: w, evaluations: c.calls.get() }
    };
    let winding = match rectangle_winding(&c, (0.0, 1.0), (0.0, 1.0), ns.max(nt) - 1) {
        Winding::Count(0) => {
            return Err(Error::InvalidArgument(
                "the boundary winding number of (P1, P2) is zero; the surface is not admissible".into(),
            ))
        }
        Winding::Count(w) => w,
        Winding::Hit(s, t) => return Ok(done(s, t, 0, &c)),
    };
    let (hs, ht) = (1.0 / (ns - 1) as f64, 1.0 / (nt - 1) as f64);
    let mut cell = None;
    'scan: for j in 0..nt - 1 {
        for i in 0..ns - 1 {
            let (s0, t0) = (i as f64 * hs, j as f64 * ht);
            match rectangle_winding(&c, (s0, s0 + hs), (t0, t0 + ht), 1) {
                Winding::Count(0) => {}
                Winding::Count(_) => {
                    cell = Some((s0, s0 + hs, t0, t0 + ht));
                    break 'scan;
                }
                Winding::Hit(s, t) => return Ok(done(s, t, winding, &c)),
            }
        }
    }
    let (mut s0, mut s1, mut t0, mut t1) = cell.ok_or_else(|| {
        Error::Resolution("no grid cell carries the boundary winding; the map is underresolved".into())
    })?;
    for level in 0..60 {
        let (sm, tm) = (0.5 * (s0 + s1), 0.5 * (t0 + t1));
        let r = c.eval(sm, tm);
        if accept(sm, tm, r) {
            return Ok(done(sm, tm, winding, &c));
        }
        if level >= 6 {
            if let Some((s, t)) = newton_finish(&c, (sm, tm), (s0, s1, t0, t1), &accept) {
                return Ok(done(s, t, winding, &c));
            }
        }
        let quads = [(s0, sm, t0, tm), (sm, s1, t0, tm), (s0, sm, tm, t1), (sm, s1, tm, t1)];
        let mut next = None;
        for q in quads {
            match rectangle_winding(&c, (q.0, q.1), (q.2, q.3), 1) {
                Winding::Count(0) => {}
                Winding::Count(_) => {
                    next = Some(q);
                    break;
                }
                Winding::Hit(s, t) => return Ok(done(s, t, winding, &c)),
            }
        }
        match next {
            Some(q) => (s0, s1, t0, t1) = q,
            None => break,
        }
    }
    let (sm, tm) = (0.5 * (s0 + s1), 0.5 * (t0 + t1));
    let z = done(sm, tm, winding, &c);
    if accept(sm, tm, z.residual) {
        Ok(z)
    } else {
        Err(Error::Resolution(format!(
            "joint zero not resolved: residual ({:.3e}, {:.3e}) at ({sm:.12}, {tm:.12})",
            z.residual.0, z.residual.1
        )))
    }
}

/// Newton steps with a finite-difference Jacobian, confined to `cell`.
fn newton_finish<F, A>(
    c: &Counted<F>,
    start: (f64, f64),
    cell: (f64, f64, f64, f64),
    accept: &A,
) -> Option<(f64, f64)>
where
    F: Fn(f64, f64) -> (f64, f64),
    A: Fn(f64, f64, (f64, f64)) -> bool,
{
    let (s0, s1, t0, t1) = cell;
    let hs = 1e-3 * (s1 - s0);
    let ht = 1e-3 * (t1 - t0);
    let (mut s, mut t) = start;
    for _ in 0..6 {
        let r = c.eval(s, t);
        if accept(s, t, r) {
            return Some((s, t));
        }
        let rs = c.eval(s + hs, t);
        let rt = c.eval(s, t + ht);
        let (a, b) = ((rs.0 - r.0) / hs, (rt.0 - r.0) / ht);
        let (d, e) = ((rs.1 - r.1) / hs, (rt.1 - r.1) / ht);
        let det = a * e - b * d;
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        s -= (e * r.0 - b * r.1) / det;
        t -= (a * r.1 - d * r.0) / det;
        if !(s >= s0 && s <= s1 && t >= t0 && t <= t1) {
            return None;
        }
    }
    let r = c.eval(s, t);
    accept(s, t, r).then_some((s, t))
}

/// A point of the surface where both component Pohozaev functionals vanish,
/// to max(|P₁|,|P₂|) ≤ 1e−6·(‖∇u₁‖² + ‖∇u₂‖²).
pub fn degree_intersection(surface: &SurfaceOnProduct) -> Result<JointZero> {
    let p = *surface.params();
    let eval = |s: f64, t: f64| {
        let st = surface.at(s, t);
        let (_, p1) = component_ip(&st.u1, p.mu1);
        let (_, p2) = component_ip(&st.u2, p.mu2);
        ((p1, p2), st.kinetic())
    };
    let (ns, nt) = surface.size();
    find_joint_zero(|s, t| eval(s, t).0, ns, nt, |s, t, r| {
        let scale = eval(s, t).1;
        r.0.abs().max(r.1.abs()) <= 1e-6 * scale
    })
}
