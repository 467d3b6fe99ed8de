//! Discrete Lagrangian action on piecewise-linear loops.
//!
//! Kinetic energy is integrated exactly on each linear piece; the potential
//! `U = Σ_{i<j} m_i m_j / |q_i − q_j|` uses the periodic trapezoid rule. With
//! this discretisation `∂A/∂q_s = −h (m q̈_s − ∂U/∂q_s)` where `q̈_s` is the
//! central second difference, so the central-difference residual of a
//! discrete critical point vanishes.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::constraints;
use crate::error::{ChoreoError, Result};
use crate::exec::Exec;
use crate::model::{ActionReport, ConstraintFlags, FullLoop, FundamentalArc, Omega};
use crate::symmetry::ReconstructionMap;
use crate::vec3::{self, Vec3};

/// Potential and its gradient at one configuration.
pub fn potential_and_gradient(pos: &[Vec3], masses: &[f64], grad: &mut [Vec3]) -> (f64, f64) {
    let mut u = 0.0;
    let mut min_r = f64::INFINITY;
    grad.iter_mut().for_each(|g| *g = [0.0; 3]);
    for i in 0..pos.len() {
        for j in i + 1..pos.len() {
            let d = vec3::sub(pos[i], pos[j]);
            let r2 = vec3::norm2(d);
            let r = r2.sqrt();
            min_r = min_r.min(r);
            let mm = masses[i] * masses[j];
            u += mm / r;
            let c = mm / (r2 * r);
            for a in 0..3 {
                grad[i][a] -= c * d[a];
                grad[j][a] += c * d[a];
            }
        }
    }
    (u, min_r)
}

pub fn potential(pos: &[Vec3], masses: &[f64]) -> f64 {
    let mut u = 0.0;
    for i in 0..pos.len() {
        for j in i + 1..pos.len() {
            u += masses[i] * masses[j] / vec3::norm(vec3::sub(pos[i], pos[j]));
        }
    }
    u
}

/// Action terms and optionally the gradient with respect to every loop sample.
#[derive(Clone, Debug)]
pub struct LoopEval {
    pub kinetic: f64,
    pub potential: f64,
    pub min_distance: f64,
    /// Same layout as `FullLoop::positions`; empty unless requested.
    pub gradient: Vec<Vec3>,
}

impl LoopEval {
    pub fn action(&self) -> f64 {
        self.kinetic + self.potential
    }
}

pub fn evaluate_loop(lp: &FullLoop, with_gradient: bool, exec: Exec) -> LoopEval {
    let nb = lp.bodies();
    let sc = lp.sample_count;
    let h = lp.step();
    let m = &lp.masses.masses;
    let rows: Vec<(f64, f64, f64, Vec<Vec3>)> = exec.map(sc, |s| {
        let cur = &lp.positions[s * nb..(s + 1) * nb];
        let nxt = (s + 1) % sc;
        let prv = (s + sc - 1) % sc;
        let mut kin = 0.0;
        for (i, &q) in cur.iter().enumerate() {
            kin += 0.5 * m[i] * vec3::norm2(vec3::sub(lp.at(nxt, i), q)) / h;
        }
        let mut g = vec![[0.0; 3]; nb];
        let (u, min_r) = potential_and_gradient(cur, m, &mut g);
        if with_gradient {
            for (i, gi) in g.iter_mut().enumerate() {
                let lap = vec3::sub(vec3::scale(cur[i], 2.0), vec3::add(lp.at(nxt, i), lp.at(prv, i)));
                *gi = vec3::add(vec3::scale(lap, m[i] / h), vec3::scale(*gi, h));
            }
        } else {
            g.clear();
        }
        (kin, h * u, min_r, g)
    });
    let mut out = LoopEval {
        kinetic: 0.0,
        potential: 0.0,
        min_distance: f64::INFINITY,
        gradient: Vec::with_capacity(if with_gradient { nb * sc } else { 0 }),
    };
    for (k, u, r, g) in rows {
        out.kinetic += k;
        out.potential += u;
        out.min_distance = out.min_distance.min(r);
        out.gradient.extend(g);
    }
    out
}

/// `A(b) − A(a)` for two loops on the same grid, summed term by term so the
/// result carries relative rather than absolute rounding error.
pub fn action_difference(a: &FullLoop, b: &FullLoop, exec: Exec) -> Result<f64> {
    if a.sample_count != b.sample_count || a.bodies() != b.bodies() {
        return Err(ChoreoError::Shape("loops differ in shape".into()));
    }
    let nb = a.bodies();
    let sc = a.sample_count;
    let h = a.step();
    let m = &a.masses.masses;
    let rows: Vec<f64> = exec.map(sc, |s| {
        let nxt = (s + 1) % sc;
        let mut kin = 0.0;
        let mut pot = 0.0;
        // per-sample displacements b − a are exact for nearby loops
        let moved = |t: usize, i: usize| vec3::sub(b.at(t, i), a.at(t, i));
        for i in 0..nb {
            let da = vec3::sub(a.at(nxt, i), a.at(s, i));
            let db = vec3::sub(b.at(nxt, i), b.at(s, i));
            let dd = vec3::sub(moved(nxt, i), moved(s, i));
            kin += m[i] * vec3::dot(dd, vec3::add(db, da));
            for j in i + 1..nb {
                let pa = vec3::sub(a.at(s, i), a.at(s, j));
                let pb = vec3::sub(b.at(s, i), b.at(s, j));
                let (ra, rb) = (vec3::norm(pa), vec3::norm(pb));
                let dp = vec3::sub(moved(s, j), moved(s, i));
                // ra − rb without cancellation
                let dr = vec3::dot(dp, vec3::add(pa, pb)) / (ra + rb);
                pot += m[i] * m[j] * dr / (ra * rb);
            }
        }
        0.5 * kin / h + h * pot
    });
    Ok(rows.iter().sum())
}

/// Action report for an arbitrary loop; constraint flags stay unset.
pub fn action_value(lp: &FullLoop) -> ActionReport {
    let e = evaluate_loop(lp, true, Exec::default());
    let g = e.gradient.iter().flat_map(|v| v.iter()).fold(0.0f64, |a, b| a.max(b.abs()));
    ActionReport {
        kinetic: e.kinetic,
        potential: e.potential,
        action: e.action(),
        gradient_inf_norm: g,
        min_distance: e.min_distance,
        flags: ConstraintFlags::default(),
    }
}

/// Indices of the two coordinates pinned by the boundary identities:
/// `y` at the first node and `x` at the last.
pub fn pinned(intervals: usize) -> [usize; 2] {
    [1, 3 * intervals]
}

pub fn free_len(intervals: usize) -> usize {
    3 * (intervals + 1) - 2
}

pub fn arc_to_free(arc: &FundamentalArc) -> Vec<f64> {
    let [p0, p1] = pinned(arc.intervals());
    arc.nodes
        .iter()
        .flat_map(|p| p.iter().copied())
        .enumerate()
        .filter(|&(k, _)| k != p0 && k != p1)
        .map(|(_, v)| v)
        .collect()
}

pub fn free_to_arc(n: usize, intervals: usize, free: &[f64]) -> FundamentalArc {
    let [p0, p1] = pinned(intervals);
    let mut it = free.iter();
    let mut flat = Vec::with_capacity(3 * (intervals + 1));
    for k in 0..3 * (intervals + 1) {
        flat.push(if k == p0 || k == p1 { 0.0 } else { *it.next().expect("free vector too short") });
    }
    FundamentalArc { n, nodes: flat.chunks(3).map(|c| [c[0], c[1], c[2]]).collect() }
}

/// Action and gradient as functions of the fundamental arc.
#[derive(Clone, Debug)]
pub struct ArcAction {
    map: ReconstructionMap,
    pub exec: Exec,
}

#[derive(Clone, Debug)]
pub struct ArcEval {
    pub kinetic: f64,
    pub potential: f64,
    pub min_distance: f64,
    /// `∂A/∂(arc node)`, one vector per node, pinned coordinates included.
    pub gradient: Vec<Vec3>,
}

impl ArcEval {
    pub fn action(&self) -> f64 {
        self.kinetic + self.potential
    }

    /// Gradient restricted to the free coordinates.
    pub fn free_gradient(&self) -> Vec<f64> {
        let arc = FundamentalArc { n: 0, nodes: self.gradient.clone() };
        arc_to_free(&arc)
    }
}

impl ArcAction {
    pub fn new(n: usize, intervals: usize, exec: Exec) -> Result<Self> {
        Ok(Self { map: ReconstructionMap::new(n, intervals)?, exec })
    }

    pub fn n(&self) -> usize {
        self.map.n
    }

    pub fn intervals(&self) -> usize {
        self.map.intervals
    }

    pub fn map(&self) -> &ReconstructionMap {
        &self.map
    }

    pub fn evaluate(&self, arc: &FundamentalArc, with_gradient: bool) -> Result<ArcEval> {
        let lp = self.map.full_loop(arc)?;
        let e = evaluate_loop(&lp, with_gradient, self.exec);
        let mut gradient = Vec::new();
        if with_gradient {
            gradient = vec![[0.0; 3]; arc.nodes.len()];
            for (&(k, f), g) in self.map.entries.iter().zip(&e.gradient) {
                gradient[k] = vec3::add(gradient[k], f.apply(*g));
            }
        }
        Ok(ArcEval { kinetic: e.kinetic, potential: e.potential, min_distance: e.min_distance, gradient })
    }

    /// `A(b) − A(a)`; see [`action_difference`].
    pub fn difference(&self, a: &FundamentalArc, b: &FundamentalArc) -> Result<f64> {
        action_difference(&self.map.full_loop(a)?, &self.map.full_loop(b)?, self.exec)
    }

    pub fn value(&self, arc: &FundamentalArc) -> Result<f64> {
        Ok(self.evaluate(arc, false)?.action())
    }
}

/// Free-coordinate gradient of the action of the reconstructed loop.
pub fn action_gradient(arc: &FundamentalArc) -> Result<Vec<f64>> {
    Ok(ArcAction::new(arc.n, arc.intervals(), Exec::default())?.evaluate(arc, true)?.free_gradient())
}

fn check_collision_free(lp: &FullLoop) -> Result<()> {
    let d = lp.min_distance();
    if d <= 0.0 || !d.is_finite() {
        return Err(ChoreoError::Collision { distance: d, guard: 0.0 });
    }
    Ok(())
}

/// `max_{s,i} |m_i q̈_i(t_s) − ∂U/∂q_i|` with central second differences.
pub fn el_residual(lp: &FullLoop) -> Result<f64> {
    check_collision_free(lp)?;
    let nb = lp.bodies();
    let sc = lp.sample_count;
    let h = lp.step();
    let m = &lp.masses.masses;
    let mut g = vec![[0.0; 3]; nb];
    let mut worst = 0.0f64;
    for s in 0..sc {
        let cur = &lp.positions[s * nb..(s + 1) * nb];
        potential_and_gradient(cur, m, &mut g);
        for i in 0..nb {
            let acc = vec3::scale(
                vec3::sub(vec3::add(lp.at((s + 1) % sc, i), lp.at((s + sc - 1) % sc, i)), vec3::scale(cur[i], 2.0)),
                1.0 / (h * h),
            );
            worst = worst.max(vec3::norm(vec3::sub(vec3::scale(acc, m[i]), g[i])));
        }
    }
    Ok(worst)
}

/// Same residual with the acceleration of the trigonometric interpolant.
///
/// For a discrete critical point this measures the continuum defect, which
/// decays like `(h²/12)|q''''|`.
pub fn el_residual_spectral(lp: &FullLoop) -> Result<f64> {
    check_collision_free(lp)?;
    let nb = lp.bodies();
    let sc = lp.sample_count;
    let m = &lp.masses.masses;
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(sc);
    let inv = planner.plan_fft_inverse(sc);
    let omega = 2.0 * std::f64::consts::PI / lp.period;
    let mut acc = vec![[0.0; 3]; nb * sc];
    let mut buf = vec![Complex::new(0.0, 0.0); sc];
    for i in 0..nb {
        for a in 0..3 {
            for (s, b) in buf.iter_mut().enumerate() {
                *b = Complex::new(lp.at(s, i)[a], 0.0);
            }
            fwd.process(&mut buf);
            for (k, b) in buf.iter_mut().enumerate() {
                let kk = if k <= sc / 2 { k as f64 } else { k as f64 - sc as f64 };
                *b *= -(omega * kk).powi(2) / sc as f64;
            }
            inv.process(&mut buf);
            for (s, b) in buf.iter().enumerate() {
                acc[s * nb + i][a] = b.re;
            }
        }
    }
    let mut g = vec![[0.0; 3]; nb];
    let mut worst = 0.0f64;
    for s in 0..sc {
        potential_and_gradient(&lp.positions[s * nb..(s + 1) * nb], m, &mut g);
        for i in 0..nb {
            worst = worst.max(vec3::norm(vec3::sub(vec3::scale(acc[s * nb + i], m[i]), g[i])));
        }
    }
    Ok(worst)
}

/// `Σ_i ∫ |q_i|² + |q̇_i|²` for the piecewise-linear loop.
pub fn h1_norm_sq(lp: &FullLoop) -> f64 {
    let h = lp.step();
    let sc = lp.sample_count;
    let mut total = 0.0;
    for s in 0..sc {
        for i in 0..lp.bodies() {
            let q = lp.at(s, i);
            total += h * vec3::norm2(q) + vec3::norm2(vec3::sub(lp.at((s + 1) % sc, i), q)) / h;
        }
    }
    total
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoercivityReport {
    pub action: f64,
    pub h1_norm_sq: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Checks `A(q) ≥ ‖q‖²_{H¹} / (2(n² + 1))` on a loop satisfying the
/// topological constraints and boundary identities of `omega`.
pub fn coercivity_check(lp: &FullLoop, omega: &Omega) -> Result<CoercivityReport> {
    let diag = constraints::diagnose(lp, omega)?;
    if !diag.boundary_ok {
        return Err(ChoreoError::Precondition("boundary identities do not hold".into()));
    }
    if !diag.topological_weak() {
        return Err(ChoreoError::Precondition(format!("topological constraints of {omega} do not hold")));
    }
    let n = omega.n as f64;
    let e = evaluate_loop(lp, false, Exec::default());
    let h1 = h1_norm_sq(lp);
    let bound = h1 / (2.0 * (n * n + 1.0));
    Ok(CoercivityReport { action: e.action(), h1_norm_sq: h1, bound, holds: e.action() >= bound })
}
