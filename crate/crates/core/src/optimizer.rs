//! Constrained minimisation of the action over fundamental arcs.
//!
//! Projected descent along L-BFGS directions: a trial point is
//! `P(x + α d)` with `P` the feasibility projection, accepted on sufficient
//! decrease of the action. Weak-constraint stalls (plateaus in x or y, planar
//! collapse, near-collisions at the tangle times) trigger the matching
//! deformation move before descent resumes.

use std::collections::{BTreeMap, VecDeque};

use log::{debug, info};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::action::{arc_to_free, free_to_arc, ArcAction};
use crate::constraints::{self, diagnose_arc};
use crate::deform::{self, KickProfile, KickShape};
use crate::error::{ChoreoError, Result};
use crate::exec::Exec;
use crate::model::{ActionReport, ConstraintFlags, FullLoop, FundamentalArc, Omega};
use crate::symmetry::SymmetrySpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Requested arc intervals `M`; rounded up so that `n | 2M`.
    pub intervals: usize,
    pub max_iters: usize,
    /// Stop when the inf-norm of the free-coordinate gradient drops below this.
    pub grad_tol: f64,
    pub seed: u64,
    /// Amplitude of the seeded random perturbation of the initial guess.
    pub jitter: f64,
    pub radius: f64,
    pub amplitude: f64,
    pub memory: usize,
    pub armijo: f64,
    /// Trial points with a smaller pairwise distance are rejected.
    pub collision_guard: f64,
    pub plateau_tol: f64,
    pub plateau_nodes: usize,
    pub exec: Exec,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            intervals: 128,
            max_iters: 20_000,
            grad_tol: 1e-9,
            seed: 0x5eed,
            jitter: 1e-3,
            radius: 1.0,
            amplitude: 0.5,
            memory: 12,
            armijo: 1e-4,
            collision_guard: 1e-6,
            plateau_tol: 1e-9,
            plateau_nodes: 3,
            exec: Exec::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    MaxIters,
    /// No admissible decrease was found while the gradient was above tolerance.
    Stalled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum EscapeKind {
    Shift { axis: usize, start: usize, end: usize, body_class: usize },
    Kick { axis: usize, anchor: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EscapeEvent {
    pub iteration: usize,
    pub kind: EscapeKind,
    pub eps: f64,
    pub action_before: f64,
    pub action_after: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub omega: Omega,
    pub arc: FundamentalArc,
    pub full_loop: FullLoop,
    pub report: ActionReport,
    pub status: SolveStatus,
    pub iterations: usize,
    /// Action after the start point and after every accepted step.
    pub trace: Vec<f64>,
    pub escapes: Vec<EscapeEvent>,
    pub config: SolverConfig,
}

/// Smooth `[-1, 1]` profile through `ω_i` at `t = i/2`, constant after the last knot.
fn sign_profile(omega: &Omega, t: f64) -> f64 {
    let s = &omega.signs;
    let u = 2.0 * t;
    let i = u.floor() as usize;
    if i + 1 >= s.len() {
        return f64::from(s[s.len() - 1]);
    }
    let w = 0.5 - 0.5 * (std::f64::consts::PI * (u - i as f64)).cos();
    f64::from(s[i]) + (f64::from(s[i + 1]) - f64::from(s[i])) * w
}

/// Fake-choreography start `(−R cos(2πt/n), R sin(2πt/n), a·s(t))` with a seeded
/// perturbation, projected onto the feasible set.
pub fn initial_guess(omega: &Omega, config: &SolverConfig) -> Result<FundamentalArc> {
    constraints::require_admissible(omega)?;
    let sym = SymmetrySpec::new(omega.n)?;
    let m = sym.compatible_intervals(config.intervals);
    let n = omega.n as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let nodes = (0..=m)
        .map(|k| {
            let t = n / 4.0 * k as f64 / m as f64;
            let a = 2.0 * std::f64::consts::PI * t / n;
            let mut p = [-config.radius * a.cos(), config.radius * a.sin(), config.amplitude * sign_profile(omega, t)];
            if config.jitter > 0.0 {
                for v in &mut p {
                    *v += config.jitter * rng.gen_range(-1.0..1.0);
                }
            }
            p
        })
        .collect();
    constraints::project_feasible(&FundamentalArc { n: omega.n, nodes }, omega)
}

struct Lbfgs {
    memory: usize,
    pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)>,
}

impl Lbfgs {
    fn new(memory: usize) -> Self {
        Self { memory, pairs: VecDeque::new() }
    }

    fn clear(&mut self) {
        self.pairs.clear();
    }

    fn push(&mut self, s: Vec<f64>, y: Vec<f64>) {
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) && sy > 0.0 {
            if self.pairs.len() == self.memory {
                self.pairs.pop_front();
            }
            self.pairs.push_back((s, y, 1.0 / sy));
        }
    }

    /// `−H g` by the two-loop recursion.
    fn direction(&self, g: &[f64]) -> Vec<f64> {
        let mut q = g.to_vec();
        let mut alpha = Vec::with_capacity(self.pairs.len());
        for (s, y, rho) in self.pairs.iter().rev() {
            let a = rho * dot(s, &q);
            axpy(&mut q, -a, y);
            alpha.push(a);
        }
        if let Some((s, y, _)) = self.pairs.back() {
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|v| *v *= gamma);
        }
        for ((s, y, rho), a) in self.pairs.iter().zip(alpha.into_iter().rev()) {
            let b = rho * dot(y, &q);
            axpy(&mut q, a - b, s);
        }
        q.iter_mut().for_each(|v| *v = -*v);
        q
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += a * xi);
}

struct Point {
    arc: FundamentalArc,
    x: Vec<f64>,
    f: f64,
    g: Vec<f64>,
    min_distance: f64,
}

struct Problem<'a> {
    omega: &'a Omega,
    action: ArcAction,
    config: &'a SolverConfig,
}

enum Trial {
    Ok(Point),
    Collision,
}

impl Problem<'_> {
    fn point(&self, arc: FundamentalArc) -> Result<Trial> {
        let e = self.action.evaluate(&arc, true)?;
        if !(e.min_distance >= self.config.collision_guard) || !e.action().is_finite() {
            return Ok(Trial::Collision);
        }
        let x = arc_to_free(&arc);
        Ok(Trial::Ok(Point { f: e.action(), g: e.free_gradient(), min_distance: e.min_distance, x, arc }))
    }

    /// Re-bases `p.f` on `cur.f` through the accurate difference, so that
    /// the trace stays monotone below the rounding level of the action.
    fn rebase(&self, cur: &Point, p: &mut Point) -> Result<f64> {
        let delta = self.action.difference(&cur.arc, &p.arc)?;
        p.f = cur.f + delta;
        Ok(delta)
    }

    fn arc(&self, x: &[f64]) -> FundamentalArc {
        free_to_arc(self.omega.n, self.action.intervals(), x)
    }

    fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(arc_to_free(&constraints::project_feasible(&self.arc(x), self.omega)?))
    }

    fn feasible(&self, arc: &FundamentalArc) -> Result<bool> {
        let d = diagnose_arc(arc, self.omega)?;
        Ok(d.monotone_weak() && d.topological_weak())
    }
}

pub fn minimize(omega: &Omega, config: &SolverConfig) -> Result<SolveResult> {
    let start = initial_guess(omega, config)?;
    minimize_from(omega, start, config)
}

/// Descent from a given arc; the arc is projected first.
pub fn minimize_from(omega: &Omega, start: FundamentalArc, config: &SolverConfig) -> Result<SolveResult> {
    constraints::require_admissible(omega)?;
    let sym = SymmetrySpec::new(omega.n)?;
    let m = start.intervals();
    if !sym.is_compatible(m) {
        return Err(ChoreoError::Grid { n: omega.n, samples: 4 * m, reason: "need n | 2M".into() });
    }
    let pb = Problem { omega, action: ArcAction::new(omega.n, m, config.exec)?, config };
    let start = constraints::project_feasible(&start, omega)?;
    let mut cur = match pb.point(start)? {
        Trial::Ok(p) => p,
        Trial::Collision => {
            return Err(ChoreoError::Collision { distance: 0.0, guard: config.collision_guard });
        }
    };
    let mut trace = vec![cur.f];
    let mut escapes = Vec::new();
    let mut lbfgs = Lbfgs::new(config.memory);
    let mut status = SolveStatus::MaxIters;
    let mut iterations = 0;
    let mut projected = true;
    let mut tried_plateaus: Vec<deform::Plateau> = Vec::new();
    let scale = config.radius.max(1e-3);

    while iterations < config.max_iters {
        let gnorm = inf_norm(&cur.g);
        if gnorm < config.grad_tol {
            status = SolveStatus::Converged;
            break;
        }
        // leave the projection behind once the iterate is strictly inside
        if projected && gnorm < 1e3 * config.grad_tol.max(1e-9) {
            let margin = diagnose_arc(&cur.arc, omega)?.strict_margin();
            if margin > 10.0 * config.grad_tol {
                debug!("iteration {iterations}: switching to unconstrained polish (margin {margin:.3e})");
                projected = false;
                lbfgs.clear();
            }
        }
        if let Some(ev) = try_plateau_escape(&pb, &mut cur, iterations, &mut tried_plateaus)? {
            trace.push(cur.f);
            escapes.push(ev);
            lbfgs.clear();
            iterations += 1;
            continue;
        }

        let mut d = lbfgs.direction(&cur.g);
        if dot(&d, &cur.g) >= 0.0 {
            lbfgs.clear();
            d = cur.g.iter().map(|v| -v).collect();
        }
        let mut alpha = if lbfgs.pairs.is_empty() { (0.01 * scale / inf_norm(&d)).min(1.0) } else { 1.0 };
        let mut accepted = None;
        let mut hit_guard = false;
        for _ in 0..60 {
            let mut xt = cur.x.clone();
            axpy(&mut xt, alpha, &d);
            let raw = xt.clone();
            if projected {
                xt = pb.project(&xt)?;
            }
            let arc_t = pb.arc(&xt);
            if !projected && !pb.feasible(&arc_t)? {
                alpha *= 0.5;
                continue;
            }
            match pb.point(arc_t)? {
                Trial::Collision => hit_guard = true,
                Trial::Ok(mut p) => {
                    let step: Vec<f64> = p.x.iter().zip(&cur.x).map(|(a, b)| a - b).collect();
                    let slope = dot(&cur.g, &step);
                    let delta = pb.rebase(&cur, &mut p)?;
                    let armijo = delta <= config.armijo * slope.min(0.0);
                    let flat = -delta <= 1e-12 * cur.f.abs();
                    if delta < 0.0 && (armijo || flat) {
                        let active = raw != xt;
                        accepted = Some((p, step, active));
                        break;
                    }
                }
            }
            alpha *= 0.5;
        }
        match accepted {
            Some((p, s, active)) => {
                let y: Vec<f64> = p.g.iter().zip(&cur.g).map(|(a, b)| a - b).collect();
                if active {
                    lbfgs.clear();
                } else {
                    lbfgs.push(s, y);
                }
                cur = p;
                trace.push(cur.f);
                iterations += 1;
            }
            None if !lbfgs.pairs.is_empty() => lbfgs.clear(),
            None => {
                if let Some(ev) = try_kick_escape(&pb, &mut cur, iterations, hit_guard)? {
                    trace.push(cur.f);
                    escapes.push(ev);
                    iterations += 1;
                    continue;
                }
                status = SolveStatus::Stalled;
                break;
            }
        }
        if iterations % 500 == 0 {
            debug!("iteration {iterations}: action {:.12} |g| {:.3e}", cur.f, inf_norm(&cur.g));
        }
    }
    info!(
        "n = {} omega = {}: {:?} after {} iterations, action {:.12}, |g| {:.3e}",
        omega.n,
        omega,
        status,
        iterations,
        cur.f,
        inf_norm(&cur.g)
    );
    let full_loop = sym.reconstruct(&cur.arc)?;
    let diag = diagnose_arc(&cur.arc, omega)?;
    let e = pb.action.evaluate(&cur.arc, false)?;
    let report = ActionReport {
        kinetic: e.kinetic,
        potential: e.potential,
        action: e.action(),
        gradient_inf_norm: inf_norm(&cur.g),
        min_distance: cur.min_distance,
        flags: ConstraintFlags {
            boundary: Some(diag.boundary_ok),
            monotone_weak: Some(diag.monotone_weak()),
            monotone_strict: Some(diag.monotone_strict()),
            topological: Some(diag.topological_weak()),
        },
    };
    Ok(SolveResult {
        omega: omega.clone(),
        arc: cur.arc,
        full_loop,
        report,
        status,
        iterations,
        trace,
        escapes,
        config: config.clone(),
    })
}

/// Tries `candidate(ε)` for halving `ε` until the action strictly decreases.
fn backtrack_move<F>(pb: &Problem, cur: &Point, eps0: f64, mut candidate: F) -> Result<Option<(Point, f64)>>
where
    F: FnMut(f64) -> Result<FundamentalArc>,
{
    let mut eps = eps0;
    for _ in 0..40 {
        let arc = candidate(eps)?;
        if let Trial::Ok(mut p) = pb.point(arc)? {
            if pb.rebase(cur, &mut p)? < 0.0 {
                return Ok(Some((p, eps)));
            }
        }
        eps *= 0.5;
    }
    Ok(None)
}

fn try_plateau_escape(
    pb: &Problem,
    cur: &mut Point,
    iteration: usize,
    tried: &mut Vec<deform::Plateau>,
) -> Result<Option<EscapeEvent>> {
    let plateaus = deform::find_plateaus(&cur.arc, pb.config.plateau_tol, pb.config.plateau_nodes);
    for pl in plateaus {
        if tried.contains(&pl) {
            continue;
        }
        tried.push(pl);
        let eps0 = 0.05 * pb.config.radius;
        if let Some((p, eps)) = backtrack_move(pb, cur, eps0, |e| deform::shift_escape(&cur.arc, pl, e, pb.omega))? {
            let ev = EscapeEvent {
                iteration,
                kind: EscapeKind::Shift { axis: pl.axis, start: pl.start, end: pl.end, body_class: pl.body_class(&cur.arc) },
                eps,
                action_before: cur.f,
                action_after: p.f,
            };
            debug!("plateau escape {ev:?}");
            *cur = p;
            return Ok(Some(ev));
        }
    }
    Ok(None)
}

/// Kicks a collapsed coordinate or the tangle time closest to collision.
fn try_kick_escape(pb: &Problem, cur: &mut Point, iteration: usize, hit_guard: bool) -> Result<Option<EscapeEvent>> {
    let arc = &cur.arc;
    let n = arc.n;
    let len = arc.length();
    let tiny = 1e-9 * pb.config.radius;
    let collapsed = |axis: usize| arc.nodes.iter().all(|p| p[axis].abs() <= tiny);
    let width = len / 8.0;
    let profile = |anchor: f64, shape| KickProfile {
        eps: 0.1 * pb.config.radius,
        anchor,
        plateau: width / 2.0,
        ramp: width,
        support: width,
        shape,
    };
    let mut moves: Vec<(usize, KickProfile, f64)> = Vec::new();
    if collapsed(0) {
        moves.push((0, profile(0.0, KickShape::Start), -1.0));
    }
    if collapsed(1) {
        moves.push((1, profile(len, KickShape::End), 1.0));
    }
    if collapsed(2) || hit_guard {
        let nodes = constraints::constraint_nodes(n, arc.intervals());
        let (i, _) = nodes
            .iter()
            .enumerate()
            .map(|(i, &k)| (i, arc.nodes[k][2].abs()))
            .fold((0, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b });
        let t = i as f64 / 2.0;
        let shape = if i == 0 {
            KickShape::Start
        } else if (t - len).abs() < 1e-12 {
            KickShape::End
        } else {
            KickShape::Interior
        };
        let w = width.min(0.25);
        let p = KickProfile { eps: 0.1 * pb.config.radius, anchor: t, plateau: w / 2.0, ramp: w, support: w, shape };
        moves.push((2, p, f64::from(pb.omega.signs[i])));
    }
    for (axis, prof, sign) in moves {
        let found = backtrack_move(pb, cur, prof.eps, |e| {
            let p = KickProfile { eps: e, ..prof };
            constraints::project_feasible(&deform::kick_arc(&cur.arc, axis, &p, sign)?, pb.omega)
        })?;
        if let Some((p, eps)) = found {
            let ev = EscapeEvent {
                iteration,
                kind: EscapeKind::Kick { axis, anchor: prof.anchor },
                eps,
                action_before: cur.f,
                action_after: p.f,
            };
            debug!("kick escape {ev:?}");
            *cur = p;
            return Ok(Some(ev));
        }
    }
    Ok(None)
}

/// Resamples the converged arc onto a finer grid and descends again.
pub fn refine(result: &SolveResult, intervals: usize) -> Result<SolveResult> {
    let sym = SymmetrySpec::new(result.omega.n)?;
    let m = sym.compatible_intervals(intervals);
    let config = SolverConfig { intervals: m, ..result.config.clone() };
    let mut out = minimize_from(&result.omega, result.arc.resample(m), &config)?;
    let mut trace = result.trace.clone();
    trace.extend(out.trace);
    out.trace = trace;
    out.iterations += result.iterations;
    Ok(out)
}

/// Minimises every admissible word, keyed by its `+`/`-` spelling.
pub fn sweep(n: usize, config: &SolverConfig, modulo_flip: bool, jobs: usize) -> Result<BTreeMap<String, Result<SolveResult>>> {
    let words = constraints::enumerate_admissible(n, modulo_flip)?;
    let run = |w: &Omega| (w.word(), minimize(w, config));
    let results: Vec<(String, Result<SolveResult>)> = match config.exec.effective() {
        Exec::Serial => words.iter().map(run).collect(),
        Exec::Parallel => par_run(&words, jobs, run),
    };
    Ok(results.into_iter().collect())
}

#[cfg(feature = "parallel")]
fn par_run<F>(words: &[Omega], jobs: usize, run: F) -> Vec<(String, Result<SolveResult>)>
where
    F: Fn(&Omega) -> (String, Result<SolveResult>) + Sync + Send,
{
    use rayon::prelude::*;
    let go = || words.par_iter().map(&run).collect();
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) if jobs > 0 => pool.install(go),
        _ => go(),
    }
}

#[cfg(not(feature = "parallel"))]
fn par_run<F>(words: &[Omega], _jobs: usize, run: F) -> Vec<(String, Result<SolveResult>)>
where
    F: Fn(&Omega) -> (String, Result<SolveResult>),
{
    words.iter().map(run).collect()
}
