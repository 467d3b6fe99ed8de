//! Local action-decreasing deformations of path segments and of the
//! fundamental arc.
//!
//! Segment operations work on explicit piecewise-linear paths of any subset
//! of bodies. Arc operations are their equivariant counterparts: a change of
//! `q_0` on `[0, n/4]` is propagated to every body by reconstruction.

use serde::{Deserialize, Serialize};

use crate::constraints;
use crate::error::{ChoreoError, Result};
use crate::model::{FundamentalArc, Omega};
use crate::symmetry::SymmetrySpec;
use crate::vec3::{self, Vec3};

/// Piecewise-linear motion of a set of bodies on `[times[0], times.last()]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathSegment {
    pub times: Vec<f64>,
    pub masses: Vec<f64>,
    /// `times.len() × masses.len()`, time-major.
    pub positions: Vec<Vec3>,
}

impl PathSegment {
    pub fn new(times: Vec<f64>, masses: Vec<f64>, positions: Vec<Vec3>) -> Result<Self> {
        if times.len() < 2 {
            return Err(ChoreoError::TooFewSamples { min: 2, got: times.len() });
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ChoreoError::Shape("segment times must increase strictly".into()));
        }
        if positions.len() != times.len() * masses.len() {
            return Err(ChoreoError::Shape(format!(
                "{} positions for {} times x {} bodies",
                positions.len(),
                times.len(),
                masses.len()
            )));
        }
        Ok(Self { times, masses, positions })
    }

    pub fn bodies(&self) -> usize {
        self.masses.len()
    }

    pub fn nodes(&self) -> usize {
        self.times.len()
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn duration(&self) -> f64 {
        self.end() - self.start()
    }

    #[inline]
    pub fn at(&self, node: usize, body: usize) -> Vec3 {
        self.positions[node * self.bodies() + body]
    }

    #[inline]
    fn at_mut(&mut self, node: usize, body: usize) -> &mut Vec3 {
        let nb = self.bodies();
        &mut self.positions[node * nb + body]
    }

    pub fn eval(&self, body: usize, t: f64) -> Vec3 {
        let k = self.times.partition_point(|&s| s <= t).clamp(1, self.nodes() - 1) - 1;
        let w = (t - self.times[k]) / (self.times[k + 1] - self.times[k]);
        vec3::lerp(self.at(k, body), self.at(k + 1, body), w.clamp(0.0, 1.0))
    }

    /// Copy with a node at `t` (no-op when one exists); returns its index.
    pub fn with_node(&self, t: f64) -> (Self, usize) {
        if let Some(k) = self.times.iter().position(|&s| s == t) {
            return (self.clone(), k);
        }
        let k = self.times.partition_point(|&s| s < t);
        let mut out = self.clone();
        out.times.insert(k, t);
        let row: Vec<Vec3> = (0..self.bodies()).map(|i| self.eval(i, t)).collect();
        let at = k * self.bodies();
        out.positions.splice(at..at, row);
        (out, k)
    }

    /// Exact kinetic integral of the piecewise-linear motion.
    pub fn kinetic(&self) -> f64 {
        let mut k = 0.0;
        for s in 0..self.nodes() - 1 {
            let dt = self.times[s + 1] - self.times[s];
            for i in 0..self.bodies() {
                k += 0.5 * self.masses[i] * vec3::norm2(vec3::sub(self.at(s + 1, i), self.at(s, i))) / dt;
            }
        }
        k
    }

    /// Trapezoid integral of the potential.
    pub fn potential(&self) -> f64 {
        let u: Vec<f64> = (0..self.nodes())
            .map(|s| crate::action::potential(&self.positions[s * self.bodies()..(s + 1) * self.bodies()], &self.masses))
            .collect();
        (0..self.nodes() - 1).map(|s| 0.5 * (u[s] + u[s + 1]) * (self.times[s + 1] - self.times[s])).sum()
    }

    pub fn action(&self) -> f64 {
        self.kinetic() + self.potential()
    }

    pub fn distance(&self, node: usize, a: usize, b: usize) -> f64 {
        vec3::norm(vec3::sub(self.at(node, a), self.at(node, b)))
    }
}

/// Bodies `j`, `k` that collide at the segment start and the partition of
/// the others into a side below `j` (`i0`) and a side above `k` (`i1`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparationWitness {
    pub j: usize,
    pub k: usize,
    /// 0 for x-separation, 1 for y-separation.
    pub axis: usize,
    pub i0: Vec<usize>,
    pub i1: Vec<usize>,
}

const SEP_TOL: f64 = 1e-12;

impl SeparationWitness {
    fn check_indices(&self, seg: &PathSegment) -> Result<()> {
        let nb = seg.bodies();
        if self.axis > 1 {
            return Err(ChoreoError::Witness("axis must be 0 (x) or 1 (y)".into()));
        }
        if self.j == self.k || self.j >= nb || self.k >= nb {
            return Err(ChoreoError::Witness("j and k must be distinct bodies".into()));
        }
        let mut seen = vec![false; nb];
        seen[self.j] = true;
        seen[self.k] = true;
        for &i in self.i0.iter().chain(&self.i1) {
            if i >= nb || seen[i] {
                return Err(ChoreoError::Witness(format!("body {i} listed twice or out of range")));
            }
            seen[i] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(ChoreoError::Witness("I0 and I1 must cover all other bodies".into()));
        }
        if (seg.at(0, self.j)[self.axis] - seg.at(0, self.k)[self.axis]).abs() > SEP_TOL {
            return Err(ChoreoError::Witness("j and k must share the separating coordinate at the start".into()));
        }
        Ok(())
    }

    /// The outer bodies stay beyond the final positions of `j` and `k`.
    fn check_outer(&self, seg: &PathSegment) -> Result<()> {
        let a = self.axis;
        let last = seg.nodes() - 1;
        let (lo, hi) = (seg.at(last, self.j)[a], seg.at(last, self.k)[a]);
        for s in 0..seg.nodes() {
            if self.i0.iter().any(|&i| seg.at(s, i)[a] > lo + SEP_TOL) {
                return Err(ChoreoError::Witness(format!("an I0 body passes j at node {s}")));
            }
            if self.i1.iter().any(|&i| seg.at(s, i)[a] < hi - SEP_TOL) {
                return Err(ChoreoError::Witness(format!("an I1 body passes k at node {s}")));
            }
        }
        Ok(())
    }

    /// Full separation: `j` stays between its end and start, `k` likewise on
    /// the other side, and the outer bodies stay beyond both.
    pub fn validate(&self, seg: &PathSegment) -> Result<()> {
        self.check_indices(seg)?;
        let a = self.axis;
        let last = seg.nodes() - 1;
        let c = seg.at(0, self.j)[a];
        let (lo, hi) = (seg.at(last, self.j)[a], seg.at(last, self.k)[a]);
        for s in 0..seg.nodes() {
            let xj = seg.at(s, self.j)[a];
            let xk = seg.at(s, self.k)[a];
            if xj < lo - SEP_TOL || xj > c + SEP_TOL || xk > hi + SEP_TOL || xk < c - SEP_TOL {
                return Err(ChoreoError::Witness(format!("j or k leaves its side at node {s}")));
            }
        }
        self.check_outer(seg)
    }
}

/// Widens a binary collision at the segment start.
///
/// `j` moves by `−t(2ε − t)` and `k` by `+t(2ε − t)` along the separating
/// axis for `t ∈ [0, ε]`, then keep offsets `∓ε²`; `I0`/`I1` move by `∓ε²`
/// throughout. The returned segment carries a node at `t = ε`.
pub fn pull_apart(seg: &PathSegment, w: &SeparationWitness, eps: f64) -> Result<PathSegment> {
    w.validate(seg)?;
    let a = w.axis;
    let last = seg.nodes() - 1;
    if seg.at(last, w.j)[a] >= seg.at(last, w.k)[a] {
        return Err(ChoreoError::Precondition("pull_apart needs j strictly below k at the segment end".into()));
    }
    if !(eps > 0.0 && eps < seg.duration()) {
        return Err(ChoreoError::EpsilonTooLarge { eps, duration: seg.duration() });
    }
    let (mut out, _) = seg.with_node(seg.start() + eps);
    for s in 0..out.nodes() {
        let t = (out.times[s] - seg.start()).min(eps);
        let bump = t * (2.0 * eps - t);
        out.at_mut(s, w.j)[a] -= bump;
        out.at_mut(s, w.k)[a] += bump;
        for &i in &w.i0 {
            out.at_mut(s, i)[a] -= eps * eps;
        }
        for &i in &w.i1 {
            out.at_mut(s, i)[a] += eps * eps;
        }
    }
    Ok(out)
}

/// Exact kinetic integral of the continuous `pull_apart` deformation
/// (piecewise-linear base plus parabolic offset), by two-point Gauss
/// quadrature on every piece between merged breakpoints.
pub fn pull_apart_kinetic(seg: &PathSegment, w: &SeparationWitness, eps: f64) -> Result<f64> {
    w.validate(seg)?;
    if !(eps > 0.0 && eps < seg.duration()) {
        return Err(ChoreoError::EpsilonTooLarge { eps, duration: seg.duration() });
    }
    let (base, _) = seg.with_node(seg.start() + eps);
    let gauss = [0.5 - 0.5 / 3f64.sqrt(), 0.5 + 0.5 / 3f64.sqrt()];
    let mut total = 0.0;
    for s in 0..base.nodes() - 1 {
        let (t0, t1) = (base.times[s], base.times[s + 1]);
        let dt = t1 - t0;
        for &g in &gauss {
            let tau = t0 + g * dt - seg.start();
            // d/dt [t(2ε − t)] on [0, ε], zero afterwards
            let dv = if tau < eps { 2.0 * (eps - tau) } else { 0.0 };
            for i in 0..base.bodies() {
                let mut v = vec3::scale(vec3::sub(base.at(s + 1, i), base.at(s, i)), 1.0 / dt);
                if i == w.j {
                    v[w.axis] -= dv;
                } else if i == w.k {
                    v[w.axis] += dv;
                }
                total += 0.5 * dt * 0.5 * base.masses[i] * vec3::norm2(v);
            }
        }
    }
    Ok(total)
}

/// Straightens `j` and `k` into monotone motions along the separating axis.
///
/// Excursions of `j` above (of `k` below) the collision coordinate are
/// reflected, later motion shifted by `∓2δ`, then each coordinate is replaced
/// by the cumulative absolute variation. `I0`/`I1` follow the net shifts of
/// `j`/`k` at the segment end. Nodes are inserted where `j` or `k` crosses the
/// collision coordinate, so the kinetic integral is preserved exactly.
pub fn monotonize(seg: &PathSegment, w: &SeparationWitness) -> Result<PathSegment> {
    w.check_indices(seg)?;
    w.check_outer(seg)?;
    let a = w.axis;
    let c = seg.at(0, w.j)[a];
    let mut out = seg.clone();
    for body in [w.j, w.k] {
        let mut s = 0;
        while s + 1 < out.nodes() {
            let (u, v) = (out.at(s, body)[a] - c, out.at(s + 1, body)[a] - c);
            if u * v < 0.0 {
                let t = out.times[s] + (out.times[s + 1] - out.times[s]) * u / (u - v);
                if t > out.times[s] && t < out.times[s + 1] {
                    out = out.with_node(t).0;
                    // pin the crossing exactly onto c
                    out.at_mut(s + 1, body)[a] = c;
                }
            }
            s += 1;
        }
    }
    let nodes = out.nodes();
    // stage 1: reflection about c
    let xj: Vec<f64> = (0..nodes).map(|s| out.at(s, w.j)[a]).collect();
    let xk: Vec<f64> = (0..nodes).map(|s| out.at(s, w.k)[a]).collect();
    let dj = xj.iter().map(|x| x - c).fold(0.0f64, f64::max);
    let dk = xk.iter().map(|x| c - x).fold(0.0f64, f64::max);
    let tj = if dj > 0.0 { xj.iter().position(|x| x - c == dj).unwrap() } else { 0 };
    let tk = if dk > 0.0 { xk.iter().position(|x| c - x == dk).unwrap() } else { 0 };
    for s in 0..nodes {
        let vj = if s <= tj && dj > 0.0 {
            if xj[s] > c {
                2.0 * c - xj[s]
            } else {
                xj[s]
            }
        } else {
            xj[s] - 2.0 * dj
        };
        let vk = if s <= tk && dk > 0.0 {
            if xk[s] < c {
                2.0 * c - xk[s]
            } else {
                xk[s]
            }
        } else {
            xk[s] + 2.0 * dk
        };
        out.at_mut(s, w.j)[a] = vj;
        out.at_mut(s, w.k)[a] = vk;
        for &i in &w.i0 {
            out.at_mut(s, i)[a] -= 2.0 * dj;
        }
        for &i in &w.i1 {
            out.at_mut(s, i)[a] += 2.0 * dk;
        }
    }
    // stage 2: cumulative variation
    let xj: Vec<f64> = (0..nodes).map(|s| out.at(s, w.j)[a]).collect();
    let xk: Vec<f64> = (0..nodes).map(|s| out.at(s, w.k)[a]).collect();
    let (mut hj, mut hk) = (vec![c; nodes], vec![c; nodes]);
    for s in 1..nodes {
        hj[s] = hj[s - 1] - (xj[s] - xj[s - 1]).abs();
        hk[s] = hk[s - 1] + (xk[s] - xk[s - 1]).abs();
    }
    let shift0 = hj[nodes - 1] - xj[nodes - 1];
    let shift1 = hk[nodes - 1] - xk[nodes - 1];
    for s in 0..nodes {
        out.at_mut(s, w.j)[a] = hj[s];
        out.at_mut(s, w.k)[a] = hk[s];
        for &i in &w.i0 {
            out.at_mut(s, i)[a] += shift0;
        }
        for &i in &w.i1 {
            out.at_mut(s, i)[a] += shift1;
        }
    }
    Ok(out)
}

/// Offsets of the form `ε τ_i` for `i` in the affected set, zero elsewhere.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TauVector {
    pub entries: Vec<i8>,
}

impl TauVector {
    pub fn new(entries: Vec<i8>) -> Result<Self> {
        if entries.iter().all(|&e| e == 0) {
            return Err(ChoreoError::ZeroTau);
        }
        if entries.iter().any(|e| e.abs() > 1) {
            return Err(ChoreoError::Shape("tau entries must be -1, 0 or 1".into()));
        }
        Ok(Self { entries })
    }

    /// Sets `τ_i` for every listed body, zero elsewhere.
    pub fn from_pairs(len: usize, pairs: &[(usize, i8)]) -> Result<Self> {
        let mut e = vec![0; len];
        for &(i, v) in pairs {
            e[i] = v;
        }
        Self::new(e)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TauAdmissibility {
    /// `τ` takes two different values on the cluster.
    pub differs_on_cluster: bool,
    /// `τ_{σ(g⁻¹)(i)} e = ρ(g) τ_i e` for every `g` fixing `t0` and `i` in the cluster.
    pub equivariant: bool,
    /// `τ` vanishes off the orbit of the cluster under the stabilizer of `t0`.
    pub supported_on_orbit: bool,
}

impl TauAdmissibility {
    pub fn ok(&self) -> bool {
        self.differs_on_cluster && self.equivariant && self.supported_on_orbit
    }
}

/// Checks a kick direction pattern against the stabilizer of the collision time.
pub fn tau_admissibility(
    sym: &SymmetrySpec,
    tau: &TauVector,
    cluster: &[usize],
    t0: f64,
    axis: usize,
) -> Result<TauAdmissibility> {
    let nb = 2 * sym.n;
    if tau.entries.len() != nb || cluster.iter().any(|&i| i >= nb) || axis > 2 {
        return Err(ChoreoError::Shape("tau or cluster does not match 2n bodies".into()));
    }
    let differs = cluster.iter().any(|&a| cluster.iter().any(|&b| tau.entries[a] != tau.entries[b]));
    let mut equivariant = true;
    let mut orbit = vec![false; nb];
    for g in sym.stabilizer(t0) {
        let inv = g.inverse(sym.n);
        for &i0 in cluster {
            let i1 = inv.perm[i0];
            orbit[i1] = true;
            if tau.entries[i1] != g.flip.0[axis] * tau.entries[i0] {
                equivariant = false;
            }
        }
    }
    let supported = (0..nb).all(|i| orbit[i] || tau.entries[i] == 0);
    Ok(TauAdmissibility { differs_on_cluster: differs, equivariant, supported_on_orbit: supported })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KickShape {
    /// Plateau starting at the anchor, ramp afterwards.
    Start,
    /// Ramp before the anchor, plateau ending at it.
    End,
    /// Plateau centred on the anchor, ramps on both sides.
    Interior,
}

/// Bump `h` equal to 1 within `plateau` of the anchor, linear down to 0 at
/// `ramp`, and zero out to `support`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KickProfile {
    pub eps: f64,
    pub anchor: f64,
    pub plateau: f64,
    pub ramp: f64,
    pub support: f64,
    pub shape: KickShape,
}

impl KickProfile {
    fn check_widths(&self) -> Result<()> {
        if !(0.0 < self.plateau && self.plateau < self.ramp && self.ramp <= self.support) {
            return Err(ChoreoError::ProfileWidths);
        }
        Ok(())
    }

    pub fn support_interval(&self) -> (f64, f64) {
        match self.shape {
            KickShape::Start => (self.anchor, self.anchor + self.support),
            KickShape::End => (self.anchor - self.support, self.anchor),
            KickShape::Interior => (self.anchor - self.support, self.anchor + self.support),
        }
    }

    pub fn h(&self, t: f64) -> f64 {
        let d = match self.shape {
            KickShape::Start if t < self.anchor => return 0.0,
            KickShape::End if t > self.anchor => return 0.0,
            _ => (t - self.anchor).abs(),
        };
        if d <= self.plateau {
            1.0
        } else if d < self.ramp {
            (self.ramp - d) / (self.ramp - self.plateau)
        } else {
            0.0
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        let a = self.anchor;
        let (p, r) = (self.plateau, self.ramp);
        match self.shape {
            KickShape::Start => vec![a, a + p, a + r],
            KickShape::End => vec![a - r, a - p, a],
            KickShape::Interior => vec![a - r, a - p, a, a + p, a + r],
        }
    }
}

/// Adds `ε h(t) τ_i e` to every body; nodes are inserted at the profile
/// breakpoints so the piecewise-linear path equals the analytic one.
pub fn vertical_kick(seg: &PathSegment, tau: &TauVector, profile: &KickProfile, direction: Vec3) -> Result<PathSegment> {
    if tau.entries.iter().all(|&e| e == 0) {
        return Err(ChoreoError::ZeroTau);
    }
    if tau.entries.len() != seg.bodies() {
        return Err(ChoreoError::Shape("tau length differs from the body count".into()));
    }
    profile.check_widths()?;
    let (lo, hi) = profile.support_interval();
    let tol = 1e-12 * seg.duration().max(1.0);
    if lo < seg.start() - tol || hi > seg.end() + tol {
        return Err(ChoreoError::ProfileOutsideSegment { lo, hi, t0: seg.start(), t1: seg.end() });
    }
    let mut out = seg.clone();
    for t in profile.breakpoints() {
        if t > seg.start() && t < seg.end() {
            out = out.with_node(t).0;
        }
    }
    for s in 0..out.nodes() {
        let h = profile.eps * profile.h(out.times[s]);
        for i in 0..out.bodies() {
            let d = vec3::scale(direction, h * f64::from(tau.entries[i]));
            let p = out.at_mut(s, i);
            *p = vec3::add(*p, d);
        }
    }
    Ok(out)
}

/// Offset pattern of one body in a plateau shift, in units of `ε`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ramp {
    /// Offset before `t1`.
    pub from: f64,
    /// Offset after `t2`.
    pub to: f64,
}

impl Ramp {
    pub const RISE_FROM_MINUS: Ramp = Ramp { from: -1.0, to: 0.0 };
    pub const FALL_FROM_PLUS: Ramp = Ramp { from: 1.0, to: 0.0 };
    pub const RISE_TO_PLUS: Ramp = Ramp { from: 0.0, to: 1.0 };
    pub const FALL_TO_MINUS: Ramp = Ramp { from: 0.0, to: -1.0 };

    pub fn value(&self, t: f64, t1: f64, t2: f64) -> f64 {
        if t <= t1 {
            self.from
        } else if t >= t2 {
            self.to
        } else {
            self.from + (self.to - self.from) * (t - t1) / (t2 - t1)
        }
    }
}

/// Plateau-breaking shift along one axis: ramped bodies change their offset
/// across `[t1, t2]`, `minus`/`plus` bodies move by `∓ε` throughout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftMove {
    pub t1: f64,
    pub t2: f64,
    pub eps: f64,
    pub axis: usize,
    pub ramps: Vec<(usize, Ramp)>,
    pub minus: Vec<usize>,
    pub plus: Vec<usize>,
}

/// The ramp patterns of the stalled body class and its partner class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShiftCase {
    Case1,
    Case2,
    Case3,
    Case4,
    Case5,
    Case6,
}

impl ShiftCase {
    /// Classifies the body class `k` whose x-coordinate stalls.
    pub fn for_body(n: usize, k: usize) -> Result<Self> {
        if n % 2 == 0 {
            if k <= (n - 2) / 4 {
                Ok(ShiftCase::Case1)
            } else if k < n / 2 {
                Ok(ShiftCase::Case2)
            } else {
                Err(ChoreoError::Precondition(format!("class index {k} must be below n/2 = {}", n / 2)))
            }
        } else if k <= n / 4 {
            Ok(ShiftCase::Case3)
        } else if k <= (n - 1) / 2 {
            Ok(ShiftCase::Case4)
        } else if k <= 3 * n / 4 {
            Ok(ShiftCase::Case5)
        } else if k < n {
            Ok(ShiftCase::Case6)
        } else {
            Err(ChoreoError::Precondition(format!("class index {k} must be below n = {n}")))
        }
    }

    /// Ramps of the class `{k, k+n}` and, for even `n`, of `{k+n/2, k+3n/2}`.
    pub fn ramps(self) -> (Ramp, Option<Ramp>) {
        match self {
            ShiftCase::Case1 => (Ramp::RISE_FROM_MINUS, Some(Ramp::FALL_FROM_PLUS)),
            ShiftCase::Case2 => (Ramp::RISE_TO_PLUS, Some(Ramp::FALL_TO_MINUS)),
            ShiftCase::Case3 => (Ramp::RISE_FROM_MINUS, None),
            ShiftCase::Case4 => (Ramp::RISE_TO_PLUS, None),
            ShiftCase::Case5 => (Ramp::FALL_FROM_PLUS, None),
            ShiftCase::Case6 => (Ramp::FALL_TO_MINUS, None),
        }
    }

    /// Shift move for class `k` of a `2n`-body system with the given outer sets.
    pub fn shift_move(
        n: usize,
        k: usize,
        (t1, t2): (f64, f64),
        eps: f64,
        minus: Vec<usize>,
        plus: Vec<usize>,
    ) -> Result<ShiftMove> {
        let case = Self::for_body(n, k)?;
        let (own, partner) = case.ramps();
        let mut ramps = vec![(k, own), (k + n, own)];
        if let Some(p) = partner {
            ramps.push((k + n / 2, p));
            ramps.push((k + 3 * n / 2, p));
        }
        Ok(ShiftMove { t1, t2, eps, axis: 0, ramps, minus, plus })
    }
}

pub fn shift_segment(seg: &PathSegment, mv: &ShiftMove) -> Result<PathSegment> {
    if !(mv.t1 < mv.t2 && mv.t1 >= seg.start() && mv.t2 <= seg.end()) {
        return Err(ChoreoError::Precondition("plateau must lie inside the segment".into()));
    }
    if mv.axis > 2 {
        return Err(ChoreoError::Shape("axis out of range".into()));
    }
    let out = seg.with_node(mv.t1).0.with_node(mv.t2).0;
    let mut out = out;
    for s in 0..out.nodes() {
        let t = out.times[s];
        for &(i, r) in &mv.ramps {
            out.at_mut(s, i)[mv.axis] += mv.eps * r.value(t, mv.t1, mv.t2);
        }
        for &i in &mv.minus {
            out.at_mut(s, i)[mv.axis] -= mv.eps;
        }
        for &i in &mv.plus {
            out.at_mut(s, i)[mv.axis] += mv.eps;
        }
    }
    Ok(out)
}

/// Run of arc nodes over which one coordinate is constant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plateau {
    pub axis: usize,
    pub start: usize,
    pub end: usize,
}

impl Plateau {
    /// Body class whose window `[0, ½]` covers the start of the plateau.
    pub fn body_class(&self, arc: &FundamentalArc) -> usize {
        (arc.time(self.start) * 2.0).floor() as usize / 2
    }
}

/// Maximal runs of at least `min_nodes` nodes on which x or y varies by at most `tol`.
pub fn find_plateaus(arc: &FundamentalArc, tol: f64, min_nodes: usize) -> Vec<Plateau> {
    let mut out = Vec::new();
    for axis in 0..2 {
        let v = arc.coord(axis);
        let mut s = 0;
        while s < v.len() {
            let mut e = s;
            while e + 1 < v.len() && (v[e + 1] - v[s]).abs() <= tol {
                e += 1;
            }
            if e + 1 - s >= min_nodes {
                out.push(Plateau { axis, start: s, end: e });
            }
            s = e + 1;
        }
    }
    out
}

/// Equivariant plateau escape on the fundamental arc.
///
/// For x (pinned at `t = n/4`) the offset is `−ε` before the plateau, rises
/// linearly to 0 across it and stays 0; for y (pinned at `t = 0`) it is 0,
/// rises to `+ε` and stays there. Both preserve monotonicity and the pinned
/// coordinates; the result is re-projected onto the feasible set of `omega`.
pub fn shift_escape(arc: &FundamentalArc, plateau: Plateau, eps: f64, omega: &Omega) -> Result<FundamentalArc> {
    let m = arc.intervals();
    if plateau.axis > 1 || plateau.start >= plateau.end || plateau.end > m {
        return Err(ChoreoError::Precondition("plateau must cover at least one x or y interval".into()));
    }
    let ramp = if plateau.axis == 0 { Ramp::RISE_FROM_MINUS } else { Ramp::RISE_TO_PLUS };
    let (t1, t2) = (plateau.start as f64, plateau.end as f64);
    let mut out = arc.clone();
    for (k, p) in out.nodes.iter_mut().enumerate() {
        p[plateau.axis] += eps * ramp.value(k as f64, t1, t2);
    }
    constraints::project_feasible(&out, omega)
}

/// Equivariant kick of one arc coordinate: adds `ε sign h(t)` to `axis`.
pub fn kick_arc(arc: &FundamentalArc, axis: usize, profile: &KickProfile, sign: f64) -> Result<FundamentalArc> {
    profile.check_widths()?;
    if axis > 2 {
        return Err(ChoreoError::Shape("axis out of range".into()));
    }
    let mut out = arc.clone();
    for (k, p) in out.nodes.iter_mut().enumerate() {
        p[axis] += sign * profile.eps * profile.h(arc.time(k));
    }
    Ok(out)
}
