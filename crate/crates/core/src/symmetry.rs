//! The symmetry group `G_n = D_n × Z_2 × Z_2` acting on loops of `2n` bodies,
//! reconstruction of the full loop from the fundamental arc, quadrant
//! partitions and well regions.
//!
//! A group element acts by `g(q)_i(t) = ρ(g) q_{σ(g⁻¹)(i)}(τ(g⁻¹) t)`.

use std::collections::{HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{ChoreoError, Result};
use crate::model::{FullLoop, FundamentalArc, MassSystem};
use crate::vec3::{self, Flip, Vec3};

/// Time map `t ↦ ±t + shift/2` modulo the period `n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TimeMap {
    pub reverse: bool,
    /// Twice the additive constant, reduced mod `2n`.
    pub twice_shift: i64,
}

impl TimeMap {
    fn sign(self) -> i64 {
        if self.reverse {
            -1
        } else {
            1
        }
    }

    fn reduced(self, n: usize) -> Self {
        Self { reverse: self.reverse, twice_shift: self.twice_shift.rem_euclid(2 * n as i64) }
    }

    /// `self ∘ other`.
    pub fn compose(self, other: TimeMap, n: usize) -> Self {
        Self {
            reverse: self.reverse != other.reverse,
            twice_shift: self.sign() * other.twice_shift + self.twice_shift,
        }
        .reduced(n)
    }

    pub fn inverse(self, n: usize) -> Self {
        Self { reverse: self.reverse, twice_shift: -self.sign() * self.twice_shift }.reduced(n)
    }

    pub fn apply(self, t: f64, n: usize) -> f64 {
        (self.sign() as f64 * t + self.twice_shift as f64 / 2.0).rem_euclid(n as f64)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GroupElement {
    pub time: TimeMap,
    pub flip: Flip,
    /// `perm[i] = σ(g)(i)`.
    pub perm: Vec<usize>,
}

impl GroupElement {
    pub fn identity(n: usize) -> Self {
        Self {
            time: TimeMap { reverse: false, twice_shift: 0 },
            flip: Flip::ID,
            perm: (0..2 * n).collect(),
        }
    }

    /// Group product `self · other`.
    pub fn compose(&self, other: &GroupElement, n: usize) -> Self {
        Self {
            time: self.time.compose(other.time, n),
            flip: self.flip.compose(other.flip),
            perm: other.perm.iter().map(|&j| self.perm[j]).collect(),
        }
    }

    pub fn inverse(&self, n: usize) -> Self {
        let mut inv = vec![0; self.perm.len()];
        for (i, &p) in self.perm.iter().enumerate() {
            inv[p] = i;
        }
        Self { time: self.time.inverse(n), flip: self.flip, perm: inv }
    }

    pub fn is_identity(&self, n: usize) -> bool {
        *self == Self::identity(n)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Generator {
    G1,
    G2,
    H1,
    H2,
}

impl Generator {
    pub const ALL: [Generator; 4] = [Generator::G1, Generator::G2, Generator::H1, Generator::H2];
}

/// Permutation given as a product of transpositions, composed left to right.
fn product_of_transpositions(size: usize, pairs: &[(usize, usize)]) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..size).collect();
    for &(a, b) in pairs {
        let mut t: Vec<usize> = (0..size).collect();
        t.swap(a, b);
        perm = t.iter().map(|&j| perm[j]).collect();
    }
    perm
}

#[derive(Clone, Debug)]
pub struct SymmetrySpec {
    pub n: usize,
    g1: GroupElement,
    g2: GroupElement,
    h1: GroupElement,
    h2: GroupElement,
}

impl SymmetrySpec {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(ChoreoError::BodyCount(n));
        }
        let nb = 2 * n;
        let g1 = GroupElement {
            // q_i(t) = q_{i-1}(t + 1)
            time: TimeMap { reverse: false, twice_shift: -2 }.reduced(n),
            flip: Flip::ID,
            perm: (0..nb).map(|i| if i < n { (i + 1) % n } else { n + (i - n + 1) % n }).collect(),
        };
        let g2_pairs: Vec<(usize, usize)> = (0..=(n - 1) / 2)
            .flat_map(|i| [(i, n - 1 - i), (n + i, 2 * n - 1 - i)])
            .collect();
        let g2 = GroupElement {
            time: TimeMap { reverse: true, twice_shift: 2 }.reduced(n),
            flip: Flip::RXZ,
            perm: product_of_transpositions(nb, &g2_pairs),
        };
        let h1 = GroupElement {
            time: TimeMap { reverse: false, twice_shift: 0 },
            flip: Flip::RX,
            perm: (0..nb).map(|i| (i + n) % nb).collect(),
        };
        let h2 = if n % 2 == 0 {
            let half = n / 2;
            let pairs: Vec<(usize, usize)> =
                (0..half).flat_map(|i| [(i, half + i), (n + i, n + half + i)]).collect();
            GroupElement {
                time: TimeMap { reverse: false, twice_shift: 0 },
                flip: Flip::RZ,
                perm: product_of_transpositions(nb, &pairs),
            }
        } else {
            let h = n / 2;
            let mut pairs: Vec<(usize, usize)> =
                (0..=n / 4).flat_map(|i| [(i, h - i), (n + i, n + h - i)]).collect();
            pairs.extend((1..=(n + 1) / 4).flat_map(|i| [(h + i, n - i), (n + h + i, 2 * n - i)]));
            GroupElement {
                time: TimeMap { reverse: true, twice_shift: 1 },
                flip: Flip::RYZ,
                perm: product_of_transpositions(nb, &pairs),
            }
        };
        Ok(Self { n, g1, g2, h1, h2 })
    }

    pub fn generator(&self, g: Generator) -> &GroupElement {
        match g {
            Generator::G1 => &self.g1,
            Generator::G2 => &self.g2,
            Generator::H1 => &self.h1,
            Generator::H2 => &self.h2,
        }
    }

    /// Product of a word of generators, leftmost factor outermost.
    pub fn word(&self, word: &[Generator]) -> GroupElement {
        word.iter()
            .fold(GroupElement::identity(self.n), |acc, &g| acc.compose(self.generator(g), self.n))
    }

    /// All `8n` group elements, by closure over the generators.
    pub fn elements(&self) -> Vec<GroupElement> {
        let id = GroupElement::identity(self.n);
        let mut seen = HashSet::from([id.clone()]);
        let mut out = vec![id.clone()];
        let mut queue = VecDeque::from([id]);
        while let Some(e) = queue.pop_front() {
            for g in Generator::ALL {
                let next = e.compose(self.generator(g), self.n);
                if seen.insert(next.clone()) {
                    out.push(next.clone());
                    queue.push_back(next);
                }
            }
        }
        out
    }

    /// Elements whose time map fixes `t0` (mod `n`).
    pub fn stabilizer(&self, t0: f64) -> Vec<GroupElement> {
        let n = self.n as f64;
        self.elements()
            .into_iter()
            .filter(|g| {
                let d = (g.time.apply(t0, self.n) - t0).rem_euclid(n);
                d.min(n - d) < 1e-12
            })
            .collect()
    }

    /// Arc resolutions the symmetry maps node-to-node: `n | 2M`.
    pub fn is_compatible(&self, intervals: usize) -> bool {
        intervals > 0 && (2 * intervals) % self.n == 0
    }

    /// Smallest compatible arc resolution `≥ intervals`.
    pub fn compatible_intervals(&self, intervals: usize) -> usize {
        let mut m = intervals.max(1);
        while !self.is_compatible(m) {
            m += 1;
        }
        m
    }

    fn check_loop(&self, lp: &FullLoop) -> Result<()> {
        if lp.bodies() != 2 * self.n {
            return Err(ChoreoError::Shape(format!("{} bodies, expected {}", lp.bodies(), 2 * self.n)));
        }
        if (lp.period - self.n as f64).abs() > 1e-12 * self.n as f64 {
            return Err(ChoreoError::Shape(format!("period {} differs from n = {}", lp.period, self.n)));
        }
        if (2 * lp.sample_count) % (4 * self.n) != 0 {
            return Err(ChoreoError::Grid {
                n: self.n,
                samples: lp.sample_count,
                reason: "sample count must be a multiple of 2n".into(),
            });
        }
        Ok(())
    }

    /// Applies `g` to a loop whose grid contains every image time.
    pub fn apply(&self, g: &GroupElement, lp: &FullLoop) -> Result<FullLoop> {
        self.check_loop(lp)?;
        let inv = g.inverse(self.n);
        let s_count = lp.sample_count as i64;
        let sign = inv.time.sign();
        // τ(g⁻¹) t_s lands on sample sign·s + shift·S/(2n)
        let offset = inv.time.twice_shift * s_count / (2 * self.n as i64);
        let nb = lp.bodies();
        let mut positions = Vec::with_capacity(lp.positions.len());
        for s in 0..s_count {
            let src = (sign * s + offset).rem_euclid(s_count) as usize;
            for i in 0..nb {
                positions.push(g.flip.apply(lp.at(src, inv.perm[i])));
            }
        }
        FullLoop::new(lp.masses.clone(), lp.period, lp.sample_count, positions)
    }

    pub fn apply_word(&self, word: &[Generator], lp: &FullLoop) -> Result<FullLoop> {
        self.apply(&self.word(word), lp)
    }

    /// Max over generators and samples of `Σ_i |g(q)_i(t) − q_i(t)|`.
    pub fn equivariance_residual(&self, lp: &FullLoop) -> Result<f64> {
        let mut worst = 0.0f64;
        for g in Generator::ALL {
            let image = self.apply(self.generator(g), lp)?;
            for s in 0..lp.sample_count {
                let mut d = 0.0;
                for i in 0..lp.bodies() {
                    d += vec3::norm(vec3::sub(image.at(s, i), lp.at(s, i)));
                }
                worst = worst.max(d);
            }
        }
        Ok(worst)
    }

    pub fn reconstruction_map(&self, intervals: usize) -> Result<ReconstructionMap> {
        ReconstructionMap::new(self.n, intervals)
    }

    pub fn reconstruct(&self, arc: &FundamentalArc) -> Result<FullLoop> {
        if arc.n != self.n {
            return Err(ChoreoError::Shape(format!("arc for n = {}, symmetry for n = {}", arc.n, self.n)));
        }
        self.reconstruction_map(arc.intervals())?.full_loop(arc)
    }

    /// Body 0 on `[0, n/4]`; the inverse of [`Self::reconstruct`] on equivariant loops.
    pub fn extract_arc(&self, lp: &FullLoop) -> Result<FundamentalArc> {
        self.check_loop(lp)?;
        if lp.sample_count % 4 != 0 {
            return Err(ChoreoError::Grid {
                n: self.n,
                samples: lp.sample_count,
                reason: "sample count must be a multiple of 4".into(),
            });
        }
        let m = lp.sample_count / 4;
        Ok(FundamentalArc { n: self.n, nodes: (0..=m).map(|s| lp.at(s, 0)).collect() })
    }
}

/// Where every loop sample comes from: arc node plus coordinate flip.
#[derive(Clone, Debug)]
pub struct ReconstructionMap {
    pub n: usize,
    pub intervals: usize,
    /// `sample_count × 2n`, sample-major.
    pub entries: Vec<(usize, Flip)>,
}

impl ReconstructionMap {
    pub fn new(n: usize, intervals: usize) -> Result<Self> {
        if n < 2 {
            return Err(ChoreoError::BodyCount(n));
        }
        let m = intervals;
        if m == 0 || (2 * m) % n != 0 {
            return Err(ChoreoError::Grid {
                n,
                samples: 4 * m,
                reason: format!("arc intervals {m} must satisfy n | 2M"),
            });
        }
        let s_count = 4 * m;
        // q_0 on [n/4, n/2]: R_yz q_0(n/2 − t); on [n/2, n): R_xz q_0(n − t)
        let base = |s: usize| -> (usize, Flip) {
            if s <= m {
                (s, Flip::ID)
            } else if s <= 2 * m {
                (2 * m - s, Flip::RYZ)
            } else {
                let r = 4 * m - s;
                if r <= m {
                    (r, Flip::RXZ)
                } else {
                    (2 * m - r, Flip::RXZ.compose(Flip::RYZ))
                }
            }
        };
        let shift = s_count / n;
        let mut entries = Vec::with_capacity(s_count * 2 * n);
        for s in 0..s_count {
            for i in 0..2 * n {
                let (k, f) = base((s + (i % n) * shift) % s_count);
                let f = if i >= n { Flip::RX.compose(f) } else { f };
                entries.push((k, f));
            }
        }
        Ok(Self { n, intervals, entries })
    }

    pub fn sample_count(&self) -> usize {
        4 * self.intervals
    }

    pub fn full_loop(&self, arc: &FundamentalArc) -> Result<FullLoop> {
        if arc.intervals() != self.intervals {
            return Err(ChoreoError::Shape(format!(
                "arc has {} intervals, map expects {}",
                arc.intervals(),
                self.intervals
            )));
        }
        let positions = self.entries.iter().map(|&(k, f)| f.apply(arc.nodes[k])).collect();
        FullLoop::new(MassSystem::equal(self.n)?, self.n as f64, self.sample_count(), positions)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    Q1,
    Q2,
    Q3,
    Q4,
    /// `y ≥ 0`, the union of `Q1` and `Q2`.
    Upper,
    /// `y ≤ 0`, the union of `Q3` and `Q4`.
    Lower,
}

impl Region {
    /// Distance by which `p` leaves the closed region in the xy-projection.
    pub fn violation(self, p: Vec3) -> f64 {
        let (x, y) = (p[0], p[1]);
        let pos = |v: f64| (-v).max(0.0);
        let neg = |v: f64| v.max(0.0);
        match self {
            Region::Q1 => pos(x).max(pos(y)),
            Region::Q2 => neg(x).max(pos(y)),
            Region::Q3 => neg(x).max(neg(y)),
            Region::Q4 => pos(x).max(neg(y)),
            Region::Upper => pos(y),
            Region::Lower => neg(y),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadrantSet {
    pub label: String,
    pub region: Region,
    pub bodies: Vec<usize>,
}

/// Bodies grouped by the region they occupy for `t ∈ [0, window]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadrantPartition {
    pub n: usize,
    pub window: f64,
    pub sets: Vec<QuadrantSet>,
}

pub fn quadrant_partition(n: usize) -> Result<QuadrantPartition> {
    if n < 2 {
        return Err(ChoreoError::BodyCount(n));
    }
    let l = n / 4;
    // inclusive ranges; an empty range has lo > hi
    let r = |lo: usize, hi: isize| -> Vec<usize> {
        if hi < lo as isize {
            Vec::new()
        } else {
            (lo..=hi as usize).collect()
        }
    };
    let union = |a: Vec<usize>, b: Vec<usize>| -> Vec<usize> { a.into_iter().chain(b).collect() };
    let li = l as isize;
    let set = |label: &str, region, bodies| QuadrantSet { label: label.into(), region, bodies };
    let (window, sets) = match n % 4 {
        0 => (
            0.5,
            vec![
                set("I1", Region::Q1, union(r(l, 2 * li - 1), r(6 * l, 7 * li - 1))),
                set("I2", Region::Q2, union(r(0, li - 1), r(7 * l, 8 * li - 1))),
                set("I3", Region::Q3, union(r(3 * l, 4 * li - 1), r(4 * l, 5 * li - 1))),
                set("I4", Region::Q4, union(r(2 * l, 3 * li - 1), r(5 * l, 6 * li - 1))),
            ],
        ),
        2 => (
            0.5,
            vec![
                set("J1", Region::Q1, union(r(l + 1, 2 * li), r(6 * l + 3, 7 * li + 3))),
                set("J2", Region::Q2, union(r(0, li), r(7 * l + 4, 8 * li + 3))),
                set("J3", Region::Q3, union(r(3 * l + 2, 4 * li + 1), r(4 * l + 2, 5 * li + 2))),
                set("J4", Region::Q4, union(r(2 * l + 1, 3 * li + 1), r(5 * l + 3, 6 * li + 2))),
            ],
        ),
        1 => (
            0.25,
            vec![
                set("I5", Region::Upper, union(r(0, 2 * li), r(6 * l + 2, 8 * li + 1))),
                set("I6", Region::Lower, union(r(2 * l + 1, 4 * li), r(4 * l + 1, 6 * li + 1))),
            ],
        ),
        _ => (
            0.25,
            vec![
                set("J5", Region::Upper, union(r(0, 2 * li + 1), r(6 * l + 5, 8 * li + 5))),
                set("J6", Region::Lower, union(r(2 * l + 2, 4 * li + 2), r(4 * l + 3, 6 * li + 4))),
            ],
        ),
    };
    Ok(QuadrantPartition { n, window, sets })
}

/// Largest distance by which any body leaves its region on `[0, window]`.
pub fn confinement_violation(lp: &FullLoop, partition: &QuadrantPartition) -> Result<f64> {
    let last = sample_at(lp, partition.window)?;
    let mut worst = 0.0f64;
    for set in &partition.sets {
        for &i in &set.bodies {
            for s in 0..=last {
                worst = worst.max(set.region.violation(lp.at(s, i)));
            }
        }
    }
    Ok(worst)
}

fn sample_at(lp: &FullLoop, t: f64) -> Result<usize> {
    let u = t / lp.step();
    let k = u.round();
    if (u - k).abs() > 1e-9 {
        return Err(ChoreoError::Grid {
            n: lp.bodies() / 2,
            samples: lp.sample_count,
            reason: format!("time {t} is not a sample"),
        });
    }
    Ok(k as usize % lp.sample_count)
}

/// Axis-aligned slab swept by one body over `[0, ½]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Well {
    pub body: usize,
    pub x: (f64, f64),
    pub y: (f64, f64),
}

impl Well {
    fn from_corners(body: usize, a: Vec3, b: Vec3) -> Self {
        Self { body, x: (a[0].min(b[0]), a[0].max(b[0])), y: (a[1].min(b[1]), a[1].max(b[1])) }
    }

    pub fn interiors_overlap(&self, other: &Well) -> bool {
        let open = |a: (f64, f64), b: (f64, f64)| a.0.max(b.0) < a.1.min(b.1);
        open(self.x, other.x) && open(self.y, other.y)
    }
}

/// For odd `n`, the body whose y-coordinate turns at `t = ¼`.
pub fn quarter_turn_body(n: usize) -> Option<usize> {
    match n % 4 {
        1 => Some((n - 1) / 4),
        3 => Some((3 * n - 1) / 4),
        _ => None,
    }
}

/// Wells of all bodies; errors when two interiors intersect.
pub fn well_regions(lp: &FullLoop) -> Result<Vec<Well>> {
    let n = lp.bodies() / 2;
    let s0 = 0;
    let s_half = sample_at(lp, 0.5)?;
    let turn = quarter_turn_body(n);
    let s_quarter = if turn.is_some() { Some(sample_at(lp, 0.25)?) } else { None };
    let wells: Vec<Well> = (0..lp.bodies())
        .map(|i| {
            let a = lp.at(s0, i);
            let b = lp.at(s_half, i);
            let mut w = Well::from_corners(i, a, b);
            if let (Some(tb), Some(sq)) = (turn, s_quarter) {
                if i % n == tb {
                    let c = lp.at(sq, i);
                    w.y = (a[1].min(c[1]), a[1].max(c[1]));
                }
            }
            w
        })
        .collect();
    for i in 0..wells.len() {
        for j in i + 1..wells.len() {
            if wells[i].interiors_overlap(&wells[j]) {
                return Err(ChoreoError::WellOverlap(i, j));
            }
        }
    }
    Ok(wells)
}
