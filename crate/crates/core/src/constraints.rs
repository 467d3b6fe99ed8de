//! Admissible sign words, topological/monotonicity constraints and the
//! projection onto the feasible set of fundamental arcs.

use serde::{Deserialize, Serialize};

use crate::error::{ChoreoError, Result};
use crate::model::{FullLoop, FundamentalArc, Omega};
use crate::symmetry::SymmetrySpec;

/// Absolute tolerance for the pinned boundary coordinates.
pub const BOUNDARY_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OmegaValidity {
    pub admissible: bool,
    pub reason: Option<String>,
}

/// A word is admissible when it is not constant and, for odd `n`, two of the
/// indices `1..=[n/2]` carry different signs. For `n = 3` only index 1 is
/// available, so no word qualifies.
pub fn validate_omega(omega: &Omega) -> OmegaValidity {
    let s = &omega.signs;
    let fail = |r: String| OmegaValidity { admissible: false, reason: Some(r) };
    if s.iter().all(|&x| x == s[0]) {
        return fail(format!("constant word {omega} never changes the sign of z"));
    }
    if omega.n % 2 == 1 {
        let tail = &s[1..];
        if tail.iter().all(|&x| x == tail[0]) {
            return fail(if omega.n == 3 {
                "odd n needs two indices in 1..=[n/2] with different signs; for n = 3 that range is {1}, \
                 so no word is admissible"
                    .to_string()
            } else {
                format!("odd n needs two indices in 1..={} with different signs", omega.n / 2)
            });
        }
    }
    OmegaValidity { admissible: true, reason: None }
}

pub fn require_admissible(omega: &Omega) -> Result<()> {
    match validate_omega(omega) {
        OmegaValidity { admissible: true, .. } => Ok(()),
        OmegaValidity { reason, .. } => {
            Err(ChoreoError::InfeasibleOmega { n: omega.n, reason: reason.unwrap_or_default() })
        }
    }
}

/// Every admissible word, in lexicographic order of its `+`/`-` spelling.
/// With `modulo_flip` only words starting with `+` are kept.
pub fn enumerate_admissible(n: usize, modulo_flip: bool) -> Result<Vec<Omega>> {
    if n < 2 {
        return Err(ChoreoError::BodyCount(n));
    }
    let len = Omega::len_for(n);
    let mut out = Vec::new();
    for bits in 0u64..(1 << len) {
        // most significant bit is ω_0; a set bit is '-'
        let signs: Vec<i8> = (0..len).map(|i| if bits >> (len - 1 - i) & 1 == 1 { -1 } else { 1 }).collect();
        if modulo_flip && signs[0] < 0 {
            continue;
        }
        let w = Omega::new(n, signs)?;
        if validate_omega(&w).admissible {
            out.push(w);
        }
    }
    Ok(out)
}

/// Arc nodes at the constraint times `t = i/2`, `i = 0..=[n/2]`.
pub fn constraint_nodes(n: usize, intervals: usize) -> Vec<usize> {
    (0..=n / 2).map(|i| 2 * intervals * i / n).collect()
}

/// Least-squares nondecreasing fit by pool-adjacent-violators.
pub fn isotonic_nondecreasing(values: &[f64]) -> Vec<f64> {
    // blocks of (sum, count)
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(values.len());
    for &v in values {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (s1, c1) = blocks[blocks.len() - 1];
            let (s0, c0) = blocks[blocks.len() - 2];
            if s0 / c0 as f64 > s1 / c1 as f64 {
                blocks.pop();
                *blocks.last_mut().unwrap() = (s0 + s1, c0 + c1);
            } else {
                break;
            }
        }
    }
    blocks.into_iter().flat_map(|(s, c)| std::iter::repeat(s / c as f64).take(c)).collect()
}

/// Euclidean projection of the x/y samples onto the monotone cones with the
/// pinned endpoints, followed by the sign flip `z(i/2) ← ω_i |z(i/2)|`.
pub fn project_feasible(arc: &FundamentalArc, omega: &Omega) -> Result<FundamentalArc> {
    if arc.n != omega.n {
        return Err(ChoreoError::Shape(format!("arc for n = {}, word for n = {}", arc.n, omega.n)));
    }
    let m = arc.intervals();
    if (2 * m) % arc.n != 0 {
        return Err(ChoreoError::Grid { n: arc.n, samples: 4 * m, reason: "need n | 2M".into() });
    }
    let xs = arc.coord(0);
    let ys = arc.coord(1);
    // x_0 ≤ … ≤ x_{M−1} ≤ x_M = 0
    let mut x = isotonic_nondecreasing(&xs[..m]);
    x.iter_mut().for_each(|v| *v = v.min(0.0));
    x.push(0.0);
    // 0 = y_0 ≤ y_1 ≤ …
    let mut y = vec![0.0];
    y.extend(isotonic_nondecreasing(&ys[1..]).into_iter().map(|v| v.max(0.0)));
    let mut nodes: Vec<[f64; 3]> = (0..=m).map(|k| [x[k], y[k], arc.nodes[k][2]]).collect();
    for (i, k) in constraint_nodes(arc.n, m).into_iter().enumerate() {
        nodes[k][2] = f64::from(omega.signs[i]) * nodes[k][2].abs();
    }
    Ok(FundamentalArc { n: arc.n, nodes })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Monotonicity {
    Strict,
    Weak,
    Violated,
}

impl Monotonicity {
    pub fn of(values: &[f64]) -> (Self, f64) {
        let min_inc = values.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        let m = if min_inc > 0.0 {
            Monotonicity::Strict
        } else if min_inc >= 0.0 {
            Monotonicity::Weak
        } else {
            Monotonicity::Violated
        };
        (m, min_inc)
    }

    pub fn weak_ok(self) -> bool {
        self != Monotonicity::Violated
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopologicalFlag {
    pub index: usize,
    pub time: f64,
    pub z: f64,
    pub sign: i8,
    /// `ω_i z ≥ 0`
    pub weak: bool,
    /// `ω_i z > 0`; false means a boundary collision risk or a violation.
    pub strict: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnosis {
    pub boundary_ok: bool,
    pub boundary_residual: f64,
    pub monotone_x: Monotonicity,
    pub min_increment_x: f64,
    pub monotone_y: Monotonicity,
    pub min_increment_y: f64,
    pub topological: Vec<TopologicalFlag>,
}

impl Diagnosis {
    pub fn topological_weak(&self) -> bool {
        self.topological.iter().all(|f| f.weak)
    }

    pub fn topological_strict(&self) -> bool {
        self.topological.iter().all(|f| f.strict)
    }

    pub fn monotone_weak(&self) -> bool {
        self.monotone_x.weak_ok() && self.monotone_y.weak_ok()
    }

    pub fn monotone_strict(&self) -> bool {
        self.monotone_x == Monotonicity::Strict && self.monotone_y == Monotonicity::Strict
    }

    /// Indices whose sign constraint is not strictly satisfied.
    pub fn flagged_indices(&self) -> Vec<usize> {
        self.topological.iter().filter(|f| !f.strict).map(|f| f.index).collect()
    }

    /// Smallest positive slack among the strict inequalities; negative when violated.
    pub fn strict_margin(&self) -> f64 {
        let z = self.topological.iter().map(|f| f64::from(f.sign) * f.z).fold(f64::INFINITY, f64::min);
        z.min(self.min_increment_x).min(self.min_increment_y)
    }
}

pub fn diagnose_arc(arc: &FundamentalArc, omega: &Omega) -> Result<Diagnosis> {
    if arc.n != omega.n {
        return Err(ChoreoError::Shape(format!("arc for n = {}, word for n = {}", arc.n, omega.n)));
    }
    let m = arc.intervals();
    if (2 * m) % arc.n != 0 {
        return Err(ChoreoError::Grid { n: arc.n, samples: 4 * m, reason: "need n | 2M".into() });
    }
    let boundary_residual = arc.nodes[0][1].abs().max(arc.nodes[m][0].abs());
    let (monotone_x, min_increment_x) = Monotonicity::of(&arc.coord(0));
    let (monotone_y, min_increment_y) = Monotonicity::of(&arc.coord(1));
    let topological = constraint_nodes(arc.n, m)
        .into_iter()
        .enumerate()
        .map(|(i, k)| {
            let z = arc.nodes[k][2];
            let sz = f64::from(omega.signs[i]) * z;
            TopologicalFlag { index: i, time: i as f64 / 2.0, z, sign: omega.signs[i], weak: sz >= 0.0, strict: sz > 0.0 }
        })
        .collect();
    Ok(Diagnosis {
        boundary_ok: boundary_residual <= BOUNDARY_TOL,
        boundary_residual,
        monotone_x,
        min_increment_x,
        monotone_y,
        min_increment_y,
        topological,
    })
}

/// Diagnosis of a reconstructed loop. The boundary residual also covers
/// `y_0(n/2)` and `x_0(3n/4)`.
pub fn diagnose(lp: &FullLoop, omega: &Omega) -> Result<Diagnosis> {
    let sym = SymmetrySpec::new(omega.n)?;
    let arc = sym.extract_arc(lp)?;
    let mut d = diagnose_arc(&arc, omega)?;
    let m = arc.intervals();
    let extra = lp.at(2 * m, 0)[1].abs().max(lp.at(3 * m, 0)[0].abs());
    d.boundary_residual = d.boundary_residual.max(extra);
    d.boundary_ok = d.boundary_residual <= BOUNDARY_TOL;
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pav_pools_adjacent_violators() {
        assert_eq!(isotonic_nondecreasing(&[1.0, 0.5, 2.0]), vec![0.75, 0.75, 2.0]);
        assert_eq!(isotonic_nondecreasing(&[3.0, 2.0, 1.0]), vec![2.0, 2.0, 2.0]);
        assert_eq!(isotonic_nondecreasing(&[0.0, 1.0]), vec![0.0, 1.0]);
    }

    #[test]
    fn n3_has_no_admissible_word() {
        assert!(enumerate_admissible(3, false).unwrap().is_empty());
        let v = validate_omega(&Omega::parse(3, "+-").unwrap());
        assert!(!v.admissible);
        assert!(v.reason.unwrap().contains("n = 3"));
    }

    #[test]
    fn constant_words_are_rejected() {
        assert!(!validate_omega(&Omega::parse(2, "++").unwrap()).admissible);
        assert!(validate_omega(&Omega::parse(2, "+-").unwrap()).admissible);
    }

    #[test]
    fn n4_has_six_words_in_order() {
        let words: Vec<String> = enumerate_admissible(4, false).unwrap().iter().map(|w| w.word()).collect();
        assert_eq!(words, ["++-", "+-+", "+--", "-++", "-+-", "--+"]);
        assert_eq!(enumerate_admissible(4, true).unwrap().len(), 3);
    }
}
