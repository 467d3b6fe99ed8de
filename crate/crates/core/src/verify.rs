//! Post-hoc certificate of a candidate loop and mirror-pair comparison.

use std::fmt;

use nalgebra::{Matrix3, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::action;
use crate::constraints::{self, Monotonicity};
use crate::error::{ChoreoError, Result};
use crate::model::{FullLoop, Omega};
use crate::symmetry::{self, SymmetrySpec};
use crate::vec3::{self, Flip, Vec3};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub equivariance: f64,
    pub boundary: f64,
    pub min_distance: f64,
    pub el_residual: f64,
    /// Endpoint velocities must stay below this multiple of the time step.
    pub endpoint_velocity_steps: f64,
    pub confinement: f64,
    pub intersection_z: f64,
    /// Minimum RMS distance of the bodies from their best-fit plane.
    pub planarity: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            equivariance: 1e-10,
            boundary: constraints::BOUNDARY_TOL,
            min_distance: 1e-3,
            el_residual: 1e-3,
            endpoint_velocity_steps: 10.0,
            confinement: 1e-10,
            intersection_z: 1e-9,
            planarity: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: Option<f64>,
    pub threshold: Option<f64>,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub n: usize,
    pub omega: String,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl Certificate {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failed(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect()
    }
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "certificate n = {} omega = ({})", self.n, self.omega)?;
        for c in &self.checks {
            let v = c.value.map(|v| format!("{v:.3e}")).unwrap_or_default();
            let t = c.threshold.map(|t| format!("{t:.1e}")).unwrap_or_default();
            writeln!(
                f,
                "  [{}] {:<28} {:>11} {:>9}  {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                v,
                t,
                c.detail
            )?;
        }
        write!(f, "overall: {}", if self.passed { "PASS" } else { "FAIL" })
    }
}

struct Builder(Vec<Check>);

impl Builder {
    fn push(&mut self, name: &str, passed: bool, value: Option<f64>, threshold: Option<f64>, detail: String) {
        self.0.push(Check { name: name.into(), passed, value, threshold, detail });
    }

    fn below(&mut self, name: &str, value: f64, threshold: f64) {
        self.push(name, value <= threshold, Some(value), Some(threshold), String::new());
    }
}

/// Runs every check on a reconstructed loop for `omega`.
pub fn certify(lp: &FullLoop, omega: &Omega, th: &Thresholds) -> Result<Certificate> {
    let n = omega.n;
    let sym = SymmetrySpec::new(n)?;
    let mut b = Builder(Vec::new());

    b.below("equivariance", sym.equivariance_residual(lp)?, th.equivariance);

    let diag = constraints::diagnose(lp, omega)?;
    b.below("boundary_identities", diag.boundary_residual, th.boundary);

    let flagged = diag.flagged_indices();
    let zmin = diag.topological.iter().map(|f| f64::from(f.sign) * f.z).fold(f64::INFINITY, f64::min);
    b.push(
        "topological_signs_strict",
        flagged.is_empty(),
        Some(zmin),
        None,
        if flagged.is_empty() { String::new() } else { format!("flagged indices {flagged:?}") },
    );
    b.push(
        "monotone_x_strict",
        diag.monotone_x == Monotonicity::Strict,
        Some(diag.min_increment_x),
        None,
        format!("{:?}", diag.monotone_x).to_lowercase(),
    );
    b.push(
        "monotone_y_strict",
        diag.monotone_y == Monotonicity::Strict,
        Some(diag.min_increment_y),
        None,
        format!("{:?}", diag.monotone_y).to_lowercase(),
    );

    let (vel_ok, vel_detail, vel_min) = velocity_signs(lp, th.endpoint_velocity_steps)?;
    b.push("velocity_signs", vel_ok, Some(vel_min), None, vel_detail);

    let dmin = lp.min_distance();
    b.push("collision_free", dmin > th.min_distance, Some(dmin), Some(th.min_distance), String::new());

    match symmetry::well_regions(lp) {
        Ok(_) => b.push("wells_disjoint", true, None, None, String::new()),
        Err(e) => b.push("wells_disjoint", false, None, None, e.to_string()),
    }

    let partition = symmetry::quadrant_partition(n)?;
    b.below("quadrant_confinement", symmetry::confinement_violation(lp, &partition)?, th.confinement);

    match action::el_residual(lp) {
        Ok(r) => b.below("el_residual", r, th.el_residual),
        Err(e) => b.push("el_residual", false, None, Some(th.el_residual), e.to_string()),
    }

    match action::coercivity_check(lp, omega) {
        Ok(c) => b.push(
            "coercivity",
            c.holds,
            Some(c.action - c.bound),
            None,
            format!("action {:.6} >= bound {:.6}", c.action, c.bound),
        ),
        Err(e) => b.push("coercivity", false, None, None, e.to_string()),
    }

    let crossings = self_crossings_xy(&lp.track(0));
    b.push(
        "simple_curve_xy",
        crossings == 0,
        Some(crossings as f64),
        None,
        "self-crossings of the xy-projection of q_0".into(),
    );

    let meets = intersections(&lp.track(0), &lp.track(n));
    let zmax = meets.iter().map(|p| p[2].abs()).fold(0.0f64, f64::max);
    b.push(
        "intersections_in_xy_plane",
        !meets.is_empty() && zmax <= th.intersection_z,
        Some(zmax),
        Some(th.intersection_z),
        format!("{} intersection points of q_0 and q_n", meets.len()),
    );

    let rms = plane_fit_rms(lp);
    b.push("spatial", rms > th.planarity, Some(rms), Some(th.planarity), "RMS distance from best-fit plane".into());

    let m = lp.sample_count / 4;
    let (x0, yq) = (lp.at(0, 0)[0], lp.at(m, 0)[1]);
    b.push(
        "nondegenerate",
        x0 < 0.0 && yq > 0.0,
        Some(x0.abs().min(yq)),
        None,
        format!("x_0(0) = {x0:.6}, y_0(n/4) = {yq:.6}"),
    );

    let checks = b.0;
    Ok(Certificate { n, omega: omega.to_string(), passed: checks.iter().all(|c| c.passed), checks })
}

/// `ẋ_0 > 0` on `(0, n/4]`, `ẏ_0 > 0` on `[0, n/4)` by central differences;
/// the endpoint derivatives use one-sided differences.
fn velocity_signs(lp: &FullLoop, steps: f64) -> Result<(bool, String, f64)> {
    if lp.sample_count % 4 != 0 {
        return Err(ChoreoError::Grid { n: lp.bodies() / 2, samples: lp.sample_count, reason: "need 4 | S".into() });
    }
    let m = lp.sample_count / 4;
    let sc = lp.sample_count;
    let h = lp.step();
    let c = |k: usize, a: usize| (lp.at((k + 1) % sc, 0)[a] - lp.at((k + sc - 1) % sc, 0)[a]) / (2.0 * h);
    let vx = (1..=m).map(|k| c(k, 0)).fold(f64::INFINITY, f64::min);
    let vy = (0..m).map(|k| c(k, 1)).fold(f64::INFINITY, f64::min);
    let ex = ((lp.at(1, 0)[0] - lp.at(0, 0)[0]) / h).abs();
    let ey = ((lp.at(m, 0)[1] - lp.at(m - 1, 0)[1]) / h).abs();
    let tol = steps * h;
    let ok = vx > 0.0 && vy > 0.0 && ex <= tol && ey <= tol;
    Ok((ok, format!("min xdot {vx:.3e}, min ydot {vy:.3e}, |xdot(0)| {ex:.2e}, |ydot(n/4)| {ey:.2e}"), vx.min(vy)))
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// Number of crossings between non-adjacent edges of the closed xy-polyline.
pub fn self_crossings_xy(track: &[Vec3]) -> usize {
    let s = track.len();
    let p: Vec<[f64; 2]> = track.iter().map(|q| [q[0], q[1]]).collect();
    let mut count = 0;
    for i in 0..s {
        let (a, b) = (p[i], p[(i + 1) % s]);
        for j in i + 2..s {
            if i == 0 && j == s - 1 {
                continue;
            }
            let (c, d) = (p[j], p[(j + 1) % s]);
            if a[0].max(b[0]) < c[0].min(d[0])
                || c[0].max(d[0]) < a[0].min(b[0])
                || a[1].max(b[1]) < c[1].min(d[1])
                || c[1].max(d[1]) < a[1].min(b[1])
            {
                continue;
            }
            let (o1, o2) = (orient(a, b, c), orient(a, b, d));
            let (o3, o4) = (orient(c, d, a), orient(c, d, b));
            if o1 * o2 <= 0.0 && o3 * o4 <= 0.0 {
                count += 1;
            }
        }
    }
    count
}

/// Closest points of two 3-d segments.
fn segment_closest(p1: Vec3, q1: Vec3, p2: Vec3, q2: Vec3) -> (Vec3, Vec3) {
    let d1 = vec3::sub(q1, p1);
    let d2 = vec3::sub(q2, p2);
    let r = vec3::sub(p1, p2);
    let (a, e, f) = (vec3::norm2(d1), vec3::norm2(d2), vec3::dot(d2, r));
    let c = vec3::dot(d1, r);
    let bb = vec3::dot(d1, d2);
    let denom = a * e - bb * bb;
    let mut s = if denom > 1e-300 { ((bb * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
    let mut t = if e > 0.0 { (bb * s + f) / e } else { 0.0 };
    if t < 0.0 {
        t = 0.0;
        s = if a > 0.0 { (-c / a).clamp(0.0, 1.0) } else { 0.0 };
    } else if t > 1.0 {
        t = 1.0;
        s = if a > 0.0 { ((bb - c) / a).clamp(0.0, 1.0) } else { 0.0 };
    }
    (vec3::add(p1, vec3::scale(d1, s)), vec3::add(p2, vec3::scale(d2, t)))
}

/// Points where two closed polylines meet, up to a distance of `1e-9` times their size.
pub fn intersections(a: &[Vec3], b: &[Vec3]) -> Vec<Vec3> {
    let size = a.iter().chain(b).map(|p| vec3::norm(*p)).fold(0.0f64, f64::max).max(1e-300);
    let tol = 1e-9 * size;
    let mut out: Vec<Vec3> = Vec::new();
    for i in 0..a.len() {
        let (p1, q1) = (a[i], a[(i + 1) % a.len()]);
        for j in 0..b.len() {
            let (p2, q2) = (b[j], b[(j + 1) % b.len()]);
            let lo = |k: usize| p1[k].min(q1[k]) - tol;
            let hi = |k: usize| p1[k].max(q1[k]) + tol;
            if (0..3).any(|k| p2[k].max(q2[k]) < lo(k) || p2[k].min(q2[k]) > hi(k)) {
                continue;
            }
            let (x, y) = segment_closest(p1, q1, p2, q2);
            if vec3::norm(vec3::sub(x, y)) <= tol {
                let m = vec3::lerp(x, y, 0.5);
                if out.iter().all(|o| vec3::norm(vec3::sub(*o, m)) > 10.0 * tol) {
                    out.push(m);
                }
            }
        }
    }
    out
}

/// RMS distance of all positions from their least-squares plane.
pub fn plane_fit_rms(lp: &FullLoop) -> f64 {
    let count = lp.positions.len() as f64;
    let mut mean = [0.0; 3];
    for p in &lp.positions {
        mean = vec3::add(mean, *p);
    }
    mean = vec3::scale(mean, 1.0 / count);
    let mut cov = Matrix3::<f64>::zeros();
    for p in &lp.positions {
        let d = vec3::sub(*p, mean);
        for r in 0..3 {
            for c in 0..3 {
                cov[(r, c)] += d[r] * d[c] / count;
            }
        }
    }
    let eig = SymmetricEigen::new(cov);
    eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min).max(0.0).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MirrorComparison {
    /// Max deviation of the best-aligned curves.
    pub alignment_error: f64,
    pub action_difference: f64,
    pub transform: String,
}

/// Best alignment of the curve of `a` onto the curve of `b` over coordinate
/// flips, time shifts, time reversal and the choice of `q_0` or `q_n` in `b`.
pub fn compare_mirror(a: &FullLoop, b: &FullLoop) -> Result<MirrorComparison> {
    if a.bodies() != b.bodies() || a.bodies() % 2 != 0 {
        return Err(ChoreoError::Shape("loops must have the same even body count".into()));
    }
    let b = if b.sample_count == a.sample_count { b.clone() } else { b.resample(a.sample_count)? };
    let n = a.bodies() / 2;
    let s = a.sample_count;
    let ta = a.track(0);
    let mut best = (f64::INFINITY, String::new());
    for body in [0, n] {
        let tb = b.track(body);
        for flip in Flip::all() {
            let fa: Vec<Vec3> = ta.iter().map(|p| flip.apply(*p)).collect();
            for reverse in [false, true] {
                for shift in 0..s {
                    let mut err = 0.0f64;
                    for k in 0..s {
                        let src = if reverse { (s + shift - k) % s } else { (k + shift) % s };
                        err = err.max(vec3::norm(vec3::sub(fa[src], tb[k])));
                        if err >= best.0 {
                            break;
                        }
                    }
                    if err < best.0 {
                        best = (
                            err,
                            format!("flip {:?}, shift {shift}, reverse {reverse}, onto body {body}", flip.0),
                        );
                    }
                }
            }
        }
    }
    let da = action::action_value(a).action;
    let db = action::action_value(&b).action;
    Ok(MirrorComparison { alignment_error: best.0, action_difference: (da - db).abs(), transform: best.1 })
}
