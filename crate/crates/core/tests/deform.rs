mod common;

use choreo::deform::{
    self, find_plateaus, monotonize, pull_apart, pull_apart_kinetic, shift_escape, shift_segment, tau_admissibility,
    vertical_kick, KickProfile, KickShape, PathSegment, Plateau, SeparationWitness, ShiftCase, TauVector,
};
use choreo::constraints::diagnose_arc;
use choreo::model::Omega;
use choreo::vec3;
use common::*;
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Bodies 0 (`j`) and 1 (`k`) collide in x at t = 0; bodies 2, 3 form `I0`
/// and 4 forms `I1`. With `excursions` the pair may cross back over the
/// collision coordinate, otherwise the segment is x-separated.
fn separated_segment(r: &mut ChaCha8Rng, nodes: usize, excursions: bool) -> (PathSegment, SeparationWitness) {
    let duration = r.gen_range(0.5..2.0);
    let times: Vec<f64> = (0..nodes).map(|s| duration * s as f64 / (nodes - 1) as f64).collect();
    let lo = -r.gen_range(0.2..1.0);
    let hi = r.gen_range(0.2..1.0);
    let reach: f64 = if excursions { 0.3 } else { 0.0 };
    let mut pos = Vec::new();
    for s in 0..nodes {
        let yz = |r: &mut ChaCha8Rng| [r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)];
        let xj = if s == 0 { 0.0 } else if s == nodes - 1 { lo } else { r.gen_range(lo..=reach) };
        let xk = if s == 0 { 0.0 } else if s == nodes - 1 { hi } else { r.gen_range(-reach..=hi) };
        for x in [xj, xk, lo - r.gen_range(0.1..2.0), lo - r.gen_range(0.1..2.0), hi + r.gen_range(0.1..2.0)] {
            let [y, z] = yz(r);
            pos.push([x, y, z]);
        }
    }
    let masses = (0..5).map(|_| r.gen_range(0.5..2.0)).collect();
    let seg = PathSegment::new(times, masses, pos).unwrap();
    let w = SeparationWitness { j: 0, k: 1, axis: 0, i0: vec![2, 3], i1: vec![4] };
    (seg, w)
}

fn static_segment(r: &mut ChaCha8Rng) -> (PathSegment, SeparationWitness) {
    let duration = r.gen_range(0.5..2.0);
    let (y, z) = (r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
    let row = [[0.0, y, z], [0.0, y + 0.5, z], [-1.0, 0.0, 0.0], [r.gen_range(0.0..1.0), 0.3, 0.0]];
    let seg = PathSegment::new(vec![0.0, duration], vec![1.0; 4], [row, row].concat()).unwrap();
    let w = SeparationWitness { j: 0, k: 1, axis: 0, i0: vec![2], i1: vec![3] };
    (seg, w)
}

#[test]
fn witness_validation_rejects_broken_orderings() {
    let (seg, w) = separated_segment(&mut rng(1), 9, false);
    w.validate(&seg).unwrap();
    let mut bad = w.clone();
    bad.i0 = vec![2];
    assert!(bad.validate(&seg).is_err());
    let mut bad = w.clone();
    bad.i1 = vec![3, 4];
    bad.i0 = vec![2];
    assert!(bad.validate(&seg).is_err());
    assert!(pull_apart(&seg, &w, seg.duration()).is_err());
    assert!(pull_apart(&seg, &w, 0.0).is_err());
}

#[test]
fn tiny_pull_apart_is_close_to_identity() {
    let (seg, w) = separated_segment(&mut rng(2), 9, false);
    let out = pull_apart(&seg, &w, 1e-9).unwrap();
    for s in 0..out.nodes() {
        for i in 0..5 {
            let d = vec3::norm(vec3::sub(out.at(s, i), seg.eval(i, out.times[s])));
            assert!(d < 3e-9);
        }
    }
}

#[test]
fn vertical_kick_even_pattern_is_admissible() {
    for n in [2, 4, 6, 8] {
        let l = n / 2;
        let tau = TauVector::from_pairs(2 * n, &[(0, -1), (n, -1), (l, 1), (l + n, 1)]).unwrap();
        let a = tau_admissibility(&sym(n), &tau, &[0, l, n, l + n], 0.0, 0).unwrap();
        assert!(a.ok(), "n = {n}: {a:?}");
    }
}

#[test]
fn vertical_kick_odd_pattern_is_admissible() {
    for n in [5, 7, 9] {
        let l = n / 2;
        let tau = TauVector::from_pairs(2 * n, &[(0, -1), (n, -1), (l, 1), (l + n, 1)]).unwrap();
        let a = tau_admissibility(&sym(n), &tau, &[0, l, n, l + n], 0.25, 0).unwrap();
        assert!(a.ok(), "n = {n}: {a:?}");
    }
}

#[test]
fn inadmissible_tau_is_reported() {
    let n = 4;
    let tau = TauVector::from_pairs(8, &[(0, 1), (2, 1)]).unwrap();
    assert!(!tau_admissibility(&sym(n), &tau, &[0, 2], 0.0, 0).unwrap().differs_on_cluster);
    let tau = TauVector::from_pairs(8, &[(0, -1), (2, 1), (5, 1)]).unwrap();
    assert!(!tau_admissibility(&sym(n), &tau, &[0, 2], 0.0, 0).unwrap().ok());
    assert!(TauVector::new(vec![0; 8]).is_err());
}

#[test]
fn vertical_kick_shapes() {
    let seg = PathSegment::new(vec![0.0, 0.5, 1.0], vec![1.0, 1.0], vec![[0.0, 1.0, 0.0], [0.0, -1.0, 0.0]].repeat(3)).unwrap();
    let tau = TauVector::new(vec![1, -1]).unwrap();
    let dir = [1.0, 0.0, 0.0];
    let start = KickProfile { eps: 0.1, anchor: 0.0, plateau: 0.1, ramp: 0.3, support: 0.4, shape: KickShape::Start };
    let out = vertical_kick(&seg, &tau, &start, dir).unwrap();
    for s in 0..out.nodes() {
        let t = out.times[s];
        if t <= 0.1 {
            assert_eq!(out.at(s, 0)[0], 0.1);
            assert_eq!(out.at(s, 1)[0], -0.1);
        }
        if t >= 0.3 {
            assert_eq!(out.at(s, 0)[0], 0.0);
        }
    }
    let zero = KickProfile { eps: 0.0, ..start };
    let same = vertical_kick(&seg, &tau, &zero, dir).unwrap();
    for s in 0..same.nodes() {
        assert_eq!(same.at(s, 0), seg.eval(0, same.times[s]));
    }
    let end = KickProfile { anchor: 1.0, shape: KickShape::End, ..start };
    let out = vertical_kick(&seg, &tau, &end, dir).unwrap();
    assert_eq!(out.at(out.nodes() - 1, 0)[0], 0.1);
    let outside = KickProfile { anchor: 0.9, shape: KickShape::Interior, ..start };
    assert!(vertical_kick(&seg, &tau, &outside, dir).is_err());
}

#[test]
fn shift_move_kinetic_increment_even_and_odd() {
    let mut r = rng(9);
    for (n, k, factor) in [(2, 0, 2.0), (4, 1, 2.0), (5, 1, 1.0), (5, 4, 1.0)] {
        let (t1, t2) = (0.2, r.gen_range(0.4..0.9));
        let times: Vec<f64> = (0..=10).map(|s| s as f64 / 10.0).collect();
        // x is flat for every body, y and z move freely
        let pos: Vec<[f64; 3]> = times
            .iter()
            .flat_map(|_| (0..2 * n).map(|i| [i as f64, 0.0, 0.0]).collect::<Vec<_>>())
            .enumerate()
            .map(|(c, mut p)| {
                p[1] = (c as f64 * 0.37).sin();
                p[2] = (c as f64 * 0.11).cos();
                p
            })
            .collect();
        let seg = PathSegment::new(times, vec![1.0; 2 * n], pos).unwrap();
        let eps = 0.05;
        let mv = ShiftCase::shift_move(n, k, (t1, t2), eps, vec![], vec![]).unwrap();
        let out = shift_segment(&seg, &mv).unwrap();
        let inc = out.kinetic() - seg.kinetic();
        let expected = factor * eps * eps / (t2 - t1);
        assert!((inc - expected).abs() < 1e-12, "n = {n}, k = {k}: {inc} vs {expected}");
        let zero = shift_segment(&seg, &ShiftCase::shift_move(n, k, (t1, t2), 0.0, vec![], vec![]).unwrap()).unwrap();
        assert!((zero.kinetic() - seg.kinetic()).abs() < 1e-12);
    }
}

#[test]
fn shift_cases_cover_class_ranges() {
    assert_eq!(ShiftCase::for_body(4, 0).unwrap(), ShiftCase::Case1);
    assert_eq!(ShiftCase::for_body(4, 1).unwrap(), ShiftCase::Case2);
    assert!(ShiftCase::for_body(4, 2).is_err());
    assert_eq!(ShiftCase::for_body(7, 1).unwrap(), ShiftCase::Case3);
    assert_eq!(ShiftCase::for_body(7, 3).unwrap(), ShiftCase::Case4);
    assert_eq!(ShiftCase::for_body(7, 5).unwrap(), ShiftCase::Case5);
    assert_eq!(ShiftCase::for_body(7, 6).unwrap(), ShiftCase::Case6);
}

#[test]
fn shift_escape_keeps_feasibility_and_breaks_plateau() {
    let omega = Omega::parse(4, "+-+").unwrap();
    let mut arc = feasible_arc(&omega, 16, 0.0, &mut rng(3));
    for k in 4..9 {
        arc.nodes[k][0] = arc.nodes[4][0];
    }
    let plateaus = find_plateaus(&arc, 1e-12, 3);
    let pl = *plateaus.iter().find(|p| p.axis == 0).unwrap();
    assert_eq!(pl, Plateau { axis: 0, start: 4, end: 8 });
    assert_eq!(shift_escape(&arc, pl, 0.0, &omega).unwrap(), arc);
    let out = shift_escape(&arc, pl, 0.01, &omega).unwrap();
    let d = diagnose_arc(&out, &omega).unwrap();
    assert!(d.boundary_ok && d.monotone_weak() && d.topological_weak());
    assert!(find_plateaus(&out, 1e-12, 3).iter().all(|p| p.axis != 0));
}

proptest! {
    #[test]
    fn pull_apart_identities(seed in any::<u64>(), frac in 0.01f64..0.9) {
        let mut r = rng(seed);
        let (seg, w) = separated_segment(&mut r, 7, false);
        let eps = frac * seg.duration();
        let out = pull_apart(&seg, &w, eps).unwrap();
        for s in 0..out.nodes() {
            let t = out.times[s];
            let base = |i| seg.eval(i, t);
            let d0 = vec3::norm2(vec3::sub(base(1), base(0)));
            let d1 = vec3::norm2(vec3::sub(out.at(s, 1), out.at(s, 0)));
            // the j–k gap never shrinks
            prop_assert!(d1 >= d0 - 1e-12);
            if t >= eps {
                let gap = base(1)[0] - base(0)[0];
                let expected = d0 + 4.0 * eps * eps * gap + 4.0 * eps.powi(4);
                prop_assert!((d1 - expected).abs() < 1e-12, "t = {}: {} vs {}", t, d1, expected);
            }
        }
        let (st, sw) = static_segment(&mut r);
        let e = frac * st.duration();
        let inc = pull_apart_kinetic(&st, &sw, e).unwrap() - st.kinetic();
        prop_assert!((inc - 4.0 / 3.0 * e.powi(3)).abs() < 1e-12);
    }

    #[test]
    fn monotonize_preserves_kinetic_and_spreads_bodies(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (seg, w) = separated_segment(&mut r, 12, true);
        let out = monotonize(&seg, &w).unwrap();
        let (k0, k1) = (seg.kinetic(), out.kinetic());
        prop_assert!((k0 - k1).abs() <= 1e-12 * k0.max(1.0), "{} vs {}", k0, k1);
        for s in 1..out.nodes() {
            prop_assert!(out.at(s, w.j)[0] <= out.at(s - 1, w.j)[0]);
            prop_assert!(out.at(s, w.k)[0] >= out.at(s - 1, w.k)[0]);
        }
        for s in 0..out.nodes() {
            let t = out.times[s];
            for a in 0..5 {
                for b in a + 1..5 {
                    let before = vec3::norm(vec3::sub(seg.eval(a, t), seg.eval(b, t)));
                    prop_assert!(out.distance(s, a, b) >= before - 1e-12, "node {}, pair {} {}", s, a, b);
                }
            }
        }
        prop_assert!(out.action() <= seg.action() + 1e-12);
    }

    #[test]
    fn monotonize_leaves_monotone_segments_alone(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (seg, w) = separated_segment(&mut r, 8, false);
        let mut sorted = seg.clone();
        let nb = sorted.bodies();
        let mut xj: Vec<f64> = (0..seg.nodes()).map(|s| seg.at(s, 0)[0]).collect();
        let mut xk: Vec<f64> = (0..seg.nodes()).map(|s| seg.at(s, 1)[0]).collect();
        xj.sort_by(|a, b| b.total_cmp(a));
        xk.sort_by(f64::total_cmp);
        for s in 0..seg.nodes() {
            sorted.positions[s * nb][0] = xj[s];
            sorted.positions[s * nb + 1][0] = xk[s];
        }
        let out = monotonize(&sorted, &w).unwrap();
        for (p, q) in out.positions.iter().zip(&sorted.positions) {
            for c in 0..3 {
                prop_assert!((p[c] - q[c]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn vertical_kick_adds_exactly_the_profile(seed in any::<u64>(), eps in 0.0f64..0.5, anchor in 0.3f64..0.7) {
        let mut r = rng(seed);
        let (seg, _) = separated_segment(&mut r, 9, true);
        let nb = seg.bodies();
        let tau = TauVector::new((0..nb).map(|i| [1, -1, 0][i % 3]).collect()).unwrap();
        let dur = seg.duration();
        let prof = KickProfile { eps, anchor: anchor * dur, plateau: 0.05 * dur, ramp: 0.15 * dur, support: 0.2 * dur, shape: KickShape::Interior };
        let dir = [0.0, 0.0, 1.0];
        let out = vertical_kick(&seg, &tau, &prof, dir).unwrap();
        for s in 0..out.nodes() {
            let t = out.times[s];
            for i in 0..nb {
                let want = vec3::add(seg.eval(i, t), vec3::scale(dir, eps * prof.h(t) * f64::from(tau.entries[i])));
                let got = out.at(s, i);
                for c in 0..3 {
                    prop_assert!((want[c] - got[c]).abs() < 1e-14);
                }
            }
        }
    }
}

#[test]
fn kick_arc_is_zero_outside_support() {
    let omega = Omega::parse(2, "+-").unwrap();
    let arc = feasible_arc(&omega, 16, 0.0, &mut rng(1));
    let prof = KickProfile { eps: 0.2, anchor: 0.25, plateau: 0.02, ramp: 0.05, support: 0.06, shape: KickShape::Interior };
    let out = deform::kick_arc(&arc, 2, &prof, 1.0).unwrap();
    for k in 0..=16 {
        let t = arc.time(k);
        let want = arc.nodes[k][2] + 0.2 * prof.h(t);
        assert!((out.nodes[k][2] - want).abs() < 1e-15);
        if (t - 0.25).abs() >= 0.05 {
            assert_eq!(out.nodes[k], arc.nodes[k]);
        }
    }
}
