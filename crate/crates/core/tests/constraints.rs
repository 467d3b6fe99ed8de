mod common;

use choreo::constraints::{self, diagnose, diagnose_arc, enumerate_admissible, project_feasible, validate_omega, Monotonicity};
use choreo::model::{FundamentalArc, Omega};
use common::*;
use proptest::prelude::*;

/// Every sign word of the right length, built independently of the library.
fn all_words(len: usize) -> Vec<Vec<i8>> {
    let mut out = vec![vec![]];
    for _ in 0..len {
        out = out.into_iter().flat_map(|w: Vec<i8>| [1i8, -1].map(|s| [w.clone(), vec![s]].concat())).collect();
    }
    out
}

/// Literal reading of the admissibility rules: two entries differ, and for
/// odd `n` two distinct indices in `1..=[n/2]` differ.
fn oracle(n: usize, w: &[i8]) -> bool {
    let differ = |lo: usize| (lo..w.len()).any(|a| (lo..w.len()).any(|b| a != b && w[a] != w[b]));
    differ(0) && (n % 2 == 0 || differ(1))
}

#[test]
fn counts_match_brute_force_for_small_n() {
    for n in 2..=9 {
        let len = Omega::len_for(n);
        let expected: Vec<Vec<i8>> = all_words(len).into_iter().filter(|w| oracle(n, w)).collect();
        let got = enumerate_admissible(n, false).unwrap();
        assert_eq!(got.len(), expected.len(), "n = {n}");
        for w in &got {
            assert!(expected.contains(&w.signs), "n = {n}: {w}");
        }
        let closed = if n % 2 == 0 { (1 << (n / 2 + 1)) - 2 } else { (1 << (n / 2 + 1)) - 4 };
        assert_eq!(got.len(), closed, "n = {n}");
        assert_eq!(enumerate_admissible(n, true).unwrap().len(), closed / 2);
    }
}

#[test]
fn validate_examples() {
    let v = |n, s: &str| validate_omega(&Omega::parse(n, s).unwrap()).admissible;
    assert!(!v(3, "+-"));
    assert!(!v(4, "+++"));
    assert!(v(5, "++-"));
    assert!(v(2, "+-"));
    assert!(!v(5, "-++"));
    assert!(!v(7, "+---"));
    for n in 2..=9 {
        for signs in all_words(Omega::len_for(n)) {
            let r = validate_omega(&Omega::new(n, signs).unwrap());
            assert_eq!(r.admissible, r.reason.is_none());
        }
    }
}

#[test]
fn rejected_words_cite_the_rule() {
    let r = validate_omega(&Omega::parse(4, "---").unwrap()).reason.unwrap();
    assert!(r.contains("constant"));
    let r = validate_omega(&Omega::parse(5, "+--").unwrap()).reason.unwrap();
    assert!(r.contains("odd n"));
    let r = validate_omega(&Omega::parse(3, "-+").unwrap()).reason.unwrap();
    assert!(r.contains("n = 3"));
}

#[test]
fn projection_examples() {
    let omega = Omega::parse(2, "+-").unwrap();
    let mut arc = FundamentalArc { n: 2, nodes: vec![[0.0; 3]; 5] };
    arc.nodes[0] = [-1.0, 0.3, -0.3];
    arc.nodes[1] = [-0.5, 0.2, 0.0];
    arc.nodes[2] = [-0.7, 0.4, 0.1];
    arc.nodes[3] = [-0.2, 0.8, 0.0];
    arc.nodes[4] = [0.4, 1.0, 0.2];
    let p = project_feasible(&arc, &omega).unwrap();
    assert_eq!(p.nodes[0][2], 0.3);
    assert_eq!(p.nodes[4][2], -0.2);
    assert_eq!(p.nodes[0][1], 0.0);
    assert_eq!(p.nodes[4][0], 0.0);
    assert_eq!(p.coord(0)[..4], [-1.0, -0.6, -0.6, -0.2]);
    let d = diagnose_arc(&p, &omega).unwrap();
    assert!(d.boundary_ok && d.monotone_weak() && d.topological_strict());
}

#[test]
fn monotonicity_classes() {
    assert_eq!(Monotonicity::of(&[-1.0, -0.5, 0.0]).0, Monotonicity::Strict);
    assert_eq!(Monotonicity::of(&[-1.0, -1.0, 0.0]).0, Monotonicity::Weak);
    assert_eq!(Monotonicity::of(&[-1.0, -1.5, 0.0]).0, Monotonicity::Violated);
}

#[test]
fn diagnose_flags_exactly_the_broken_index() {
    let omega = Omega::parse(6, "+-+-").unwrap();
    let s = sym(6);
    let m = 12;
    let arc = feasible_arc(&omega, m, 0.0, &mut rng(1));
    let mut nodes = arc.nodes.clone();
    let ks = constraints::constraint_nodes(6, m);
    for (i, &k) in ks.iter().enumerate() {
        nodes[k][2] = f64::from(omega.signs[i]) * 0.2;
    }
    let good = FundamentalArc { n: 6, nodes: nodes.clone() };
    let d = diagnose(&s.reconstruct(&good).unwrap(), &omega).unwrap();
    assert!(d.topological_strict() && d.boundary_ok);
    nodes[ks[2]][2] *= -1.0;
    let d = diagnose(&s.reconstruct(&FundamentalArc { n: 6, nodes: nodes.clone() }).unwrap(), &omega).unwrap();
    assert_eq!(d.flagged_indices(), vec![2]);
    assert!(!d.topological_weak());
    nodes[ks[2]][2] = 0.0;
    nodes[ks[0]][2] = 0.0;
    let d = diagnose(&s.reconstruct(&FundamentalArc { n: 6, nodes }).unwrap(), &omega).unwrap();
    assert!(d.topological_weak());
    assert_eq!(d.flagged_indices(), vec![0, 2]);
}

fn dist2(a: &FundamentalArc, b: &FundamentalArc) -> f64 {
    a.nodes.iter().zip(&b.nodes).map(|(p, q)| (0..3).map(|k| (p[k] - q[k]).powi(2)).sum::<f64>()).sum()
}

proptest! {
    #[test]
    fn projection_is_idempotent_and_feasible(seed in any::<u64>(), pick in 0usize..4) {
        let n = [2, 4, 5, 6][pick];
        let m = sym(n).compatible_intervals(12);
        let words = enumerate_admissible(n, false).unwrap();
        let omega = &words[seed as usize % words.len()];
        let arc = random_arc(n, m, &mut rng(seed));
        let p = project_feasible(&arc, omega).unwrap();
        prop_assert_eq!(&project_feasible(&p, omega).unwrap(), &p);
        let d = diagnose(&sym(n).reconstruct(&p).unwrap(), omega).unwrap();
        prop_assert!(d.boundary_ok && d.monotone_weak() && d.topological_weak());
    }

    #[test]
    fn projection_is_nonexpansive_towards_feasible_arcs(seed in any::<u64>(), pick in 0usize..3) {
        let n = [2, 4, 5][pick];
        let m = sym(n).compatible_intervals(12);
        let omega = some_omega(n);
        let mut r = rng(seed);
        let arc = random_arc(n, m, &mut r);
        let target = project_feasible(&random_arc(n, m, &mut r), &omega).unwrap();
        let p = project_feasible(&arc, &omega).unwrap();
        prop_assert!(dist2(&p, &target) <= dist2(&arc, &target) + 1e-12);
    }
}
