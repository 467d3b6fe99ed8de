mod common;

use std::sync::OnceLock;

use choreo::action::{self, coercivity_check};
use choreo::constraints::{diagnose, enumerate_admissible};
use choreo::model::Omega;
use choreo::optimizer::{initial_guess, minimize, refine, sweep, SolveResult, SolveStatus, SolverConfig};
use choreo::{ChoreoError, Exec};
use common::*;

fn n2_result() -> &'static SolveResult {
    static R: OnceLock<SolveResult> = OnceLock::new();
    R.get_or_init(|| minimize(&Omega::parse(2, "+-").unwrap(), &SolverConfig::default()).unwrap())
}

fn quick(intervals: usize) -> SolverConfig {
    SolverConfig { intervals, max_iters: 300, ..SolverConfig::default() }
}

#[test]
fn every_word_for_n3_is_infeasible() {
    for w in ["+-", "-+", "++", "--"] {
        let err = minimize(&Omega::parse(3, w).unwrap(), &quick(12)).unwrap_err();
        assert!(matches!(err, ChoreoError::InfeasibleOmega { n: 3, .. }), "{w}: {err}");
    }
    assert!(sweep(3, &quick(12), false, 2).unwrap().is_empty());
}

#[test]
fn initial_guess_matches_the_fake_choreography() {
    for n in [2, 4, 5, 6] {
        for omega in enumerate_admissible(n, false).unwrap() {
            let cfg = SolverConfig { intervals: 24, jitter: 0.0, ..SolverConfig::default() };
            let arc = initial_guess(&omega, &cfg).unwrap();
            let m = arc.intervals();
            assert!((arc.nodes[0][0] + 1.0).abs() < 1e-12);
            assert!((arc.nodes[m][1] - 1.0).abs() < 1e-12);
            for (i, &k) in choreo::constraints::constraint_nodes(n, m).iter().enumerate() {
                assert!(arc.nodes[k][2] * f64::from(omega.signs[i]) > 0.0, "n = {n} {omega} index {i}");
            }
            let d = diagnose(&sym(n).reconstruct(&arc).unwrap(), &omega).unwrap();
            assert!(d.boundary_ok && d.monotone_weak() && d.topological_weak());
        }
    }
}

#[test]
fn n2_benchmark_converges_with_theorem_properties() {
    let r = n2_result();
    assert_eq!(r.status, SolveStatus::Converged);
    assert!(r.report.gradient_inf_norm < r.config.grad_tol);
    assert!(r.report.min_distance > 1e-3);
    assert!(sym(2).equivariance_residual(&r.full_loop).unwrap() <= 1e-12);
    let d = diagnose(&r.full_loop, &r.omega).unwrap();
    assert!(d.boundary_ok && d.monotone_strict() && d.topological_strict());
    assert!(coercivity_check(&r.full_loop, &r.omega).unwrap().holds);
    let x = r.arc.coord(0);
    let y = r.arc.coord(1);
    assert!(x.windows(2).all(|w| w[1] > w[0]));
    assert!(y.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn trace_is_non_increasing() {
    let r = n2_result();
    assert!(r.trace.len() > 1);
    assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
    for n in [4, 5] {
        let words = enumerate_admissible(n, true).unwrap();
        let r = minimize(&words[0], &quick(sym(n).compatible_intervals(20))).unwrap();
        assert!(r.trace.windows(2).all(|w| w[1] <= w[0]), "n = {n}");
    }
}

#[test]
fn serial_runs_are_bit_reproducible_and_match_parallel() {
    let omega = Omega::parse(4, "+-+").unwrap();
    let serial = SolverConfig { exec: Exec::Serial, ..quick(16) };
    let a = minimize(&omega, &serial).unwrap();
    let b = minimize(&omega, &serial).unwrap();
    let bits = |r: &SolveResult| r.trace.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a), bits(&b));
    assert_eq!(a.arc, b.arc);
    let p = minimize(&omega, &SolverConfig { exec: Exec::Parallel, ..quick(16) }).unwrap();
    assert_eq!(bits(&a), bits(&p));
    let other = minimize(&omega, &SolverConfig { seed: 7, ..serial }).unwrap();
    assert_ne!(bits(&a), bits(&other));
}

#[test]
fn refine_does_not_worsen_the_residual() {
    let coarse = minimize(&Omega::parse(2, "+-").unwrap(), &SolverConfig { intervals: 32, ..SolverConfig::default() }).unwrap();
    assert_eq!(coarse.status, SolveStatus::Converged);
    let fine = refine(&coarse, 64).unwrap();
    assert_eq!(fine.status, SolveStatus::Converged);
    let resampled = sym(2).reconstruct(&coarse.arc.resample(64)).unwrap();
    let before = action::el_residual(&resampled).unwrap();
    let after = action::el_residual(&fine.full_loop).unwrap();
    assert!(after <= before, "{after} > {before}");
    assert_eq!(fine.trace.len(), coarse.trace.len() + fine.iterations - coarse.iterations + 1);
}

#[test]
fn refining_a_converged_solution_is_a_fixed_point() {
    let r = n2_result();
    let again = refine(r, r.arc.intervals()).unwrap();
    assert!((again.report.action - r.report.action).abs() < 1e-10);
}

#[test]
fn sweep_covers_every_admissible_word() {
    let cfg = quick(20);
    let got = sweep(5, &cfg, false, 2).unwrap();
    let words: Vec<String> = enumerate_admissible(5, false).unwrap().iter().map(|w| w.word()).collect();
    assert_eq!(got.keys().cloned().collect::<Vec<_>>(), words);
    let flipped = sweep(5, &cfg, true, 1).unwrap();
    assert_eq!(flipped.len(), words.len() / 2);
    // job count does not change the results
    let serial = sweep(5, &SolverConfig { exec: Exec::Serial, ..cfg }, true, 1).unwrap();
    for (k, v) in &flipped {
        assert_eq!(v.as_ref().unwrap().trace, serial[k].as_ref().unwrap().trace);
    }
}
