mod common;

use std::f64::consts::PI;

use choreo::io::{self, TrajectoryFile};
use choreo::model::{FullLoop, MassSystem, Omega};
use choreo::ChoreoError;
use common::*;
use proptest::prelude::*;

fn sinusoid(samples: usize) -> FullLoop {
    let positions =
        (0..samples).map(|s| 2.0 * PI * s as f64 / samples as f64).map(|a| [a.cos(), a.sin(), 0.0]).collect();
    FullLoop::new(MassSystem { masses: vec![1.0] }, 1.0, samples, positions).unwrap()
}

fn random_loop(n: usize, samples: usize, seed: u64) -> FullLoop {
    use rand::Rng;
    let mut r = rng(seed);
    let positions =
        (0..samples * 2 * n).map(|_| [r.gen_range(-3.0..3.0), r.gen_range(-3.0..3.0), r.gen_range(-3.0..3.0)]).collect();
    FullLoop::new(MassSystem::equal(n).unwrap(), n as f64, samples, positions).unwrap()
}

#[test]
fn omega_parses_both_spellings() {
    let a = Omega::parse(4, "+,-,+").unwrap();
    let b = Omega::parse(4, "+-+").unwrap();
    assert_eq!(a, b);
    assert_eq!(a.to_string(), "+,-,+");
    assert_eq!(a.negated().word(), "-+-");
    assert!(matches!(Omega::parse(4, "+-"), Err(ChoreoError::OmegaLength { .. })));
    assert!(matches!(Omega::parse(2, "+x"), Err(ChoreoError::OmegaAlphabet(_))));
}

#[test]
fn resample_identity_and_constant() {
    let lp = random_loop(2, 24, 1);
    assert_eq!(lp.resample(24).unwrap(), lp);
    let c = [[0.5, -1.0, 2.0], [1.0, 1.0, 1.0]];
    let lp = FullLoop::new(MassSystem { masses: vec![1.0, 1.0] }, 1.0, 16, c.repeat(16)).unwrap();
    for s in [8, 13, 40] {
        let r = lp.resample(s).unwrap();
        assert_eq!(r.positions, c.repeat(s));
        assert_eq!(r.period, 1.0);
        assert_eq!(r.bodies(), 2);
    }
    assert!(matches!(lp.resample(7), Err(ChoreoError::TooFewSamples { .. })));
}

#[test]
fn resample_sinusoid_within_interpolation_bound() {
    let coarse = sinusoid(64);
    let fine = coarse.resample(128).unwrap();
    let bound = (2.0 * PI / 64.0).powi(2);
    for s in 0..128 {
        let a = 2.0 * PI * s as f64 / 128.0;
        let p = fine.at(s, 0);
        let dev = ((p[0] - a.cos()).powi(2) + (p[1] - a.sin()).powi(2)).sqrt();
        assert!(dev < bound, "sample {s}: {dev} >= {bound}");
    }
}

#[test]
fn double_resample_error_bounded_by_second_differences() {
    let lp = random_loop(2, 32, 7);
    let nb = lp.bodies();
    let mut d2 = 0.0f64;
    for s in 0..lp.sample_count {
        for i in 0..nb {
            let (a, b, c) = (lp.at((s + lp.sample_count - 1) % lp.sample_count, i), lp.at(s, i), lp.at((s + 1) % lp.sample_count, i));
            for k in 0..3 {
                d2 = d2.max((a[k] - 2.0 * b[k] + c[k]).abs());
            }
        }
    }
    let back = lp.resample(64).unwrap().resample(32).unwrap();
    let direct = lp.resample(32).unwrap();
    for (p, q) in back.positions.iter().zip(&direct.positions) {
        for k in 0..3 {
            assert!((p[k] - q[k]).abs() <= d2);
        }
    }
}

#[test]
fn csv_has_one_row_per_sample_and_body() {
    let lp = random_loop(2, 8, 3);
    let mut buf = Vec::new();
    io::write_csv(&lp, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "time,body,x,y,z");
    assert_eq!(lines.len(), 1 + 8 * 4);
    let fields: Vec<f64> = lines[1 + 4 * 3 + 2].split(',').map(|f| f.parse().unwrap()).collect();
    let p = lp.at(3, 2);
    assert_eq!(fields, vec![3.0 * lp.step(), 2.0, p[0], p[1], p[2]]);
}

#[test]
fn trajectory_file_rejects_foreign_format_and_nan() {
    let lp = random_loop(2, 8, 4);
    let mut f = TrajectoryFile::new(&Omega::parse(2, "+-").unwrap(), &lp);
    let mut text = f.to_json().unwrap();
    text = text.replace("choreo-trajectory", "something-else");
    assert!(TrajectoryFile::from_json(&text).is_err());
    f.positions[0][1] = f64::NAN;
    assert!(f.to_json().is_err());
}

#[test]
fn trajectory_file_save_load() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.traj");
    let lp = random_loop(3, 12, 5);
    let mut f = TrajectoryFile::new(&Omega::parse(3, "+-").unwrap(), &lp);
    f.provenance.insert("seed".into(), serde_json::json!(42));
    f.save(&path).unwrap();
    let g = TrajectoryFile::load(&path).unwrap();
    assert_eq!(f, g);
    assert_eq!(g.full_loop().unwrap(), lp);
    assert_eq!(g.omega().unwrap().signs, vec![1, -1]);
}

proptest! {
    #[test]
    fn serialization_round_trip_is_bit_exact(seed in any::<u64>(), n in 2usize..5, samples in 8usize..20, scale in -30i32..30) {
        let mut lp = random_loop(n, samples, seed);
        let f = 2f64.powi(scale) * 1.000_000_1;
        for p in &mut lp.positions {
            for v in p.iter_mut() {
                *v *= f;
            }
        }
        let omega = Omega::new(n, (0..Omega::len_for(n)).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect()).unwrap();
        let file = TrajectoryFile::new(&omega, &lp);
        let back = TrajectoryFile::from_json(&file.to_json().unwrap()).unwrap().full_loop().unwrap();
        prop_assert_eq!(back.period.to_bits(), lp.period.to_bits());
        for (a, b) in back.positions.iter().zip(&lp.positions) {
            for k in 0..3 {
                prop_assert_eq!(a[k].to_bits(), b[k].to_bits());
            }
        }
    }
}
