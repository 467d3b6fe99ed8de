// Shared helpers for the integration tests; each test crate uses a subset.
#![allow(dead_code)]

use choreo::constraints;
use choreo::model::{FundamentalArc, Omega};
use choreo::optimizer::{self, SolverConfig};
use choreo::symmetry::SymmetrySpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Unconstrained random arc with the boundary coordinates pinned.
pub fn random_arc(n: usize, intervals: usize, rng: &mut ChaCha8Rng) -> FundamentalArc {
    let mut nodes: Vec<[f64; 3]> =
        (0..=intervals).map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
    nodes[0][1] = 0.0;
    nodes[intervals][0] = 0.0;
    FundamentalArc { n, nodes }
}

/// First admissible word for `n`.
pub fn some_omega(n: usize) -> Omega {
    constraints::enumerate_admissible(n, false).unwrap().remove(0)
}

/// Feasible arc near the default initial guess, perturbed by `noise`.
pub fn feasible_arc(omega: &Omega, intervals: usize, noise: f64, rng: &mut ChaCha8Rng) -> FundamentalArc {
    let cfg = SolverConfig { intervals, jitter: 0.0, ..SolverConfig::default() };
    let mut arc = optimizer::initial_guess(omega, &cfg).unwrap();
    for p in &mut arc.nodes {
        for v in p.iter_mut() {
            *v += noise * rng.gen_range(-1.0..1.0);
        }
    }
    constraints::project_feasible(&arc, omega).unwrap()
}

pub fn sym(n: usize) -> SymmetrySpec {
    SymmetrySpec::new(n).unwrap()
}
