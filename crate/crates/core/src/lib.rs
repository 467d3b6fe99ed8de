//! Numerical search for symmetric choreographies of `2n` unit masses.
//!
//! The fundamental domain is the arc `q_0(t)`, `t ∈ [0, n/4]`. Every other
//! body and time is recovered through the symmetry group `D_n × Z_2 × Z_2`,
//! so the solver works on a few hundred scalars instead of the full loop.

pub mod action;
pub mod constraints;
pub mod deform;
pub mod error;
pub mod exec;
pub mod io;
pub mod model;
pub mod optimizer;
pub mod symmetry;
pub mod vec3;
pub mod verify;

pub use error::{ChoreoError, Result};
pub use exec::Exec;
pub use model::{ActionReport, ConstraintFlags, FullLoop, FundamentalArc, MassSystem, Omega};
