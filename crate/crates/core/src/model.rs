//! Core data types: masses, sign words, fundamental arcs and full loops.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{ChoreoError, Result};
use crate::vec3::{self, Vec3};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassSystem {
    pub masses: Vec<f64>,
}

impl MassSystem {
    /// `2n` unit masses.
    pub fn equal(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(ChoreoError::BodyCount(n));
        }
        Ok(Self { masses: vec![1.0; 2 * n] })
    }

    pub fn bodies(&self) -> usize {
        self.masses.len()
    }
}

/// Tangling signs `ω_0 .. ω_{[n/2]}`, stored as `±1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Omega {
    pub n: usize,
    pub signs: Vec<i8>,
}

impl Omega {
    pub fn len_for(n: usize) -> usize {
        n / 2 + 1
    }

    pub fn new(n: usize, signs: Vec<i8>) -> Result<Self> {
        if n < 2 {
            return Err(ChoreoError::BodyCount(n));
        }
        if signs.len() != Self::len_for(n) {
            return Err(ChoreoError::OmegaLength { expected: Self::len_for(n), got: signs.len() });
        }
        if let Some(s) = signs.iter().find(|s| s.abs() != 1) {
            return Err(ChoreoError::OmegaAlphabet(s.to_string()));
        }
        Ok(Self { n, signs })
    }

    /// Accepts `"+,-,+"` or `"+-+"`.
    pub fn parse(n: usize, text: &str) -> Result<Self> {
        let mut signs = Vec::new();
        for c in text.chars().filter(|c| !c.is_whitespace() && *c != ',') {
            match c {
                '+' => signs.push(1),
                '-' => signs.push(-1),
                other => return Err(ChoreoError::OmegaAlphabet(other.to_string())),
            }
        }
        Self::new(n, signs)
    }

    pub fn negated(&self) -> Self {
        Self { n: self.n, signs: self.signs.iter().map(|s| -s).collect() }
    }

    /// Compact form without separators, e.g. `+-+`.
    pub fn word(&self) -> String {
        self.signs.iter().map(|&s| if s > 0 { '+' } else { '-' }).collect()
    }
}

impl fmt::Display for Omega {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<&str> = self.signs.iter().map(|&s| if s > 0 { "+" } else { "-" }).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// Samples of `q_0` on `[0, n/4]` at `M + 1` equally spaced nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FundamentalArc {
    pub n: usize,
    pub nodes: Vec<Vec3>,
}

impl FundamentalArc {
    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn length(&self) -> f64 {
        self.n as f64 / 4.0
    }

    pub fn step(&self) -> f64 {
        self.length() / self.intervals() as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        self.length() * k as f64 / self.intervals() as f64
    }

    /// Piecewise-linear evaluation, clamped to `[0, n/4]`.
    pub fn eval(&self, t: f64) -> Vec3 {
        let m = self.intervals();
        let u = (t / self.step()).clamp(0.0, m as f64);
        let k = (u.floor() as usize).min(m - 1);
        vec3::lerp(self.nodes[k], self.nodes[k + 1], u - k as f64)
    }

    /// Linear resampling onto `m` intervals.
    pub fn resample(&self, m: usize) -> Self {
        let len = self.length();
        let nodes = (0..=m).map(|k| self.eval(len * k as f64 / m as f64)).collect();
        Self { n: self.n, nodes }
    }

    pub fn coord(&self, axis: usize) -> Vec<f64> {
        self.nodes.iter().map(|p| p[axis]).collect()
    }
}

/// Positions of all bodies over one period, `sample_count × body_count`,
/// sample-major. Sample `s` sits at time `s · period / sample_count`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FullLoop {
    pub masses: MassSystem,
    pub period: f64,
    pub sample_count: usize,
    pub positions: Vec<Vec3>,
}

impl FullLoop {
    pub fn new(masses: MassSystem, period: f64, sample_count: usize, positions: Vec<Vec3>) -> Result<Self> {
        if sample_count < 3 {
            return Err(ChoreoError::TooFewSamples { min: 3, got: sample_count });
        }
        if positions.len() != sample_count * masses.bodies() {
            return Err(ChoreoError::Shape(format!(
                "{} positions for {} samples x {} bodies",
                positions.len(),
                sample_count,
                masses.bodies()
            )));
        }
        Ok(Self { masses, period, sample_count, positions })
    }

    pub fn bodies(&self) -> usize {
        self.masses.bodies()
    }

    pub fn step(&self) -> f64 {
        self.period / self.sample_count as f64
    }

    #[inline]
    pub fn at(&self, sample: usize, body: usize) -> Vec3 {
        self.positions[sample * self.bodies() + body]
    }

    pub fn track(&self, body: usize) -> Vec<Vec3> {
        (0..self.sample_count).map(|s| self.at(s, body)).collect()
    }

    /// Periodic piecewise-linear evaluation of one body.
    pub fn eval(&self, body: usize, t: f64) -> Vec3 {
        let u = (t / self.step()).rem_euclid(self.sample_count as f64);
        let k = (u.floor() as usize).min(self.sample_count - 1);
        let w = u - k as f64;
        vec3::lerp(self.at(k, body), self.at((k + 1) % self.sample_count, body), w)
    }

    /// Periodic linear resampling onto `samples` equally spaced times.
    pub fn resample(&self, samples: usize) -> Result<Self> {
        if samples < 8 {
            return Err(ChoreoError::TooFewSamples { min: 8, got: samples });
        }
        let nb = self.bodies();
        let mut positions = Vec::with_capacity(samples * nb);
        for s in 0..samples {
            // exact rational position keeps shared nodes bit-identical
            let num = s * self.sample_count;
            let k = num / samples;
            let w = (num % samples) as f64 / samples as f64;
            let k1 = (k + 1) % self.sample_count;
            for i in 0..nb {
                positions.push(vec3::lerp(self.at(k, i), self.at(k1, i), w));
            }
        }
        Self::new(self.masses.clone(), self.period, samples, positions)
    }

    /// Smallest distance between two distinct bodies over all samples.
    pub fn min_distance(&self) -> f64 {
        let nb = self.bodies();
        let mut best = f64::INFINITY;
        for s in 0..self.sample_count {
            for i in 0..nb {
                for j in i + 1..nb {
                    best = best.min(vec3::norm(vec3::sub(self.at(s, i), self.at(s, j))));
                }
            }
        }
        best
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstraintFlags {
    pub boundary: Option<bool>,
    pub monotone_weak: Option<bool>,
    pub monotone_strict: Option<bool>,
    pub topological: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionReport {
    pub kinetic: f64,
    pub potential: f64,
    pub action: f64,
    pub gradient_inf_norm: f64,
    pub min_distance: f64,
    pub flags: ConstraintFlags,
}
