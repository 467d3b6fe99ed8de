//! Self-describing trajectory files (JSON) and CSV export.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{ChoreoError, Result};
use crate::model::{ActionReport, FullLoop, MassSystem, Omega};
use crate::vec3::Vec3;
use crate::verify::Certificate;

pub const FORMAT_TAG: &str = "choreo-trajectory";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryFile {
    pub format: String,
    pub version: u32,
    pub n: usize,
    /// Comma-separated signs, e.g. `"+,-,+"`.
    pub omega: String,
    pub period: f64,
    pub sample_count: usize,
    pub body_count: usize,
    pub masses: Vec<f64>,
    /// `sample_count × body_count` positions, sample-major.
    pub positions: Vec<Vec3>,
    /// Parameters that produced the file, defaults included.
    #[serde(default)]
    pub provenance: BTreeMap<String, serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<ActionReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Certificate>,
}

impl TrajectoryFile {
    pub fn new(omega: &Omega, lp: &FullLoop) -> Self {
        Self {
            format: FORMAT_TAG.into(),
            version: FORMAT_VERSION,
            n: omega.n,
            omega: omega.to_string(),
            period: lp.period,
            sample_count: lp.sample_count,
            body_count: lp.bodies(),
            masses: lp.masses.masses.clone(),
            positions: lp.positions.clone(),
            provenance: BTreeMap::new(),
            report: None,
            certificate: None,
        }
    }

    pub fn omega(&self) -> Result<Omega> {
        Omega::parse(self.n, &self.omega)
    }

    pub fn full_loop(&self) -> Result<FullLoop> {
        if self.masses.len() != self.body_count {
            return Err(ChoreoError::Shape(format!("{} masses for {} bodies", self.masses.len(), self.body_count)));
        }
        FullLoop::new(MassSystem { masses: self.masses.clone() }, self.period, self.sample_count, self.positions.clone())
    }

    pub fn to_json(&self) -> Result<String> {
        if self.positions.iter().flatten().any(|v| !v.is_finite()) {
            return Err(ChoreoError::Format("positions contain non-finite values".into()));
        }
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: Self = serde_json::from_str(text)?;
        if f.format != FORMAT_TAG {
            return Err(ChoreoError::Format(f.format));
        }
        Ok(f)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Rows of `time,body,x,y,z`.
pub fn write_csv<W: Write>(lp: &FullLoop, mut out: W) -> Result<()> {
    writeln!(out, "time,body,x,y,z")?;
    for s in 0..lp.sample_count {
        let t = lp.step() * s as f64;
        for i in 0..lp.bodies() {
            let p = lp.at(s, i);
            writeln!(out, "{t},{i},{},{},{}", p[0], p[1], p[2])?;
        }
    }
    Ok(())
}

pub fn save_csv(lp: &FullLoop, path: &Path) -> Result<()> {
    let f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_csv(lp, f)
}
