//! Experiment configuration files.

use petalstar::experiments::{RunOptions, Schedule, SchedulePreset, SUBHOROCYCLIC_THRESHOLD};
use petalstar::{FatouAtlas, Point, Rational, C64};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

/// How the basin point is given.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PointSpec {
    /// A point of the plane.
    Explicit { re: f64, im: f64 },
    /// The point of petal `petal` with Fatou coordinate `phi`.
    Fatou { petal: u32, phi: C64 },
}

impl PointSpec {
    pub fn resolve(&self, atlas: &FatouAtlas) -> petalstar::Result<Point> {
        match *self {
            PointSpec::Explicit { re, im } => Ok(Point::new(C64::new(re, im))),
            PointSpec::Fatou { petal, phi } => atlas.inverse(petal, phi),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Newton stopping residual.
    pub solve: f64,
    /// `|sigma|` declaring divergence.
    pub cap: f64,
    /// Pullback budget for wire tracing.
    pub wire_budget: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        let run = RunOptions::default();
        Tolerances { solve: run.solve.tol, cap: run.cap, wire_budget: run.wire_budget }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Artifact {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub name: String,
    pub pq: Rational,
    /// Horodisk parameter `M`.
    pub horodisk: f64,
    pub x: PointSpec,
    pub schedule: Schedule,
    /// Marks a deliberately non-subhorocyclic schedule.
    #[serde(default)]
    pub control: bool,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "default_outputs")]
    pub outputs: Vec<Artifact>,
    #[serde(default)]
    pub trace_wires: Option<bool>,
}

fn default_outputs() -> Vec<Artifact> {
    vec![Artifact::Csv, Artifact::Json]
}

impl ExperimentConfig {
    /// The shipped presets: `thm1`, `thm1-spiral`, `thm2`, `control`.
    pub fn preset(name: &str) -> Option<Self> {
        let pq: Rational = "1/2".parse().ok()?;
        let (petal, preset, control) = match name {
            "thm1" => (0, SchedulePreset::Radial, false),
            "thm1-spiral" => (0, SchedulePreset::Spiral, false),
            "thm2" => (1, SchedulePreset::Radial, false),
            "control" => (0, SchedulePreset::Tangential, true),
            _ => return None,
        };
        Some(ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            name: name.to_string(),
            pq,
            horodisk: 2.0,
            x: PointSpec::Fatou { petal, phi: C64::new(0.3, 0.1) },
            schedule: Schedule::new(preset, 5, 60),
            control,
            tolerances: Tolerances::default(),
            outputs: default_outputs(),
            trace_wires: None,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| ConfigError(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ConfigError(format!("unsupported schema_version {}", self.schema_version)));
        }
        let q = self.pq.q() as f64;
        if !(self.horodisk > 1.0 / (q * q)) {
            return Err(ConfigError(format!("horodisk parameter M = {} must exceed 1/q^2 = {}", self.horodisk, 1.0 / (q * q))));
        }
        let s = self.schedule;
        if s.k_start == 0 || s.k_end < s.k_start {
            return Err(ConfigError(format!("schedule range {}..{} is empty", s.k_start, s.k_end)));
        }
        if !self.control && !s.is_subhorocyclic(self.pq, SUBHOROCYCLIC_THRESHOLD) {
            return Err(ConfigError("schedule is not subhorocyclic; set \"control\": true to run it anyway".into()));
        }
        if !(self.tolerances.solve > 0.0 && self.tolerances.cap > 0.0) {
            return Err(ConfigError("tolerances must be positive".into()));
        }
        Ok(())
    }

    pub fn run_options(&self, seed: u64) -> RunOptions {
        let mut opts = RunOptions::default();
        opts.solve.tol = self.tolerances.solve;
        opts.cap = self.tolerances.cap;
        opts.wire_budget = self.tolerances.wire_budget;
        opts.trace_wires = self.trace_wires.unwrap_or(true);
        opts.control = self.control;
        opts.seed = seed;
        opts
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate_and_round_trip() {
        for name in ["thm1", "thm1-spiral", "thm2", "control"] {
            let cfg = ExperimentConfig::preset(name).unwrap();
            cfg.validate().unwrap();
            let text = serde_json::to_string(&cfg).unwrap();
            assert_eq!(ExperimentConfig::from_json(&text).unwrap(), cfg);
        }
    }

    #[test]
    fn non_reduced_rotation_mentions_gcd() {
        let mut v = serde_json::to_value(ExperimentConfig::preset("thm1").unwrap()).unwrap();
        v["pq"] = "2/4".into();
        let err = ExperimentConfig::from_json(&v.to_string()).unwrap_err();
        assert!(err.0.contains("gcd"), "{err}");
    }

    #[test]
    fn small_horodisk_and_tangential_schedules_are_rejected() {
        let mut cfg = ExperimentConfig::preset("thm1").unwrap();
        cfg.horodisk = 0.2;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::preset("control").unwrap();
        cfg.control = false;
        assert!(cfg.validate().unwrap_err().0.contains("subhorocyclic"));
    }
}
