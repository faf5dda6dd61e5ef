//! Run configuration: a strict JSON document where every field has a default.

use std::f64::consts::PI;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dn::DnConfig;
use crate::evolution::{boundary_distance, PicardConfig, SolveConfig};
use crate::params::PhysicalParams;
use crate::spectral::{Field, PeriodicGrid};
use crate::two_phase::PressureConfig;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("{line}:{column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("{}{message}", .line.map(|l| format!("{l}: ")).unwrap_or_default())]
    Invalid { line: Option<usize>, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    /// Period; defaults to 2π.
    pub length: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n: 128, length: 2.0 * PI }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Time stepping with a registered stepper.
    Etd,
    /// Fixed point on the Duhamel formula.
    Picard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub method: Method,
    pub t_final: f64,
    pub evolution: SolveConfig,
    pub picard: PicardConfig,
    pub dn: DnConfig,
    pub pressure: PressureConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: Method::Etd,
            t_final: 1.0,
            evolution: SolveConfig::default(),
            picard: PicardConfig::default(),
            dn: DnConfig::default(),
            pressure: PressureConfig::default(),
        }
    }
}

/// `a cos(k k₁ x + φ)`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mode {
    pub k: u32,
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
}

/// `Σ_{k ≥ k_start} a k^{-decay} cos(k k₁ x + φ_k)` with uniformly random phases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomTail {
    pub amplitude: f64,
    pub decay: f64,
    pub k_start: u32,
    /// Overrides the output seed.
    pub seed: Option<u64>,
}

impl Default for RandomTail {
    fn default() -> Self {
        Self {
            amplitude: 0.0,
            decay: 2.0,
            k_start: 1,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialData {
    pub mean: f64,
    pub modes: Vec<Mode>,
    pub tail: Option<RandomTail>,
}

impl InitialData {
    pub fn sample(&self, grid: &PeriodicGrid, seed: u64) -> Field {
        let k1 = grid.k_min();
        let mut eta = grid.sample(|x| {
            self.mean
                + self
                    .modes
                    .iter()
                    .map(|m| m.amplitude * (m.k as f64 * k1 * x + m.phase).cos())
                    .sum::<f64>()
        });
        if let Some(tail) = self.tail {
            let mut rng = ChaCha8Rng::seed_from_u64(tail.seed.unwrap_or(seed));
            let top = (grid.n() / 2) as u32;
            for k in tail.k_start.max(1)..top {
                let a = tail.amplitude * (k as f64).powf(-tail.decay);
                let phase = rng.random_range(0.0..2.0 * PI);
                let kk = k as f64 * k1;
                eta = eta.zip_map(&grid.sample(|x| (kk * x + phase).cos()), |e, c| e + a * c);
            }
        }
        eta
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// A single trajectory.
    Trajectory,
    /// Lipschitz ratio for a ladder of perturbations of the initial data.
    Stability,
    /// Defect of the parabolic scaling symmetry.
    Scaling,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: ExperimentKind,
    /// Perturbation direction for `stability`.
    pub direction: Vec<Mode>,
    pub magnitudes: Vec<f64>,
    /// Sobolev index of the stability ratio.
    pub s: f64,
    /// Integer scale factor for `scaling`.
    pub lambda: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: ExperimentKind::Trajectory,
            direction: vec![Mode {
                k: 2,
                amplitude: 1.0,
                phase: 0.0,
            }],
            magnitudes: vec![1e-6, 1e-5, 1e-4],
            s: 2.0,
            lambda: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    /// Every `stride`-th state is written.
    pub stride: usize,
    pub seed: u64,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("muskat-out"),
            stride: 10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub params: PhysicalParams,
    pub initial: InitialData,
    pub solver: SolverConfig,
    pub experiment: ExperimentConfig,
    pub output: OutputConfig,
}

/// First line mentioning `"key"`, for anchoring semantic errors.
fn locate(text: &str, key: &str) -> Option<usize> {
    let needle = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&needle)).map(|i| i + 1)
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| ConfigError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        cfg.validate(text)?;
        Ok(cfg)
    }

    pub fn grid(&self) -> Result<PeriodicGrid, ConfigError> {
        PeriodicGrid::new(self.grid.n, self.grid.length).map_err(|e| ConfigError::Invalid {
            line: None,
            message: e.to_string(),
        })
    }

    pub fn initial_eta(&self) -> Result<Field, ConfigError> {
        Ok(self.initial.sample(&self.grid()?, self.output.seed))
    }

    /// Semantic checks; `text` is used only to find line numbers.
    pub fn validate(&self, text: &str) -> Result<(), ConfigError> {
        let invalid = |key: &str, message: String| ConfigError::Invalid {
            line: locate(text, key),
            message,
        };
        let grid = PeriodicGrid::new(self.grid.n, self.grid.length).map_err(|e| invalid("grid", e.to_string()))?;
        self.params
            .validate()
            .map_err(|e| invalid("params", e.to_string()))?;
        if !(self.solver.t_final >= 0.0) {
            return Err(invalid("t_final", format!("t_final must be >= 0, got {}", self.solver.t_final)));
        }
        if let Some(dt) = self.solver.evolution.dt {
            if !(dt > 0.0) {
                return Err(invalid("dt", format!("dt must be > 0, got {dt}")));
            }
        }
        crate::evolution::steppers()
            .get(&self.solver.evolution.scheme)
            .map_err(|e| invalid("scheme", e.to_string()))?;
        let top = (self.grid.n / 2) as u32;
        if let Some(m) = self.initial.modes.iter().find(|m| m.k == 0 || m.k >= top) {
            return Err(invalid("modes", format!("mode k = {} outside 1..{top}", m.k)));
        }
        let eta = self.initial.sample(&grid, self.output.seed);
        if !eta.is_finite() {
            return Err(invalid("initial", "initial data is not finite".into()));
        }
        let distance = boundary_distance(&eta, &self.params);
        if let Some(h) = self.solver.evolution.separation {
            if distance.is_finite() && !(distance > 2.0 * h) {
                return Err(invalid(
                    "separation",
                    format!("initial boundary distance {distance} must exceed 2h = {}", 2.0 * h),
                ));
            }
        } else if distance <= 0.0 {
            return Err(invalid("initial", format!("initial data crosses a wall (distance {distance})")));
        }
        if self.experiment.name == ExperimentKind::Scaling && self.experiment.lambda == 0 {
            return Err(invalid("lambda", "lambda must be a positive integer".into()));
        }
        if self.output.stride == 0 {
            return Err(invalid("stride", "stride must be >= 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_all_defaults() {
        let cfg = RunConfig::parse("{}").unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected_with_a_line() {
        let err = RunConfig::parse("{\n  \"grid\": {\"n\": 64},\n  \"bogus\": 1\n}").unwrap_err();
        match err {
            ConfigError::Syntax { line, .. } => assert_eq!(line, 3),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn separation_is_checked() {
        let text = r#"{
  "params": {"lower": {"kind": "flat", "depth": 1.0}},
  "initial": {"modes": [{"k": 1, "amplitude": 0.3}]},
  "solver": {"evolution": {"separation": 0.4}}
}"#;
        match RunConfig::parse(text).unwrap_err() {
            ConfigError::Invalid { line, .. } => assert_eq!(line, Some(4)),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn tail_is_seeded() {
        let mut cfg = RunConfig::default();
        cfg.grid.n = 32;
        cfg.initial.tail = Some(RandomTail {
            amplitude: 1e-3,
            ..RandomTail::default()
        });
        let a = cfg.initial_eta().unwrap();
        assert_eq!(a, cfg.initial_eta().unwrap());
        cfg.output.seed = 1;
        assert_ne!(a, cfg.initial_eta().unwrap());
    }
}
