//! JSON run configuration for the `simulate` command.
//!
//! Relative paths inside a configuration are resolved against the directory
//! containing the configuration file.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{Integrator, SolverConfig};
use crate::fields::FieldState;
use crate::grid::Grid;
use crate::io::{self, FormatError};
use crate::solitons::{self, SolitonSpec};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read configuration: {0}")]
    Read(#[from] std::io::Error),
    #[error("malformed configuration: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("initial-condition file: {0}")]
    File(#[from] FormatError),
    #[error(transparent)]
    Core(#[from] crate::error::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    #[serde(rename = "L")]
    pub length: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    /// `"u"` or `"phi_<i>"` (1-based).
    pub field: String,
    /// Integer wavenumber index `m`; the mode is `A cos(2π m x / L + phase)`.
    pub m: i64,
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum InitialCondition {
    Soliton(SolitonSpec),
    TwoSoliton {
        #[serde(rename = "C1")]
        c1: f64,
        #[serde(rename = "C2")]
        c2: f64,
        #[serde(default)]
        t0: f64,
    },
    Modes {
        modes: Vec<ModeSpec>,
    },
    /// `A exp(-((x - center)/width)²)` on one field; `center` defaults to `L/2`.
    Gaussian {
        field: String,
        amplitude: f64,
        #[serde(default)]
        center: Option<f64>,
        width: f64,
    },
    File {
        path: PathBuf,
    },
}

/// One initial condition or a list whose fields are added together.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialConditions {
    One(InitialCondition),
    Sum(Vec<InitialCondition>),
}

impl InitialConditions {
    pub fn parts(&self) -> &[InitialCondition] {
        match self {
            InitialConditions::One(ic) => std::slice::from_ref(ic),
            InitialConditions::Sum(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OutputSpec {
    #[serde(default)]
    pub state_path: Option<PathBuf>,
    #[serde(default)]
    pub charges_path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSpec,
    #[serde(rename = "K", default)]
    pub components: usize,
    pub lambda: f64,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default)]
    pub integrator: Integrator,
    #[serde(default = "yes")]
    pub dealias: bool,
    #[serde(default = "one")]
    pub sample_every: usize,
    pub initial_condition: InitialConditions,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn yes() -> bool {
    true
}

fn one() -> usize {
    1
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn grid(&self) -> Result<Grid, ConfigError> {
        Ok(Grid::new(self.grid.length, self.grid.n)?)
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            lambda: self.lambda,
            dt: self.dt,
            t_end: self.t_end,
            integrator: self.integrator,
            dealias: self.dealias,
            sample_every: self.sample_every,
        }
    }

    /// Checks grid and solver ranges.
    pub fn validate(&self) -> Result<Grid, ConfigError> {
        let grid = self.grid()?;
        self.solver().validate(&grid)?;
        Ok(grid)
    }

    /// Builds the initial state, resolving file paths against `base`.
    pub fn initial_state(&self, base: &Path) -> Result<FieldState, ConfigError> {
        let grid = self.validate()?;
        let mut state = FieldState::zeros(grid.clone(), self.components);
        for part in self.initial_condition.parts() {
            let add = self.build_part(part, &grid, base)?;
            state.t = add.t;
            for (acc, f) in std::iter::once(&mut state.u)
                .chain(state.phi.iter_mut())
                .zip(add.fields())
            {
                acc.iter_mut().zip(f).for_each(|(a, b)| *a += b);
            }
        }
        state.validate()?;
        Ok(state)
    }

    fn build_part(
        &self,
        part: &InitialCondition,
        grid: &Grid,
        base: &Path,
    ) -> Result<FieldState, ConfigError> {
        let k = self.components;
        match part {
            InitialCondition::Soliton(spec) => {
                let spec = SolitonSpec::new(spec.c, spec.a, spec.velocity)?;
                Ok(solitons::one_soliton(&spec, grid, 0.0, k)?)
            }
            InitialCondition::TwoSoliton { c1, c2, t0 } => {
                let mut s = solitons::kdv_two_soliton(*c1, *c2, grid, *t0, k)?;
                s.t = 0.0;
                Ok(s)
            }
            InitialCondition::Modes { modes } => {
                let mut s = FieldState::zeros(grid.clone(), k);
                let x = grid.x();
                for mode in modes {
                    let target = field_slot(&mut s, &mode.field)?;
                    let kx = 2.0 * PI * mode.m as f64 / grid.length();
                    for (v, x) in target.iter_mut().zip(&x) {
                        *v += mode.amplitude * (kx * x + mode.phase).cos();
                    }
                }
                Ok(s)
            }
            InitialCondition::Gaussian { field, amplitude, center, width } => {
                if width.is_nan() || *width <= 0.0 {
                    return Err(ConfigError::Invalid(format!("gaussian width must be positive, got {width}")));
                }
                let mut s = FieldState::zeros(grid.clone(), k);
                let c = center.unwrap_or(0.5 * grid.length());
                let x = grid.x();
                let target = field_slot(&mut s, field)?;
                for (v, x) in target.iter_mut().zip(&x) {
                    *v = amplitude * (-((x - c) / width).powi(2)).exp();
                }
                Ok(s)
            }
            InitialCondition::File { path } => {
                let path = if path.is_relative() { base.join(path) } else { path.clone() };
                let (_, s) = io::load_state(&path)?;
                if s.grid() != grid || s.components() != k {
                    return Err(ConfigError::Invalid(format!(
                        "{} does not match the configured grid and K",
                        path.display()
                    )));
                }
                Ok(s)
            }
        }
    }
}

fn field_slot<'a>(state: &'a mut FieldState, name: &str) -> Result<&'a mut Vec<f64>, ConfigError> {
    if name == "u" {
        return Ok(&mut state.u);
    }
    let k = state.components();
    name.strip_prefix("phi_")
        .and_then(|i| i.parse::<usize>().ok())
        .filter(|&i| (1..=k).contains(&i))
        .map(move |i| &mut state.phi[i - 1])
        .ok_or_else(|| ConfigError::Invalid(format!("unknown field {name:?} (K = {k})")))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SOLITON: &str = r#"{
        "grid": {"L": 80, "n": 512},
        "K": 1,
        "lambda": 1.0,
        "dt": 1e-4,
        "t_end": 1.0,
        "sample_every": 100,
        "initial_condition": {"type": "soliton", "C": 1.0, "velocity": "oracle"}
    }"#;

    #[test]
    fn parses_soliton_config() {
        let c = RunConfig::from_json(SOLITON).unwrap();
        assert_eq!(c.components, 1);
        assert_eq!(c.integrator, Integrator::Ifrk4);
        assert!(c.dealias);
        let s = c.initial_state(Path::new(".")).unwrap();
        assert_eq!(s.u[256], 3.0);
    }

    #[test]
    fn sums_initial_conditions() {
        let text = r#"{
            "grid": {"L": 80, "n": 256}, "K": 2, "lambda": 1, "dt": 1e-3, "t_end": 0,
            "initial_condition": [
                {"type": "modes", "modes": [{"field": "u", "m": 2, "amplitude": 0.5},
                                            {"field": "phi_2", "m": -1, "amplitude": 1, "phase": 0.3}]},
                {"type": "gaussian", "field": "phi_1", "amplitude": 0.5, "width": 1}
            ]
        }"#;
        let c = RunConfig::from_json(text).unwrap();
        let s = c.initial_state(Path::new(".")).unwrap();
        assert_eq!(s.u[0], 0.5);
        assert_eq!(s.phi[0][128], 0.5);
        assert!((s.phi[1][0] - 0.3_f64.cos()).abs() < 1e-15);
    }

    #[test]
    fn reports_parse_position() {
        let err = RunConfig::from_json("{\n  \"grid\": {\"L\": 80,,}\n}").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2"), "{msg}");
        assert!(msg.contains("column"), "{msg}");
    }

    #[test]
    fn rejects_bad_fields_and_ranges() {
        let bad_field = SOLITON.replace(
            r#"{"type": "soliton", "C": 1.0, "velocity": "oracle"}"#,
            r#"{"type": "gaussian", "field": "phi_3", "amplitude": 1, "width": 1}"#,
        );
        let c = RunConfig::from_json(&bad_field).unwrap();
        assert!(matches!(c.initial_state(Path::new(".")), Err(ConfigError::Invalid(_))));
        let bad_dt = SOLITON.replace("\"dt\": 1e-4", "\"dt\": -1");
        let c = RunConfig::from_json(&bad_dt).unwrap();
        assert!(c.validate().is_err());
        assert!(RunConfig::from_json(&SOLITON.replace("\"K\"", "\"k\"")).is_err());
    }
}
