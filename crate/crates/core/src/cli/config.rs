//! TOML task configuration.
//!
//! ```toml
//! model = "H1"            # H1 | H2 | H3 | H4 | equivalence | structure
//! task = "propagator"     # propagator | dephasing | convergence | oracle-compare
//!                         # | equivalence-check | classify
//!
//! [system]
//! omega = 1.0
//! drive_omega = 0.4       # H2 only
//!
//! [bath]
//! frequencies = [0.9, 2.1]
//! couplings = [0.25, 0.15]
//!
//! [labels]                # complex numbers are [re, im]; omitted lists are zero
//! alpha_star = [[0.3, -0.1], [0.0, 0.2]]
//! alpha_prime = [[-0.2, 0.4], [0.1, 0.0]]
//! nu_star = [0.25, 0.0]   # drive-mode labels, H2 only
//! nu_prime = [-0.1, 0.2]
//! mu = [[0.3, -0.2], [0.0, 0.25]]   # initial coherent bath, dephasing only
//!
//! [time]                  # steps points from start to stop inclusive
//! start = 0.0
//! stop = 2.0
//! steps = 5
//!
//! [truncation]            # all optional
//! fock_cutoff = 30
//! series_order = 4
//! quad_points = 16
//! tol = 1e-8
//!
//! [output]
//! format = "csv"          # csv | structured-text
//! file = "h1.csv"         # default: config file stem plus extension
//! ```

use serde::Deserialize;

use crate::linalg::{c, C64};
use crate::model::{BathKind, BathSpec, CoherentVector, Model, SystemSpec, TruncationSpec};

use super::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum ModelKind {
    H1,
    H2,
    H3,
    H4,
    #[serde(rename = "equivalence")]
    Equivalence,
    #[serde(rename = "structure")]
    Structure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    Propagator,
    Dephasing,
    Convergence,
    OracleCompare,
    EquivalenceCheck,
    Classify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    #[default]
    Csv,
    StructuredText,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::StructuredText => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub omega: f64,
    pub drive_omega: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathSection {
    #[serde(default)]
    pub frequencies: Vec<f64>,
    #[serde(default)]
    pub couplings: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelSection {
    #[serde(default)]
    pub alpha_star: Vec<[f64; 2]>,
    #[serde(default)]
    pub alpha_prime: Vec<[f64; 2]>,
    pub nu_star: Option<[f64; 2]>,
    pub nu_prime: Option<[f64; 2]>,
    #[serde(default)]
    pub mu: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    #[serde(default)]
    pub start: f64,
    #[serde(default)]
    pub stop: f64,
    #[serde(default = "one")]
    pub steps: usize,
}

fn one() -> usize {
    1
}

impl Default for TimeGrid {
    fn default() -> Self {
        Self { start: 0.0, stop: 0.0, steps: 1 }
    }
}

impl TimeGrid {
    pub fn points(&self) -> Result<Vec<f64>, CliError> {
        if !self.start.is_finite() || !self.stop.is_finite() {
            return Err(CliError::Config("time grid bounds must be finite".into()));
        }
        match self.steps {
            0 => Err(CliError::Config("time grid needs at least one step".into())),
            1 => Ok(vec![self.start]),
            n => {
                let h = (self.stop - self.start) / (n - 1) as f64;
                Ok((0..n).map(|i| if i == n - 1 { self.stop } else { self.start + i as f64 * h }).collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationSection {
    pub fock_cutoff: Option<usize>,
    pub series_order: Option<usize>,
    pub quad_points: Option<usize>,
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub format: OutputFormat,
    pub file: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskConfig {
    pub model: ModelKind,
    pub task: TaskKind,
    pub system: Option<SystemSection>,
    #[serde(default)]
    pub bath: BathSection,
    #[serde(default)]
    pub labels: LabelSection,
    #[serde(default)]
    pub time: TimeGrid,
    #[serde(default)]
    pub truncation: TruncationSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl TaskConfig {
    pub fn parse(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    /// Rejects model/task pairs that have no meaning.
    pub fn check_task(&self) -> Result<(), CliError> {
        use ModelKind::*;
        use TaskKind::*;
        let ok = match self.task {
            Propagator | OracleCompare => matches!(self.model, H1 | H2 | H3 | H4),
            Dephasing => self.model == H1,
            Convergence => matches!(self.model, H3 | H4),
            EquivalenceCheck => self.model == Equivalence,
            Classify => self.model == Structure,
        };
        if ok {
            Ok(())
        } else {
            Err(CliError::Config(format!("task {:?} is not defined for model {:?}", self.task, self.model)))
        }
    }

    pub fn truncation(&self, tol_override: Option<f64>) -> Result<TruncationSpec, CliError> {
        let d = TruncationSpec::default();
        let t = &self.truncation;
        let spec = TruncationSpec {
            fock_cutoff: t.fock_cutoff.unwrap_or(d.fock_cutoff),
            series_order: t.series_order.unwrap_or(d.series_order),
            quad_points: t.quad_points.unwrap_or(d.quad_points),
            tol: tol_override.or(t.tol).unwrap_or(d.tol),
        };
        spec.validate()?;
        Ok(spec)
    }

    fn system_spec(&self) -> Result<SystemSpec, CliError> {
        let s = self.system.as_ref().ok_or_else(|| CliError::Config("missing [system] section".into()))?;
        Ok(match (self.model, s.drive_omega) {
            (ModelKind::H2, Some(d)) => SystemSpec::driven(s.omega, d),
            (ModelKind::H2, None) => return Err(crate::error::Error::MissingDrive.into()),
            _ => SystemSpec::new(s.omega),
        })
    }

    /// Validated model with the given bath kind.
    pub fn model_with(&self, kind: BathKind) -> Result<Model, CliError> {
        let bath = BathSpec::from_slices(kind, &self.bath.frequencies, &self.bath.couplings)?;
        Ok(crate::model::validate_model(self.system_spec()?, bath)?)
    }

    /// Validated model; H4 uses a spin bath, every other model oscillators.
    pub fn model(&self) -> Result<Model, CliError> {
        let kind = if self.model == ModelKind::H4 { BathKind::Spin } else { BathKind::Oscillator };
        self.model_with(kind)
    }

    pub fn alpha_star(&self, modes: usize) -> Result<CoherentVector, CliError> {
        labels_or_zero(&self.labels.alpha_star, modes, "alpha_star")
    }

    pub fn alpha_prime(&self, modes: usize) -> Result<CoherentVector, CliError> {
        labels_or_zero(&self.labels.alpha_prime, modes, "alpha_prime")
    }

    pub fn mu(&self, modes: usize) -> Result<CoherentVector, CliError> {
        labels_or_zero(&self.labels.mu, modes, "mu")
    }

    pub fn drive_labels(&self) -> (C64, C64) {
        let to_c = |v: Option<[f64; 2]>| v.map_or(c(0.0, 0.0), |[re, im]| c(re, im));
        (to_c(self.labels.nu_star), to_c(self.labels.nu_prime))
    }
}

fn labels_or_zero(values: &[[f64; 2]], modes: usize, name: &str) -> Result<CoherentVector, CliError> {
    if values.is_empty() {
        return Ok(CoherentVector::zeros(modes));
    }
    if values.len() != modes {
        return Err(CliError::Config(format!("{name} has {} entries for a bath of {modes} modes", values.len())));
    }
    Ok(CoherentVector::new(values.iter().map(|&[re, im]| c(re, im)).collect())?)
}
