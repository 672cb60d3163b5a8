//! Batch front end: read a TOML task file, evaluate it, write one result file.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 parse error, 3 validation error,
//! 4 tolerance breach (the result file is still written).

pub mod config;
pub mod output;
pub mod tasks;

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use config::{ModelKind, OutputFormat, TaskConfig, TaskKind};
pub use output::{Cell, Table};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },

    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },

    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Model(#[from] crate::error::Error),

    #[error("{breaches} of {rows} rows exceed tolerance {tol:e} (largest deviation {worst:e}); results in {path}")]
    Tolerance { breaches: usize, rows: usize, tol: f64, worst: f64, path: PathBuf },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Read { .. } | Self::Write { .. } => 1,
            Self::Parse { .. } => 2,
            Self::Config(_) | Self::Model(_) => 3,
            Self::Tolerance { .. } => 4,
        }
    }
}

/// Command-line overrides.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    pub tol: Option<f64>,
    /// Output directory; the working directory when absent.
    pub out: Option<PathBuf>,
}

/// Parses, evaluates and writes; returns the path of the result file.
pub fn run(config_path: &Path, opts: &RunOptions) -> Result<PathBuf, CliError> {
    let text =
        fs::read_to_string(config_path).map_err(|source| CliError::Read { path: config_path.to_path_buf(), source })?;
    let cfg = TaskConfig::parse(&text)
        .map_err(|e| CliError::Parse { path: config_path.to_path_buf(), message: e.message().to_owned() })?;
    let trunc = cfg.truncation(opts.tol)?;
    let result = tasks::evaluate(&cfg, &trunc)?;
    check_finite(&result.table)?;

    let file = match &cfg.output.file {
        Some(f) => PathBuf::from(f),
        None => {
            let stem = config_path.file_stem().map_or("result".into(), |s| s.to_string_lossy().into_owned());
            PathBuf::from(format!("{stem}.{}", cfg.output.format.extension()))
        }
    };
    let path = opts.out.as_deref().unwrap_or(Path::new(".")).join(file);
    let bytes = result.table.encode(cfg.output.format, model_name(cfg.model), task_name(cfg.task))?;
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|source| CliError::Write { path: dir.to_path_buf(), source })?;
    }
    fs::write(&path, bytes).map_err(|source| CliError::Write { path: path.clone(), source })?;

    if result.breaches > 0 {
        return Err(CliError::Tolerance {
            breaches: result.breaches,
            rows: result.table.rows.len(),
            tol: trunc.tol,
            worst: result.worst,
            path,
        });
    }
    Ok(path)
}

fn check_finite(table: &Table) -> Result<(), CliError> {
    for row in &table.rows {
        for (cell, name) in row.iter().zip(&table.columns) {
            if let Cell::Float(x) = cell {
                if !x.is_finite() {
                    return Err(CliError::Config(format!("column {name} produced a non-finite value")));
                }
            }
        }
    }
    Ok(())
}

fn model_name(m: ModelKind) -> &'static str {
    match m {
        ModelKind::H1 => "H1",
        ModelKind::H2 => "H2",
        ModelKind::H3 => "H3",
        ModelKind::H4 => "H4",
        ModelKind::Equivalence => "equivalence",
        ModelKind::Structure => "structure",
    }
}

fn task_name(t: TaskKind) -> &'static str {
    match t {
        TaskKind::Propagator => "propagator",
        TaskKind::Dephasing => "dephasing",
        TaskKind::Convergence => "convergence",
        TaskKind::OracleCompare => "oracle-compare",
        TaskKind::EquivalenceCheck => "equivalence-check",
        TaskKind::Classify => "classify",
    }
}
