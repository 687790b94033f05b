//! JSON model and instance files, and CSV trace output.
//!
//! Model file:
//! ```json
//! { "mu": 1.0, "nests": [ { "mu_ell": 0.5, "shares": { "0": 1.0, "1": 1.0 } },
//!                         { "mu_ell": 1.0, "shares": { "2": 1.0 } } ] }
//! ```
//! Alternative indices are 0-based. `"n"` is optional and inferred from the
//! largest index otherwise.
//!
//! Instance file: `{ "Q": [[...]], "pi": [...], "w": 1.0, "sigma": [...] }`
//! with one row of `Q` per quality and one column per good.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::Error;
use crate::gev::{GnlModel, ModelSpec};
use crate::lancaster::{CycleTrace, InstanceSpec, LancasterInstance};

/// A file that could not be turned into a validated object.
#[derive(Debug)]
pub enum LoadError {
    Io { path: PathBuf, message: String },
    Parse { path: PathBuf, message: String },
    Validation { path: PathBuf, source: Error },
}

impl LoadError {
    /// `2` for bad input, `3` for I/O failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            LoadError::Io { .. } => 3,
            _ => 2,
        }
    }
}

impl fmt::Display for LoadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LoadError::Io { path, message } => write!(f, "{}: {message}", path.display()),
            LoadError::Parse { path, message } => {
                write!(f, "{}: parse error: {message}", path.display())
            }
            LoadError::Validation { path, source } => {
                write!(f, "{}: validation error: {source} ({source:?})", path.display())
            }
        }
    }
}

impl std::error::Error for LoadError {}

fn read(path: &Path) -> Result<String, LoadError> {
    std::fs::read_to_string(path).map_err(|e| LoadError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn parse_model(text: &str) -> Result<GnlModel<f64>, LoadError> {
    parse_model_at(text, Path::new("<model>"))
}

fn parse_model_at(text: &str, path: &Path) -> Result<GnlModel<f64>, LoadError> {
    let spec: ModelSpec<f64> = serde_json::from_str(text).map_err(|e| LoadError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    GnlModel::from_spec(&spec).map_err(|source| LoadError::Validation {
        path: path.to_path_buf(),
        source,
    })
}

pub fn parse_instance(text: &str) -> Result<LancasterInstance<f64>, LoadError> {
    parse_instance_at(text, Path::new("<instance>"))
}

fn parse_instance_at(text: &str, path: &Path) -> Result<LancasterInstance<f64>, LoadError> {
    let spec: InstanceSpec<f64> = serde_json::from_str(text).map_err(|e| LoadError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    LancasterInstance::from_spec(&spec).map_err(|source| LoadError::Validation {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_model(path: impl AsRef<Path>) -> Result<GnlModel<f64>, LoadError> {
    let path = path.as_ref();
    parse_model_at(&read(path)?, path)
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<LancasterInstance<f64>, LoadError> {
    let path = path.as_ref();
    parse_instance_at(&read(path)?, path)
}

/// Loads whichever of the two files are given.
#[allow(clippy::type_complexity)]
pub fn parse_files(
    model: Option<&Path>,
    instance: Option<&Path>,
) -> Result<(Option<GnlModel<f64>>, Option<LancasterInstance<f64>>), LoadError> {
    let model = model.map(load_model).transpose()?;
    let instance = instance.map(load_instance).transpose()?;
    Ok((model, instance))
}

pub fn model_to_json(model: &GnlModel<f64>) -> String {
    serde_json::to_string_pretty(&model.to_spec()).expect("model spec serializes")
}

/// Formats with 17 significant digits, enough to round-trip an `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV header for a trace over `m` goods and `n` qualities.
pub fn trace_header(m: usize, n: usize) -> String {
    let mut cols = vec!["k".to_string(), "U_avg".into(), "Phi_avg".into(), "gap".into(), "bound".into()];
    cols.extend((0..m).map(|j| format!("x_avg_{j}")));
    cols.extend((0..n).map(|i| format!("lambda_avg_{i}")));
    cols.join(",")
}

/// Writes the trace as CSV: header, then one row per iteration.
pub fn write_trace<W: Write>(trace: &CycleTrace<f64>, mut out: W) -> std::io::Result<()> {
    let first = trace.records.first().expect("trace is never empty");
    writeln!(out, "{}", trace_header(first.demand_avg.len(), first.prices_avg.len()))?;
    for r in &trace.records {
        let mut row = vec![
            r.k.to_string(),
            fmt_f64(r.utility_avg),
            fmt_f64(r.price_avg),
            fmt_f64(r.gap),
            fmt_f64(r.bound),
        ];
        row.extend(r.demand_avg.iter().map(|&x| fmt_f64(x)));
        row.extend(r.prices_avg.iter().map(|&x| fmt_f64(x)));
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()
}

pub fn emit_trace(trace: &CycleTrace<f64>, path: impl AsRef<Path>) -> Result<(), LoadError> {
    let path = path.as_ref();
    let io_err = |e: std::io::Error| LoadError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let file = File::create(path).map_err(io_err)?;
    write_trace(trace, BufWriter::new(file)).map_err(io_err)
}
