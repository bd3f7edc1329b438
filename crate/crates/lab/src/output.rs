//! CSV and JSON writers.

use std::path::Path;

use serde::Serialize;

use freebound::monotonicity::MonotonicityTrace;
use freebound::solver::SolveResult;

use crate::error::{LabError, Result};

fn csv_err(path: &Path, e: csv::Error) -> LabError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => LabError::io(path, io),
        other => LabError::Config(format!("{}: {other:?}", path.display())),
    }
}

fn write_rows<R: Serialize>(path: &Path, header: &[&str], rows: impl IntoIterator<Item = R>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| LabError::io(path, e))
}

/// Columns `stage, epsilon, iter, J_eps, grad_norm`.
pub fn write_convergence(path: &Path, res: &SolveResult) -> Result<()> {
    write_rows(path, &["stage", "epsilon", "iter", "J_eps", "grad_norm"], res.convergence_rows())
}

/// Columns `r, A_plus, A_minus, phi`.
pub fn write_trace(path: &Path, t: &MonotonicityTrace) -> Result<()> {
    write_rows(path, &["r", "A_plus", "A_minus", "phi"], t.rows())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| LabError::io(path, e))
}
