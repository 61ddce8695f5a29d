//! CSV and JSON writers.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

/// Full-precision decimal: 17 significant digits.
pub fn number(v: f64) -> String {
    format!("{v:.16e}")
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_owned(), source }
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(io_error(dir))
}

/// Write `rows` under `header`; `None` cells are left empty.
pub fn write_csv(dir: &Path, name: &str, header: &[&str], rows: &[Vec<Option<f64>>]) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    let to_io = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(source) => CliError::Io { path: path.clone(), source },
        other => CliError::Io { path: path.clone(), source: std::io::Error::other(format!("{other:?}")) },
    };
    let mut w = csv::Writer::from_path(&path).map_err(to_io)?;
    w.write_record(header).map_err(to_io)?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.map(number).unwrap_or_default())).map_err(to_io)?;
    }
    w.flush().map_err(io_error(&path))?;
    Ok(path)
}

pub fn write_json(dir: &Path, name: &str, value: &impl Serialize) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value).expect("report values serialize");
    text.push('\n');
    std::fs::write(&path, text).map_err(io_error(&path))?;
    Ok(path)
}
