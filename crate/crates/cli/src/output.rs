//! Report writers. Numbers go out with 17 significant digits so every value
//! survives a text round trip bit for bit; line endings are always `\n`.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::CliError;

/// Scientific notation with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("cannot write {}: {e}", path.display()))
}

/// Writes bytes to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
            }
            std::fs::write(p, bytes).map_err(|e| io_error(p, e))
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes).and_then(|_| out.flush()).map_err(|e| CliError::Usage(format!("stdout: {e}")))
        }
    }
}

pub fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).map_err(|e| CliError::Usage(e.to_string()))?;
    for row in rows {
        w.write_record(row).map_err(|e| CliError::Usage(e.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::Usage(e.to_string()))
}

pub fn write_csv(path: Option<&Path>, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    emit(path, &csv_bytes(header, rows)?)
}

pub fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Usage(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<(), CliError> {
    emit(path, &json_bytes(value)?)
}

/// Reads a `t,expectation` series. Errors name the offending line.
pub fn read_series(path: &Path) -> Result<Vec<(f64, f64)>, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(file);
    let malformed = |line: u64, msg: String| CliError::Usage(format!("{}: line {line}: {msg}", path.display()));

    let header = reader.headers().map_err(|e| malformed(1, e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>() != ["t", "expectation"] {
        return Err(malformed(1, format!("expected header \"t,expectation\", found {:?}", header.iter().collect::<Vec<_>>().join(","))));
    }
    let mut series: Vec<(f64, f64)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            malformed(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 {
            return Err(malformed(line, format!("expected 2 fields, found {}", record.len())));
        }
        let parse = |s: &str| -> Result<f64, CliError> {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| malformed(line, format!("not a finite number: {s:?}")))
        };
        let (t, v) = (parse(&record[0])?, parse(&record[1])?);
        if let Some(&(prev, _)) = series.last() {
            if !(t > prev) {
                return Err(malformed(line, format!("time {t} does not increase (previous {prev})")));
            }
        }
        series.push((t, v));
    }
    if series.len() < 2 {
        return Err(CliError::Usage(format!("{}: series needs at least two samples, found {}", path.display(), series.len())));
    }
    Ok(series)
}
