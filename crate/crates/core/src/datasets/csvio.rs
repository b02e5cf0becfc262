//! One-column CSV ingestion and one- or multi-column emission.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::ts::TimeSeries;

/// Format with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Read the first column of a CSV file. A non-numeric first record is taken
/// as a header; any later non-numeric record is an error.
pub fn load_csv(path: impl AsRef<Path>) -> Result<TimeSeries> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut values = Vec::new();
    let mut saw_first = false;
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let field = record.get(0).unwrap_or("");
        if field.is_empty() && record.len() <= 1 {
            continue;
        }
        match field.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            Ok(_) => {
                return Err(Error::Parse {
                    path: path.into(),
                    line,
                    msg: format!("non-finite value `{field}`"),
                })
            }
            Err(_) if !saw_first => {}
            Err(_) => {
                return Err(Error::Parse {
                    path: path.into(),
                    line,
                    msg: format!("cannot parse `{field}` as a number"),
                })
            }
        }
        saw_first = true;
    }
    if values.is_empty() {
        return Err(Error::Parse {
            path: path.into(),
            line: 0,
            msg: "no numeric records".into(),
        });
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "series".into());
    TimeSeries::new(name, values)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        other => Error::Parse {
            path: path.into(),
            line,
            msg: format!("{other:?}"),
        },
    }
}

/// Write a single series under a `value` header.
pub fn save_csv(path: impl AsRef<Path>, series: &TimeSeries) -> Result<()> {
    save_columns(path, &["value"], &[series.values()])
}

/// Write equal-length columns under the given headers.
pub fn save_columns(path: impl AsRef<Path>, headers: &[&str], columns: &[&[f64]]) -> Result<()> {
    let path = path.as_ref();
    if headers.len() != columns.len() {
        return Err(Error::usage("one header per column"));
    }
    let n = columns.first().map_or(0, |c| c.len());
    if columns.iter().any(|c| c.len() != n) {
        return Err(Error::usage("columns must have equal length"));
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        writeln!(w, "{}", headers.join(","))?;
        for i in 0..n {
            let row: Vec<String> = columns.iter().map(|c| fmt_f64(c[i])).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        w.flush()
    };
    write().map_err(|e| Error::io(path, e))
}
