//! CSV writers: comma separator, '.' decimal point, header row, LF endings.

use std::path::Path;

use crate::error::ToolError;

/// Shortest round-trip text of a float, positional for moderate
/// magnitudes and in exponent form otherwise; empty for missing values.
pub fn num(v: Option<f64>) -> String {
    match v {
        Some(x) if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&x.abs()) => format!("{x}"),
        Some(x) => format!("{x:e}"),
        None => String::new(),
    }
}

pub fn write_rows(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), ToolError> {
    let csv_err = |source| ToolError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| ToolError::io(path, e))
}

/// Reads a CSV written by `write_rows` into its header and rows.
pub fn read_rows(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), ToolError> {
    if !path.exists() {
        return Err(ToolError::MissingInput {
            path: path.to_path_buf(),
            hint: "file not found".into(),
        });
    }
    let csv_err = |source| ToolError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = r.headers().map_err(csv_err)?.iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|rec| rec.iter().map(String::from).collect()))
        .collect::<Result<_, _>>()
        .map_err(csv_err)?;
    Ok((header, rows))
}
