//! CSV ingestion and output for datasets.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use crate::dataset::Dataset;
use crate::error::{Error, Result};

fn csv_error(path: &Path, line: u64, column: &str, message: impl Into<String>) -> Error {
    Error::Csv {
        path: path.display().to_string(),
        line,
        column: column.to_string(),
        message: message.into(),
    }
}

/// Reads a headered CSV; `response` names the binary response column and
/// every other column is a numeric predictor, in file order.
pub fn read_csv(path: impl AsRef<Path>, response: &str) -> Result<Dataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, 1, "", e.to_string()))?;
    let headers = reader
        .headers()
        .map_err(|e| csv_error(path, 1, "", e.to_string()))?
        .clone();
    let response_idx = headers
        .iter()
        .position(|h| h == response)
        .ok_or_else(|| csv_error(path, 1, response, "response column not found in header"))?;
    let names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != response_idx)
        .map(|(_, h)| h.to_string())
        .collect();
    if names.is_empty() {
        return Err(csv_error(path, 1, "", "no predictor columns"));
    }

    let p = names.len();
    let mut rows: Vec<f64> = Vec::new();
    let mut y = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |pos| pos.line());
            csv_error(path, line, "", e.to_string())
        })?;
        let line = record.position().map_or(0, |pos| pos.line());
        for (i, cell) in record.iter().enumerate() {
            let column = &headers[i];
            if cell.is_empty() {
                return Err(csv_error(path, line, column, "missing value"));
            }
            let value: f64 = cell
                .parse()
                .map_err(|_| csv_error(path, line, column, format!("non-numeric value {cell:?}")))?;
            if !value.is_finite() {
                return Err(csv_error(path, line, column, format!("non-finite value {cell:?}")));
            }
            if i == response_idx {
                if value != 0.0 && value != 1.0 {
                    return Err(csv_error(path, line, column, format!("response must be 0 or 1, found {cell}")));
                }
                y.push(value);
            } else {
                rows.push(value);
            }
        }
    }
    let n = y.len();
    let x = DMatrix::from_row_slice(n, p, &rows);
    Dataset::with_names(x, y, names, response.to_string())
}

/// Writes predictors followed by the response column. Values use the
/// shortest decimal form that parses back to the same `f64`.
pub fn write_csv(data: &Dataset, out: impl Write) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    let mut header: Vec<&str> = data.names().iter().map(String::as_str).collect();
    header.push(data.response_name());
    writer.write_record(&header).map_err(csv_err)?;
    let mut row = Vec::with_capacity(data.p() + 1);
    for i in 0..data.n() {
        row.clear();
        row.extend((0..data.p()).map(|j| format!("{}", data.x()[(i, j)])));
        row.push(format!("{}", data.y()[i]));
        writer.write_record(&row).map_err(csv_err)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_csv_file(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    write_csv(data, File::create(path)?)
}
