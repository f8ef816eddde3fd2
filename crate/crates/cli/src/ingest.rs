//! CSV ingestion of a single numeric column.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Series {
    pub values: Vec<f64>,
    pub label: String,
    pub source_path: PathBuf,
}

/// Column selector: a header name or a zero-based index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Column {
    Name(String),
    Index(usize),
}

impl std::str::FromStr for Column {
    type Err = std::convert::Infallible;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => Column::Index(i),
            Err(_) => Column::Name(s.to_string()),
        })
    }
}

/// Reads one column of a CSV file as finite reals. Blank lines are skipped;
/// any other cell that is not a number is an error naming its line, except
/// that without `has_header` a non-numeric first row is taken as a header.
pub fn ingest_csv(path: &Path, column: &Column, has_header: bool) -> Result<Series> {
    let file = std::fs::File::open(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let csv_err = |e: csv::Error| CliError::Csv { path: path.to_path_buf(), message: e.to_string() };

    let (index, mut label) = match column {
        Column::Index(i) => {
            let label = if has_header {
                reader.headers().map_err(csv_err)?.get(*i).map(str::to_string)
            } else {
                None
            };
            (*i, label.unwrap_or_else(|| format!("column {i}")))
        }
        Column::Name(name) => {
            if !has_header {
                return Err(CliError::Usage(format!(
                    "column '{name}' selected by name but the file has no header; pass --header or an index"
                )));
            }
            let headers = reader.headers().map_err(csv_err)?;
            let i = headers.iter().position(|h| h == name).ok_or_else(|| CliError::ColumnNotFound {
                path: path.to_path_buf(),
                column: name.clone(),
            })?;
            (i, name.clone())
        }
    };

    let mut values = Vec::new();
    let mut first = !has_header;
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        let cell = record.get(index).ok_or_else(|| CliError::ColumnNotFound {
            path: path.to_path_buf(),
            column: format!("{index} (line {line})"),
        })?;
        let parsed = cell.parse::<f64>();
        if std::mem::take(&mut first) && parsed.is_err() {
            label = cell.to_string();
            continue;
        }
        match parsed {
            Ok(v) if v.is_finite() => values.push(v),
            _ => {
                return Err(CliError::Parse { path: path.to_path_buf(), line, value: cell.to_string() });
            }
        }
    }
    if values.is_empty() {
        return Err(CliError::EmptySeries(path.to_path_buf()));
    }
    Ok(Series { values, label, source_path: path.to_path_buf() })
}
