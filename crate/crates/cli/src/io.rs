//! CSV and JSON-lines plumbing.
//!
//! Computed results are rounded to 12 significant digits and then printed in
//! their shortest round-trip form. Sample tables keep full precision so that a
//! generated data set reads back bit for bit.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ckc_core::SampleMatrix;
use ndarray::Array2;
use serde_json::Value;

use crate::error::{CliError, Result};

pub const SIGNIFICANT_DIGITS: usize = 12;

pub fn round_sig(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v).parse().unwrap_or(v)
}

pub fn fmt_num(v: f64) -> String {
    let r = round_sig(v);
    if r == 0.0 {
        "0".to_string()
    } else {
        r.to_string()
    }
}

/// JSON number with 12 significant digits; non-finite values become `null`.
pub fn json_num(v: f64) -> Value {
    serde_json::Number::from_f64(round_sig(v)).map_or(Value::Null, Value::Number)
}

pub fn json_nums(values: &[f64]) -> Value {
    Value::Array(values.iter().map(|&v| json_num(v)).collect())
}

/// Destination that is either a file or stdout.
pub fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| CliError::io(p, e))?;
            Ok(Box::new(BufWriter::new(file)))
        }
        None => Ok(Box::new(BufWriter::new(std::io::stdout()))),
    }
}

fn open_reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(file))
}

/// Header plus string records of a CSV file.
pub fn read_records(path: &Path) -> Result<(Vec<String>, Vec<csv::StringRecord>)> {
    let mut reader = open_reader(path)?;
    let headers = reader.headers()?.iter().map(str::to_string).collect();
    let records = reader.records().collect::<std::result::Result<Vec<_>, _>>()?;
    Ok((headers, records))
}

fn parse_cell<T: std::str::FromStr>(cell: &str, row: usize, col: usize) -> Result<T> {
    cell.parse().map_err(|_| CliError::ParseError {
        row,
        col,
        value: cell.to_string(),
    })
}

/// Numeric table with its header.
pub fn load_numeric_csv(path: &Path) -> Result<(Vec<String>, Array2<f64>)> {
    let (headers, records) = read_records(path)?;
    let m = headers.len();
    let mut data = Array2::<f64>::zeros((records.len(), m));
    for (r, record) in records.iter().enumerate() {
        for (c, cell) in record.iter().enumerate() {
            let value: f64 = parse_cell(cell, r + 2, c + 1)?;
            if !value.is_finite() {
                return Err(CliError::ParseError {
                    row: r + 2,
                    col: c + 1,
                    value: cell.to_string(),
                });
            }
            data[[r, c]] = value;
        }
    }
    Ok((headers, data))
}

/// Sample matrix from a CSV with one header row, column order preserved.
pub fn load_samples_csv(path: &Path) -> Result<SampleMatrix> {
    let (_, data) = load_numeric_csv(path)?;
    samples_from_array(data)
}

pub fn samples_from_array(data: Array2<f64>) -> Result<SampleMatrix> {
    if data.nrows() < SampleMatrix::MIN_SAMPLES {
        return Err(CliError::TooFewRows {
            rows: data.nrows(),
            required: SampleMatrix::MIN_SAMPLES,
        });
    }
    Ok(SampleMatrix::new(data)?)
}

/// Single-column label file with header `label`.
pub fn load_labels_csv(path: &Path) -> Result<Vec<usize>> {
    let (headers, records) = read_records(path)?;
    if headers.len() != 1 {
        return Err(CliError::InvalidInput(format!(
            "{}: label file must have exactly one column, found {}",
            path.display(),
            headers.len()
        )));
    }
    records
        .iter()
        .enumerate()
        .map(|(r, record)| parse_cell(&record[0], r + 2, 1))
        .collect()
}

/// Sample table at full precision.
pub fn write_table<W: Write>(out: W, headers: &[String], data: &Array2<f64>) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(headers)?;
    for row in data.rows() {
        writer.write_record(row.iter().map(|v| v.to_string()))?;
    }
    writer.flush().map_err(|e| CliError::Csv(e.to_string()))
}

pub fn feature_headers(m: usize) -> Vec<String> {
    (0..m).map(|j| format!("x{j}")).collect()
}

pub fn write_labels<W: Write>(out: W, labels: &[usize]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["label"])?;
    for label in labels {
        writer.write_record([label.to_string()])?;
    }
    writer.flush().map_err(|e| CliError::Csv(e.to_string()))
}

/// Square matrix as `n` header-less rows.
pub fn write_matrix<W: Write>(out: W, data: &Array2<f64>) -> Result<()> {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for row in data.rows() {
        writer.write_record(row.iter().map(|&v| fmt_num(v)))?;
    }
    writer.flush().map_err(|e| CliError::Csv(e.to_string()))
}

pub fn write_json_line<W: Write>(out: &mut W, record: &Value) -> Result<()> {
    writeln!(out, "{record}").map_err(|e| CliError::Io {
        path: "<output>".into(),
        message: e.to_string(),
    })
}

pub fn flush<W: Write>(out: &mut W) -> Result<()> {
    out.flush().map_err(|e| CliError::Io {
        path: "<output>".into(),
        message: e.to_string(),
    })
}
