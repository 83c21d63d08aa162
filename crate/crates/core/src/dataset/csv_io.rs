use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array2;

use super::Dataset;
use crate::error::{Error, Result};

/// Loads a comma-separated numeric table.
///
/// All columns except `label_column` (0-based) become features. Rows and
/// columns in error messages are 1-based and count data rows only.
pub fn load_csv(path: impl AsRef<Path>, has_header: bool, label_column: Option<usize>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    read_csv(file, has_header, label_column, &name).map_err(|e| match e {
        Error::Parse { message, .. } => Error::Parse {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    })
}

/// Same as [`load_csv`] over any reader.
pub fn read_csv<R: Read>(reader: R, has_header: bool, label_column: Option<usize>, name: &str) -> Result<Dataset> {
    let parse_err = |message: String| Error::Parse {
        path: name.into(),
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut width = None;
    let mut rows = 0usize;
    for (r, record) in rdr.records().enumerate() {
        let row = r + 1;
        let record = record.map_err(|e| parse_err(format!("row {row}: {e}")))?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(parse_err(format!(
                "row {row} has {} columns, expected {expected}",
                record.len()
            )));
        }
        if let Some(lc) = label_column {
            if lc >= expected {
                return Err(parse_err(format!(
                    "label column {} out of range for {expected} columns",
                    lc + 1
                )));
            }
        }
        for (c, field) in record.iter().enumerate() {
            let col = c + 1;
            if Some(c) == label_column {
                labels.push(parse_label(field).ok_or_else(|| {
                    parse_err(format!("row {row}, column {col}: label {field:?} is not an integer"))
                })?);
            } else {
                let v: f64 = field
                    .parse()
                    .map_err(|_| parse_err(format!("row {row}, column {col}: {field:?} is not a number")))?;
                if !v.is_finite() {
                    return Err(parse_err(format!("row {row}, column {col}: non-finite value")));
                }
                values.push(v);
            }
        }
        rows += 1;
    }

    let width = width.ok_or_else(|| parse_err("empty file".into()))?;
    let d = width - usize::from(label_column.is_some());
    if d == 0 {
        return Err(parse_err("no feature columns".into()));
    }
    let points = Array2::from_shape_vec((rows, d), values).expect("row widths checked");
    Dataset::new(points, label_column.map(|_| labels), name)
}

fn parse_label(field: &str) -> Option<i64> {
    field.parse::<i64>().ok().or_else(|| {
        let v: f64 = field.parse().ok()?;
        (v.fract() == 0.0 && v.abs() < 9.0e15).then_some(v as i64)
    })
}

/// Writes `x1..xd[,label]` with a header row. Floats use Rust's shortest
/// round-trip formatting, so reading the file back is lossless.
pub fn write_csv<W: Write>(data: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (1..=data.dim()).map(|j| format!("x{j}")).collect();
    if data.labels().is_some() {
        header.push("label".into());
    }
    w.write_record(&header)?;
    for (i, row) in data.points().outer_iter().enumerate() {
        let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        if let Some(labels) = data.labels() {
            rec.push(labels[i].to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: "<csv writer>".into(),
        source,
    })?;
    Ok(())
}
