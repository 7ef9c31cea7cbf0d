//! Reader for user data: header `x1,…,xd,y` with an optional trailing
//! `delta` column of 0/1 flags (1 when absent).

use std::io::Read;
use std::path::Path;

use spef_core::{Dataset, Observation};

use crate::{Error, Result};

fn csv_error(line: usize, field: &str, msg: impl Into<String>) -> Error {
    Error::Csv { line, field: field.to_string(), msg: msg.into() }
}

/// Parses a dataset from CSV text.
pub fn read_dataset<R: Read>(source: R) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(1, "header", e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let has_delta = header.last().is_some_and(|h| h == "delta");
    let y_col = header.len().saturating_sub(if has_delta { 2 } else { 1 });
    if y_col == 0 || header.get(y_col).map(String::as_str) != Some("y") {
        return Err(csv_error(1, "header", "expected `x1,…,xd,y[,delta]`"));
    }
    for (j, h) in header[..y_col].iter().enumerate() {
        if *h != format!("x{}", j + 1) {
            return Err(csv_error(1, h, format!("expected column `x{}`", j + 1)));
        }
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| csv_error(line, "record", e.to_string()))?;
        if record.len() != header.len() {
            return Err(csv_error(
                line,
                "record",
                format!("{} fields, header has {}", record.len(), header.len()),
            ));
        }
        let num = |j: usize| -> Result<f64> {
            let v: f64 = record[j]
                .parse()
                .map_err(|_| csv_error(line, &header[j], format!("`{}` is not a number", &record[j])))?;
            if !v.is_finite() {
                return Err(csv_error(line, &header[j], "value is not finite"));
            }
            Ok(v)
        };
        let x = (0..y_col).map(num).collect::<Result<Vec<f64>>>()?;
        let y = num(y_col)?;
        let delta = if has_delta {
            match &record[y_col + 1] {
                "1" => true,
                "0" => false,
                other => return Err(csv_error(line, "delta", format!("`{other}` is not 0 or 1"))),
            }
        } else {
            true
        };
        rows.push(Observation::new(x, y).with_delta(delta));
    }
    if rows.is_empty() {
        return Err(csv_error(2, "record", "no data rows"));
    }
    Ok(Dataset::new(rows)?)
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset(file)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(text: &str) -> (usize, String) {
        match read_dataset(text.as_bytes()).unwrap_err() {
            Error::Csv { line, field, .. } => (line, field),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn reads_optional_delta() {
        let d = read_dataset("x1,x2,y,delta\n1,2,3,1\n4,5,6,0\n".as_bytes()).unwrap();
        assert_eq!(d.dim(), 2);
        assert_eq!(d.observed_count(), 1);
        let d = read_dataset("x1,y\n1, 2\n3,4\n".as_bytes()).unwrap();
        assert_eq!(d.observed_count(), 2);
        assert_eq!(d.ys(), vec![2.0, 4.0]);
    }

    #[test]
    fn malformed_input_names_line_and_field() {
        assert_eq!(diag("x1,z\n1,2\n"), (1, "header".into()));
        assert_eq!(diag("x2,y\n1,2\n"), (1, "x2".into()));
        assert_eq!(diag("x1,y\n1,2\n3,abc\n"), (3, "y".into()));
        assert_eq!(diag("x1,y,delta\n1,2,1\n1,2,2\n"), (3, "delta".into()));
        assert_eq!(diag("x1,y\n"), (2, "record".into()));
        assert_eq!(diag("x1,y\n1,inf\n"), (2, "y".into()));
    }
}
