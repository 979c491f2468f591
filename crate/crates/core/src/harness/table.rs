//! Delimited-text ingestion.
//!
//! Files may be comma- or whitespace-delimited and may start with a header
//! line. The delimiter is taken from the first non-empty line; a line is a
//! header if any of its fields fails to parse as a number.

use std::path::Path;

use nalgebra::DMatrix;

use super::Dataset;
use crate::error::{Error, Result};

/// Which column holds the label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    /// The last column.
    Last,
    /// 0-based column index.
    Index(usize),
    /// Header name; requires a header line.
    Name(String),
}

impl std::str::FromStr for LabelColumn {
    type Err = Error;

    /// `last`, a 0-based index, or a header name.
    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("last") {
            Ok(LabelColumn::Last)
        } else if let Ok(i) = s.parse::<usize>() {
            Ok(LabelColumn::Index(i))
        } else if s.is_empty() {
            Err(Error::invalid("empty label column"))
        } else {
            Ok(LabelColumn::Name(s.to_string()))
        }
    }
}

pub fn load_csv(path: impl AsRef<Path>, label: &LabelColumn) -> Result<Dataset> {
    parse_delimited(&read(path.as_ref())?, label)
}

/// Reads an unlabelled table: every column is an input.
pub fn load_features(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    parse_features(&read(path.as_ref())?)
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("cannot read {}: {e}", path.display()))))
}

struct Table {
    header: Option<Vec<String>>,
    first_line: usize,
    rows: usize,
    width: usize,
    values: Vec<f64>,
}

fn parse_table(text: &str) -> Result<Table> {
    let records = split_records(text)?;
    let Some((first_line, first)) = records.first() else {
        return Err(Error::invalid("no data rows"));
    };
    let has_header = first.iter().any(|f| f.parse::<f64>().is_err());
    let header: Option<Vec<String>> = has_header.then(|| first.clone());
    let width = first.len();
    let rows = if has_header { &records[1..] } else { &records[..] };
    if rows.is_empty() {
        return Err(Error::invalid("no data rows"));
    }
    let mut bad = Vec::new();
    let mut values = Vec::with_capacity(rows.len() * width);
    for (line, fields) in rows {
        let parsed: Option<Vec<f64>> = if fields.len() == width {
            fields
                .iter()
                .map(|f| f.parse::<f64>().ok().filter(|v| v.is_finite()))
                .collect()
        } else {
            None
        };
        match parsed {
            Some(v) => values.extend(v),
            None => bad.push(*line),
        }
    }
    if !bad.is_empty() {
        return Err(Error::Data {
            rows: bad,
            message: format!("expected {width} numeric fields per row"),
        });
    }
    Ok(Table {
        header,
        first_line: *first_line,
        rows: rows.len(),
        width,
        values,
    })
}

/// Parses delimited text already in memory. See [`load_csv`].
pub fn parse_delimited(text: &str, label: &LabelColumn) -> Result<Dataset> {
    let table = parse_table(text)?;
    let width = table.width;
    let label_idx = match label {
        LabelColumn::Last => width - 1,
        LabelColumn::Index(i) if *i < width => *i,
        LabelColumn::Index(i) => {
            return Err(Error::invalid(format!("label column {i} out of range ({width} columns)")))
        }
        LabelColumn::Name(name) => {
            let h = table
                .header
                .as_ref()
                .ok_or_else(|| Error::invalid(format!("label column `{name}` given but file has no header")))?;
            h.iter().position(|c| c == name).ok_or_else(|| {
                Error::invalid(format!("no column named `{name}` (line {})", table.first_line))
            })?
        }
    };
    if width < 2 {
        return Err(Error::invalid("need at least one input column besides the label"));
    }
    let n = table.rows;
    let mut x = DMatrix::zeros(n, width - 1);
    let mut y = Vec::with_capacity(n);
    for t in 0..n {
        let row = &table.values[t * width..(t + 1) * width];
        let mut c = 0;
        for (j, v) in row.iter().enumerate() {
            if j == label_idx {
                y.push(*v);
            } else {
                x[(t, c)] = *v;
                c += 1;
            }
        }
    }
    let data = Dataset::new(x, y)?;
    match table.header {
        Some(h) => {
            let names = h
                .into_iter()
                .enumerate()
                .filter(|(j, _)| *j != label_idx)
                .map(|(_, s)| s)
                .collect();
            data.with_names(names)
        }
        None => Ok(data),
    }
}

/// Parses an unlabelled table already in memory. See [`load_features`].
pub fn parse_features(text: &str) -> Result<DMatrix<f64>> {
    let table = parse_table(text)?;
    Ok(DMatrix::from_row_slice(table.rows, table.width, &table.values))
}

/// Non-empty lines split into trimmed fields, with 1-based line numbers.
fn split_records(text: &str) -> Result<Vec<(usize, Vec<String>)>> {
    let comma = text
        .lines()
        .find(|l| !l.trim().is_empty())
        .is_some_and(|l| l.contains(','));
    if comma {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut out = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| {
                let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
                Error::Data {
                    rows: vec![line],
                    message: e.to_string(),
                }
            })?;
            let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
            if rec.iter().all(|f| f.is_empty()) {
                continue;
            }
            out.push((line, rec.iter().map(str::to_string).collect()));
        }
        Ok(out)
    } else {
        Ok(text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| (i + 1, l.split_whitespace().map(str::to_string).collect()))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn well_formed_comma_file() {
        let d = parse_delimited("a,b,y\n1,2,3\n4,5,6\n7,8,9\n", &LabelColumn::Name("y".into())).unwrap();
        assert_eq!(d.n(), 3);
        assert_eq!(d.dim(), 2);
        assert_eq!(d.y(), &[3.0, 6.0, 9.0]);
        assert_eq!(d.names().unwrap(), &["a".to_string(), "b".to_string()]);
    }

    #[test]
    fn whitespace_without_header() {
        let d = parse_delimited(" 1  2 3\n4 5   6\n\n", &LabelColumn::Index(0)).unwrap();
        assert_eq!(d.y(), &[1.0, 4.0]);
        assert_eq!(d.x()[(1, 1)], 6.0);
    }

    #[test]
    fn features_only() {
        let x = parse_features("a b\n1 2\n3 4\n").unwrap();
        assert_eq!(x, DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]));
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_csv("/nonexistent/file.csv", &LabelColumn::Last).unwrap_err();
        assert_eq!(err.origin(), "io");
    }

    #[test]
    fn malformed_rows_are_listed() {
        let err = parse_delimited("1,2,3\n4,x,6\n7,8\n9,10,11\n", &LabelColumn::Last).unwrap_err();
        match err {
            Error::Data { rows, .. } => assert_eq!(rows, vec![2, 3]),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn missing_label_column() {
        assert!(parse_delimited("a,b\n1,2\n", &LabelColumn::Name("y".into())).is_err());
        assert!(parse_delimited("1,2\n", &LabelColumn::Index(5)).is_err());
        assert!(parse_delimited("1,2\n", &LabelColumn::Name("y".into())).is_err());
    }

    #[test]
    fn unreadable_file() {
        assert!(load_csv("/nonexistent/file.csv", &LabelColumn::Last).is_err());
    }

    #[test]
    fn label_column_parsing() {
        assert_eq!("last".parse::<LabelColumn>().unwrap(), LabelColumn::Last);
        assert_eq!("3".parse::<LabelColumn>().unwrap(), LabelColumn::Index(3));
        assert_eq!("y".parse::<LabelColumn>().unwrap(), LabelColumn::Name("y".into()));
    }
}
