//! Minimal strict CSV reading/writing for the lab's numeric tables.
//!
//! Values are written with Rust's shortest-roundtrip float formatting, so a
//! rerun of the same plan reproduces every file byte-identically.

use std::io::Write;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CsvError {
    #[error("empty input")]
    Empty,
    #[error("line {0}: empty or duplicate column name")]
    BadHeader(usize),
    #[error("line {line}: expected {expect} fields, got {got}")]
    RaggedRow {
        line: usize,
        expect: usize,
        got: usize,
    },
    #[error("line {line}, column `{col}`: `{text}` is not a number")]
    BadNumber {
        line: usize,
        col: String,
        text: String,
    },
}

/// Column-oriented numeric table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.header
            .iter()
            .position(|h| h == name)
            .map(|i| self.columns[i].as_slice())
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, |c| c.len())
    }
}

/// Parse a strict numeric CSV: one header line of unique nonempty names,
/// then rectangular rows of f64 fields ("NaN"/"inf" parse but stay visible
/// to callers). Carriage returns are tolerated.
pub fn parse_table(text: &str) -> Result<Table, CsvError> {
    let mut lines = text.lines().enumerate();
    let (_, header_line) = lines.next().ok_or(CsvError::Empty)?;
    let header: Vec<String> = header_line
        .trim_end_matches('\r')
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    if header.iter().any(|h| h.is_empty()) {
        return Err(CsvError::BadHeader(1));
    }
    for (i, h) in header.iter().enumerate() {
        if header[..i].contains(h) {
            return Err(CsvError::BadHeader(1));
        }
    }
    let mut columns = vec![Vec::new(); header.len()];
    for (idx, raw) in lines {
        let line = idx + 1;
        let row = raw.trim_end_matches('\r');
        if row.is_empty() {
            continue;
        }
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != header.len() {
            return Err(CsvError::RaggedRow {
                line,
                expect: header.len(),
                got: fields.len(),
            });
        }
        for (j, f) in fields.iter().enumerate() {
            let v = f.trim().parse::<f64>().map_err(|_| CsvError::BadNumber {
                line,
                col: header[j].clone(),
                text: f.trim().to_string(),
            })?;
            columns[j].push(v);
        }
    }
    Ok(Table { header, columns })
}

fn fmt(v: f64) -> String {
    // normalize negative zero so reruns and platforms agree byte-for-byte
    if v == 0.0 {
        "0".into()
    } else {
        format!("{v}")
    }
}

/// Write rows with the given header. Floats use shortest-roundtrip format.
pub fn write_csv(
    path: &Path,
    header: &[&str],
    rows: impl Iterator<Item = Vec<f64>>,
) -> std::io::Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{}", header.join(","))?;
    for row in rows {
        let line: Vec<String> = row.iter().map(|&v| fmt(v)).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    out.flush()
}

pub fn csv_string(header: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for row in rows {
        let line: Vec<String> = row.iter().map(|&v| fmt(v)).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}
