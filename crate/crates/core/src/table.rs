//! Typed tables and their CSV form.
//!
//! Reals are written with 17 significant digits so that a write/read cycle
//! reproduces every `f64` bit for bit. Rationals are written as `num/den`.
//! Complex columns occupy two CSV fields (real part, imaginary part).

use std::fs::File;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use num_rational::Ratio;

use crate::error::{Error, Result};

pub type Rational = Ratio<i64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKind {
    Integer,
    Rational,
    Real,
    Complex,
    Text,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    names: Vec<String>,
    kind: ColumnKind,
}

impl Column {
    pub fn new(name: &str, kind: ColumnKind) -> Self {
        assert!(kind != ColumnKind::Complex, "complex columns need two header names");
        Column { names: vec![name.to_string()], kind }
    }

    pub fn integer(name: &str) -> Self {
        Self::new(name, ColumnKind::Integer)
    }

    pub fn rational(name: &str) -> Self {
        Self::new(name, ColumnKind::Rational)
    }

    pub fn real(name: &str) -> Self {
        Self::new(name, ColumnKind::Real)
    }

    pub fn text(name: &str) -> Self {
        Self::new(name, ColumnKind::Text)
    }

    pub fn complex(re_name: &str, im_name: &str) -> Self {
        Column { names: vec![re_name.to_string(), im_name.to_string()], kind: ColumnKind::Complex }
    }

    pub fn kind(&self) -> ColumnKind {
        self.kind
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Integer(i64),
    Rational(Rational),
    Real(f64),
    Complex(Complex64),
    Text(String),
}

impl Cell {
    fn kind(&self) -> ColumnKind {
        match self {
            Cell::Integer(_) => ColumnKind::Integer,
            Cell::Rational(_) => ColumnKind::Rational,
            Cell::Real(_) => ColumnKind::Real,
            Cell::Complex(_) => ColumnKind::Complex,
            Cell::Text(_) => ColumnKind::Text,
        }
    }

    fn push_fields(&self, out: &mut Vec<String>) {
        match self {
            Cell::Integer(v) => out.push(v.to_string()),
            Cell::Rational(r) => out.push(format_rational(r)),
            Cell::Real(x) => out.push(format_real(*x)),
            Cell::Complex(z) => {
                out.push(format_real(z.re));
                out.push(format_real(z.im));
            }
            Cell::Text(s) => out.push(s.clone()),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Real(x)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Integer(v)
    }
}

impl From<Rational> for Cell {
    fn from(r: Rational) -> Self {
        Cell::Rational(r)
    }
}

impl From<Complex64> for Cell {
    fn from(z: Complex64) -> Self {
        Cell::Complex(z)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

/// Real number with 17 significant digits (round-trips every finite `f64`).
pub fn format_real(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        format!("{x:.16e}")
    }
}

pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn parse_real(field: &str) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::validation(format!("not a real number: {field:?}")))
}

pub fn parse_rational(field: &str) -> Result<Rational> {
    let bad = || Error::validation(format!("not a rational: {field:?}"));
    let field = field.trim();
    match field.split_once('/') {
        Some((n, d)) => {
            let n: i64 = n.trim().parse().map_err(|_| bad())?;
            let d: i64 = d.trim().parse().map_err(|_| bad())?;
            if d == 0 {
                return Err(bad());
            }
            Ok(Rational::new(n, d))
        }
        None => field.parse::<i64>().map(Rational::from_integer).map_err(|_| bad()),
    }
}

/// A typed table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    columns: Vec<Column>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<Column>) -> Self {
        Table { columns, rows: Vec::new() }
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push(&mut self, row: Vec<Cell>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::validation(format!(
                "row has {} cells, table has {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        for (cell, col) in row.iter().zip(&self.columns) {
            if cell.kind() != col.kind {
                return Err(Error::validation(format!(
                    "column {:?} expects {:?}, got {:?}",
                    col.names[0],
                    col.kind,
                    cell.kind()
                )));
            }
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn header(&self) -> Vec<String> {
        self.columns.iter().flat_map(|c| c.names.iter().cloned()).collect()
    }

    pub fn to_csv_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
        w.write_record(self.header())?;
        let mut fields = Vec::new();
        for row in &self.rows {
            fields.clear();
            for cell in row {
                cell.push_fields(&mut fields);
            }
            w.write_record(&fields)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }

    /// Writes the table as RFC-4180 CSV.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let bytes = self.to_csv_bytes()?;
        let mut f = File::create(path)?;
        f.write_all(&bytes)?;
        f.flush()?;
        Ok(())
    }
}

/// Untyped CSV contents as read back from disk.
#[derive(Debug, Clone)]
pub struct RawTable {
    pub header: Vec<String>,
    pub records: Vec<Vec<String>>,
}

impl RawTable {
    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::validation(format!("missing column {name:?}")))
    }

    pub fn reals(&self, name: &str) -> Result<Vec<f64>> {
        let i = self.column_index(name)?;
        self.records.iter().map(|r| parse_real(&r[i])).collect()
    }

    /// Reals or `num/den` rationals, as floating point.
    pub fn numbers(&self, name: &str) -> Result<Vec<f64>> {
        let i = self.column_index(name)?;
        self.records
            .iter()
            .map(|r| match parse_rational(&r[i]) {
                Ok(q) => Ok(*q.numer() as f64 / *q.denom() as f64),
                Err(_) => parse_real(&r[i]),
            })
            .collect()
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.header.iter().any(|h| h == name)
    }

    pub fn texts(&self, name: &str) -> Result<Vec<String>> {
        let i = self.column_index(name)?;
        Ok(self.records.iter().map(|r| r[i].clone()).collect())
    }
}

pub fn read_csv(path: &Path) -> Result<RawTable> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let header = r.headers()?.iter().map(str::to_string).collect();
    let mut records = Vec::new();
    for rec in r.records() {
        records.push(rec?.iter().map(str::to_string).collect());
    }
    Ok(RawTable { header, records })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_table_is_header_only() {
        let t = Table::new(vec![Column::real("t"), Column::real("w")]);
        assert_eq!(t.to_csv_bytes().unwrap(), b"t,w\r\n");
    }

    #[test]
    fn rational_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let mut t = Table::new(vec![Column::integer("k"), Column::rational("q")]);
        t.push(vec![Cell::Integer(3), Cell::Rational(Rational::new(26, 9))]).unwrap();
        t.write_csv(&path).unwrap();
        let raw = read_csv(&path).unwrap();
        assert_eq!(raw.records[0][1], "26/9");
        assert_eq!(parse_rational(&raw.records[0][1]).unwrap(), Rational::new(26, 9));
    }

    #[test]
    fn type_mismatch_rejected() {
        let mut t = Table::new(vec![Column::real("x")]);
        assert!(t.push(vec![Cell::Text("a".into())]).is_err());
        assert!(t.push(vec![]).is_err());
    }

    #[test]
    fn text_fields_are_quoted() {
        let mut t = Table::new(vec![Column::text("label")]);
        t.push(vec![Cell::from("a,\"b\"")]).unwrap();
        let s = String::from_utf8(t.to_csv_bytes().unwrap()).unwrap();
        assert_eq!(s, "label\r\n\"a,\"\"b\"\"\"\r\n");
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let t = Table::new(vec![Column::real("x")]);
        let err = t.write_csv(Path::new("/nonexistent-dir/x/y.csv")).unwrap_err();
        assert!(matches!(err, Error::Io(_)));
    }

    proptest! {
        #[test]
        fn complex_loopback_is_bit_exact(re in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO,
                                         im in proptest::num::f64::NORMAL) {
            let mut t = Table::new(vec![Column::complex("Re", "Im")]);
            t.push(vec![Cell::Complex(Complex64::new(re, im))]).unwrap();
            let bytes = t.to_csv_bytes().unwrap();
            let mut r = csv::Reader::from_reader(bytes.as_slice());
            let rec = r.records().next().unwrap().unwrap();
            prop_assert_eq!(parse_real(&rec[0]).unwrap().to_bits(), re.to_bits());
            prop_assert_eq!(parse_real(&rec[1]).unwrap().to_bits(), im.to_bits());
        }
    }
}
