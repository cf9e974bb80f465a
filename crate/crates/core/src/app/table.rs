//! CSV tables with a fixed numeric format, written atomically.

use std::io::Write;
use std::path::{Path, PathBuf};

/// A table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
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

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Text(if b { "true" } else { "false" }.into())
    }
}

/// Ten significant digits, positional notation for magnitudes in
/// `[1e-5, 1e10)`, scientific otherwise.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0.000000000".into();
    }
    let sci = format!("{x:.9e}");
    let exp: i32 = sci.rsplit('e').next().and_then(|e| e.parse().ok()).unwrap_or(0);
    if !(-5..10).contains(&exp) {
        return sci;
    }
    format!("{x:.*}", (9 - exp) as usize)
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => format_number(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, csv::Error> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.into_inner().map_err(|e| csv::Error::from(e.into_error()))
    }

    /// Writes `dir/name` through a temporary file and rename.
    pub fn write(&self, dir: &Path, name: &str) -> std::io::Result<PathBuf> {
        let bytes = self.to_bytes().map_err(std::io::Error::other)?;
        write_atomic(dir, name, &bytes)
    }
}

pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> std::io::Result<PathBuf> {
    let target = dir.join(name);
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(&target).map_err(|e| e.error)?;
    Ok(target)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(format_number(0.391524187263737), "0.3915241873");
        assert_eq!(format_number(-0.0319), "-0.03190000000");
        assert_eq!(format_number(1.0), "1.000000000");
        assert_eq!(format_number(9.99999999999), "10.00000000");
        assert_eq!(format_number(1000.0), "1000.000000");
        assert_eq!(format_number(1.5e-7), "1.500000000e-7");
        assert_eq!(format_number(0.0), "0.000000000");
        assert_eq!(format_number(-0.0), "0.000000000");
        assert_eq!(format_number(f64::INFINITY), "inf");
    }

    #[test]
    fn lf_endings_and_atomic_write() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![Cell::from(0.5), Cell::from("x")]);
        let dir = tempfile::tempdir().unwrap();
        let p = t.write(dir.path(), "t.csv").unwrap();
        let text = std::fs::read_to_string(p).unwrap();
        assert_eq!(text, "a,b\n0.5000000000,x\n");
    }
}
