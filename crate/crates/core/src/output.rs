//! Tab-separated tables and 16-bit graymap rasters.
//!
//! Floats are written with 17 significant digits so every value reads back
//! to the same double.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::{Error, Result};

/// `v` in scientific notation with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Streaming TSV writer: header line, column line, rows.
pub struct TsvWriter {
    out: BufWriter<File>,
    columns: usize,
}

impl TsvWriter {
    pub fn create(path: &Path, header: &str, columns: &[&str]) -> Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{header}")?;
        writeln!(out, "{}", columns.join("\t"))?;
        Ok(TsvWriter { out, columns: columns.len() })
    }

    pub fn row(&mut self, cells: &[Cell]) -> Result<()> {
        if cells.len() != self.columns {
            return Err(Error::InvalidInput(format!(
                "row has {} cells, table has {} columns",
                cells.len(),
                self.columns
            )));
        }
        let line: Vec<String> = cells.iter().map(Cell::render).collect();
        writeln!(self.out, "{}", line.join("\t"))?;
        Ok(())
    }

    pub fn floats(&mut self, values: &[f64]) -> Result<()> {
        let cells: Vec<Cell> = values.iter().copied().map(Cell::F).collect();
        self.row(&cells)
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    F(f64),
    I(i64),
    S(String),
    /// Absent value, written as `nan`.
    Missing,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(v) => fmt_f64(*v),
            Cell::I(v) => v.to_string(),
            Cell::S(s) => s.clone(),
            Cell::Missing => "nan".to_string(),
        }
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Missing, Cell::F)
    }
}

/// Write `rows` (each of length `width`) as a binary 16-bit PGM, min–max
/// scaled. The scale and any extra `comments` go into header comments.
pub fn write_pgm16(path: &Path, width: usize, rows: &[Vec<f64>], comments: &[String]) -> Result<()> {
    if width == 0 || rows.is_empty() || rows.iter().any(|r| r.len() != width) {
        return Err(Error::InvalidInput("heatmap rows must be nonempty and of equal width".into()));
    }
    let (lo, hi) = rows
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "P5")?;
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    writeln!(out, "# min={} max={}", fmt_f64(lo), fmt_f64(hi))?;
    writeln!(out, "{width} {}", rows.len())?;
    writeln!(out, "65535")?;
    for row in rows {
        for &v in row {
            let level = ((v - lo) / span * 65535.0).round().clamp(0.0, 65535.0) as u16;
            out.write_all(&level.to_be_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}
