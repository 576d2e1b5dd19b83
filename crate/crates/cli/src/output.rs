//! CSV writing, range syntax and run manifests.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

/// A CSV cell: floats in shortest round-trip scientific notation.
pub enum Cell {
    F(f64),
    I(i64),
    B(bool),
    S(String),
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::F(x) if x.is_infinite() => write!(f, "{}", if *x > 0.0 { "inf" } else { "-inf" }),
            Cell::F(x) => write!(f, "{x:e}"),
            Cell::I(n) => write!(f, "{n}"),
            Cell::B(b) => write!(f, "{b}"),
            Cell::S(s) => write!(f, "{s}"),
        }
    }
}

pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_to(&self, w: &mut impl Write) -> io::Result<()> {
        writeln!(w, "{}", self.header.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::to_string).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        w.flush()
    }
}

/// Where a command writes: a file, or stdout with side outputs on stderr.
pub struct Sink {
    pub path: Option<PathBuf>,
}

impl Sink {
    pub fn write(&self, table: &Table) -> io::Result<()> {
        match &self.path {
            Some(p) => table.write_to(&mut BufWriter::new(File::create(p)?)),
            None => table.write_to(&mut io::stdout().lock()),
        }
    }

    /// A secondary table next to the output (`<out>.<suffix>`), or on stderr.
    pub fn write_side(&self, suffix: &str, table: &Table) -> io::Result<()> {
        match &self.path {
            Some(p) => table.write_to(&mut BufWriter::new(File::create(side_path(p, suffix))?)),
            None => table.write_to(&mut io::stderr().lock()),
        }
    }

    pub fn write_manifest(&self, manifest: &RunManifest) -> io::Result<()> {
        let text = serde_json::to_string_pretty(manifest).map_err(io::Error::other)?;
        match &self.path {
            Some(p) => std::fs::write(side_path(p, "manifest.json"), text + "\n"),
            None => writeln!(io::stderr().lock(), "{text}"),
        }
    }
}

fn side_path(p: &Path, suffix: &str) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

#[derive(Serialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: Value,
    pub versions: Value,
    pub seed: Option<u64>,
    pub started: String,
    pub finished: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<Value>,
}

/// Parses `lo:hi:step` into `lo, lo + step, …` up to `hi` inclusive.
pub fn parse_range(text: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected lo:hi:step, got {text:?}"));
    }
    let num = |s: &str| s.trim().parse::<f64>().map_err(|e| format!("bad number {s:?}: {e}"));
    let (lo, hi, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
    grid(lo, hi, step)
}

/// Inclusive grid with values rounded to 12 decimals so that `0.1` steps
/// print cleanly.
pub fn grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>, String> {
    if !(lo.is_finite() && hi.is_finite() && step.is_finite()) || step <= 0.0 || hi < lo {
        return Err(format!("need finite lo <= hi and step > 0, got {lo}:{hi}:{step}"));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    if count > 100_000 {
        return Err(format!("{count} grid points is too many"));
    }
    Ok((0..count).map(|k| ((lo + k as f64 * step) * 1e12).round() / 1e12).collect())
}
