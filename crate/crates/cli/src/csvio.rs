//! Deterministic CSV emission.
//!
//! Floats are written with Rust's shortest round-trip formatting, which is
//! a pure function of the value; identical runs therefore produce
//! byte-identical files.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

/// One writable CSV table.
pub struct CsvTable {
    buf: String,
    columns: usize,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        let mut buf = String::new();
        buf.push_str(&header.join(","));
        buf.push('\n');
        Self {
            buf,
            columns: header.len(),
        }
    }

    /// Appends a row of already-formatted cells.
    pub fn row(&mut self, cells: &[String]) {
        debug_assert_eq!(cells.len(), self.columns);
        self.buf.push_str(&cells.join(","));
        self.buf.push('\n');
    }

    pub fn write_to(&self, path: &Path) -> io::Result<()> {
        std::fs::write(path, self.buf.as_bytes())
    }

    pub fn as_str(&self) -> &str {
        &self.buf
    }
}

/// Shortest round-trip decimal form of a float (`inf`/`NaN` spelled out).
pub fn fmt_f64(v: f64) -> String {
    let mut s = String::new();
    let _ = write!(s, "{v}");
    s
}
