//! CSV tables and atomic file writes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
}

/// A result table with a fixed header. Floats use 12 significant digits so
/// identical runs give byte-identical files.
#[derive(Clone, Debug, PartialEq)]
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

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                match cell {
                    Cell::Float(v) => write!(out, "{v:.11e}").unwrap(),
                    Cell::Int(v) => write!(out, "{v}").unwrap(),
                }
            }
            out.push('\n');
        }
        out
    }
}

pub fn f(v: f64) -> Cell {
    Cell::Float(v)
}

pub fn i(v: impl TryInto<i64>) -> Cell {
    Cell::Int(v.try_into().unwrap_or(i64::MAX))
}

/// Writes every file to a temporary sibling first and renames only once all
/// of them are written, so a failure leaves no partial results behind.
pub fn write_all(dir: &Path, files: &[(String, String)]) -> std::io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let pid = std::process::id();
    let mut staged = Vec::with_capacity(files.len());
    let cleanup = |staged: &[(PathBuf, PathBuf)]| {
        for (tmp, _) in staged {
            let _ = fs::remove_file(tmp);
        }
    };
    for (name, contents) in files {
        let target = dir.join(name);
        let tmp = dir.join(format!(".{name}.{pid}.tmp"));
        if let Err(e) = fs::write(&tmp, contents) {
            cleanup(&staged);
            let _ = fs::remove_file(&tmp);
            return Err(e);
        }
        staged.push((tmp, target));
    }
    for (tmp, target) in &staged {
        fs::rename(tmp, target)?;
    }
    Ok(staged.into_iter().map(|(_, t)| t).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_formatting() {
        let mut t = Table::new(&["x", "n"]);
        t.push(vec![f(39497.18166391513), i(3)]);
        t.push(vec![f(f64::NAN), i(0)]);
        t.push(vec![f(-0.0), i(-1)]);
        assert_eq!(t.to_csv(), "x,n\n3.94971816639e4,3\nNaN,0\n-0.00000000000e0,-1\n");
    }
}
