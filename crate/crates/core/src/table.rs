//! Whitespace-delimited numeric tables with a `#`-commented header.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct Table {
    comments: Vec<String>,
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            comments: Vec::new(),
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    /// Adds a free-form header line, written as `# key: value`.
    pub fn comment(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        self.comments.push(format!("{key}: {value}"));
        self
    }

    pub fn push(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::InvalidArgument(format!(
                "row has {} entries, table has {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn write_to(&self, out: &mut impl Write) -> std::io::Result<()> {
        for c in &self.comments {
            writeln!(out, "# {c}")?;
        }
        writeln!(out, "# {}", self.columns.join(" "))?;
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.12e}")).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    /// Parses the format written by [`Table::write_to`]. The last comment line names the columns.
    pub fn parse(text: &str) -> Result<Self> {
        let mut comments = Vec::new();
        let mut rows = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                comments.push(rest.trim().to_string());
                continue;
            }
            let row = line
                .split_whitespace()
                .map(|v| v.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::InvalidArgument(format!("bad table entry: {e}")))?;
            rows.push(row);
        }
        let header = comments
            .pop()
            .ok_or_else(|| Error::InvalidArgument("table has no header".into()))?;
        let mut t = Table::new(header.split_whitespace());
        t.comments = comments;
        for r in rows {
            t.push(r)?;
        }
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut t = Table::new(["t", "h"]);
        t.comment("seed", 7);
        t.push(vec![0.0, 0.25]).unwrap();
        t.push(vec![0.5, -1e-300]).unwrap();
        assert!(t.push(vec![1.0]).is_err());
        let mut buf = Vec::new();
        t.write_to(&mut buf).unwrap();
        let back = Table::parse(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back.columns(), t.columns());
        assert_eq!(back.column("h").unwrap(), vec![0.25, -1e-300]);
    }
}
