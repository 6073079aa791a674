//! Output files. Every file starts with the same header: the resolved
//! configuration, `h_tilde` and `C_{A1,B2}`. CSV files carry it as `# `
//! comment lines, JSON files under a `header` key.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use super::config::{Problem, RunConfig};
use crate::error::Result;

#[derive(Clone, Debug, Serialize)]
pub struct Header {
    pub config: RunConfig,
    pub h_tilde: f64,
    pub c_a1b2: f64,
}

impl Header {
    pub fn new(p: &Problem) -> Self {
        Self {
            config: p.config.clone(),
            h_tilde: p.h_tilde,
            c_a1b2: p.c_a1b2,
        }
    }

    /// Comment lines for CSV files (without the `# ` prefix).
    pub fn lines(&self) -> Result<Vec<String>> {
        Ok(vec![
            format!("config: {}", serde_json::to_string(&self.config)?),
            format!("h_tilde: {}", self.h_tilde),
            format!("c_a1b2: {}", self.c_a1b2),
        ])
    }
}

pub fn write_file(dir: &Path, name: &str, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let mut w = BufWriter::new(File::create(dir.join(name))?);
    body(&mut w)?;
    w.flush()?;
    Ok(())
}

/// Writes `{"header": .., <payload fields>}` as pretty JSON.
pub fn write_json(dir: &Path, name: &str, header: &Header, payload: Value) -> Result<()> {
    let mut doc = json!({ "header": header });
    if let Value::Object(fields) = payload {
        doc.as_object_mut().expect("object").extend(fields);
    }
    write_file(dir, name, |w| {
        serde_json::to_writer_pretty(&mut *w, &doc)?;
        writeln!(w)?;
        Ok(())
    })
}

/// Writes a CSV with the header block, a column line and preformatted rows.
pub fn write_csv(dir: &Path, name: &str, header: &Header, columns: &str, rows: &[String]) -> Result<()> {
    let lines = header.lines()?;
    write_file(dir, name, |w| {
        for l in &lines {
            writeln!(w, "# {l}")?;
        }
        writeln!(w, "{columns}")?;
        for r in rows {
            writeln!(w, "{r}")?;
        }
        Ok(())
    })
}

/// Joins values with commas using the shortest round-trip representation.
pub fn csv_row(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}
