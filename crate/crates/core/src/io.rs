//! Output files: JSON documents and CSV tables, each carrying a header with
//! the resolved configuration and the code version.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::Result;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Header {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: Value,
}

impl Header {
    pub fn new(command: &str, config: &impl Serialize) -> Result<Self> {
        Ok(Self {
            tool: "revsym",
            version: VERSION,
            command: command.to_string(),
            config: serde_json::to_value(config)?,
        })
    }
}

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    header: &'a Header,
    result: &'a T,
}

pub fn to_json<T: Serialize>(header: &Header, result: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(&Document { header, result })?)
}

/// Writes `{"header": …, "result": …}` to `path`, creating parent directories.
pub fn write_json<T: Serialize>(path: &Path, header: &Header, result: &T) -> Result<()> {
    create_parent(path)?;
    let mut s = to_json(header, result)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

fn create_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    Ok(())
}

/// Opens a CSV file and writes the header as `#` comment lines.
pub fn csv_writer(path: &Path, header: &Header) -> Result<BufWriter<File>> {
    create_parent(path)?;
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# {} {} {}", header.tool, header.version, header.command)?;
    writeln!(w, "# config: {}", serde_json::to_string(&header.config)?)?;
    Ok(w)
}

/// A numeric table with named columns; non-finite cells are written as
/// `nan`/`inf` literals.
pub fn write_table(path: &Path, header: &Header, columns: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv_writer(path, header)?;
    writeln!(w, "{}", columns.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads back the data rows of a table written by [`write_table`].
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let columns = lines
        .next()
        .map(|l| l.split(',').map(str::to_string).collect())
        .unwrap_or_default();
    let rows = lines
        .filter(|l| !l.is_empty())
        .map(|l| l.split(',').map(|c| c.trim().parse().unwrap_or(f64::NAN)).collect())
        .collect();
    Ok((columns, rows))
}
