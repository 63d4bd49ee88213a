//! Output bundles: CSV tables at full round-trip precision, JSON documents,
//! `summary.json`, and `manifest.json` written last with a hash per file.

use std::fs;
use std::path::Path;

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// 17 significant digits, so every finite `f64` reads back exactly.
pub fn format_number(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:.16e}")
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format_number(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, header: &[&'static str]) -> Self {
        Self {
            name: name.to_string(),
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn to_bytes(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.into_error()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Completed,
    Breakdown,
    Aborted,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Completed => "completed",
            Status::Breakdown => "breakdown",
            Status::Aborted => "aborted",
        }
    }
}

/// Everything a command produced; `error` is set when the run aborted.
#[derive(Debug, Clone)]
pub struct Bundle {
    pub status: Status,
    pub tables: Vec<Table>,
    pub documents: Vec<(String, Value)>,
    pub summary: Value,
    pub error: Option<String>,
}

impl Bundle {
    pub fn new(status: Status) -> Self {
        Self {
            status,
            tables: Vec::new(),
            documents: Vec::new(),
            summary: json!({}),
            error: None,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.status {
            Status::Completed => 0,
            Status::Aborted => 3,
            Status::Breakdown => 4,
        }
    }
}

fn write_file(
    dir: &Path,
    name: &str,
    bytes: &[u8],
    listing: &mut Vec<Value>,
) -> Result<(), CliError> {
    fs::write(dir.join(name), bytes)?;
    listing.push(json!({
        "name": name,
        "bytes": bytes.len(),
        "sha256": format!("{:x}", Sha256::digest(bytes)),
    }));
    Ok(())
}

fn pretty(v: &Value) -> Result<Vec<u8>, CliError> {
    let mut bytes = serde_json::to_vec_pretty(v)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Writes the bundle into the configured directory.
pub fn emit(bundle: &Bundle, cfg: &RunConfig, wall_time: f64) -> Result<(), CliError> {
    let dir = cfg.out_dir()?;
    fs::create_dir_all(&dir)?;
    let mut listing = Vec::new();
    if cfg.wants("csv") {
        for t in &bundle.tables {
            write_file(
                &dir,
                &format!("{}.csv", t.name),
                &t.to_bytes()?,
                &mut listing,
            )?;
        }
    }
    if cfg.wants("json") {
        for (name, doc) in &bundle.documents {
            write_file(&dir, &format!("{name}.json"), &pretty(doc)?, &mut listing)?;
        }
    }
    let mut summary = bundle.summary.clone();
    summary["status"] = json!(bundle.status.as_str());
    if let Some(e) = &bundle.error {
        summary["error"] = json!(e);
    }
    write_file(&dir, "summary.json", &pretty(&summary)?, &mut listing)?;

    let manifest = json!({
        "crowdsim_version": env!("CARGO_PKG_VERSION"),
        "core_version": crowdsim_core::VERSION,
        "command": cfg.command.name(),
        "config": cfg.echo(),
        "status": bundle.status.as_str(),
        "wall_time_s": wall_time,
        "files": listing,
    });
    fs::write(dir.join("manifest.json"), pretty(&manifest)?)?;
    Ok(())
}
