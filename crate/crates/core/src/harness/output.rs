//! CSV rows and the run manifest.

use crate::error::{Error, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::Path;

pub const CSV_SCHEMA: u32 = 1;

pub const CSV_HEADER: &str =
    "x_name,x_units,x,y_name,y_units,y,series,metric,metric_units,mean,stderr,trials,params_hash";

/// Axis name and units.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Quantity {
    pub name: &'static str,
    pub units: &'static str,
}

pub const fn q(name: &'static str, units: &'static str) -> Quantity {
    Quantity { name, units }
}

/// One aggregated value of one series at one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub x_quantity: Quantity,
    pub x: f64,
    /// Second coordinate for surfaces and families of curves.
    pub y: Option<(Quantity, f64)>,
    pub series: String,
    pub metric: Quantity,
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
    pub params_hash: String,
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

impl CurvePoint {
    fn row(&self) -> String {
        let (yn, yu, yv) = match &self.y {
            Some((qy, v)) => (qy.name, qy.units, num(*v)),
            None => ("", "", String::new()),
        };
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.x_quantity.name,
            self.x_quantity.units,
            num(self.x),
            yn,
            yu,
            yv,
            self.series,
            self.metric.name,
            self.metric.units,
            num(self.mean),
            num(self.stderr),
            self.trials,
            self.params_hash
        )
    }
}

/// Named CSV body, rendered in memory so it can be hashed before writing.
#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub rows: Vec<CurvePoint>,
}

impl Table {
    pub fn new(name: impl Into<String>) -> Self {
        Table {
            name: name.into(),
            rows: Vec::new(),
        }
    }

    pub fn render(&self) -> String {
        let mut s = String::with_capacity(64 * (self.rows.len() + 1));
        s.push_str(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(s, "{}", r.row());
        }
        s
    }
}

/// Parsed CSV row with the axis metadata kept as strings.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub x_name: String,
    pub x: f64,
    pub y_name: String,
    pub y: Option<f64>,
    pub series: String,
    pub metric: String,
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
    pub params_hash: String,
}

/// Read back a table written by [`Table::render`].
pub fn read_csv(path: &Path) -> Result<Vec<CsvRow>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::Config(format!(
            "{}: unexpected CSV header",
            path.display()
        )));
    }
    let bad = |l: &str| Error::Config(format!("{}: malformed row {l:?}", path.display()));
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 13 {
                return Err(bad(l));
            }
            let p = |s: &str| s.parse::<f64>().map_err(|_| bad(l));
            Ok(CsvRow {
                x_name: f[0].into(),
                x: p(f[2])?,
                y_name: f[3].into(),
                y: if f[5].is_empty() {
                    None
                } else {
                    Some(p(f[5])?)
                },
                series: f[6].into(),
                metric: f[7].into(),
                mean: p(f[9])?,
                stderr: p(f[10])?,
                trials: f[11].parse().map_err(|_| bad(l))?,
                params_hash: f[12].into(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub rows: usize,
    pub sha256: String,
}

/// Manifest describing one run. Holds nothing that depends on scheduling.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub csv_schema: u32,
    pub tool_version: &'static str,
    pub kind: String,
    pub params_hash: String,
    pub config: serde_json::Value,
    pub notes: serde_json::Value,
    pub files: Vec<FileEntry>,
}

/// Write all tables and `manifest.json` into `dir`.
pub fn write_run(
    dir: &Path,
    tables: &[Table],
    mut manifest: Manifest,
) -> Result<Vec<std::path::PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for t in tables {
        let body = t.render();
        let path = dir.join(format!("{}.csv", t.name));
        std::fs::write(&path, &body)?;
        manifest.files.push(FileEntry {
            name: format!("{}.csv", t.name),
            rows: t.rows.len(),
            sha256: hex::encode(Sha256::digest(body.as_bytes())),
        });
        paths.push(path);
    }
    let path = dir.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")?;
    paths.push(path);
    Ok(paths)
}
