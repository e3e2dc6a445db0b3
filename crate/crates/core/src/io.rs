//! CSV ingestion of sites and observations, round-trip-exact CSV output and
//! run manifests.
//!
//! Numbers are parsed with `.` as the only decimal separator and written with
//! 17 significant digits, so every `f64` survives a write/read cycle.

use std::collections::HashMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;
use std::process::Command;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::inference::{Margins, ObservationSet};
use crate::model::SiteSet;

/// Header of a site file.
pub const SITE_HEADER: [&str; 3] = ["site_id", "x", "y"];

fn open_reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    Ok(csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(file))
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

/// Parses a finite number; locale-style commas and `inf`/`nan` spellings are rejected.
pub fn parse_number(s: &str) -> Option<f64> {
    let v: f64 = s.parse().ok()?;
    v.is_finite().then_some(v)
}

/// Formats with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Reads a `site_id,x,y` file; row order becomes the site order.
pub fn load_sites(path: &Path) -> Result<SiteSet> {
    let mut rdr = open_reader(path)?;
    let header = rdr.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != SITE_HEADER {
        return Err(Error::Parse(format!(
            "{}: line 1: expected header site_id,x,y, found {}",
            path.display(),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut ids = Vec::new();
    let mut coords = Vec::new();
    let mut seen_id: HashMap<String, u64> = HashMap::new();
    let mut seen_xy: HashMap<(u64, u64), u64> = HashMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        let id = rec[0].to_string();
        if id.is_empty() {
            return Err(Error::Parse(format!("{}: line {line}: empty site_id", path.display())));
        }
        let mut xy = [0.0; 2];
        for (k, name) in ["x", "y"].iter().enumerate() {
            xy[k] = parse_number(&rec[k + 1]).ok_or_else(|| {
                Error::Parse(format!("{}: line {line}: column {name}: invalid number '{}'", path.display(), &rec[k + 1]))
            })?;
        }
        if let Some(first) = seen_id.insert(id.clone(), line) {
            return Err(Error::Parse(format!(
                "{}: lines {first} and {line}: duplicate site_id '{id}'",
                path.display()
            )));
        }
        // +0.0 and −0.0 are the same location
        let key = ((xy[0] + 0.0).to_bits(), (xy[1] + 0.0).to_bits());
        if let Some(first) = seen_xy.insert(key, line) {
            return Err(Error::Parse(format!(
                "{}: lines {first} and {line}: duplicate coordinates ({}, {})",
                path.display(),
                xy[0],
                xy[1]
            )));
        }
        ids.push(id);
        coords.push(xy);
    }
    if ids.is_empty() {
        return Err(Error::Parse(format!("{}: empty site set", path.display())));
    }
    SiteSet::new(ids, coords)
}

/// Reads an observation file: first column is the row id, remaining columns
/// are matched to site ids by header name; empty cells are missing.
pub fn load_observations(path: &Path, sites: &SiteSet) -> Result<ObservationSet> {
    load_observations_with_margins(path, sites, Margins::Raw)
}

/// [`load_observations`] for a file already on the given margins.
pub fn load_observations_with_margins(path: &Path, sites: &SiteSet, margins: Margins) -> Result<ObservationSet> {
    let mut rdr = open_reader(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.len() < 2 {
        return Err(Error::Parse(format!("{}: line 1: need an id column and at least one site column", path.display())));
    }
    let mut col_of_site = vec![None; sites.len()];
    let mut unmatched = Vec::new();
    for (c, name) in header.iter().enumerate().skip(1) {
        match sites.index_of(name) {
            Some(j) if col_of_site[j].is_none() => col_of_site[j] = Some(c),
            Some(_) => return Err(Error::Parse(format!("{}: line 1: column '{name}' appears twice", path.display()))),
            None => unmatched.push(format!("column '{name}'")),
        }
    }
    for (j, c) in col_of_site.iter().enumerate() {
        if c.is_none() {
            unmatched.push(format!("site '{}'", sites.ids()[j]));
        }
    }
    if !unmatched.is_empty() {
        return Err(Error::Parse(format!(
            "{}: columns and sites do not match; unmatched: {}",
            path.display(),
            unmatched.join(", ")
        )));
    }
    let col_of_site: Vec<usize> = col_of_site.into_iter().map(|c| c.expect("checked above")).collect();
    let mut ids = Vec::new();
    let mut values = Vec::new();
    let mut missing = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        if rec.len() != header.len() {
            return Err(Error::Parse(format!(
                "{}: line {line}: {} fields, header has {}",
                path.display(),
                rec.len(),
                header.len()
            )));
        }
        let mut row = vec![f64::NAN; sites.len()];
        let mut mask = vec![false; sites.len()];
        for (j, &c) in col_of_site.iter().enumerate() {
            let cell = &rec[c];
            if cell.is_empty() {
                mask[j] = true;
            } else {
                row[j] = parse_number(cell).ok_or_else(|| {
                    Error::Parse(format!(
                        "{}: line {line}: column '{}': invalid number '{cell}'",
                        path.display(),
                        header[c]
                    ))
                })?;
            }
        }
        ids.push(rec[0].to_string());
        values.push(row);
        missing.push(mask);
    }
    ObservationSet::new(ids, values, missing, margins, sites.clone())
}

/// Writes a table whose first column holds `row_ids`; `NaN` cells are left empty.
pub fn write_table(path: &Path, header: &[String], row_ids: &[String], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for (id, row) in row_ids.iter().zip(rows) {
        let mut rec = Vec::with_capacity(row.len() + 1);
        rec.push(id.clone());
        rec.extend(row.iter().map(|&v| if v.is_nan() { String::new() } else { fmt_f64(v) }));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes observations in the layout read by [`load_observations`].
pub fn write_observations(path: &Path, id_column: &str, data: &ObservationSet) -> Result<()> {
    let mut header = vec![id_column.to_string()];
    header.extend(data.sites().ids().iter().cloned());
    let rows: Vec<Vec<f64>> = (0..data.n_rows()).map(|i| data.row(i).to_vec()).collect();
    write_table(path, &header, data.row_ids(), &rows)
}

/// Writes a site file.
pub fn write_sites(path: &Path, sites: &SiteSet) -> Result<()> {
    let header: Vec<String> = SITE_HEADER.iter().map(|s| s.to_string()).collect();
    let rows: Vec<Vec<f64>> = sites.coords().iter().map(|c| c.to_vec()).collect();
    write_table(path, &header, sites.ids(), &rows)
}

/// Writes pretty JSON followed by a newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut f = File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}

/// `git describe --always --dirty` of the working directory, if available.
pub fn git_describe() -> Option<String> {
    let out = Command::new("git").args(["describe", "--always", "--dirty"]).output().ok()?;
    if !out.status.success() {
        return None;
    }
    let s = String::from_utf8(out.stdout).ok()?.trim().to_string();
    (!s.is_empty()).then_some(s)
}

/// Record written next to every command's outputs.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: String,
    pub tool_version: String,
    pub git_describe: Option<String>,
    pub seed: u64,
    pub config: serde_json::Value,
    pub outputs: Vec<String>,
    pub wall_time_s: f64,
    /// Command-specific facts such as acceptance rates or margin tags.
    pub details: serde_json::Map<String, serde_json::Value>,
}

impl Manifest {
    pub fn new(command: &str, seed: u64, config: serde_json::Value) -> Self {
        Manifest {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            git_describe: git_describe(),
            seed,
            config,
            outputs: Vec::new(),
            wall_time_s: 0.0,
            details: serde_json::Map::new(),
        }
    }

    pub fn detail<T: Serialize>(&mut self, key: &str, value: T) -> Result<()> {
        self.details.insert(key.to_string(), serde_json::to_value(value)?);
        Ok(())
    }
}
