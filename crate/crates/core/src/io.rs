//! File formats: JSON network configs, CSV exports and run manifests.
//!
//! Floats in CSV files are written with 17 significant digits so that every
//! value round-trips to the same `f64`. Nothing time- or host-dependent is
//! written, so identical inputs give byte-identical files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::capacity::{RatePoint, RegionBoundary};
use crate::duality::BcRegion;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config {path}: {source}")]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },
}

/// A parsed config together with the digest of its raw bytes.
pub struct Loaded<T> {
    pub value: T,
    pub digest: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Reads and parses a JSON config. Parse and validation errors carry the
/// line and column of the offending token.
pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<Loaded<T>, IoError> {
    let bytes = fs::read(path).map_err(|source| IoError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let value = serde_json::from_slice(&bytes).map_err(|source| IoError::Parse {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(Loaded {
        value,
        digest: sha256_hex(&bytes),
    })
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    fs::write(path, bytes).map_err(|source| IoError::Write {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable value");
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

/// Fixed-width scientific notation with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Unit in which rates are exported.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateUnit {
    Nats,
    Bits,
}

impl RateUnit {
    pub fn suffix(self) -> &'static str {
        match self {
            RateUnit::Nats => "nats",
            RateUnit::Bits => "bits",
        }
    }

    pub fn convert(self, nats: f64) -> f64 {
        match self {
            RateUnit::Nats => nats,
            RateUnit::Bits => nats / std::f64::consts::LN_2,
        }
    }
}

fn push_point(out: &mut String, p: &RatePoint, unit: RateUnit) {
    let theta = p.theta.map(fmt_f64).unwrap_or_default();
    let _ = writeln!(
        out,
        "{},{},{},{}",
        p.label,
        theta,
        fmt_f64(unit.convert(p.r1)),
        fmt_f64(unit.convert(p.r2))
    );
}

/// `label,theta,r1_<unit>,r2_<unit>`, one row per boundary point.
pub fn region_csv(region: &RegionBoundary, unit: RateUnit) -> String {
    let u = unit.suffix();
    let mut out = format!("label,theta,r1_{u},r2_{u}\n");
    for p in &region.points {
        push_point(&mut out, p, unit);
    }
    out
}

/// `p1,p2,label,theta,r1_<unit>,r2_<unit>` for every split's boundary.
pub fn bc_splits_csv(region: &BcRegion, unit: RateUnit) -> String {
    let u = unit.suffix();
    let mut out = format!("p1,p2,label,theta,r1_{u},r2_{u}\n");
    for s in &region.per_split {
        let prefix = format!("{},{},", fmt_f64(s.p1), fmt_f64(s.p2));
        for p in &s.boundary.points {
            out.push_str(&prefix);
            push_point(&mut out, p, unit);
        }
    }
    out
}

/// `r1_<unit>,r2_<unit>` rows.
pub fn points_csv(points: &[RatePoint], unit: RateUnit) -> String {
    let u = unit.suffix();
    let mut out = format!("r1_{u},r2_{u}\n");
    for p in points {
        let _ = writeln!(
            out,
            "{},{}",
            fmt_f64(unit.convert(p.r1)),
            fmt_f64(unit.convert(p.r2))
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputRecord {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub input_file: String,
    pub input_sha256: String,
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub version: String,
    pub outputs: Vec<OutputRecord>,
}

impl RunManifest {
    pub fn new(command: &str, input_file: &Path, input_sha256: String) -> Self {
        Self {
            command: command.to_string(),
            input_file: input_file.display().to_string(),
            input_sha256,
            parameters: BTreeMap::new(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: Vec::new(),
        }
    }

    pub fn param(&mut self, name: &str, value: impl Serialize) -> &mut Self {
        self.parameters.insert(
            name.to_string(),
            serde_json::to_value(value).expect("serializable parameter"),
        );
        self
    }

    /// Writes `bytes` to `path` and records it as an output.
    pub fn emit(&mut self, path: &Path, bytes: &[u8]) -> Result<(), IoError> {
        write_bytes(path, bytes)?;
        self.outputs.push(OutputRecord {
            path: path.display().to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    pub fn emit_json<T: Serialize>(&mut self, path: &Path, value: &T) -> Result<(), IoError> {
        let mut text = serde_json::to_string_pretty(value).expect("serializable value");
        text.push('\n');
        self.emit(path, text.as_bytes())
    }

    /// Writes the manifest itself to `<anchor>.manifest.json`.
    pub fn finish(&self, anchor: &Path) -> Result<PathBuf, IoError> {
        let path = with_suffix(anchor, ".manifest.json");
        write_json(&path, self)?;
        Ok(path)
    }
}

/// `path` with `suffix` appended to its file name.
pub fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}
