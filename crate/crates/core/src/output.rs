//! Deterministic CSV and JSON output with a hashed manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::fields::RunRecord;
use crate::grid::Grid;
use crate::params::Params;
use crate::scenario::hex;

pub const SNAPSHOT_HEADER: &str = "node_i,node_j,x1,x2,v1,v2,q,T11,T12,T22,X1,X2";

/// Shortest decimal string that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        // folds -0 into 0
        return "0".into();
    }
    format!("{x:?}")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("value serializes");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_json(value))?;
    Ok(())
}

/// Writes `header` and one line per row, cells joined by commas.
pub fn write_csv(path: &Path, header: &str, rows: &[Vec<String>]) -> Result<()> {
    let mut out = String::with_capacity(rows.len() * 64);
    out.push_str(header);
    out.push('\n');
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tolerances {
    pub tol_solver: f64,
    pub tol_div: f64,
    pub tol_picard: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnapshotEntry {
    pub file: String,
    pub t: f64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub scenario_id: String,
    pub scenario_hash: String,
    pub seed: u64,
    pub params: Params,
    pub tolerances: Tolerances,
    pub extra: serde_json::Map<String, serde_json::Value>,
    pub snapshots: Vec<SnapshotEntry>,
}

pub fn snapshot_csv(grid: &Grid, snap: &crate::fields::Snapshot) -> String {
    let f = &snap.fields;
    let mut out = String::with_capacity(grid.len() * 160);
    out.push_str(SNAPSHOT_HEADER);
    out.push('\n');
    for (p, x) in grid.nodes().iter().enumerate() {
        let (i, j) = grid.label(p);
        let v = f.velocity[p];
        let t = f.stress[p];
        let xx = f.flux[p];
        let cells = [
            x.x,
            x.y,
            v.x,
            v.y,
            f.pressure[p],
            t.xx,
            t.xy,
            t.yy,
            xx.x,
            xx.y,
        ];
        write!(out, "{i},{j}").unwrap();
        for c in cells {
            out.push(',');
            out.push_str(&fmt_f64(c));
        }
        out.push('\n');
    }
    out
}

/// Writes one CSV per snapshot and `manifest.json` into `dir`; returns the
/// manifest path. Snapshot files are named by index and time so that both
/// sort the same way.
pub fn write_run(
    record: &RunRecord,
    grid: &Grid,
    scenario_hash: &str,
    tol_picard: f64,
    dir: &Path,
) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let mut entries = Vec::with_capacity(record.snapshots.len());
    for (k, snap) in record.snapshots.iter().enumerate() {
        crate::fields::FieldSet::check_shape(&snap.fields, grid.len())?;
        let name = format!("snapshot_{k:05}_t{}.csv", fmt_f64(snap.t));
        let body = snapshot_csv(grid, snap);
        fs::write(dir.join(&name), &body)?;
        entries.push(SnapshotEntry {
            file: name,
            t: snap.t,
            sha256: sha256_hex(body.as_bytes()),
        });
    }
    let m = &record.manifest;
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        scenario_id: m.scenario_id.clone(),
        scenario_hash: scenario_hash.into(),
        seed: m.seed,
        params: m.params.clone(),
        tolerances: Tolerances {
            tol_solver: m.params.tol_solver,
            tol_div: m.params.tol_div,
            tol_picard,
        },
        extra: m.extra.clone(),
        snapshots: entries,
    };
    let path = dir.join("manifest.json");
    write_json(&path, &manifest)?;
    Ok(path)
}
