//! Run directories: CSV tables, field snapshots and metadata.
//!
//! Snapshot layout (all integers and floats little-endian):
//!
//! | bytes | content |
//! |-------|---------|
//! | 5 | magic `NPFS1` |
//! | 1 | `ndim` as `u8` |
//! | 8 * ndim | cell count per axis, `u64` |
//! | 8 * prod(cells) | values, `f64`, row-major (last axis fastest) |
//!
//! One-dimensional grids are written with `ndim = 1`.

use std::fmt::Write as _;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::analysis::{ErrorMetrics, EstimateReport, RateTable};
use crate::checks::InvariantReport;
use crate::config::Config;
use crate::error::{Error, Result};
use crate::grid::Field;
use crate::scheme::Trajectory;

pub const SNAPSHOT_MAGIC: &[u8; 5] = b"NPFS1";
pub const TIMESERIES_HEADER: &str = "n,t,theta_h,theta_v,phi_inf,v_inf,z_h,mass";

pub fn version_string() -> String {
    format!("{}+{}", env!("CARGO_PKG_VERSION"), env!("NPFS_GIT_REV"))
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// One row per node `n = 0..=N`. `z_h` is 0 at `n = 0`, where `z` is unset.
pub fn timeseries_csv(traj: &Trajectory) -> String {
    let h = traj.h();
    let mut out = String::with_capacity(160 * (traj.steps() + 2));
    out.push_str(TIMESERIES_HEADER);
    out.push('\n');
    for s in traj.states() {
        let z = if s.has_z() { s.z.h_norm() } else { 0.0 };
        let row = [
            num(s.n as f64 * h),
            num(s.theta.h_norm()),
            num(s.theta.v_norm()),
            num(s.phi.linf_norm()),
            num(s.v.linf_norm()),
            num(z),
            num(s.mass()),
        ];
        let _ = writeln!(out, "{},{}", s.n, row.join(","));
    }
    out
}

pub fn rate_table_csv(table: &RateTable) -> String {
    let mut out = format!("steps,h,{},total\n", ErrorMetrics::NAMES.join(","));
    for r in &table.rows {
        let terms: Vec<String> = r.metrics.terms().iter().map(|&x| num(x)).collect();
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.steps,
            num(r.h),
            terms.join(","),
            num(r.total())
        );
    }
    for inv in &table.inversions {
        let _ = writeln!(
            out,
            "# inversion at steps={}: error grew by factor {}",
            table.rows[inv.row].steps,
            num(inv.ratio)
        );
    }
    match (table.slope, table.m_hat) {
        (Some(slope), Some(m)) => {
            let _ = writeln!(
                out,
                "# reference_steps={} slope={} m_hat={}",
                table.reference_steps,
                num(slope),
                num(m)
            );
        }
        _ => {
            let _ = writeln!(
                out,
                "# reference_steps={} slope=undefined degenerate=true",
                table.reference_steps
            );
        }
    }
    out
}

pub fn estimates_csv(reports: &[EstimateReport]) -> String {
    let mut out = format!("steps,h,{}\n", EstimateReport::NAMES.join(","));
    for r in reports {
        let terms: Vec<String> = r.terms().iter().map(|&x| num(x)).collect();
        let _ = writeln!(out, "{},{},{}", r.steps, num(r.h), terms.join(","));
    }
    out
}

pub fn check_report_text(report: &InvariantReport) -> String {
    let mut out = String::new();
    for r in &report.results {
        let _ = writeln!(
            out,
            "{:<6} {:<32} residual={:.3e} tolerance={:.3e}",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.residual,
            r.tolerance
        );
    }
    for (name, value) in EstimateReport::NAMES.iter().zip(report.estimates.terms()) {
        let _ = writeln!(out, "{:<6} {:<32} {:.6e}", "INFO", name, value);
    }
    out
}

pub fn encode_snapshot(field: &Field) -> Vec<u8> {
    let cells = field.grid().cells();
    let mut out = Vec::with_capacity(6 + 8 * cells.len() + 8 * field.values().len());
    out.extend_from_slice(SNAPSHOT_MAGIC);
    out.push(cells.len() as u8);
    for &c in cells {
        out.extend_from_slice(&(c as u64).to_le_bytes());
    }
    for &v in field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Cell counts and values of a decoded snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub cells: Vec<usize>,
    pub values: Vec<f64>,
}

pub fn decode_snapshot(bytes: &[u8]) -> Result<Snapshot> {
    let bad = |m: &str| {
        Error::Io(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            m.to_string(),
        ))
    };
    if bytes.len() < 6 || &bytes[..5] != SNAPSHOT_MAGIC {
        return Err(bad("missing NPFS1 header"));
    }
    let ndim = bytes[5] as usize;
    let mut pos = 6;
    let mut cells = Vec::with_capacity(ndim);
    for _ in 0..ndim {
        let chunk = bytes
            .get(pos..pos + 8)
            .ok_or_else(|| bad("truncated header"))?;
        cells.push(u64::from_le_bytes(chunk.try_into().expect("8 bytes")) as usize);
        pos += 8;
    }
    let count: usize = cells.iter().product();
    let body = &bytes[pos..];
    if body.len() != 8 * count {
        return Err(bad("value block does not match cell counts"));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok(Snapshot { cells, values })
}

pub fn read_snapshot(path: impl AsRef<Path>) -> Result<Snapshot> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode_snapshot(&bytes)
}

#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub version: String,
    pub command: String,
    pub config_file: String,
    pub threads: usize,
    pub wall_time_seconds: f64,
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(contents)?;
    Ok(())
}

/// Writes `config.toml` (the canonical echo) and `metadata.toml`.
pub fn write_metadata(dir: &Path, config: &Config, meta: &Metadata) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_file(&dir.join("config.toml"), config.to_toml()?.as_bytes())?;
    let text = toml::to_string(meta)
        .map_err(|e| Error::config(format!("cannot serialize metadata: {e}")))?;
    write_file(&dir.join("metadata.toml"), text.as_bytes())
}

/// Writes `timeseries.csv` and, every `snapshot_every` steps (and at the
/// last step), `snapshots/{theta,phi,v}_NNNNNN.bin`.
pub fn write_run(
    dir: &Path,
    traj: &Trajectory,
    snapshot_every: Option<usize>,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = vec![dir.join("timeseries.csv")];
    write_file(&written[0], timeseries_csv(traj).as_bytes())?;
    if let Some(every) = snapshot_every.filter(|&k| k > 0) {
        let snap_dir = dir.join("snapshots");
        fs::create_dir_all(&snap_dir)?;
        for s in traj.states() {
            if s.n % every != 0 && s.n != traj.steps() {
                continue;
            }
            for (name, f) in [("theta", &s.theta), ("phi", &s.phi), ("v", &s.v)] {
                let path = snap_dir.join(format!("{name}_{:06}.bin", s.n));
                write_file(&path, &encode_snapshot(f))?;
                written.push(path);
            }
        }
    }
    Ok(written)
}
