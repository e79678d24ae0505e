//! Snapshot and trajectory files.
//!
//! Fields and states are CSV with a version header line carrying the grid:
//! `madelung-lab-csv,<format>,L=<length>,N=<points>` followed by a column
//! header and one row per grid point. All files are written atomically
//! (temp file + rename).

use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;

use crate::dynamics::{GpTrajectory, HgpTrajectory};
use crate::error::{LabError, Result};
use crate::field::{ComplexField, Grid1D};
use crate::madelung::HydroState;

const MAGIC: &str = "madelung-lab-csv";
const FIELD_FORMAT: &str = "field-v1";
const STATE_FORMAT: &str = "state-v1";

/// Write bytes through a sibling temp file and rename into place.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn header(format: &str, grid: &Grid1D) -> String {
    format!("{MAGIC},{format},L={:.17e},N={}\n", grid.length(), grid.n_points())
}

fn parse_header(line: &str, expect_format: &str) -> Result<(f64, usize)> {
    let parts: Vec<&str> = line.trim().split(',').collect();
    if parts.len() != 4 || parts[0] != MAGIC {
        return Err(LabError::BadSnapshot(format!("unrecognized header {line:?}")));
    }
    if parts[1] != expect_format {
        return Err(LabError::BadSnapshot(format!(
            "format {} does not match expected {expect_format}",
            parts[1]
        )));
    }
    let l = parts[2]
        .strip_prefix("L=")
        .and_then(|v| v.parse::<f64>().ok())
        .ok_or_else(|| LabError::BadSnapshot("bad L in header".into()))?;
    let n = parts[3]
        .strip_prefix("N=")
        .and_then(|v| v.parse::<usize>().ok())
        .ok_or_else(|| LabError::BadSnapshot("bad N in header".into()))?;
    Ok((l, n))
}

pub fn write_field_csv(path: &Path, field: &ComplexField) -> Result<()> {
    let grid = field.grid();
    let mut out = header(FIELD_FORMAT, grid);
    out.push_str("x,re_q,im_q\n");
    for (&x, z) in grid.x().iter().zip(field.samples()) {
        out.push_str(&format!("{:.17e},{:.17e},{:.17e}\n", x, z.re, z.im));
    }
    atomic_write(path, out.as_bytes())
}

pub fn read_field_csv(path: &Path) -> Result<ComplexField> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let (l, n) =
        parse_header(lines.next().ok_or_else(|| LabError::BadSnapshot("empty file".into()))?, FIELD_FORMAT)?;
    let grid = Grid1D::new(l, n)?;
    let _columns = lines.next();
    let mut samples = Vec::with_capacity(n);
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            return Err(LabError::BadSnapshot(format!("row {i}: expected 3 columns")));
        }
        let re: f64 = cols[1]
            .parse()
            .map_err(|_| LabError::BadSnapshot(format!("row {i}: bad re_q {:?}", cols[1])))?;
        let im: f64 = cols[2]
            .parse()
            .map_err(|_| LabError::BadSnapshot(format!("row {i}: bad im_q {:?}", cols[2])))?;
        samples.push(Complex64::new(re, im));
    }
    ComplexField::new(grid, samples)
}

pub fn write_state_csv(path: &Path, state: &HydroState) -> Result<()> {
    let grid = state.grid();
    let mut out = header(STATE_FORMAT, grid);
    out.push_str("x,rho,v\n");
    for ((&x, &r), &v) in grid.x().iter().zip(state.rho()).zip(state.v()) {
        out.push_str(&format!("{:.17e},{:.17e},{:.17e}\n", x, r, v));
    }
    atomic_write(path, out.as_bytes())
}

pub fn read_state_csv(path: &Path) -> Result<HydroState> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let (l, n) =
        parse_header(lines.next().ok_or_else(|| LabError::BadSnapshot("empty file".into()))?, STATE_FORMAT)?;
    let grid = Grid1D::new(l, n)?;
    let _columns = lines.next();
    let mut rho = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            return Err(LabError::BadSnapshot(format!("row {i}: expected 3 columns")));
        }
        rho.push(
            cols[1]
                .parse()
                .map_err(|_| LabError::BadSnapshot(format!("row {i}: bad rho")))?,
        );
        v.push(
            cols[2]
                .parse()
                .map_err(|_| LabError::BadSnapshot(format!("row {i}: bad v")))?,
        );
    }
    HydroState::new(grid, rho, v)
}

fn write_diagnostics_csv(
    path: &Path,
    diags: &[crate::dynamics::TrajectorySample],
) -> Result<()> {
    let mut out = String::from("t,energy,min_modulus_or_density,mass_like\n");
    for d in diags {
        out.push_str(&format!(
            "{:.17e},{:.17e},{:.17e},{:.17e}\n",
            d.t, d.energy, d.min_modulus_or_density, d.mass_like
        ));
    }
    atomic_write(path, out.as_bytes())
}

/// Export a wave trajectory: manifest.json, per-snapshot field CSVs, and a
/// diagnostics table.
pub fn export_gp_trajectory(
    dir: &Path,
    traj: &GpTrajectory,
    manifest: &serde_json::Value,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    atomic_write(&dir.join("manifest.json"), serde_json::to_string_pretty(manifest).unwrap().as_bytes())?;
    for (i, snap) in traj.snapshots.iter().enumerate() {
        write_field_csv(&dir.join(format!("snapshot_{i:05}.csv")), snap)?;
    }
    write_diagnostics_csv(&dir.join("diagnostics.csv"), &traj.diagnostics)
}

/// Export a hydrodynamic trajectory in the same layout with state CSVs.
pub fn export_hgp_trajectory(
    dir: &Path,
    traj: &HgpTrajectory,
    manifest: &serde_json::Value,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    atomic_write(&dir.join("manifest.json"), serde_json::to_string_pretty(manifest).unwrap().as_bytes())?;
    for (i, snap) in traj.snapshots.iter().enumerate() {
        write_state_csv(&dir.join(format!("snapshot_{i:05}.csv")), snap)?;
    }
    write_diagnostics_csv(&dir.join("diagnostics.csv"), &traj.diagnostics)
}

/// Two-column whitespace table for plotting tools.
pub fn write_xy_dat(path: &Path, xs: &[f64], ys: &[f64]) -> Result<()> {
    let mut out = String::new();
    for (x, y) in xs.iter().zip(ys) {
        out.push_str(&format!("{x:.17e} {y:.17e}\n"));
    }
    atomic_write(path, out.as_bytes())
}

/// Reconstruct a grid handle for snapshot consumers.
pub fn grid_from_dims(l: f64, n: usize) -> Result<Arc<Grid1D>> {
    Grid1D::new(l, n)
}
