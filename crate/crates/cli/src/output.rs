//! On-disk layout: `<out>/<experiment>/<planner>/<seed>/` per mission plus
//! `summary.csv` and `records.csv` per experiment.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use aquafel_core::export::{
    write_grid_csv, write_metrics_csv, write_summary_csv, write_trajectories_csv, write_zones_csv,
};
use aquafel_core::harness::{MissionRecord, Table};
use aquafel_core::{GridMap, GroundTruth, MissionConfig, MissionResult};

use crate::heatmap::write_pgm;
use crate::CliError;

/// File names inside a mission directory.
pub const MISSION_FILES: &[&str] = &[
    "metrics.csv",
    "truth.csv",
    "mean.csv",
    "std.csv",
    "traj.csv",
    "zones.csv",
    "mean.pgm",
    "std.pgm",
];

pub fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

/// Creates `path`, hands a buffered writer to `body` and flushes it.
pub fn write_file(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<File>) -> aquafel_core::Result<()>,
) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    body(&mut w).map_err(|e| match e {
        aquafel_core::Error::Io(e) => io(e),
        other => CliError::Core(other),
    })?;
    w.flush().map_err(io)
}

/// Writes every artifact of one mission into `dir`. The std files are
/// skipped when the mission did not compute a standard deviation grid.
pub fn write_mission(
    dir: &Path,
    map: &GridMap,
    truth: &GroundTruth,
    cfg: &MissionConfig,
    res: &MissionResult,
) -> Result<(), CliError> {
    create_dir(dir)?;
    let record = MissionRecord::new(cfg, res);
    write_file(&dir.join("metrics.csv"), |w| {
        write_metrics_csv(w, std::slice::from_ref(&record))
    })?;
    write_file(&dir.join("truth.csv"), |w| {
        write_grid_csv(w, map, &truth.field)
    })?;
    write_file(&dir.join("mean.csv"), |w| write_grid_csv(w, map, &res.mean))?;
    write_file(&dir.join("traj.csv"), |w| {
        write_trajectories_csv(w, &res.trajectories)
    })?;
    write_file(&dir.join("zones.csv"), |w| {
        write_zones_csv(w, &res.zones, map.cell_size_m())
    })?;
    write_file(&dir.join("mean.pgm"), |w| write_pgm(w, map, &res.mean))?;
    if let Some(std) = &res.std {
        write_file(&dir.join("std.csv"), |w| write_grid_csv(w, map, std))?;
        write_file(&dir.join("std.pgm"), |w| write_pgm(w, map, std))?;
    }
    Ok(())
}

/// Writes `summary.csv` and `records.csv` into `dir`.
pub fn write_table(dir: &Path, table: &Table) -> Result<(), CliError> {
    create_dir(dir)?;
    write_file(&dir.join("summary.csv"), |w| {
        write_summary_csv(w, &table.rows)
    })?;
    write_file(&dir.join("records.csv"), |w| {
        write_metrics_csv(w, &table.records)
    })
}

/// `<root>/<group>/<seed>`.
pub fn mission_dir(root: &Path, group: &str, seed: u64) -> PathBuf {
    root.join(group).join(seed.to_string())
}
