//! CSV writers for grids, trajectories, zones and metric rows.
//!
//! Grid values use six significant digits in C `%g` style; land cells are
//! written as `-1`. Everything else is deterministic for a given input so
//! re-running a mission reproduces the files byte for byte.

use std::io::Write;

use crate::harness::{MissionRecord, SummaryRow};
use crate::mission::TrajectoryRow;
use crate::zones::ActionZone;
use crate::{GridMap, Result};

/// Formats like C's `%g` (six significant digits, trailing zeros removed).
pub fn format_g(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{v:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let m = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        strip_zeros(&format!("{v:.*}", (5 - exp) as usize)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// One CSV row per map row; land cells as `-1`.
pub fn write_grid_csv(w: &mut impl Write, map: &GridMap, grid: &[f64]) -> Result<()> {
    let cols = map.cols();
    for r in 0..map.rows() {
        let line: Vec<String> = (0..cols)
            .map(|c| {
                let i = r * cols + c;
                if map.is_water(i) {
                    format_g(grid[i])
                } else {
                    "-1".into()
                }
            })
            .collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn write_trajectories_csv(w: &mut impl Write, rows: &[TrajectoryRow]) -> Result<()> {
    writeln!(w, "step,vehicle,x,y,vx,vy,sampled,phase,distance_m")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.step,
            r.vehicle,
            format_g(r.position.x),
            format_g(r.position.y),
            format_g(r.velocity.x),
            format_g(r.velocity.y),
            u8::from(r.sampled),
            r.phase,
            format_g(r.distance_m)
        )?;
    }
    Ok(())
}

pub fn write_zones_csv(w: &mut impl Write, zones: &[ActionZone], cell_size_m: f64) -> Result<()> {
    writeln!(
        w,
        "zone,center_x,center_y,radius_cells,radius_m,peak_value,priority,vehicles"
    )?;
    for z in zones {
        let vehicles: Vec<String> = z.vehicles.iter().map(|v| v.to_string()).collect();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            z.id,
            format_g(z.center.x),
            format_g(z.center.y),
            format_g(z.radius_cells),
            format_g(z.radius_cells * cell_size_m),
            format_g(z.peak_value),
            z.priority,
            vehicles.join(";")
        )?;
    }
    Ok(())
}

pub const METRICS_HEADER: &str = "seed,planner,n_vehicles,explore_km,exploit_km,learning_mode,\
mse_map,mse_zones,mean_peak_error,samples_taken,wall_ms";

pub fn write_metrics_csv(w: &mut impl Write, records: &[MissionRecord]) -> Result<()> {
    writeln!(w, "{METRICS_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.seed,
            r.planner,
            r.n_vehicles,
            r.explore_km,
            r.exploit_km,
            r.learning_mode,
            r.mse_map,
            r.mse_zones,
            r.mean_peak_error,
            r.samples_taken,
            r.wall_ms
        )?;
    }
    Ok(())
}

/// Aggregated table: mean, CI half-width and std per metric.
pub fn write_summary_csv(w: &mut impl Write, rows: &[SummaryRow]) -> Result<()> {
    writeln!(
        w,
        "label,n_vehicles,explore_km,exploit_km,seeds,\
mse_map,mse_map_ci95,mse_map_std,\
mse_zones,mse_zones_ci95,mse_zones_std,\
peak_error,peak_error_ci95,peak_error_std"
    )?;
    for r in rows {
        let a = &r.aggregate;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.label,
            r.n_vehicles,
            r.explore_km,
            r.exploit_km,
            a.mse_map.n,
            a.mse_map.mean,
            a.mse_map.ci95,
            a.mse_map.std,
            a.mse_action_zones.mean,
            a.mse_action_zones.ci95,
            a.mse_action_zones.std,
            a.peak_error.mean,
            a.peak_error.ci95,
            a.peak_error.std
        )?;
    }
    Ok(())
}
