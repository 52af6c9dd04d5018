//! Batch experiments over seeds: planner comparison, phase-split sweep and
//! federated versus centralized learning. Missions run on the rayon pool;
//! results come back in input order.

use rayon::prelude::*;

use crate::benchmark::generate_ground_truth;
use crate::metrics::{aggregate_reports, MetricsReport, ReportAggregate};
use crate::mission::{run_mission, LearningMode, MissionConfig, MissionResult, Planner};
use crate::{Error, GridMap, Result};

/// One row of a per-mission metrics file.
#[derive(Debug, Clone, PartialEq)]
pub struct MissionRecord {
    pub seed: u64,
    pub planner: Planner,
    pub n_vehicles: usize,
    pub explore_km: f64,
    pub exploit_km: f64,
    pub learning_mode: LearningMode,
    pub mse_map: f64,
    pub mse_zones: f64,
    pub mean_peak_error: f64,
    pub samples_taken: usize,
    pub wall_ms: u64,
    pub metrics: MetricsReport,
}

impl MissionRecord {
    /// Single-phase planners report their whole budget as exploration.
    pub fn new(cfg: &MissionConfig, res: &MissionResult) -> Self {
        let (explore_km, exploit_km) = if cfg.planner == Planner::Aquafel {
            (
                cfg.exploration_distance_m / 1000.0,
                cfg.exploitation_distance_m / 1000.0,
            )
        } else {
            (cfg.max_distance_m / 1000.0, 0.0)
        };
        Self {
            seed: res.seed,
            planner: res.planner,
            n_vehicles: res.n_vehicles,
            explore_km,
            exploit_km,
            learning_mode: res.learning_mode,
            mse_map: res.metrics.mse_map,
            mse_zones: res.metrics.mse_action_zones,
            mean_peak_error: res.metrics.mean_peak_error(),
            samples_taken: res.samples.len(),
            wall_ms: res.wall_ms,
            metrics: res.metrics.clone(),
        }
    }
}

/// Aggregated metrics for one group of missions.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub label: String,
    pub n_vehicles: usize,
    pub explore_km: f64,
    pub exploit_km: f64,
    pub aggregate: ReportAggregate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub rows: Vec<SummaryRow>,
    pub records: Vec<MissionRecord>,
}

/// Runs each config against the ground truth of its own seed, keeping the
/// full results.
pub fn run_batch(map: &GridMap, configs: &[MissionConfig]) -> Result<Vec<MissionResult>> {
    configs
        .par_iter()
        .map(|cfg| {
            let truth = generate_ground_truth(map, cfg.n_vehicles, cfg.seed, &cfg.truth)?;
            run_mission(cfg, &truth, map)
        })
        .collect()
}

/// Like [`run_batch`], keeping only the metric rows.
pub fn run_records(map: &GridMap, configs: &[MissionConfig]) -> Result<Vec<MissionRecord>> {
    configs
        .par_iter()
        .map(|cfg| {
            let truth = generate_ground_truth(map, cfg.n_vehicles, cfg.seed, &cfg.truth)?;
            run_mission(cfg, &truth, map).map(|res| MissionRecord::new(cfg, &res))
        })
        .collect()
}

fn check_seeds(seeds: &[u64]) -> Result<()> {
    if seeds.len() < 2 {
        return Err(Error::Config(format!(
            "experiments need at least 2 seeds, got {}",
            seeds.len()
        )));
    }
    Ok(())
}

fn summarize(label: String, records: &[MissionRecord]) -> Result<SummaryRow> {
    let reports: Vec<MetricsReport> = records.iter().map(|r| r.metrics.clone()).collect();
    let first = &records[0];
    Ok(SummaryRow {
        label,
        n_vehicles: first.n_vehicles,
        explore_km: first.explore_km,
        exploit_km: first.exploit_km,
        aggregate: aggregate_reports(&reports)?,
    })
}

/// Every planner on the same `(map, truth, spawns, seed)` tuples.
pub fn compare(
    map: &GridMap,
    base: &MissionConfig,
    planners: &[Planner],
    seeds: &[u64],
) -> Result<Table> {
    check_seeds(seeds)?;
    if planners.len() < 2 {
        return Err(Error::Config("comparison needs at least 2 planners".into()));
    }
    let configs: Vec<MissionConfig> = planners
        .iter()
        .flat_map(|&planner| {
            seeds.iter().map(move |&seed| MissionConfig {
                planner,
                seed,
                ..base.clone()
            })
        })
        .collect();
    let records = run_records(map, &configs)?;
    let rows = records
        .chunks(seeds.len())
        .zip(planners)
        .map(|(chunk, p)| summarize(p.name().to_string(), chunk))
        .collect::<Result<_>>()?;
    Ok(Table { rows, records })
}

/// AquaFeL over `(exploration_m, exploitation_m)` splits.
pub fn sweep(
    map: &GridMap,
    base: &MissionConfig,
    splits: &[(f64, f64)],
    seeds: &[u64],
) -> Result<Table> {
    check_seeds(seeds)?;
    if splits.is_empty() {
        return Err(Error::Config("sweep needs at least one split".into()));
    }
    let configs: Vec<MissionConfig> = splits
        .iter()
        .flat_map(|&(explore, exploit)| {
            seeds.iter().map(move |&seed| MissionConfig {
                planner: Planner::Aquafel,
                exploration_distance_m: explore,
                exploitation_distance_m: exploit,
                seed,
                ..base.clone()
            })
        })
        .collect();
    for c in &configs {
        c.validate()?;
    }
    let records = run_records(map, &configs)?;
    let rows = records
        .chunks(seeds.len())
        .zip(splits)
        .map(|(chunk, (e, x))| summarize(format!("{}/{}", e / 1000.0, x / 1000.0), chunk))
        .collect::<Result<_>>()?;
    Ok(Table { rows, records })
}

/// AquaFeL under both learning modes on identical seeds.
pub fn fedcmp(map: &GridMap, base: &MissionConfig, seeds: &[u64]) -> Result<Table> {
    check_seeds(seeds)?;
    let modes = [LearningMode::Federated, LearningMode::Centralized];
    let configs: Vec<MissionConfig> = modes
        .iter()
        .flat_map(|&learning_mode| {
            seeds.iter().map(move |&seed| MissionConfig {
                planner: Planner::Aquafel,
                learning_mode,
                seed,
                ..base.clone()
            })
        })
        .collect();
    let records = run_records(map, &configs)?;
    let rows = records
        .chunks(seeds.len())
        .zip(modes)
        .map(|(chunk, m)| summarize(m.name().to_string(), chunk))
        .collect::<Result<_>>()?;
    Ok(Table { rows, records })
}
