//! Subcommand implementations. Each writes under an experiment root and
//! returns what it wrote so the binary can report it.

use std::path::{Path, PathBuf};

use aquafel_core::harness::{self, Table};
use aquafel_core::{
    generate_ground_truth, run_mission, GridMap, LearningMode, MissionConfig, Planner,
};

use crate::output::{mission_dir, write_mission, write_table};
use crate::{CliError, Settings};

/// Loads the configured map file or the bundled lake.
pub fn load_map(settings: &Settings) -> Result<GridMap, CliError> {
    let map = match &settings.map_path {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
                path: path.clone(),
                source: e,
            })?;
            GridMap::parse(&text)?
        }
        None => GridMap::ypacarai(),
    };
    match settings.cell_size_m {
        Some(size) => Ok(map.with_cell_size(size)?),
        None => Ok(map),
    }
}

/// `<out>/<experiment>`, where the experiment name defaults to
/// `<subcommand>-<unix seconds>`.
pub fn experiment_root(settings: &Settings, subcommand: &str, unix_secs: u64) -> PathBuf {
    let name = settings
        .experiment
        .clone()
        .unwrap_or_else(|| format!("{subcommand}-{unix_secs}"));
    settings.out_dir.join(name)
}

/// One mission with every artifact written to `<root>/<planner>/<seed>/`.
/// Returns the mission directory.
pub fn run(settings: &Settings, root: &Path) -> Result<PathBuf, CliError> {
    let map = load_map(settings)?;
    let cfg = MissionConfig {
        compute_std: true,
        ..settings.mission.clone()
    };
    cfg.validate()?;
    let truth = generate_ground_truth(&map, cfg.n_vehicles, cfg.seed, &cfg.truth)?;
    let res = run_mission(&cfg, &truth, &map)?;
    let dir = mission_dir(root, cfg.planner.name(), cfg.seed);
    write_mission(&dir, &map, &truth, &cfg, &res)?;
    Ok(dir)
}

/// All configured planners over the configured seeds.
pub fn compare(settings: &Settings, root: &Path) -> Result<Table, CliError> {
    let map = load_map(settings)?;
    let table = harness::compare(&map, &settings.mission, &settings.planners, &settings.seeds)?;
    write_table(root, &table)?;
    if settings.save_missions {
        let configs = settings.planners.iter().flat_map(|&planner| {
            settings.seeds.iter().map(move |&seed| {
                let cfg = MissionConfig {
                    planner,
                    seed,
                    ..settings.mission.clone()
                };
                (planner.name().to_string(), cfg)
            })
        });
        save_missions(&map, root, configs.collect())?;
    }
    Ok(table)
}

/// AquaFeL over every phase split for every fleet size, as one table.
pub fn sweep(settings: &Settings, root: &Path) -> Result<Table, CliError> {
    if settings.fleet.is_empty() {
        return Err(CliError::Usage("experiment.fleet is empty".into()));
    }
    let map = load_map(settings)?;
    for &n in &settings.fleet {
        for &(e, x) in &settings.splits {
            MissionConfig {
                planner: Planner::Aquafel,
                n_vehicles: n,
                exploration_distance_m: e,
                exploitation_distance_m: x,
                ..settings.mission.clone()
            }
            .validate()?;
        }
    }
    let mut table = Table {
        rows: Vec::new(),
        records: Vec::new(),
    };
    for &n in &settings.fleet {
        let base = MissionConfig {
            n_vehicles: n,
            ..settings.mission.clone()
        };
        let part = harness::sweep(&map, &base, &settings.splits, &settings.seeds)?;
        table.rows.extend(part.rows);
        table.records.extend(part.records);
    }
    write_table(root, &table)?;
    if settings.save_missions {
        let mut configs = Vec::new();
        for &n in &settings.fleet {
            for &(e, x) in &settings.splits {
                for &seed in &settings.seeds {
                    let group = format!("aquafel-{n}v-{}-{}", e / 1000.0, x / 1000.0);
                    let cfg = MissionConfig {
                        planner: Planner::Aquafel,
                        n_vehicles: n,
                        exploration_distance_m: e,
                        exploitation_distance_m: x,
                        seed,
                        ..settings.mission.clone()
                    };
                    configs.push((group, cfg));
                }
            }
        }
        save_missions(&map, root, configs)?;
    }
    Ok(table)
}

/// AquaFeL with federated and centralized learning on the same seeds.
pub fn fedcmp(settings: &Settings, root: &Path) -> Result<Table, CliError> {
    let map = load_map(settings)?;
    let table = harness::fedcmp(&map, &settings.mission, &settings.seeds)?;
    write_table(root, &table)?;
    if settings.save_missions {
        let modes = [LearningMode::Federated, LearningMode::Centralized];
        let configs = modes.iter().flat_map(|&learning_mode| {
            settings.seeds.iter().map(move |&seed| {
                let cfg = MissionConfig {
                    planner: Planner::Aquafel,
                    learning_mode,
                    seed,
                    ..settings.mission.clone()
                };
                (format!("aquafel-{}", learning_mode.name()), cfg)
            })
        });
        save_missions(&map, root, configs.collect())?;
    }
    Ok(table)
}

fn save_missions(
    map: &GridMap,
    root: &Path,
    configs: Vec<(String, MissionConfig)>,
) -> Result<(), CliError> {
    let configs: Vec<(String, MissionConfig)> = configs
        .into_iter()
        .map(|(group, cfg)| {
            let cfg = MissionConfig {
                compute_std: true,
                ..cfg
            };
            (group, cfg)
        })
        .collect();
    let plain: Vec<MissionConfig> = configs.iter().map(|(_, c)| c.clone()).collect();
    let results = harness::run_batch(map, &plain)?;
    for ((group, cfg), res) in configs.iter().zip(&results) {
        let truth = generate_ground_truth(map, cfg.n_vehicles, cfg.seed, &cfg.truth)?;
        write_mission(&mission_dir(root, group, cfg.seed), map, &truth, cfg, res)?;
    }
    Ok(())
}

/// Fixed-width text rendering of a summary table (mean ± 95% CI).
pub fn render_table(table: &Table) -> String {
    let mut out = format!(
        "{:<14} {:>3} {:>7} {:>7}  {:>22}  {:>22}  {:>22}\n",
        "label", "n", "exp_km", "xpl_km", "mse_map", "mse_zones", "peak_error"
    );
    for r in &table.rows {
        let a = &r.aggregate;
        let cell = |m: &aquafel_core::Aggregate| format!("{:.5} ± {:.5}", m.mean, m.ci95);
        out.push_str(&format!(
            "{:<14} {:>3} {:>7} {:>7}  {:>22}  {:>22}  {:>22}\n",
            r.label,
            r.n_vehicles,
            r.explore_km,
            r.exploit_km,
            cell(&a.mse_map),
            cell(&a.mse_action_zones),
            cell(&a.peak_error)
        ));
    }
    out
}
