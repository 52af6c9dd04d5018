//! Experiment configuration: `key = value` lines grouped under `[section]`
//! headers, with `#` or `;` comment lines. Keys are addressed as
//! `section.key`; command line overrides use the same names.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use aquafel_core::{LearningMode, MissionConfig, Objective, Planner, Vec2};

use crate::CliError;

/// Every key the configuration understands.
pub const KEYS: &[&str] = &[
    "mission.planner",
    "mission.vehicles",
    "mission.seed",
    "mission.max_distance_m",
    "mission.exploration_distance_m",
    "mission.exploitation_distance_m",
    "mission.learning_mode",
    "mission.sampling_lambda",
    "mission.lawnmower_swath_cells",
    "mission.compute_std",
    "mission.spawns",
    "swarm.inertia",
    "swarm.max_step_cells",
    "gp.initial_length_scale",
    "gp.length_scale_min",
    "gp.length_scale_max",
    "gp.nugget",
    "gp.fit_length_scale",
    "gp.objective",
    "gp.scan_points",
    "gp.search_tolerance",
    "epsilon.start_m",
    "epsilon.end_m",
    "epsilon.decay",
    "truth.weight_min",
    "truth.weight_max",
    "truth.cells_per_unit",
    "map.path",
    "map.cell_size_m",
    "experiment.name",
    "experiment.seeds",
    "experiment.planners",
    "experiment.splits",
    "experiment.fleet",
    "experiment.save_missions",
    "output.dir",
];

/// Raw `section.key -> value` entries in file order of appearance.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(source: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (n, raw) in source.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            let bad = |message: String| CliError::Config {
                line: n + 1,
                message,
            };
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| bad(format!("unterminated section header {line:?}")))?
                    .trim();
                if name.is_empty() {
                    return Err(bad("empty section name".into()));
                }
                section = name.to_string();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("expected `key = value`, got {line:?}")))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(bad("empty key".into()));
            }
            let full = if section.is_empty() {
                key.to_string()
            } else {
                format!("{section}.{key}")
            };
            if entries
                .insert(full.clone(), value.trim().to_string())
                .is_some()
            {
                return Err(bad(format!("duplicate key {full}")));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

/// Everything a subcommand needs, resolved from defaults, file and flags.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub mission: MissionConfig,
    pub map_path: Option<PathBuf>,
    pub cell_size_m: Option<f64>,
    pub experiment: Option<String>,
    pub seeds: Vec<u64>,
    pub planners: Vec<Planner>,
    /// `(exploration_m, exploitation_m)` pairs.
    pub splits: Vec<(f64, f64)>,
    pub fleet: Vec<usize>,
    pub save_missions: bool,
    pub out_dir: PathBuf,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            mission: MissionConfig::default(),
            map_path: None,
            cell_size_m: None,
            experiment: None,
            seeds: (0..30).collect(),
            planners: Planner::ALL.to_vec(),
            splits: vec![
                (5_000.0, 15_000.0),
                (10_000.0, 10_000.0),
                (15_000.0, 5_000.0),
            ],
            fleet: vec![4],
            save_missions: false,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl Settings {
    pub fn from_config(config: &ConfigFile) -> Result<Self, CliError> {
        let mut s = Self::default();
        for (key, value) in config.entries() {
            s.apply(key, value)?;
        }
        Ok(s)
    }

    /// Sets one key, validating its syntax.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let m = &mut self.mission;
        match key {
            "mission.planner" => m.planner = value.parse().map_err(|e| invalid(key, e))?,
            "mission.vehicles" => m.n_vehicles = number(key, value)?,
            "mission.seed" => m.seed = number(key, value)?,
            "mission.max_distance_m" => m.max_distance_m = number(key, value)?,
            "mission.exploration_distance_m" => m.exploration_distance_m = number(key, value)?,
            "mission.exploitation_distance_m" => m.exploitation_distance_m = number(key, value)?,
            "mission.learning_mode" => {
                m.learning_mode = value.parse::<LearningMode>().map_err(|e| invalid(key, e))?
            }
            "mission.sampling_lambda" => m.sampling_lambda = number(key, value)?,
            "mission.lawnmower_swath_cells" => m.lawnmower_swath_cells = number(key, value)?,
            "mission.compute_std" => m.compute_std = boolean(key, value)?,
            "mission.spawns" => m.spawns = spawns(key, value)?,
            "swarm.inertia" => m.swarm.inertia = number(key, value)?,
            "swarm.max_step_cells" => m.swarm.max_step_cells = number(key, value)?,
            "gp.initial_length_scale" => m.gp.initial_length_scale = number(key, value)?,
            "gp.length_scale_min" => m.gp.length_scale_bounds.0 = number(key, value)?,
            "gp.length_scale_max" => m.gp.length_scale_bounds.1 = number(key, value)?,
            "gp.nugget" => m.gp.nugget = number(key, value)?,
            "gp.fit_length_scale" => m.gp.fit_length_scale = boolean(key, value)?,
            "gp.objective" => {
                m.gp.objective = match value {
                    "marginal" => Objective::Marginal,
                    "profile" => Objective::Profile,
                    _ => return Err(invalid(key, "expected marginal or profile")),
                }
            }
            "gp.scan_points" => m.gp.scan_points = number(key, value)?,
            "gp.search_tolerance" => m.gp.search_tolerance = number(key, value)?,
            "epsilon.start_m" => m.epsilon.start_m = number(key, value)?,
            "epsilon.end_m" => m.epsilon.end_m = number(key, value)?,
            "epsilon.decay" => m.epsilon.decay = number(key, value)?,
            "truth.weight_min" => m.truth.weight_range.0 = number(key, value)?,
            "truth.weight_max" => m.truth.weight_range.1 = number(key, value)?,
            "truth.cells_per_unit" => m.truth.cells_per_unit = Some(number(key, value)?),
            "map.path" => self.map_path = Some(PathBuf::from(value)),
            "map.cell_size_m" => self.cell_size_m = Some(number(key, value)?),
            "experiment.name" => {
                if value.is_empty() || value.contains(['/', '\\']) || value == "." || value == ".."
                {
                    return Err(invalid(key, "must be a single non-empty path component"));
                }
                self.experiment = Some(value.to_string())
            }
            "experiment.seeds" => self.seeds = seeds(key, value)?,
            "experiment.planners" => {
                self.planners = list(value)
                    .map(|p| p.parse().map_err(|e| invalid(key, e)))
                    .collect::<Result<_, _>>()?
            }
            "experiment.splits" => self.splits = splits(key, value)?,
            "experiment.fleet" => {
                self.fleet = list(value)
                    .map(|v| number(key, v))
                    .collect::<Result<_, _>>()?
            }
            "experiment.save_missions" => self.save_missions = boolean(key, value)?,
            "output.dir" => self.out_dir = PathBuf::from(value),
            _ => {
                return Err(CliError::Usage(format!(
                    "unknown key {key:?} (valid: {})",
                    KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }
}

fn invalid(key: &str, why: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("{key}: {why}"))
}

fn number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| invalid(key, format!("{value:?}: {e}")))
}

fn boolean(key: &str, value: &str) -> Result<bool, CliError> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(invalid(key, format!("{value:?} is not a boolean"))),
    }
}

fn list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

/// `a..b` (end exclusive) or a comma list.
fn seeds(key: &str, value: &str) -> Result<Vec<u64>, CliError> {
    let out: Vec<u64> = if let Some((a, b)) = value.split_once("..") {
        let (a, b): (u64, u64) = (number(key, a.trim())?, number(key, b.trim())?);
        (a..b).collect()
    } else {
        list(value)
            .map(|v| number(key, v))
            .collect::<Result<_, _>>()?
    };
    if out.is_empty() {
        return Err(invalid(key, "no seeds"));
    }
    Ok(out)
}

/// `explore/exploit` pairs in kilometers, comma separated, multiples of 5 km.
fn splits(key: &str, value: &str) -> Result<Vec<(f64, f64)>, CliError> {
    let out: Vec<(f64, f64)> = list(value)
        .map(|pair| {
            let (e, x) = pair
                .split_once('/')
                .ok_or_else(|| invalid(key, format!("{pair:?} is not explore/exploit")))?;
            let (e, x): (f64, f64) = (number(key, e.trim())?, number(key, x.trim())?);
            for km in [e, x] {
                if !(km >= 0.0) || (km / 5.0).fract() != 0.0 {
                    return Err(invalid(key, format!("{km} km is not a multiple of 5 km")));
                }
            }
            Ok((e * 1000.0, x * 1000.0))
        })
        .collect::<Result<_, _>>()?;
    if out.is_empty() {
        return Err(invalid(key, "no splits"));
    }
    Ok(out)
}

/// `x y; x y; ...` in cell coordinates.
fn spawns(key: &str, value: &str) -> Result<Vec<Vec2>, CliError> {
    value
        .split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|p| {
            let xy: Vec<&str> = p.split_whitespace().collect();
            if xy.len() != 2 {
                return Err(invalid(key, format!("{p:?} is not `x y`")));
            }
            Ok(Vec2::new(number(key, xy[0])?, number(key, xy[1])?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_comments() {
        let c = ConfigFile::parse(
            "# fleet\n[mission]\nplanner = lawnmower\nvehicles=6\n\n; gp\n[gp]\nnugget = 1e-8\n",
        )
        .unwrap();
        assert_eq!(c.get("mission.planner"), Some("lawnmower"));
        assert_eq!(c.get("mission.vehicles"), Some("6"));
        assert_eq!(c.get("gp.nugget"), Some("1e-8"));
        let s = Settings::from_config(&c).unwrap();
        assert_eq!(s.mission.planner, Planner::Lawnmower);
        assert_eq!(s.mission.n_vehicles, 6);
        assert_eq!(s.mission.gp.nugget, 1e-8);
    }

    #[test]
    fn reports_line_numbers() {
        let err = ConfigFile::parse("[mission]\nplanner lawnmower\n").unwrap_err();
        assert!(matches!(err, CliError::Config { line: 2, .. }), "{err}");
        let err = ConfigFile::parse("[a]\nx = 1\nx = 2\n").unwrap_err();
        assert!(matches!(err, CliError::Config { line: 3, .. }), "{err}");
        assert!(ConfigFile::parse("[open\n").is_err());
    }

    #[test]
    fn unknown_key_and_bad_values() {
        let mut s = Settings::default();
        assert!(matches!(
            s.apply("mission.speed", "3"),
            Err(CliError::Usage(_))
        ));
        let err = s
            .apply("mission.planner", "zigzag")
            .unwrap_err()
            .to_string();
        assert!(
            err.contains("lawnmower") && err.contains("aquafel"),
            "{err}"
        );
        assert!(s.apply("mission.vehicles", "four").is_err());
        assert!(s.apply("mission.compute_std", "maybe").is_err());
        assert!(s.apply("experiment.name", "../x").is_err());
    }

    #[test]
    fn lists_and_ranges() {
        let mut s = Settings::default();
        s.apply("experiment.seeds", "3..6").unwrap();
        assert_eq!(s.seeds, vec![3, 4, 5]);
        s.apply("experiment.seeds", "1, 9").unwrap();
        assert_eq!(s.seeds, vec![1, 9]);
        assert!(s.apply("experiment.seeds", "4..4").is_err());
        s.apply("experiment.splits", "5/15, 10/10").unwrap();
        assert_eq!(s.splits, vec![(5_000.0, 15_000.0), (10_000.0, 10_000.0)]);
        assert!(s.apply("experiment.splits", "7/13").is_err());
        s.apply("experiment.planners", "aquafel,lawnmower").unwrap();
        assert_eq!(s.planners, vec![Planner::Aquafel, Planner::Lawnmower]);
        s.apply("mission.spawns", "1.5 2.5; 10 20").unwrap();
        assert_eq!(
            s.mission.spawns,
            vec![Vec2::new(1.5, 2.5), Vec2::new(10.0, 20.0)]
        );
    }

    #[test]
    fn every_listed_key_is_accepted() {
        let samples = [
            ("mission.planner", "aquafel"),
            ("mission.learning_mode", "centralized"),
            ("mission.spawns", "1 1; 2 2"),
            ("gp.objective", "marginal"),
            ("experiment.name", "trial"),
            ("experiment.seeds", "0..2"),
            ("experiment.planners", "aquafel"),
            ("experiment.splits", "10/10"),
            ("experiment.fleet", "2,4"),
            ("map.path", "lake.map"),
            ("output.dir", "results"),
        ];
        for key in KEYS {
            let value = samples.iter().find(|(k, _)| k == key).map_or_else(
                || {
                    if key.contains("fit_length")
                        || key.ends_with("compute_std")
                        || key.ends_with("save_missions")
                    {
                        "true"
                    } else {
                        "2"
                    }
                },
                |(_, v)| *v,
            );
            Settings::default()
                .apply(key, value)
                .unwrap_or_else(|e| panic!("{key}: {e}"));
        }
    }
}
