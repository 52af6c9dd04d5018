//! Simulation engine: fleet kinematics, distance budgets, sampling, planner
//! dispatch and the two-phase AquaFeL mission.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::benchmark::{GroundTruth, TruthConfig};
use crate::fedserver::{
    centralized_exploitation, init_nodes, merge_models, FederatedReport, ModelGrids, ZoneNode,
};
use crate::metrics::{mse_map, truth_zones, MetricsReport};
use crate::surrogate::{argmax_cells, GpConfig, GpModel, Sample, SamplingPolicy};
use crate::swarm::{
    update_bests, velocity_update, Coefficients, Draws, EpsilonSchedule, Group, GroupBest,
    Guidance, SwarmConfig, VehicleState,
};
use crate::zones::{
    allocate_vehicles, assign_priorities, compute_zone_radius, extract_action_zones, zone_cells,
    ActionZone,
};
use crate::{Error, GridMap, Result, Vec2};

/// Autonomy limit of a vehicle, in meters.
pub const MAX_AUTONOMY_M: f64 = 30_000.0;

const MISSION_STREAM: u64 = 0x6d69_7373;

/// Iterations allowed per phase, as a multiple of the unobstructed minimum.
const ITERATION_SLACK: usize = 4;

/// ChaCha8 generator for a `(seed, stream)` pair. Independent streams keep
/// the ground truth and the mission draws decoupled.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Planner {
    Lawnmower,
    ClassicPso,
    EnhancedExplore,
    EnhancedExploit,
    EpsilonGreedy,
    Aquafel,
}

impl Planner {
    pub const ALL: [Planner; 6] = [
        Planner::Lawnmower,
        Planner::ClassicPso,
        Planner::EnhancedExplore,
        Planner::EnhancedExploit,
        Planner::EpsilonGreedy,
        Planner::Aquafel,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Planner::Lawnmower => "lawnmower",
            Planner::ClassicPso => "classic_pso",
            Planner::EnhancedExplore => "enhanced_explore",
            Planner::EnhancedExploit => "enhanced_exploit",
            Planner::EpsilonGreedy => "epsilon_greedy",
            Planner::Aquafel => "aquafel",
        }
    }

    /// Planners that steer by the surrogate while moving.
    pub fn uses_surrogate(self) -> bool {
        !matches!(self, Planner::Lawnmower | Planner::ClassicPso)
    }
}

impl fmt::Display for Planner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Planner {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Planner::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Planner::ALL.iter().map(|p| p.name()).collect();
                Error::Config(format!(
                    "unknown planner '{s}' (valid: {})",
                    names.join(", ")
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LearningMode {
    Federated,
    Centralized,
}

impl LearningMode {
    pub fn name(self) -> &'static str {
        match self {
            LearningMode::Federated => "federated",
            LearningMode::Centralized => "centralized",
        }
    }
}

impl fmt::Display for LearningMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LearningMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "federated" => Ok(LearningMode::Federated),
            "centralized" => Ok(LearningMode::Centralized),
            _ => Err(Error::Config(format!(
                "unknown learning mode '{s}' (valid: federated, centralized)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MissionConfig {
    pub planner: Planner,
    pub n_vehicles: usize,
    /// Budget of the single-phase planners.
    pub max_distance_m: f64,
    pub exploration_distance_m: f64,
    pub exploitation_distance_m: f64,
    pub learning_mode: LearningMode,
    pub seed: u64,
    pub swarm: SwarmConfig,
    pub gp: GpConfig,
    pub sampling_lambda: f64,
    pub epsilon: EpsilonSchedule,
    pub lawnmower_swath_cells: f64,
    /// Start positions; empty selects [`default_spawns`].
    pub spawns: Vec<Vec2>,
    pub truth: TruthConfig,
    /// Evaluate the posterior std over the whole map for the final model.
    pub compute_std: bool,
    /// Store the elapsed wall time; off keeps exports reproducible.
    pub record_timing: bool,
}

impl Default for MissionConfig {
    fn default() -> Self {
        Self {
            planner: Planner::Aquafel,
            n_vehicles: 4,
            max_distance_m: 20_000.0,
            exploration_distance_m: 10_000.0,
            exploitation_distance_m: 10_000.0,
            learning_mode: LearningMode::Federated,
            seed: 0,
            swarm: SwarmConfig::default(),
            gp: GpConfig::default(),
            sampling_lambda: 0.3,
            epsilon: EpsilonSchedule::default(),
            lawnmower_swath_cells: 10.0,
            spawns: Vec::new(),
            truth: TruthConfig::default(),
            compute_std: false,
            record_timing: false,
        }
    }
}

impl MissionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_vehicles < 2 {
            return Err(Error::Config(format!(
                "need at least 2 vehicles, got {}",
                self.n_vehicles
            )));
        }
        let dist_ok = |d: f64| d.is_finite() && d >= 0.0;
        if !(dist_ok(self.max_distance_m) && self.max_distance_m > 0.0)
            || self.max_distance_m > MAX_AUTONOMY_M
        {
            return Err(Error::Config(format!(
                "max distance {} m outside (0, {MAX_AUTONOMY_M}]",
                self.max_distance_m
            )));
        }
        if !dist_ok(self.exploration_distance_m) || !dist_ok(self.exploitation_distance_m) {
            return Err(Error::Config(
                "phase distances must be finite and >= 0".into(),
            ));
        }
        let split = self.exploration_distance_m + self.exploitation_distance_m;
        if split > MAX_AUTONOMY_M {
            return Err(Error::Config(format!(
                "exploration + exploitation = {split} m exceeds {MAX_AUTONOMY_M} m"
            )));
        }
        if self.planner == Planner::Aquafel && split <= 0.0 {
            return Err(Error::Config("phase distances sum to zero".into()));
        }
        if !(self.lawnmower_swath_cells > 0.0) {
            return Err(Error::Config(format!(
                "lawnmower swath {}",
                self.lawnmower_swath_cells
            )));
        }
        if !self.spawns.is_empty() && self.spawns.len() < self.n_vehicles {
            return Err(Error::Config(format!(
                "{} spawns for {} vehicles",
                self.spawns.len(),
                self.n_vehicles
            )));
        }
        SamplingPolicy::new(self.sampling_lambda, self.n_vehicles)?;
        self.swarm.validate()?;
        self.gp.validate()?;
        self.epsilon.validate()
    }

    fn phase_cap(&self, budget_m: f64, cell_size_m: f64) -> usize {
        let per_step = self.swarm.max_step_cells * cell_size_m;
        ITERATION_SLACK * ((budget_m / per_step).ceil() as usize).max(1)
    }
}

/// One vehicle position after an iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub vehicle: usize,
    pub step: usize,
    /// 0 for single-phase planners and exploration, 1 for exploitation.
    pub phase: u8,
    pub position: Vec2,
    /// Executed displacement of this step, in cells.
    pub velocity: Vec2,
    pub distance_m: f64,
    pub sampled: bool,
}

#[derive(Debug, Clone)]
pub struct MissionResult {
    pub planner: Planner,
    pub seed: u64,
    pub n_vehicles: usize,
    pub learning_mode: LearningMode,
    pub mean: Vec<f64>,
    pub std: Option<Vec<f64>>,
    pub exploration: Option<ModelGrids>,
    pub zones: Vec<ActionZone>,
    pub truth_zones: Vec<ActionZone>,
    pub trajectories: Vec<TrajectoryRow>,
    pub samples: Vec<Sample>,
    pub metrics: MetricsReport,
    pub federated: Option<FederatedReport>,
    /// Iteration at which exploitation began.
    pub phase_switch_step: Option<usize>,
    pub distances_m: Vec<f64>,
    pub wall_ms: u64,
}

/// Executes a proposed move: clipped at the shore, metered in meters.
pub fn step_vehicle(map: &GridMap, from: Vec2, proposed: Vec2) -> (Vec2, f64) {
    let to = map.clip_move(from, proposed);
    (to, (to - from).norm() * map.cell_size_m())
}

/// Evenly spaced shore cells, ordered by angle around the water centroid.
pub fn default_spawns(map: &GridMap, n: usize) -> Vec<Vec2> {
    let (rows, cols) = (map.rows(), map.cols());
    let water = |r: isize, c: isize| {
        r >= 0
            && c >= 0
            && (r as usize) < rows
            && (c as usize) < cols
            && map.is_water(r as usize * cols + c as usize)
    };
    let centroid = map
        .water_cells()
        .iter()
        .fold(Vec2::zeros(), |acc, &i| acc + map.cell_center(i))
        / map.water_cells().len() as f64;
    let mut shore: Vec<(f64, usize)> = map
        .water_cells()
        .iter()
        .filter(|&&i| {
            let (r, c) = ((i / cols) as isize, (i % cols) as isize);
            !(water(r - 1, c) && water(r + 1, c) && water(r, c - 1) && water(r, c + 1))
        })
        .map(|&i| {
            let d = map.cell_center(i) - centroid;
            (d.y.atan2(d.x), i)
        })
        .collect();
    shore.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    (0..n)
        .map(|k| map.cell_center(shore[k * shore.len() / n].1))
        .collect()
}

/// Boustrophedon sweep of the water bounding box, split into one horizontal
/// band per vehicle. Passes sit `swath` apart starting half a swath below the
/// band top, and each pass spans the water of its row.
pub fn lawnmower_path(map: &GridMap, n_vehicles: usize, swath_cells: f64) -> Vec<Vec<Vec2>> {
    let (r0, r1, _, _) = map.water_bounds();
    let top = r0 as f64;
    let height = (r1 + 1 - r0) as f64;
    let band = height / n_vehicles as f64;
    let cols = map.cols();
    (0..n_vehicles)
        .map(|v| {
            let (b0, b1) = (top + band * v as f64, top + band * (v + 1) as f64);
            let mut ys = Vec::new();
            let mut y = b0 + swath_cells / 2.0;
            while y < b1 {
                ys.push(y);
                y += swath_cells;
            }
            if ys.is_empty() {
                ys.push((b0 + b1) / 2.0);
            }
            let mut path = Vec::new();
            let mut forward = true;
            for y in ys {
                let row = (y.floor() as usize).min(map.rows() - 1);
                let span: Vec<usize> = (0..cols)
                    .filter(|&c| map.is_water(row * cols + c))
                    .collect();
                let (Some(&first), Some(&last)) = (span.first(), span.last()) else {
                    continue;
                };
                let (a, b) = (
                    Vec2::new(first as f64 + 0.5, y),
                    Vec2::new(last as f64 + 0.5, y),
                );
                if forward {
                    path.extend([a, b]);
                } else {
                    path.extend([b, a]);
                }
                forward = !forward;
            }
            path
        })
        .collect()
}

/// Runs one mission end to end.
pub fn run_mission(
    cfg: &MissionConfig,
    truth: &GroundTruth,
    map: &GridMap,
) -> Result<MissionResult> {
    cfg.validate()?;
    if truth.field.len() != map.len() {
        return Err(Error::DimensionMismatch(format!(
            "truth has {} cells, map {}",
            truth.field.len(),
            map.len()
        )));
    }
    let started = Instant::now();
    let mut result = Sim::new(cfg, truth, map)
        .and_then(|sim| sim.run())
        .map_err(|e| Error::Mission {
            planner: cfg.planner.name().to_string(),
            seed: cfg.seed,
            source: Box::new(e),
        })?;
    if cfg.record_timing {
        result.wall_ms = started.elapsed().as_millis() as u64;
    }
    Ok(result)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Mode {
    Transit,
    Swarm,
}

/// Argmax targets of a model over a cell set.
fn guidance_for(model: &GpModel, map: &GridMap, cells: &[usize], un: bool, con: bool) -> Guidance {
    let eval = model.on_grid(map);
    let max_con = con
        .then(|| argmax_cells(&eval.mean_grid(), cells))
        .flatten()
        .map(|(i, _)| map.cell_center(i));
    let max_un = un
        .then(|| eval.argmax_std(cells))
        .flatten()
        .map(|(i, _)| map.cell_center(i));
    Guidance { max_un, max_con }
}

struct Sim<'a> {
    cfg: &'a MissionConfig,
    map: &'a GridMap,
    truth: &'a GroundTruth,
    rng: ChaCha8Rng,
    states: Vec<VehicleState>,
    policy: SamplingPolicy,
    samples: Vec<Sample>,
    traj: Vec<TrajectoryRow>,
    step: usize,
}

impl<'a> Sim<'a> {
    fn new(cfg: &'a MissionConfig, truth: &'a GroundTruth, map: &'a GridMap) -> Result<Self> {
        let n = cfg.n_vehicles;
        let spawns = if cfg.spawns.is_empty() {
            default_spawns(map, n)
        } else {
            cfg.spawns[..n].to_vec()
        };
        if let Some(p) = spawns.iter().find(|p| !map.is_navigable(**p)) {
            return Err(Error::Config(format!(
                "spawn ({}, {}) is not water",
                p.x, p.y
            )));
        }
        let mut rng = seeded_rng(cfg.seed, MISSION_STREAM);
        let max = cfg.swarm.max_step_cells;
        let states: Vec<VehicleState> = spawns
            .iter()
            .map(|&p| {
                let v = Vec2::new(rng.gen_range(-max..=max), rng.gen_range(-max..=max));
                let norm = v.norm();
                let v = if norm > max { v * (max / norm) } else { v };
                VehicleState::new(p, v)
            })
            .collect();
        let traj = states
            .iter()
            .enumerate()
            .map(|(v, s)| TrajectoryRow {
                vehicle: v,
                step: 0,
                phase: 0,
                position: s.position,
                velocity: Vec2::zeros(),
                distance_m: 0.0,
                sampled: false,
            })
            .collect();
        Ok(Self {
            cfg,
            map,
            truth,
            rng,
            states,
            policy: SamplingPolicy::new(cfg.sampling_lambda, n)?,
            samples: Vec::new(),
            traj,
            step: 0,
        })
    }

    fn n(&self) -> usize {
        self.states.len()
    }

    fn sense(&self, v: usize) -> Option<f64> {
        self.truth.sense(self.map, self.states[v].position)
    }

    /// Applies the distance gate to each listed vehicle and returns the new
    /// samples, snapped to the center of the sensed cell.
    fn take_samples(&mut self, vehicles: &[usize], gate: impl Fn(usize) -> f64) -> Vec<Sample> {
        let mut new = Vec::new();
        for &v in vehicles {
            let p = self.states[v].position;
            if !self.policy.should_sample(gate(v), v, p) {
                continue;
            }
            let Some(cell) = self.map.cell_of(p).filter(|&i| self.map.is_water(i)) else {
                continue;
            };
            self.policy.record(v, p);
            new.push(Sample {
                position: self.map.cell_center(cell),
                value: self.truth.field[cell],
                vehicle: v,
                step: self.step,
            });
        }
        self.samples.extend_from_slice(&new);
        new
    }

    /// Moves vehicle `v` towards `proposed`; returns whether the shore cut
    /// the move short.
    fn advance(&mut self, v: usize, proposed: Vec2, phase: u8, sampled: &[Sample]) -> bool {
        let from = self.states[v].position;
        let (to, meters) = step_vehicle(self.map, from, proposed);
        let s = &mut self.states[v];
        s.velocity = to - from;
        s.position = to;
        s.distance_m += meters;
        self.traj.push(TrajectoryRow {
            vehicle: v,
            step: self.step,
            phase,
            position: to,
            velocity: to - from,
            distance_m: s.distance_m,
            sampled: sampled.iter().any(|x| x.vehicle == v),
        });
        (to - proposed).norm() > 1e-9
    }

    fn fit(&self, samples: &[Sample]) -> Result<GpModel> {
        GpModel::fit(samples, &self.cfg.gp)
    }

    fn run(self) -> Result<MissionResult> {
        match self.cfg.planner {
            Planner::Lawnmower => self.run_lawnmower(),
            Planner::Aquafel => self.run_aquafel(),
            p => self.run_swarm(p),
        }
    }

    fn run_lawnmower(mut self) -> Result<MissionResult> {
        let budget = self.cfg.max_distance_m;
        let paths = lawnmower_path(self.map, self.n(), self.cfg.lawnmower_swath_cells);
        let mut next = vec![0usize; self.n()];
        let gate_ls = self.cfg.gp.initial_length_scale;
        let max = self.cfg.swarm.max_step_cells;
        for _ in 0..self.cfg.phase_cap(budget, self.map.cell_size_m()) {
            let active: Vec<usize> = (0..self.n())
                .filter(|&v| self.states[v].distance_m < budget && next[v] < paths[v].len())
                .collect();
            if active.is_empty() {
                break;
            }
            let new = self.take_samples(&active, |_| gate_ls);
            self.step += 1;
            for v in active {
                let x = self.states[v].position;
                let target = paths[v][next[v]];
                let d = target - x;
                let proposed = if d.norm() <= max {
                    target
                } else {
                    x + d * (max / d.norm())
                };
                let blocked = self.advance(v, proposed, 0, &new);
                if blocked || (self.states[v].position - target).norm() < 1e-9 {
                    next[v] += 1;
                }
            }
        }
        let model = self.fit(&self.samples)?;
        self.finish_single(model)
    }

    fn run_swarm(mut self, planner: Planner) -> Result<MissionResult> {
        let budget = self.cfg.max_distance_m;
        let fixed = match planner {
            Planner::ClassicPso => Coefficients::CLASSIC,
            Planner::EnhancedExplore => Coefficients::EXPLORATION,
            Planner::EnhancedExploit => Coefficients::EXPLOITATION,
            _ => self.cfg.epsilon.explore,
        };
        let epsilon = planner == Planner::EpsilonGreedy;
        let mut schedules = vec![self.cfg.epsilon.clone(); self.n()];
        let (need_un, need_con) = if epsilon {
            (
                self.cfg.epsilon.explore.uses_uncertainty()
                    || self.cfg.epsilon.exploit.uses_uncertainty(),
                self.cfg.epsilon.explore.uses_contamination()
                    || self.cfg.epsilon.exploit.uses_contamination(),
            )
        } else {
            (fixed.uses_uncertainty(), fixed.uses_contamination())
        };
        let surrogate = planner.uses_surrogate();
        let mut model: Option<GpModel> = None;
        let mut guidance = Guidance::default();
        let mut bests = [GroupBest::empty(Group::All)];
        let water = self.map.water_cells();

        for _ in 0..self.cfg.phase_cap(budget, self.map.cell_size_m()) {
            let active: Vec<usize> = (0..self.n())
                .filter(|&v| self.states[v].distance_m < budget)
                .collect();
            if active.is_empty() {
                break;
            }
            let readings: Vec<Option<f64>> = (0..self.n())
                .map(|v| {
                    if active.contains(&v) {
                        self.sense(v)
                    } else {
                        None
                    }
                })
                .collect();
            update_bests(&mut self.states, &readings, &mut bests);
            let gate_ls = model
                .as_ref()
                .map_or(self.cfg.gp.initial_length_scale, |m| m.length_scale());
            let new = self.take_samples(&active, |_| gate_ls);
            if surrogate && !new.is_empty() {
                let m = self.fit(&self.samples)?;
                guidance = guidance_for(&m, self.map, water, need_un, need_con);
                model = Some(m);
            }
            self.step += 1;
            for v in active {
                let coeffs = if epsilon {
                    let d = self.states[v].distance_m;
                    schedules[v].coefficients(d, &mut self.rng)
                } else {
                    fixed
                };
                let draws = Draws::sample(&mut self.rng);
                let (_, proposed) = velocity_update(
                    &self.states[v],
                    &bests[0],
                    &guidance,
                    &coeffs,
                    &self.cfg.swarm,
                    &draws,
                )?;
                self.advance(v, proposed, 0, &new);
            }
        }
        let model = match model {
            Some(m) if surrogate => m,
            _ => self.fit(&self.samples)?,
        };
        self.finish_single(model)
    }

    fn finish_single(self, model: GpModel) -> Result<MissionResult> {
        let grids = ModelGrids::from_model(&model, self.map, self.cfg.compute_std);
        self.finish(grids, None, Vec::new(), None, None)
    }

    fn finish(
        self,
        grids: ModelGrids,
        exploration: Option<ModelGrids>,
        zones: Vec<ActionZone>,
        federated: Option<FederatedReport>,
        phase_switch_step: Option<usize>,
    ) -> Result<MissionResult> {
        let tz = truth_zones(self.map, &self.truth.field, self.cfg.n_vehicles)?;
        let metrics = MetricsReport::evaluate(self.map, &self.truth.field, &grids.mean, &tz)?;
        Ok(MissionResult {
            planner: self.cfg.planner,
            seed: self.cfg.seed,
            n_vehicles: self.cfg.n_vehicles,
            learning_mode: self.cfg.learning_mode,
            mean: grids.mean,
            std: grids.std,
            exploration,
            zones,
            truth_zones: tz,
            trajectories: self.traj,
            samples: self.samples,
            metrics,
            federated,
            phase_switch_step,
            distances_m: self.states.iter().map(|s| s.distance_m).collect(),
            wall_ms: 0,
        })
    }

    fn run_aquafel(mut self) -> Result<MissionResult> {
        let cfg = self.cfg;
        let map = self.map;
        let n = self.n();
        let water = map.water_cells();

        // exploration: every vehicle keeps exploring until the whole fleet
        // has met the exploration distance
        let explore = Coefficients::EXPLORATION;
        let mut bests = [GroupBest::empty(Group::All)];
        let mut model: Option<GpModel> = None;
        let mut guidance = Guidance::default();
        let all: Vec<usize> = (0..n).collect();
        for _ in 0..cfg.phase_cap(cfg.exploration_distance_m, map.cell_size_m()) + 1 {
            let readings: Vec<Option<f64>> = (0..n).map(|v| self.sense(v)).collect();
            update_bests(&mut self.states, &readings, &mut bests);
            let gate_ls = model
                .as_ref()
                .map_or(cfg.gp.initial_length_scale, |m| m.length_scale());
            let new = self.take_samples(&all, |_| gate_ls);
            if !new.is_empty() {
                let m = self.fit(&self.samples)?;
                guidance = guidance_for(&m, map, water, true, false);
                model = Some(m);
            }
            if self
                .states
                .iter()
                .all(|s| s.distance_m >= cfg.exploration_distance_m)
            {
                break;
            }
            self.step += 1;
            for v in 0..n {
                let draws = Draws::sample(&mut self.rng);
                let (_, proposed) = velocity_update(
                    &self.states[v],
                    &bests[0],
                    &guidance,
                    &explore,
                    &cfg.swarm,
                    &draws,
                )?;
                self.advance(v, proposed, 0, &new);
            }
        }
        let exploration_model = match model {
            Some(m) => m,
            None => self.fit(&self.samples)?,
        };
        let switch_step = self.step;
        let exploration_samples = self.samples.clone();
        let exploration_grids = ModelGrids::from_model(&exploration_model, map, cfg.compute_std);

        // zones and allocation, decided once
        let radius = compute_zone_radius(map.shortest_length_m(), n, map.cell_size_m())?;
        let mut zones = extract_action_zones(&exploration_grids.mean, map, n, radius.cells);
        if zones.is_empty() {
            return Err(Error::NoZones);
        }
        assign_priorities(&mut zones, n);
        for (k, z) in zones.iter_mut().enumerate() {
            z.id = k;
        }
        let positions: Vec<Vec2> = self.states.iter().map(|s| s.position).collect();
        let assignment = allocate_vehicles(&mut zones, &positions)?;
        let owned = zone_cells(map, &zones);

        let federated = cfg.learning_mode == LearningMode::Federated;
        let mut nodes: Vec<ZoneNode> = if federated {
            init_nodes(&zones, &exploration_samples, &cfg.gp)?
        } else {
            Vec::new()
        };
        let mut central = exploration_model.clone();
        let exploit = Coefficients::EXPLOITATION;
        let zone_guidance = |m: &GpModel, z: usize| {
            guidance_for(
                m,
                map,
                &owned[z],
                exploit.uses_uncertainty(),
                exploit.uses_contamination(),
            )
        };
        let mut guidance: Vec<Guidance> = (0..zones.len())
            .map(|z| {
                zone_guidance(
                    if federated {
                        nodes[z].model()
                    } else {
                        &central
                    },
                    z,
                )
            })
            .collect();

        let start: Vec<f64> = self.states.iter().map(|s| s.distance_m).collect();
        let mut mode = vec![Mode::Transit; n];
        for (v, s) in self.states.iter_mut().enumerate() {
            s.group = Group::Zone(assignment[v]);
            s.reset_pbest();
            if zones[assignment[v]].contains(s.position) {
                mode[v] = Mode::Swarm;
            }
        }
        let mut zone_bests: Vec<GroupBest> = (0..zones.len())
            .map(|z| GroupBest::empty(Group::Zone(z)))
            .collect();
        let budget = cfg.exploitation_distance_m;
        for _ in 0..cfg.phase_cap(budget, map.cell_size_m()) {
            let active: Vec<usize> = (0..n)
                .filter(|&v| {
                    let d = self.states[v].distance_m;
                    d - start[v] < budget && d < cfg.max_distance_m
                })
                .collect();
            if active.is_empty() {
                break;
            }
            let readings: Vec<Option<f64>> = (0..n)
                .map(|v| {
                    (active.contains(&v) && mode[v] == Mode::Swarm)
                        .then(|| self.sense(v))
                        .flatten()
                })
                .collect();
            update_bests(&mut self.states, &readings, &mut zone_bests);
            let gate: Vec<f64> = (0..n)
                .map(|v| {
                    let m = if federated {
                        nodes[assignment[v]].model()
                    } else {
                        &central
                    };
                    m.length_scale()
                })
                .collect();
            let new = self.take_samples(&active, |v| gate[v]);
            if !new.is_empty() {
                if federated {
                    for (z, node) in nodes.iter_mut().enumerate() {
                        let batch: Vec<Sample> = new
                            .iter()
                            .filter(|s| assignment[s.vehicle] == z)
                            .copied()
                            .collect();
                        if !batch.is_empty() {
                            node.ingest_batch(&batch, &cfg.gp)?;
                            guidance[z] = zone_guidance(node.model(), z);
                        }
                    }
                } else {
                    central = self.fit(&self.samples)?;
                    for (z, g) in guidance.iter_mut().enumerate() {
                        *g = zone_guidance(&central, z);
                    }
                }
            }
            self.step += 1;
            for v in active {
                let z = assignment[v];
                match mode[v] {
                    Mode::Transit => {
                        let x = self.states[v].position;
                        let d = zones[z].center - x;
                        let max = cfg.swarm.max_step_cells;
                        let proposed = if d.norm() <= max {
                            zones[z].center
                        } else {
                            x + d * (max / d.norm())
                        };
                        let blocked = self.advance(v, proposed, 1, &new);
                        if blocked || zones[z].contains(self.states[v].position) {
                            mode[v] = Mode::Swarm;
                            self.states[v].reset_pbest();
                        }
                    }
                    Mode::Swarm => {
                        let draws = Draws::sample(&mut self.rng);
                        let (_, proposed) = velocity_update(
                            &self.states[v],
                            &zone_bests[z],
                            &guidance[z],
                            &exploit,
                            &cfg.swarm,
                            &draws,
                        )?;
                        self.advance(v, proposed, 1, &new);
                    }
                }
            }
        }

        let (grids, report) = if federated {
            let node_grids: Vec<ModelGrids> = nodes
                .iter()
                .map(|node| ModelGrids::from_model(node.model(), map, cfg.compute_std))
                .collect();
            let merged = merge_models(map, &exploration_grids, &zones, &node_grids)?;
            let exploitation_samples = &self.samples[exploration_samples.len()..];
            let cen =
                centralized_exploitation(&exploration_samples, exploitation_samples, &cfg.gp)?;
            let cen_mean = cen.on_grid(map).mean_grid();
            let report = FederatedReport::new(
                mse_map(map, &self.truth.field, &merged.mean)?,
                mse_map(map, &self.truth.field, &cen_mean)?,
            );
            (merged, Some(report))
        } else {
            (ModelGrids::from_model(&central, map, cfg.compute_std), None)
        };
        self.finish(
            grids,
            Some(exploration_grids),
            zones,
            report,
            Some(switch_step),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmark::generate_ground_truth;

    fn open_map(rows: usize, cols: usize) -> GridMap {
        GridMap::new(rows, cols, vec![1; rows * cols], 100.0).unwrap()
    }

    fn small_config(planner: Planner) -> MissionConfig {
        MissionConfig {
            planner,
            n_vehicles: 2,
            max_distance_m: 3_000.0,
            exploration_distance_m: 1_500.0,
            exploitation_distance_m: 1_500.0,
            seed: 3,
            ..MissionConfig::default()
        }
    }

    #[test]
    fn step_vehicle_meters() {
        let map = open_map(10, 10);
        let (to, m) = step_vehicle(&map, Vec2::new(2.5, 2.5), Vec2::new(4.5, 2.5));
        assert_eq!(to, Vec2::new(4.5, 2.5));
        assert!((m - 200.0).abs() < 1e-9);

        // column 4 is land: the 2-cell move from x=3 stops just before x=4
        let cells: Vec<u8> = (0..100).map(|i| u8::from(i % 10 != 4)).collect();
        let walled = GridMap::new(10, 10, cells, 100.0).unwrap();
        let (_, m) = step_vehicle(&walled, Vec2::new(3.0, 2.5), Vec2::new(5.0, 2.5));
        assert!((m - 100.0).abs() <= 10.0 + 1e-9, "{m}");
        let (to, m) = step_vehicle(&walled, Vec2::new(3.95, 2.5), Vec2::new(5.95, 2.5));
        assert_eq!(to, Vec2::new(3.95, 2.5));
        assert_eq!(m, 0.0);
    }

    #[test]
    fn lawnmower_geometry() {
        let map = open_map(20, 20);
        let one = lawnmower_path(&map, 1, 10.0);
        assert_eq!(one[0].len(), 4, "two passes of two endpoints");
        assert_eq!(one[0][0].y, 5.0);
        assert_eq!(one[0][2].y, 15.0);
        let two = lawnmower_path(&map, 2, 4.0);
        let ys = |p: &Vec<Vec2>| p.iter().map(|w| w.y).collect::<Vec<_>>();
        assert!(ys(&two[0]).iter().all(|&y| (0.0..10.0).contains(&y)));
        assert!(ys(&two[1]).iter().all(|&y| (10.0..20.0).contains(&y)));
    }

    #[test]
    fn lawnmower_leaves_cells_uncovered_on_bundled_map() {
        let map = GridMap::ypacarai();
        let mut cfg = small_config(Planner::Lawnmower);
        cfg.n_vehicles = 4;
        cfg.max_distance_m = 20_000.0;
        let truth = generate_ground_truth(&map, 4, 1, &cfg.truth).unwrap();
        let res = run_mission(&cfg, &truth, &map).unwrap();
        let half = cfg.lawnmower_swath_cells / 2.0;
        let paths: Vec<Vec<Vec2>> = (0..4)
            .map(|v| {
                res.trajectories
                    .iter()
                    .filter(|r| r.vehicle == v)
                    .map(|r| r.position)
                    .collect()
            })
            .collect();
        let near_segment = |p: Vec2, a: Vec2, b: Vec2| {
            let ab = b - a;
            let t = if ab.norm_squared() > 0.0 {
                ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0)
            } else {
                0.0
            };
            (a + ab * t - p).norm() <= half
        };
        let covered = map
            .water_cells()
            .iter()
            .filter(|&&i| {
                let p = map.cell_center(i);
                paths
                    .iter()
                    .any(|path| path.windows(2).any(|w| near_segment(p, w[0], w[1])))
            })
            .count();
        assert!(covered < map.water_cells().len(), "{covered}");
        assert!(covered > 0);
    }

    #[test]
    fn planner_names_round_trip() {
        for p in Planner::ALL {
            assert_eq!(p.name().parse::<Planner>().unwrap(), p);
        }
        let err = "zigzag".parse::<Planner>().unwrap_err().to_string();
        assert!(err.contains("aquafel") && err.contains("lawnmower"));
    }

    #[test]
    fn config_limits() {
        let mut cfg = MissionConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.exploration_distance_m = 20_000.0;
        cfg.exploitation_distance_m = 15_000.0;
        assert!(cfg.validate().is_err());
        let cfg = MissionConfig {
            n_vehicles: 1,
            ..MissionConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = MissionConfig {
            max_distance_m: 30_001.0,
            ..MissionConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn every_planner_respects_budgets_and_is_deterministic() {
        let map = GridMap::ypacarai();
        let truth = generate_ground_truth(&map, 2, 5, &TruthConfig::default()).unwrap();
        for p in Planner::ALL {
            let cfg = small_config(p);
            let a = run_mission(&cfg, &truth, &map).unwrap();
            let b = run_mission(&cfg, &truth, &map).unwrap();
            assert_eq!(a.mean, b.mean, "{p}");
            assert_eq!(a.trajectories, b.trajectories, "{p}");
            let step_m = cfg.swarm.max_step_cells * map.cell_size_m();
            let budget = if p == Planner::Aquafel {
                // exploration may run on until the fleet switches
                let expl = a
                    .trajectories
                    .iter()
                    .filter(|r| r.phase == 0)
                    .map(|r| r.distance_m)
                    .fold(0.0, f64::max);
                (expl + cfg.exploitation_distance_m).min(cfg.max_distance_m)
            } else {
                cfg.max_distance_m
            };
            for d in &a.distances_m {
                assert!(*d <= budget + step_m + 1e-6, "{p}: {d}");
            }
            for r in &a.trajectories {
                assert!(map.is_navigable(r.position), "{p}");
            }
            assert!(a.metrics.mse_map >= 0.0);
        }
    }

    #[test]
    fn aquafel_switches_once_after_exploration() {
        let map = GridMap::ypacarai();
        let truth = generate_ground_truth(&map, 2, 9, &TruthConfig::default()).unwrap();
        let cfg = small_config(Planner::Aquafel);
        let res = run_mission(&cfg, &truth, &map).unwrap();
        let switch = res.phase_switch_step.unwrap();
        for r in &res.trajectories {
            assert_eq!(
                r.phase == 1,
                r.step > switch,
                "step {} phase {}",
                r.step,
                r.phase
            );
        }
        let last_explore: Vec<f64> = (0..2)
            .map(|v| {
                res.trajectories
                    .iter()
                    .filter(|r| r.vehicle == v && r.phase == 0)
                    .map(|r| r.distance_m)
                    .fold(0.0, f64::max)
            })
            .collect();
        assert!(last_explore
            .iter()
            .all(|&d| d >= cfg.exploration_distance_m));
        assert!(!res.zones.is_empty() && res.zones.len() <= 2);
        let report = res.federated.unwrap();
        assert_eq!(report.federated_mse, res.metrics.mse_map);
    }

    #[test]
    fn zero_exploration_still_completes() {
        let map = GridMap::ypacarai();
        let truth = generate_ground_truth(&map, 2, 4, &TruthConfig::default()).unwrap();
        let cfg = MissionConfig {
            exploration_distance_m: 0.0,
            ..small_config(Planner::Aquafel)
        };
        let res = run_mission(&cfg, &truth, &map).unwrap();
        assert_eq!(res.phase_switch_step, Some(0));
        assert!(!res.zones.is_empty());
    }

    #[test]
    fn exploitation_samples_stay_with_their_zone_vehicle() {
        let map = GridMap::ypacarai();
        let truth = generate_ground_truth(&map, 2, 2, &TruthConfig::default()).unwrap();
        let cfg = small_config(Planner::Aquafel);
        let res = run_mission(&cfg, &truth, &map).unwrap();
        for z in &res.zones {
            for v in &z.vehicles {
                assert!(res.zones.iter().filter(|o| o.vehicles.contains(v)).count() == 1);
            }
        }
    }

    #[test]
    fn invalid_gp_config_is_rejected() {
        let map = open_map(10, 10);
        let truth =
            GroundTruth::from_peaks(&map, vec![Vec2::new(5.5, 5.5)], vec![0.1], 1.0).unwrap();
        let cfg = MissionConfig {
            spawns: vec![Vec2::new(1.5, 1.5), Vec2::new(3.5, 3.5)],
            gp: GpConfig {
                nugget: 0.0,
                ..GpConfig::default()
            },
            ..small_config(Planner::EnhancedExplore)
        };
        assert!(matches!(
            run_mission(&cfg, &truth, &map),
            Err(Error::Config(_))
        ));
    }
}
