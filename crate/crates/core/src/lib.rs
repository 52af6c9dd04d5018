//! Deterministic multi-vehicle lake monitoring simulator.
//!
//! A fleet of autonomous surface vehicles samples a synthetic contamination
//! field over an occupancy-grid lake. Planners range from a lawnmower sweep
//! to PSO variants steered by a Gaussian-process surrogate, and the two-phase
//! AquaFeL planner that explores first, then splits the fleet over circular
//! action zones whose per-zone models are merged into the final estimate.
//!
//! Module map:
//!
//! * [`worldmap`]: occupancy grid, navigability, move clipping
//! * [`benchmark`]: Shekel ground truth generation and normalization
//! * [`surrogate`]: GP regression over the water grid and the sampling policy
//! * [`swarm`]: PSO velocity laws and the epsilon-greedy schedule
//! * [`zones`]: action zones, priorities and vehicle allocation
//! * [`fedserver`]: per-zone node models and region-masked merging
//! * [`mission`]: the simulation engine and the lawnmower baseline
//! * [`metrics`]: map / zone MSE, peak error, seed aggregation
//! * [`harness`]: batch experiments (planner comparison, phase sweep, learning mode comparison)
//! * [`export`]: CSV writers shared by the command line front end

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod benchmark;
pub mod error;
pub mod export;
pub mod fedserver;
pub mod harness;
pub mod metrics;
pub mod mission;
pub mod surrogate;
pub mod swarm;
pub mod worldmap;
pub mod zones;

pub use benchmark::{generate_ground_truth, GroundTruth, TruthConfig};
pub use error::{Error, Result};
pub use fedserver::{FederatedReport, ZoneNode};
pub use metrics::{Aggregate, MetricsReport};
pub use mission::{
    run_mission, LearningMode, MissionConfig, MissionResult, Planner, TrajectoryRow,
};
pub use surrogate::{GpConfig, GpModel, GridPrediction, Objective, Sample, SamplingPolicy};
pub use swarm::{Coefficients, EpsilonSchedule, SwarmConfig, VehicleState};
pub use worldmap::GridMap;
pub use zones::ActionZone;

/// 2D position or displacement in cell coordinates: `x` is the column axis,
/// `y` the row axis; cell `(row, col)` spans `[col, col+1) x [row, row+1)`.
pub type Vec2 = nalgebra::Vector2<f64>;
