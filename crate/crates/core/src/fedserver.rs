//! Federated exploitation: one GP node per action zone, seeded with the
//! exploration data, and a region-masked merge of node grids into the
//! exploration grids.

use crate::surrogate::{GpConfig, GpModel, Sample};
use crate::zones::{zone_cells, ActionZone};
use crate::{Error, GridMap, Result};

/// Mean grid plus an optional std grid, both full-map and row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGrids {
    pub mean: Vec<f64>,
    pub std: Option<Vec<f64>>,
}

impl ModelGrids {
    pub fn from_model(model: &GpModel, map: &GridMap, with_std: bool) -> Self {
        let eval = model.on_grid(map);
        let mean = eval.mean_grid();
        let std = with_std.then(|| {
            let mut std = vec![crate::benchmark::LAND_SENTINEL; map.len()];
            for &i in map.water_cells() {
                std[i] = eval.std_at(i);
            }
            std
        });
        Self { mean, std }
    }
}

#[derive(Debug, Clone)]
pub struct ZoneNode {
    zone: ActionZone,
    samples: Vec<Sample>,
    model: GpModel,
    exploration_count: usize,
}

impl ZoneNode {
    pub fn zone(&self) -> &ActionZone {
        &self.zone
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn model(&self) -> &GpModel {
        &self.model
    }

    /// Samples added after seeding.
    pub fn local_count(&self) -> usize {
        self.samples.len() - self.exploration_count
    }

    fn check_route(&self, sample: &Sample) -> Result<()> {
        if self.zone.vehicles.contains(&sample.vehicle) {
            Ok(())
        } else {
            Err(Error::Routing {
                vehicle: sample.vehicle,
                zone: self.zone.id,
            })
        }
    }

    pub fn ingest(&mut self, sample: Sample, cfg: &GpConfig) -> Result<()> {
        self.ingest_batch(&[sample], cfg)
    }

    /// Appends every sample and refits once. Nothing is appended if any
    /// sample comes from a vehicle outside the zone.
    pub fn ingest_batch(&mut self, samples: &[Sample], cfg: &GpConfig) -> Result<()> {
        if samples.is_empty() {
            return Ok(());
        }
        for s in samples {
            self.check_route(s)?;
        }
        self.samples.extend_from_slice(samples);
        self.model = GpModel::fit(&self.samples, cfg)?;
        Ok(())
    }
}

/// One node per zone, each starting from the full exploration sample set
/// and the exploration fit.
pub fn init_nodes(
    zones: &[ActionZone],
    exploration_samples: &[Sample],
    cfg: &GpConfig,
) -> Result<Vec<ZoneNode>> {
    if exploration_samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    if zones.is_empty() {
        return Err(Error::NoZones);
    }
    let model = GpModel::fit(exploration_samples, cfg)?;
    Ok(zones
        .iter()
        .map(|z| ZoneNode {
            zone: z.clone(),
            samples: exploration_samples.to_vec(),
            model: model.clone(),
            exploration_count: exploration_samples.len(),
        })
        .collect())
}

/// Overwrites the exploration grids with each node's grids over the water
/// cells that zone owns (nearest containing center wins on overlap). The std
/// grid is merged only when the base and every node carry one.
pub fn merge_models(
    map: &GridMap,
    exploration: &ModelGrids,
    zones: &[ActionZone],
    node_grids: &[ModelGrids],
) -> Result<ModelGrids> {
    if zones.len() != node_grids.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} zones but {} node grids",
            zones.len(),
            node_grids.len()
        )));
    }
    let n = map.len();
    let bad_len = exploration.mean.len() != n
        || exploration.std.as_ref().is_some_and(|s| s.len() != n)
        || node_grids
            .iter()
            .any(|g| g.mean.len() != n || g.std.as_ref().is_some_and(|s| s.len() != n));
    if bad_len {
        return Err(Error::DimensionMismatch(format!(
            "grids must have {n} cells"
        )));
    }
    let mut out = exploration.clone();
    let merge_std = node_grids.iter().all(|g| g.std.is_some());
    if !merge_std {
        out.std = None;
    }
    for (cells, grids) in zone_cells(map, zones).iter().zip(node_grids) {
        for &i in cells {
            out.mean[i] = grids.mean[i];
        }
        if let (Some(dst), Some(src)) = (out.std.as_mut(), grids.std.as_ref()) {
            for &i in cells {
                dst[i] = src[i];
            }
        }
    }
    Ok(out)
}

/// Single fit over the exploration and exploitation samples together.
pub fn centralized_exploitation(
    exploration_samples: &[Sample],
    exploitation_samples: &[Sample],
    cfg: &GpConfig,
) -> Result<GpModel> {
    let mut all = exploration_samples.to_vec();
    all.extend_from_slice(exploitation_samples);
    GpModel::fit(&all, cfg)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FederatedReport {
    pub federated_mse: f64,
    pub centralized_mse: f64,
    pub accuracy_delta: f64,
}

impl FederatedReport {
    pub fn new(federated_mse: f64, centralized_mse: f64) -> Self {
        Self {
            federated_mse,
            centralized_mse,
            accuracy_delta: (federated_mse - centralized_mse).abs(),
        }
    }
}
