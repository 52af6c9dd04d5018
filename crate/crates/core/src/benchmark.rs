//! Synthetic contamination fields built from the Shekel function.
//!
//! Peak positions live in cell coordinates. The field is evaluated at every
//! cell center after mapping cell coordinates onto the Shekel domain
//! (`cells_per_unit` cells per Shekel unit), then normalized to `[0, 1]` over
//! the water cells. Land cells hold [`LAND_SENTINEL`].

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, GridMap, Result, Vec2};

/// Field value stored for land cells.
pub const LAND_SENTINEL: f64 = -1.0;

/// Random stream used for ground truth draws; missions use other streams.
pub(crate) const TRUTH_STREAM: u64 = 0x7275_7468;

/// Shekel function `sum_i 1 / (c_i + sum_j (x_j - a_ij)^2)`.
pub fn shekel_eval(peaks: &[Vec<f64>], weights: &[f64], x: &[f64]) -> Result<f64> {
    if peaks.len() != weights.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} peaks but {} weights",
            peaks.len(),
            weights.len()
        )));
    }
    let mut total = 0.0;
    for (a, &c) in peaks.iter().zip(weights) {
        if a.len() != x.len() {
            return Err(Error::DimensionMismatch(format!(
                "peak of dimension {} evaluated at point of dimension {}",
                a.len(),
                x.len()
            )));
        }
        let d2: f64 = a.iter().zip(x).map(|(ai, xi)| (xi - ai) * (xi - ai)).sum();
        total += 1.0 / (c + d2);
    }
    Ok(total)
}

/// Min-max normalization over the water cells; land cells get [`LAND_SENTINEL`].
/// Returns the normalized field with the raw minimum and maximum.
pub fn normalize_field(raw: &[f64], map: &GridMap) -> Result<(Vec<f64>, f64, f64)> {
    if raw.len() != map.len() {
        return Err(Error::DimensionMismatch(format!(
            "field of {} cells on a map of {}",
            raw.len(),
            map.len()
        )));
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &i in map.water_cells() {
        lo = lo.min(raw[i]);
        hi = hi.max(raw[i]);
    }
    if !(hi > lo) {
        return Err(Error::DegenerateField(lo));
    }
    let span = hi - lo;
    let mut field = vec![LAND_SENTINEL; raw.len()];
    for &i in map.water_cells() {
        field[i] = (raw[i] - lo) / span;
    }
    Ok((field, lo, hi))
}

/// Shekel units spanned by the longer map side by default. On the bundled
/// map this gives fields whose fitted RBF length scale is about ten cells.
pub const DEFAULT_UNITS_ACROSS: f64 = 4.0;

#[derive(Debug, Clone, PartialEq)]
pub struct TruthConfig {
    /// Range of the Shekel `c_i` weights, drawn uniformly.
    pub weight_range: (f64, f64),
    /// Cells per Shekel unit. `None` maps the longer map side onto
    /// [`DEFAULT_UNITS_ACROSS`] units.
    pub cells_per_unit: Option<f64>,
}

impl Default for TruthConfig {
    fn default() -> Self {
        Self {
            weight_range: (0.05, 0.25),
            cells_per_unit: None,
        }
    }
}

impl TruthConfig {
    pub fn scale_for(&self, map: &GridMap) -> f64 {
        self.cells_per_unit
            .unwrap_or_else(|| map.rows().max(map.cols()) as f64 / DEFAULT_UNITS_ACROSS)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// Peak positions in cell coordinates (always water cell centers).
    pub peaks: Vec<Vec2>,
    pub weights: Vec<f64>,
    /// Normalized field, row-major, land cells set to [`LAND_SENTINEL`].
    pub field: Vec<f64>,
    pub raw_min: f64,
    pub raw_max: f64,
    pub cells_per_unit: f64,
}

impl GroundTruth {
    pub fn peak_count(&self) -> usize {
        self.peaks.len()
    }

    /// Exact point sensor: the value of the cell containing `p`.
    pub fn sense(&self, map: &GridMap, p: Vec2) -> Option<f64> {
        map.cell_of(p)
            .filter(|&i| map.is_water(i))
            .map(|i| self.field[i])
    }

    /// Builds a ground truth from explicit peaks and weights.
    pub fn from_peaks(
        map: &GridMap,
        peaks: Vec<Vec2>,
        weights: Vec<f64>,
        cells_per_unit: f64,
    ) -> Result<Self> {
        if peaks.len() != weights.len() || peaks.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "{} peaks and {} weights",
                peaks.len(),
                weights.len()
            )));
        }
        if let Some(c) = weights.iter().find(|&&c| !(c > 0.0)) {
            return Err(Error::Config(format!("Shekel weight {c} must be positive")));
        }
        let a: Vec<Vec<f64>> = peaks
            .iter()
            .map(|p| vec![p.x / cells_per_unit, p.y / cells_per_unit])
            .collect();
        let mut raw = vec![0.0; map.len()];
        for &i in map.water_cells() {
            let c = map.cell_center(i) / cells_per_unit;
            raw[i] = shekel_eval(&a, &weights, &[c.x, c.y])?;
        }
        let (field, raw_min, raw_max) = normalize_field(&raw, map)?;
        Ok(Self {
            peaks,
            weights,
            field,
            raw_min,
            raw_max,
            cells_per_unit,
        })
    }
}

/// Draws a seeded ground truth: `M` uniform in `2..=n_vehicles`, each peak on
/// a uniformly drawn water cell center, each weight uniform in the configured
/// range.
pub fn generate_ground_truth(
    map: &GridMap,
    n_vehicles: usize,
    seed: u64,
    cfg: &TruthConfig,
) -> Result<GroundTruth> {
    if n_vehicles < 2 {
        return Err(Error::Config(format!(
            "ground truth needs at least 2 vehicles, got {n_vehicles}"
        )));
    }
    let (lo, hi) = cfg.weight_range;
    if !(lo > 0.0 && hi >= lo) {
        return Err(Error::Config(format!("weight range [{lo}, {hi}]")));
    }
    let mut rng = crate::mission::seeded_rng(seed, TRUTH_STREAM);
    let m = rng.gen_range(2..=n_vehicles);
    let water = map.water_cells();
    let peaks: Vec<Vec2> = (0..m)
        .map(|_| map.cell_center(water[rng.gen_range(0..water.len())]))
        .collect();
    let weights: Vec<f64> = (0..m).map(|_| draw_weight(&mut rng, lo, hi)).collect();
    GroundTruth::from_peaks(map, peaks, weights, cfg.scale_for(map))
}

fn draw_weight(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.gen_range(lo..hi)
    } else {
        lo
    }
}
