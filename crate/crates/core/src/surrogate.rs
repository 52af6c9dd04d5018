//! Gaussian-process surrogate of the contamination field.
//!
//! Zero prior mean, unit prior variance, RBF kernel
//! `k(a, b) = exp(-|a - b|^2 / (2 l^2))` with a small diagonal jitter. The
//! length scale is re-estimated on every fit by maximizing a likelihood
//! objective over `ln l`: a coarse log-spaced scan picks the best bracket and
//! a golden-section search refines inside it. The default objective profiles
//! out the signal amplitude; predictions always use unit prior variance.
//!
//! Training inputs are canonicalized (deduplicated by position, keeping the
//! latest sample, then sorted) so a fit depends only on the sample set and
//! not on the order samples arrived in.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::benchmark::LAND_SENTINEL;
use crate::{Error, GridMap, Result, Vec2};

/// One sensor reading. Positions are cell centers: the sensor reports the
/// value of the cell the vehicle is in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub position: Vec2,
    pub value: f64,
    pub vehicle: usize,
    pub step: usize,
}

/// Objective maximized when fitting the length scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Objective {
    /// Log marginal likelihood with unit signal variance.
    Marginal,
    /// Log marginal likelihood with the signal variance set to its maximum
    /// likelihood value `y^T K^-1 y / n`.
    #[default]
    Profile,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GpConfig {
    pub initial_length_scale: f64,
    pub length_scale_bounds: (f64, f64),
    pub nugget: f64,
    /// When false the length scale stays at `initial_length_scale`.
    pub fit_length_scale: bool,
    pub objective: Objective,
    /// Log-spaced length scales scanned before the golden-section refinement.
    pub scan_points: usize,
    /// Golden-section stopping width, in `ln l`.
    pub search_tolerance: f64,
}

impl Default for GpConfig {
    fn default() -> Self {
        Self {
            initial_length_scale: 10.0,
            length_scale_bounds: (0.1, 100.0),
            nugget: 1e-10,
            fit_length_scale: true,
            objective: Objective::Profile,
            scan_points: 16,
            search_tolerance: 0.02,
        }
    }
}

impl GpConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.length_scale_bounds;
        if !(lo > 0.0 && hi > lo) {
            return Err(Error::Config(format!("length scale bounds [{lo}, {hi}]")));
        }
        if !(lo..=hi).contains(&self.initial_length_scale) {
            return Err(Error::Config(format!(
                "initial length scale {} outside [{lo}, {hi}]",
                self.initial_length_scale
            )));
        }
        if !(self.nugget > 0.0) {
            return Err(Error::Config(format!("nugget {}", self.nugget)));
        }
        if self.scan_points < 2 {
            return Err(Error::Config(format!("scan points {}", self.scan_points)));
        }
        if !(self.search_tolerance > 0.0) {
            return Err(Error::Config(format!(
                "search tolerance {}",
                self.search_tolerance
            )));
        }
        Ok(())
    }
}

/// A fitted GP. Immutable; refit by calling [`GpModel::fit`] again.
#[derive(Debug, Clone)]
pub struct GpModel {
    inputs: Vec<Vec2>,
    targets: Vec<f64>,
    length_scale: f64,
    nugget: f64,
    /// Lower Cholesky factor of `K + nugget I`, dense row-major.
    chol: Vec<f64>,
    alpha: Vec<f64>,
    log_likelihood: f64,
}

struct Factorization {
    chol: DMatrix<f64>,
    alpha: DVector<f64>,
    log_likelihood: f64,
}

impl GpModel {
    pub fn fit(samples: &[Sample], cfg: &GpConfig) -> Result<Self> {
        cfg.validate()?;
        let (inputs, targets) = canonical_training_set(samples)?;
        let n = inputs.len();
        let mut sq_dist = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..i {
                let d = (inputs[i] - inputs[j]).norm_squared();
                sq_dist[(i, j)] = d;
                sq_dist[(j, i)] = d;
            }
        }
        let y = DVector::from_column_slice(&targets);
        let eval = |ls: f64| factorize(&sq_dist, &y, ls, cfg.nugget, cfg.objective);

        let init = cfg.initial_length_scale;
        let mut best: Option<(f64, Factorization)> = eval(init).map(|f| (init, f));
        if cfg.fit_length_scale {
            let (lo, hi) = cfg.length_scale_bounds;
            let mut consider = |ls: f64| -> f64 {
                match eval(ls) {
                    Some(f) => {
                        let ll = f.log_likelihood;
                        if best.as_ref().is_none_or(|(_, b)| ll > b.log_likelihood) {
                            best = Some((ls, f));
                        }
                        ll
                    }
                    None => f64::NEG_INFINITY,
                }
            };
            let (a, b) = (lo.ln(), hi.ln());
            let step = (b - a) / (cfg.scan_points - 1) as f64;
            let scan: Vec<f64> = (0..cfg.scan_points)
                .map(|k| consider((a + step * k as f64).exp()))
                .collect();
            let k = argmax_first(&scan);
            let lo_u = a + step * k.saturating_sub(1) as f64;
            let hi_u = a + step * (k + 1).min(cfg.scan_points - 1) as f64;
            golden_section_max(lo_u, hi_u, cfg.search_tolerance, |u| consider(u.exp()));
        }
        let (length_scale, f) = best.ok_or(Error::NumericalFailure { samples: n })?;

        let mut chol = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                chol[i * n + j] = f.chol[(i, j)];
            }
        }
        Ok(Self {
            inputs,
            targets,
            length_scale,
            nugget: cfg.nugget,
            chol,
            alpha: f.alpha.as_slice().to_vec(),
            log_likelihood: f.log_likelihood,
        })
    }

    pub fn length_scale(&self) -> f64 {
        self.length_scale
    }

    pub fn nugget(&self) -> f64 {
        self.nugget
    }

    pub fn log_likelihood(&self) -> f64 {
        self.log_likelihood
    }

    /// Number of distinct training positions.
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn inputs(&self) -> &[Vec2] {
        &self.inputs
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    fn kernel(&self, a: Vec2, b: Vec2) -> f64 {
        (-(a - b).norm_squared() / (2.0 * self.length_scale * self.length_scale)).exp()
    }

    /// Posterior mean and standard deviation at an arbitrary point.
    pub fn predict(&self, p: Vec2) -> (f64, f64) {
        let k: Vec<f64> = self.inputs.iter().map(|&x| self.kernel(p, x)).collect();
        let mean = dot(&k, &self.alpha);
        (mean, self.std_from_cross(&k))
    }

    fn std_from_cross(&self, k: &[f64]) -> f64 {
        let n = k.len();
        let mut w = vec![0.0; n];
        for i in 0..n {
            let row = &self.chol[i * n..i * n + i];
            w[i] = (k[i] - dot(row, &w[..i])) / self.chol[i * n + i];
        }
        (1.0 - dot(&w, &w)).max(0.0).sqrt()
    }

    /// Grid evaluator bound to `map`. Kernel values at cell centers are built
    /// from separable row and column factors, so every grid query through the
    /// evaluator sees bit-identical kernel values.
    pub fn on_grid<'a>(&'a self, map: &'a GridMap) -> GridEvaluator<'a> {
        GridEvaluator::new(self, map)
    }

    /// Mean and standard deviation at every water cell plus their argmaxes.
    pub fn predict_grid(&self, map: &GridMap) -> GridPrediction {
        let eval = self.on_grid(map);
        let mean = eval.mean_grid();
        let mut std = vec![LAND_SENTINEL; map.len()];
        for &i in map.water_cells() {
            std[i] = eval.std_at(i);
        }
        let (max_con_cell, _) = argmax_cells(&mean, map.water_cells()).expect("map has water");
        let (max_un_cell, _) = argmax_cells(&std, map.water_cells()).expect("map has water");
        GridPrediction {
            max_con: map.cell_center(max_con_cell),
            max_un: map.cell_center(max_un_cell),
            max_con_cell,
            max_un_cell,
            mean,
            std,
            length_scale: self.length_scale,
        }
    }
}

fn canonical_training_set(samples: &[Sample]) -> Result<(Vec<Vec2>, Vec<f64>)> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut latest: HashMap<(u64, u64), (usize, usize)> = HashMap::with_capacity(samples.len());
    for (i, s) in samples.iter().enumerate() {
        if !(s.value.is_finite() && s.position.x.is_finite() && s.position.y.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        let key = (s.position.x.to_bits(), s.position.y.to_bits());
        latest
            .entry(key)
            .and_modify(|e| {
                if s.step >= e.0 {
                    *e = (s.step, i);
                }
            })
            .or_insert((s.step, i));
    }
    let mut kept: Vec<&Sample> = latest.values().map(|&(_, i)| &samples[i]).collect();
    kept.sort_by(|a, b| {
        a.position
            .y
            .total_cmp(&b.position.y)
            .then(a.position.x.total_cmp(&b.position.x))
    });
    Ok((
        kept.iter().map(|s| s.position).collect(),
        kept.iter().map(|s| s.value).collect(),
    ))
}

fn factorize(
    sq_dist: &DMatrix<f64>,
    y: &DVector<f64>,
    length_scale: f64,
    nugget: f64,
    objective: Objective,
) -> Option<Factorization> {
    let n = y.len();
    let inv = -1.0 / (2.0 * length_scale * length_scale);
    let mut k = sq_dist.map(|d| (d * inv).exp());
    for i in 0..n {
        k[(i, i)] += nugget;
    }
    let chol = k.cholesky()?;
    let alpha = chol.solve(y);
    let l = chol.l();
    let log_det_half: f64 = (0..n).map(|i| l[(i, i)].ln()).sum();
    let nf = n as f64;
    let ln_2pi = (2.0 * std::f64::consts::PI).ln();
    let log_likelihood = match objective {
        Objective::Marginal => -0.5 * y.dot(&alpha) - log_det_half - 0.5 * nf * ln_2pi,
        Objective::Profile => {
            -0.5 * nf * (y.dot(&alpha) / nf).ln() - log_det_half - 0.5 * nf * (1.0 + ln_2pi)
        }
    };
    if !log_likelihood.is_finite() {
        return None;
    }
    Some(Factorization {
        chol: l,
        alpha,
        log_likelihood,
    })
}

/// Index of the first maximum; NaN entries never win.
fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] || values[best].is_nan() {
            best = i;
        }
    }
    best
}

/// Golden-section maximization of a unimodal function over `[a, b]`.
/// Returns the final bracket midpoint.
pub fn golden_section_max(mut a: f64, mut b: f64, tol: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Dot product with four independent accumulators.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let chunks = n / 4;
    for i in 0..chunks {
        let j = 4 * i;
        acc[0] += a[j] * b[j];
        acc[1] += a[j + 1] * b[j + 1];
        acc[2] += a[j + 2] * b[j + 2];
        acc[3] += a[j + 3] * b[j + 3];
    }
    let mut tail = 0.0;
    for j in 4 * chunks..n {
        tail += a[j] * b[j];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Argmax of `values` over `cells`; ties go to the lowest cell index.
pub fn argmax_cells(values: &[f64], cells: &[usize]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for &i in cells {
        let v = values[i];
        match best {
            Some((bi, bv)) if v < bv || (v == bv && i > bi) => {}
            _ => best = Some((i, v)),
        }
    }
    best
}

/// Full-grid posterior. Land cells hold [`LAND_SENTINEL`] in both grids.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPrediction {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub max_un: Vec2,
    pub max_con: Vec2,
    pub max_un_cell: usize,
    pub max_con_cell: usize,
    pub length_scale: f64,
}

/// Cell-center queries against a fitted model.
pub struct GridEvaluator<'a> {
    model: &'a GpModel,
    map: &'a GridMap,
    /// `n x rows`: kernel factor along y for every sample and grid row.
    row_factors: DMatrix<f64>,
    /// `n x cols`: kernel factor along x for every sample and grid column.
    col_factors: DMatrix<f64>,
}

impl<'a> GridEvaluator<'a> {
    fn new(model: &'a GpModel, map: &'a GridMap) -> Self {
        let n = model.inputs.len();
        let inv = -1.0 / (2.0 * model.length_scale * model.length_scale);
        let row_factors = DMatrix::from_fn(n, map.rows(), |j, r| {
            let d = r as f64 + 0.5 - model.inputs[j].y;
            (d * d * inv).exp()
        });
        let col_factors = DMatrix::from_fn(n, map.cols(), |j, c| {
            let d = c as f64 + 0.5 - model.inputs[j].x;
            (d * d * inv).exp()
        });
        Self {
            model,
            map,
            row_factors,
            col_factors,
        }
    }

    pub fn model(&self) -> &GpModel {
        self.model
    }

    fn cross_kernel(&self, cell: usize, out: &mut [f64]) {
        let (r, c) = (cell / self.map.cols(), cell % self.map.cols());
        let rf = self.row_factors.column(r);
        let cf = self.col_factors.column(c);
        for (j, o) in out.iter_mut().enumerate() {
            *o = rf[j] * cf[j];
        }
    }

    /// Posterior mean over the whole grid, land cells set to the sentinel.
    pub fn mean_grid(&self) -> Vec<f64> {
        let alpha = DVector::from_column_slice(&self.model.alpha);
        let mut weighted = self.col_factors.clone();
        for (j, mut row) in weighted.row_iter_mut().enumerate() {
            row *= alpha[j];
        }
        // rows x cols
        let m = self.row_factors.tr_mul(&weighted);
        let cols = self.map.cols();
        let mut out = vec![LAND_SENTINEL; self.map.len()];
        for &i in self.map.water_cells() {
            out[i] = m[(i / cols, i % cols)];
        }
        out
    }

    /// Posterior standard deviation at one cell center.
    pub fn std_at(&self, cell: usize) -> f64 {
        let mut k = vec![0.0; self.model.inputs.len()];
        self.cross_kernel(cell, &mut k);
        self.model.std_from_cross(&k)
    }

    pub fn std_cells(&self, cells: &[usize]) -> Vec<f64> {
        cells.iter().map(|&i| self.std_at(i)).collect()
    }

    /// Exact argmax of the posterior std over `cells` (ties to the lowest
    /// index), evaluating only cells whose single-sample variance bound can
    /// still beat the running best.
    pub fn argmax_std(&self, cells: &[usize]) -> Option<(usize, f64)> {
        let n = self.model.inputs.len();
        let denom = 1.0 + self.model.nugget;
        let mut k = vec![0.0; n];
        let mut bounds: Vec<(f64, usize)> = cells
            .iter()
            .map(|&i| {
                self.cross_kernel(i, &mut k);
                let kmax = k.iter().cloned().fold(0.0, f64::max);
                let var_ub = 1.0 - kmax * kmax / denom + 1e-9;
                (var_ub.max(0.0).sqrt(), i)
            })
            .collect();
        bounds.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut best: Option<(usize, f64)> = None;
        for (ub, i) in bounds {
            if let Some((_, bv)) = best {
                if ub < bv {
                    break;
                }
            }
            let s = self.std_at(i);
            match best {
                Some((bi, bv)) if s < bv || (s == bv && i > bi) => {}
                _ => best = Some((i, s)),
            }
        }
        best
    }
}

/// Distance-gated sampling: a vehicle samples when it is at least
/// `lambda * l` cells away from where it last sampled.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingPolicy {
    lambda: f64,
    last_sample: Vec<Option<Vec2>>,
}

impl SamplingPolicy {
    pub fn new(lambda: f64, n_vehicles: usize) -> Result<Self> {
        if !(0.1..=0.5).contains(&lambda) {
            return Err(Error::Config(format!(
                "sampling ratio lambda = {lambda} outside [0.1, 0.5]"
            )));
        }
        Ok(Self {
            lambda,
            last_sample: vec![None; n_vehicles],
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn threshold(&self, length_scale: f64) -> f64 {
        self.lambda * length_scale
    }

    pub fn last_sample(&self, vehicle: usize) -> Option<Vec2> {
        self.last_sample[vehicle]
    }

    pub fn should_sample(&self, length_scale: f64, vehicle: usize, position: Vec2) -> bool {
        match self.last_sample[vehicle] {
            None => true,
            Some(last) => (position - last).norm() >= self.threshold(length_scale),
        }
    }

    pub fn record(&mut self, vehicle: usize, position: Vec2) {
        self.last_sample[vehicle] = Some(position);
    }
}
