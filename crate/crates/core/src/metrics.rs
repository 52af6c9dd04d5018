//! Map MSE, zone MSE, per-zone peak error and seed aggregation.

use crate::zones::{compute_zone_radius, extract_action_zones, zone_cells, ActionZone};
use crate::{Error, GridMap, Result};

/// z-value of the two-sided 95% normal interval.
pub const Z95: f64 = 1.96;

fn check_shape(map: &GridMap, truth: &[f64], estimate: &[f64]) -> Result<()> {
    if truth.len() != map.len() || estimate.len() != map.len() {
        return Err(Error::DimensionMismatch(format!(
            "truth {} / estimate {} cells, map has {}",
            truth.len(),
            estimate.len(),
            map.len()
        )));
    }
    Ok(())
}

fn mse_over(truth: &[f64], estimate: &[f64], cells: &[usize]) -> f64 {
    let sum: f64 = cells
        .iter()
        .map(|&i| {
            let d = truth[i] - estimate[i];
            d * d
        })
        .sum();
    sum / cells.len() as f64
}

/// Mean squared error over all water cells.
pub fn mse_map(map: &GridMap, truth: &[f64], estimate: &[f64]) -> Result<f64> {
    check_shape(map, truth, estimate)?;
    Ok(mse_over(truth, estimate, map.water_cells()))
}

/// Water cells inside any of the zones' open disks, ascending.
pub fn zone_union(map: &GridMap, zones: &[ActionZone]) -> Vec<usize> {
    let mut cells: Vec<usize> = zone_cells(map, zones).into_iter().flatten().collect();
    cells.sort_unstable();
    cells
}

/// Mean squared error over the water cells covered by the truth zones.
pub fn mse_action_zones(
    map: &GridMap,
    truth: &[f64],
    estimate: &[f64],
    truth_zones: &[ActionZone],
) -> Result<f64> {
    check_shape(map, truth, estimate)?;
    if truth_zones.is_empty() {
        return Err(Error::NoZones);
    }
    let cells = zone_union(map, truth_zones);
    if cells.is_empty() {
        return Err(Error::NoZones);
    }
    Ok(mse_over(truth, estimate, &cells))
}

/// `|truth - estimate|` at each zone's peak cell.
pub fn peak_error(truth: &[f64], estimate: &[f64], truth_zones: &[ActionZone]) -> Vec<f64> {
    truth_zones
        .iter()
        .map(|z| (truth[z.center_cell] - estimate[z.center_cell]).abs())
        .collect()
}

/// Zones of the ground-truth field, with the planner's radius and threshold.
pub fn truth_zones(map: &GridMap, truth: &[f64], n_vehicles: usize) -> Result<Vec<ActionZone>> {
    let radius = compute_zone_radius(map.shortest_length_m(), n_vehicles, map.cell_size_m())?;
    let zones = extract_action_zones(truth, map, n_vehicles, radius.cells);
    if zones.is_empty() {
        return Err(Error::NoZones);
    }
    Ok(zones)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub mse_map: f64,
    pub mse_action_zones: f64,
    pub peak_errors: Vec<f64>,
}

impl MetricsReport {
    pub fn evaluate(
        map: &GridMap,
        truth: &[f64],
        estimate: &[f64],
        truth_zones: &[ActionZone],
    ) -> Result<Self> {
        Ok(Self {
            mse_map: mse_map(map, truth, estimate)?,
            mse_action_zones: mse_action_zones(map, truth, estimate, truth_zones)?,
            peak_errors: peak_error(truth, estimate, truth_zones),
        })
    }

    pub fn mean_peak_error(&self) -> f64 {
        if self.peak_errors.is_empty() {
            return 0.0;
        }
        self.peak_errors.iter().sum::<f64>() / self.peak_errors.len() as f64
    }
}

/// Sample mean, sample std and 95% CI half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregate {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub ci95: f64,
}

pub fn aggregate(values: &[f64]) -> Result<Aggregate> {
    let n = values.len();
    if n < 2 {
        return Err(Error::InsufficientReports(n));
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let std = var.sqrt();
    Ok(Aggregate {
        n,
        mean,
        std,
        ci95: Z95 * std / nf.sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportAggregate {
    pub mse_map: Aggregate,
    pub mse_action_zones: Aggregate,
    pub peak_error: Aggregate,
}

/// Per-metric aggregation; peak error uses each report's zone mean.
pub fn aggregate_reports(reports: &[MetricsReport]) -> Result<ReportAggregate> {
    let col = |f: fn(&MetricsReport) -> f64| -> Vec<f64> { reports.iter().map(f).collect() };
    Ok(ReportAggregate {
        mse_map: aggregate(&col(|r| r.mse_map))?,
        mse_action_zones: aggregate(&col(|r| r.mse_action_zones))?,
        peak_error: aggregate(&col(MetricsReport::mean_peak_error))?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Vec2;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_map(rng: &mut ChaCha8Rng) -> GridMap {
        let mut cells: Vec<u8> = (0..100).map(|_| u8::from(rng.gen_bool(0.8))).collect();
        cells[0] = 1;
        GridMap::new(10, 10, cells, 100.0).unwrap()
    }

    fn zone(center_cell: usize, map: &GridMap, r: f64) -> ActionZone {
        ActionZone {
            id: 0,
            center: map.cell_center(center_cell),
            center_cell,
            radius_cells: r,
            peak_value: 1.0,
            priority: 10,
            vehicles: vec![],
        }
    }

    #[test]
    fn map_mse_basics() {
        let map = GridMap::new(4, 4, vec![1; 16], 100.0).unwrap();
        let t = vec![0.5; 16];
        assert_eq!(mse_map(&map, &t, &t).unwrap(), 0.0);
        let e: Vec<f64> = t.iter().map(|v| v + 0.1).collect();
        assert!((mse_map(&map, &t, &e).unwrap() - 0.01).abs() < 1e-15);
        assert!(mse_map(&map, &t, &e[..15]).is_err());
    }

    #[test]
    fn zone_mse_is_restricted() {
        let map = GridMap::new(10, 10, vec![1; 100], 100.0).unwrap();
        let z = vec![zone(44, &map, 2.0)];
        let truth = vec![0.5; 100];
        let inside = zone_union(&map, &z);
        let mut est: Vec<f64> = (0..100).map(|i| i as f64).collect();
        for &i in &inside {
            est[i] = 0.5;
        }
        assert_eq!(mse_action_zones(&map, &truth, &est, &z).unwrap(), 0.0);
        for &i in &inside {
            est[i] = 0.7;
        }
        assert!((mse_action_zones(&map, &truth, &est, &z).unwrap() - 0.04).abs() < 1e-12);
        assert!(matches!(
            mse_action_zones(&map, &truth, &est, &[]),
            Err(Error::NoZones)
        ));
    }

    #[test]
    fn peak_error_cases() {
        let map = GridMap::new(10, 10, vec![1; 100], 100.0).unwrap();
        let mut truth = vec![0.0; 100];
        truth[37] = 1.0;
        let z = vec![zone(37, &map, 3.0)];
        assert_eq!(peak_error(&truth, &truth, &z), vec![0.0]);
        let mut est = truth.clone();
        est[37] = 0.9;
        assert!((peak_error(&truth, &est, &z)[0] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn truth_zone_peaks_match_masked_argmax() {
        let map = GridMap::new(30, 30, vec![1; 900], 100.0).unwrap();
        let bump = |p: Vec2, c: Vec2, h: f64| h * (-(p - c).norm_squared() / 6.0).exp();
        let truth: Vec<f64> = (0..900)
            .map(|i| {
                let p = map.cell_center(i);
                bump(p, Vec2::new(5.5, 5.5), 1.0) + bump(p, Vec2::new(24.5, 20.5), 0.8)
            })
            .collect();
        let zones = truth_zones(&map, &truth, 4).unwrap();
        // radius = 3000 m / 4 / 100 m = 7.5 cells
        assert_eq!(zones[0].radius_cells, 7.5);
        assert_eq!(zones.len(), 2);
        let est: Vec<f64> = truth.iter().map(|v| v * 0.5).collect();
        let errs = peak_error(&truth, &est, &zones);
        for (z, e) in zones.iter().zip(&errs) {
            // oracle: argmax of the truth restricted to this zone's disk
            let mut best = (0, f64::MIN);
            for (i, &t) in truth.iter().enumerate() {
                if (map.cell_center(i) - z.center).norm() < z.radius_cells && t > best.1 {
                    best = (i, t);
                }
            }
            assert_eq!(best.0, z.center_cell);
            assert!((e - (truth[best.0] - est[best.0]).abs()).abs() < 1e-15);
        }
    }

    #[test]
    fn metric_oracles_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..100 {
            let map = random_map(&mut rng);
            let truth: Vec<f64> = (0..100).map(|_| rng.gen()).collect();
            let est: Vec<f64> = (0..100).map(|_| rng.gen()).collect();
            let z = vec![
                zone(map.water_cells()[0], &map, rng.gen_range(1.0..4.0)),
                zone(
                    *map.water_cells().last().unwrap(),
                    &map,
                    rng.gen_range(1.0..4.0),
                ),
            ];
            let (mut s, mut n, mut sz, mut nz) = (0.0, 0usize, 0.0, 0usize);
            for r in 0..10 {
                for c in 0..10 {
                    let i = r * 10 + c;
                    if map.cells()[i] == 0 {
                        continue;
                    }
                    let d = (truth[i] - est[i]).powi(2);
                    s += d;
                    n += 1;
                    let (px, py) = (c as f64 + 0.5, r as f64 + 0.5);
                    if z.iter().any(|z| {
                        ((px - z.center.x).powi(2) + (py - z.center.y).powi(2)).sqrt()
                            < z.radius_cells
                    }) {
                        sz += d;
                        nz += 1;
                    }
                }
            }
            assert!((mse_map(&map, &truth, &est).unwrap() - s / n as f64).abs() <= 1e-12);
            assert!(
                (mse_action_zones(&map, &truth, &est, &z).unwrap() - sz / nz as f64).abs() <= 1e-12
            );
            let pe = peak_error(&truth, &est, &z);
            for (k, zz) in z.iter().enumerate() {
                assert!(
                    (pe[k] - (truth[zz.center_cell] - est[zz.center_cell]).abs()).abs() <= 1e-12
                );
            }
        }
    }

    #[test]
    fn aggregate_cases() {
        let a = aggregate(&[0.0, 2.0]).unwrap();
        assert_eq!(a.mean, 1.0);
        assert!((a.ci95 - 1.96).abs() < 1e-12);
        let b = aggregate(&[0.3; 5]).unwrap();
        assert_eq!(b.ci95, 0.0);
        assert!(matches!(
            aggregate(&[1.0]),
            Err(Error::InsufficientReports(1))
        ));
    }

    proptest! {
        #[test]
        fn mse_permutation_invariant(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let map = GridMap::new(6, 6, vec![1; 36], 100.0).unwrap();
            let t: Vec<f64> = (0..36).map(|_| rng.gen()).collect();
            let e: Vec<f64> = (0..36).map(|_| rng.gen()).collect();
            let mut perm: Vec<usize> = (0..36).collect();
            rand::seq::SliceRandom::shuffle(&mut perm[..], &mut rng);
            let tp: Vec<f64> = perm.iter().map(|&i| t[i]).collect();
            let ep: Vec<f64> = perm.iter().map(|&i| e[i]).collect();
            let a = mse_map(&map, &t, &e).unwrap();
            let b = mse_map(&map, &tp, &ep).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
            prop_assert!(a >= 0.0);
        }
    }
}
