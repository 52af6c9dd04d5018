//! Benchmark fixtures shared by the criterion benches.

use aquafel_core::mission::seeded_rng;
use aquafel_core::{generate_ground_truth, GridMap, GroundTruth, Sample, TruthConfig};
use rand::seq::SliceRandom;

/// The bundled lake with a four-vehicle ground truth for `seed`.
pub fn lake(seed: u64) -> (GridMap, GroundTruth) {
    let map = GridMap::ypacarai();
    let truth = generate_ground_truth(&map, 4, seed, &TruthConfig::default())
        .expect("bundled lake yields a ground truth");
    (map, truth)
}

/// `n` truth samples at distinct, randomly chosen water cell centers.
pub fn samples(map: &GridMap, truth: &GroundTruth, n: usize, seed: u64) -> Vec<Sample> {
    let mut rng = seeded_rng(seed, 0xbe);
    map.water_cells()
        .choose_multiple(&mut rng, n)
        .enumerate()
        .map(|(step, &cell)| {
            let position = map.cell_center(cell);
            Sample {
                position,
                value: truth.field[cell],
                vehicle: step % 4,
                step,
            }
        })
        .collect()
}
