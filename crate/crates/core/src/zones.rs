//! Circular action zones: extraction from a contamination model, priorities
//! and the one-shot vehicle allocation.

use crate::surrogate::argmax_cells;
use crate::{Error, GridMap, Result, Vec2};

/// Zone centers must reach this fraction of the model maximum.
pub const ZONE_THRESHOLD: f64 = 0.33;

/// Priority step between consecutive zones and per assigned vehicle.
pub const PRIORITY_STEP: u32 = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct ActionZone {
    pub id: usize,
    pub center: Vec2,
    pub center_cell: usize,
    pub radius_cells: f64,
    pub peak_value: f64,
    pub priority: u32,
    pub vehicles: Vec<usize>,
}

impl ActionZone {
    /// Open-disk membership.
    pub fn contains(&self, p: Vec2) -> bool {
        (p - self.center).norm() < self.radius_cells
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZoneRadius {
    pub meters: f64,
    pub cells: f64,
}

/// `rad = length / n_vehicles`.
pub fn compute_zone_radius(
    length_m: f64,
    n_vehicles: usize,
    cell_size_m: f64,
) -> Result<ZoneRadius> {
    if n_vehicles == 0 {
        return Err(Error::Config(
            "zone radius needs at least one vehicle".into(),
        ));
    }
    let meters = length_m / n_vehicles as f64;
    Ok(ZoneRadius {
        meters,
        cells: meters / cell_size_m,
    })
}

/// `max_prt = 10 n + 10`.
pub fn max_priority(n_vehicles: usize) -> u32 {
    n_vehicles as u32 * PRIORITY_STEP + PRIORITY_STEP
}

/// Recursive peak masking: the next center is the highest water cell at or
/// above 33% of the model maximum that lies outside every existing zone.
/// Stops at `max_zones` zones or when no qualifying cell remains. Zones come
/// out in descending peak order.
pub fn extract_action_zones(
    values: &[f64],
    map: &GridMap,
    max_zones: usize,
    radius_cells: f64,
) -> Vec<ActionZone> {
    let water = map.water_cells();
    let Some((_, max)) = argmax_cells(values, water) else {
        return Vec::new();
    };
    // a non-positive maximum still yields its own zone
    let threshold = (ZONE_THRESHOLD * max).min(max);
    let mut zones: Vec<ActionZone> = Vec::new();
    while zones.len() < max_zones {
        let mut best: Option<(usize, f64)> = None;
        for &i in water {
            let v = values[i];
            if v < threshold || best.is_some_and(|(_, bv)| v <= bv) {
                continue;
            }
            let p = map.cell_center(i);
            if zones.iter().any(|z| z.contains(p)) {
                continue;
            }
            best = Some((i, v));
        }
        let Some((cell, peak)) = best else { break };
        zones.push(ActionZone {
            id: zones.len(),
            center: map.cell_center(cell),
            center_cell: cell,
            radius_cells,
            peak_value: peak,
            priority: 0,
            vehicles: Vec::new(),
        });
    }
    zones
}

/// Highest peak gets `max_prt`, each following zone ten points less.
pub fn assign_priorities(zones: &mut [ActionZone], n_vehicles: usize) {
    zones.sort_by(|a, b| b.peak_value.total_cmp(&a.peak_value).then(a.id.cmp(&b.id)));
    let top = max_priority(n_vehicles);
    for (k, z) in zones.iter_mut().enumerate() {
        z.priority = top.saturating_sub(PRIORITY_STEP * k as u32);
    }
}

/// Assigns every vehicle to a zone, once.
///
/// Round one walks the zones by descending priority and gives each its
/// nearest unassigned vehicle. Leftover vehicles then go, one at a time, to
/// the zone with the highest working priority (ties: fewer vehicles, then
/// zone order), nearest vehicle first. Every assignment costs the zone ten
/// working-priority points. Returns the zone index of each vehicle.
pub fn allocate_vehicles(zones: &mut [ActionZone], positions: &[Vec2]) -> Result<Vec<usize>> {
    if zones.is_empty() {
        return Err(Error::NoZones);
    }
    if zones.len() > positions.len() {
        return Err(Error::Config(format!(
            "{} zones for {} vehicles",
            zones.len(),
            positions.len()
        )));
    }
    for z in zones.iter_mut() {
        z.vehicles.clear();
    }
    let mut working: Vec<i64> = zones.iter().map(|z| z.priority as i64).collect();
    let mut assignment: Vec<Option<usize>> = vec![None; positions.len()];

    let nearest_free = |center: Vec2, assignment: &[Option<usize>]| -> usize {
        let mut best: Option<(usize, f64)> = None;
        for (v, p) in positions.iter().enumerate() {
            if assignment[v].is_some() {
                continue;
            }
            let d = (p - center).norm_squared();
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((v, d));
            }
        }
        best.expect("an unassigned vehicle remains").0
    };

    let mut order: Vec<usize> = (0..zones.len()).collect();
    order.sort_by(|&a, &b| zones[b].priority.cmp(&zones[a].priority).then(a.cmp(&b)));
    for &z in &order {
        let v = nearest_free(zones[z].center, &assignment);
        assignment[v] = Some(z);
        zones[z].vehicles.push(v);
        working[z] -= PRIORITY_STEP as i64;
    }
    while assignment.iter().any(Option::is_none) {
        let z = (0..zones.len())
            .min_by(|&a, &b| {
                working[b]
                    .cmp(&working[a])
                    .then(zones[a].vehicles.len().cmp(&zones[b].vehicles.len()))
                    .then(a.cmp(&b))
            })
            .expect("zones is non-empty");
        let v = nearest_free(zones[z].center, &assignment);
        assignment[v] = Some(z);
        zones[z].vehicles.push(v);
        working[z] -= PRIORITY_STEP as i64;
    }
    Ok(assignment
        .into_iter()
        .map(|a| a.expect("all assigned"))
        .collect())
}

/// Water cells owned by each zone. Among the zones whose open disk contains
/// a cell center, the one with the nearest center owns the cell; equal
/// distances go to the earlier zone in slice order.
pub fn zone_cells(map: &GridMap, zones: &[ActionZone]) -> Vec<Vec<usize>> {
    let mut cells = vec![Vec::new(); zones.len()];
    for &i in map.water_cells() {
        if let Some(z) = owner(zones, map.cell_center(i)) {
            cells[z].push(i);
        }
    }
    cells
}

/// Index of the zone owning point `p`, if any disk contains it.
pub fn owner(zones: &[ActionZone], p: Vec2) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (k, z) in zones.iter().enumerate() {
        let d = (p - z.center).norm_squared();
        if z.contains(p) && best.is_none_or(|(_, bd)| d < bd) {
            best = Some((k, d));
        }
    }
    best.map(|(k, _)| k)
}
