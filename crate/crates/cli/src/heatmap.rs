//! Plain-text PGM (`P2`) rendering of grid fields.

use std::io::Write;

use aquafel_core::{Error, GridMap};

/// Maps `v` to a gray level: clamp to `[0, 1]`, then `floor(v * 255 + 0.5)`.
pub fn gray_level(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8
}

/// Writes `grid` (one value per map cell, row-major) as a `P2` image; land
/// cells are black. Fails on any non-finite water value.
pub fn write_pgm(w: &mut impl Write, map: &GridMap, grid: &[f64]) -> aquafel_core::Result<()> {
    if grid.len() != map.len() {
        return Err(Error::DimensionMismatch(format!(
            "grid has {} values for {} cells",
            grid.len(),
            map.len()
        )));
    }
    if let Some(i) = (0..grid.len()).find(|&i| map.is_water(i) && !grid[i].is_finite()) {
        return Err(Error::NonFinite(i));
    }
    write!(w, "P2\n{} {}\n255\n", map.cols(), map.rows())?;
    for r in 0..map.rows() {
        let line: Vec<String> = (0..map.cols())
            .map(|c| {
                let i = r * map.cols() + c;
                let g = if map.is_water(i) {
                    gray_level(grid[i])
                } else {
                    0
                };
                g.to_string()
            })
            .collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}
