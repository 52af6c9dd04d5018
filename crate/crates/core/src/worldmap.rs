//! Occupancy grid of the water body.
//!
//! Cells hold `1` for navigable water and `0` for everything else (land,
//! prohibited areas). Positions are continuous cell coordinates; a position
//! belongs to the cell obtained by flooring both coordinates, so positions on
//! the far edge of the map (`x == cols` or `y == rows`) are out of bounds.

use std::fmt::Write as _;

use crate::{Error, Result, Vec2};

/// Default edge length of a grid cell in meters.
pub const DEFAULT_CELL_SIZE_M: f64 = 100.0;

/// Segment sampling resolution used by [`GridMap::clip_move`], in cells.
pub const CLIP_RESOLUTION: f64 = 0.1;

const BUNDLED_YPACARAI: &str = include_str!("../data/ypacarai.map");

#[derive(Debug, Clone, PartialEq)]
pub struct GridMap {
    rows: usize,
    cols: usize,
    cells: Vec<u8>,
    cell_size_m: f64,
    water: Vec<usize>,
}

impl GridMap {
    pub fn new(rows: usize, cols: usize, cells: Vec<u8>, cell_size_m: f64) -> Result<Self> {
        if rows * cols != cells.len() {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} grid with {} cells",
                cells.len()
            )));
        }
        if let Some(i) = cells.iter().position(|&v| v > 1) {
            return Err(Error::MapParse {
                line: i / cols.max(1) + 2,
                message: format!("cell value {} is not 0 or 1", cells[i]),
            });
        }
        if !(cell_size_m > 0.0 && cell_size_m.is_finite()) {
            return Err(Error::Config(format!("cell size {cell_size_m} m")));
        }
        let water: Vec<usize> = cells
            .iter()
            .enumerate()
            .filter_map(|(i, &v)| (v == 1).then_some(i))
            .collect();
        if water.is_empty() {
            return Err(Error::EmptyWater);
        }
        Ok(Self {
            rows,
            cols,
            cells,
            cell_size_m,
            water,
        })
    }

    /// Parses the ASCII map format: a `"<rows> <cols>"` header followed by
    /// `rows` lines of `cols` space separated `0`/`1` symbols.
    pub fn parse(source: &str) -> Result<Self> {
        let mut lines = source.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (_, header) = lines.next().ok_or(Error::MapParse {
            line: 1,
            message: "missing header".into(),
        })?;
        let dims: Vec<&str> = header.split_whitespace().collect();
        let parse_dim = |s: &str| {
            s.parse::<usize>()
                .ok()
                .filter(|&v| v > 0)
                .ok_or(Error::MapParse {
                    line: 1,
                    message: format!("bad dimension {s:?} in header {header:?}"),
                })
        };
        if dims.len() != 2 {
            return Err(Error::MapParse {
                line: 1,
                message: format!("expected \"<rows> <cols>\", got {header:?}"),
            });
        }
        let rows = parse_dim(dims[0])?;
        let cols = parse_dim(dims[1])?;

        let mut cells = Vec::with_capacity(rows * cols);
        let mut seen_rows = 0;
        for (line_no, line) in lines {
            if seen_rows == rows {
                if line.trim().is_empty() {
                    continue;
                }
                return Err(Error::MapParse {
                    line: line_no,
                    message: format!("more than {rows} rows"),
                });
            }
            let mut count = 0;
            for sym in line.split_whitespace() {
                let v = match sym {
                    "0" => 0,
                    "1" => 1,
                    other => {
                        return Err(Error::MapParse {
                            line: line_no,
                            message: format!("invalid symbol {other:?}, expected 0 or 1"),
                        })
                    }
                };
                cells.push(v);
                count += 1;
            }
            if count != cols {
                return Err(Error::MapParse {
                    line: line_no,
                    message: format!("row has {count} symbols, expected {cols}"),
                });
            }
            seen_rows += 1;
        }
        if seen_rows != rows {
            return Err(Error::MapParse {
                line: seen_rows + 2,
                message: format!("expected {rows} rows, found {seen_rows}"),
            });
        }
        if !cells.contains(&1) {
            return Err(Error::EmptyWater);
        }
        Self::new(rows, cols, cells, DEFAULT_CELL_SIZE_M)
    }

    /// The bundled 150x110 lake, modelled loosely on Lake Ypacarai. Its water
    /// bounding box is 140 x 100 cells, so the shortest lake dimension is
    /// 10 km at the default cell size.
    pub fn ypacarai() -> Self {
        Self::parse(BUNDLED_YPACARAI).expect("bundled map is valid")
    }

    pub fn with_cell_size(mut self, cell_size_m: f64) -> Result<Self> {
        if !(cell_size_m > 0.0 && cell_size_m.is_finite()) {
            return Err(Error::Config(format!("cell size {cell_size_m} m")));
        }
        self.cell_size_m = cell_size_m;
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn cell_size_m(&self) -> f64 {
        self.cell_size_m
    }

    /// Row-major indices of all water cells, ascending.
    pub fn water_cells(&self) -> &[usize] {
        &self.water
    }

    pub fn is_water(&self, index: usize) -> bool {
        self.cells.get(index) == Some(&1)
    }

    /// Row-major index of the cell containing `p`, if `p` is inside the map.
    pub fn cell_of(&self, p: Vec2) -> Option<usize> {
        if !(p.x >= 0.0 && p.y >= 0.0) {
            return None;
        }
        let col = p.x.floor();
        let row = p.y.floor();
        if col >= self.cols as f64 || row >= self.rows as f64 {
            return None;
        }
        Some(row as usize * self.cols + col as usize)
    }

    pub fn cell_center(&self, index: usize) -> Vec2 {
        let row = index / self.cols;
        let col = index % self.cols;
        Vec2::new(col as f64 + 0.5, row as f64 + 0.5)
    }

    pub fn is_navigable(&self, p: Vec2) -> bool {
        self.cell_of(p).is_some_and(|i| self.cells[i] == 1)
    }

    /// Truncates the straight move `from -> to` at the last navigable point.
    ///
    /// The segment is walked in [`CLIP_RESOLUTION`] increments; the walk stops
    /// at the first sample that leaves the water and the previous sample is
    /// returned. A fully navigable segment returns `to` exactly.
    pub fn clip_move(&self, from: Vec2, to: Vec2) -> Vec2 {
        if !self.is_navigable(from) {
            return from;
        }
        let delta = to - from;
        let length = delta.norm();
        if !(length > 0.0) || !length.is_finite() {
            return from;
        }
        let dir = delta / length;
        let mut last = from;
        let mut k = 1usize;
        loop {
            let t = k as f64 * CLIP_RESOLUTION;
            if t >= length {
                break;
            }
            let p = from + dir * t;
            if !self.is_navigable(p) {
                return last;
            }
            last = p;
            k += 1;
        }
        if self.is_navigable(to) {
            to
        } else {
            last
        }
    }

    /// Inclusive bounding box of the water cells as `(row_min, row_max, col_min, col_max)`.
    pub fn water_bounds(&self) -> (usize, usize, usize, usize) {
        let mut b = (usize::MAX, 0, usize::MAX, 0);
        for &i in &self.water {
            let (r, c) = (i / self.cols, i % self.cols);
            b.0 = b.0.min(r);
            b.1 = b.1.max(r);
            b.2 = b.2.min(c);
            b.3 = b.3.max(c);
        }
        b
    }

    /// Shortest extent of the water bounding box, in cells.
    pub fn shortest_extent_cells(&self) -> usize {
        let (r0, r1, c0, c1) = self.water_bounds();
        (r1 - r0 + 1).min(c1 - c0 + 1)
    }

    /// Shortest lake dimension in meters; the length used for zone radii.
    pub fn shortest_length_m(&self) -> f64 {
        self.shortest_extent_cells() as f64 * self.cell_size_m
    }

    /// Serializes back into the ASCII map format.
    pub fn to_map_string(&self) -> String {
        let mut out = String::with_capacity(self.cells.len() * 2 + 16);
        let _ = writeln!(out, "{} {}", self.rows, self.cols);
        for row in self.cells.chunks(self.cols) {
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                out.push(if *v == 1 { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn diagonal() -> GridMap {
        GridMap::parse("2 2\n1 0\n0 1\n").unwrap()
    }

    /// 10x10 map with water in columns 0..=4 only.
    fn half_lake() -> GridMap {
        let cells = (0..100).map(|i| u8::from(i % 10 < 5)).collect();
        GridMap::new(10, 10, cells, DEFAULT_CELL_SIZE_M).unwrap()
    }

    #[test]
    fn parses_small_map() {
        let m = diagonal();
        assert_eq!((m.rows(), m.cols()), (2, 2));
        assert_eq!(m.cells(), &[1, 0, 0, 1]);
        assert_eq!(m.water_cells(), &[0, 3]);
    }

    #[test]
    fn parse_accepts_missing_final_newline() {
        assert_eq!(GridMap::parse("2 2\n1 0\n0 1").unwrap(), diagonal());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let line_of = |src: &str| match GridMap::parse(src) {
            Err(Error::MapParse { line, .. }) => line,
            other => panic!("expected parse error, got {other:?}"),
        };
        assert_eq!(line_of("2 2\n1 0\n0 2\n"), 3);
        assert_eq!(line_of("2 2\n1 0 1\n0 1\n"), 2);
        assert_eq!(line_of("2 x\n1 0\n0 1\n"), 1);
        assert_eq!(line_of("2\n1 0\n0 1\n"), 1);
        assert_eq!(line_of("3 2\n1 0\n0 1\n"), 4);
        assert_eq!(line_of("1 2\n1 0\n0 1\n"), 3);
        assert!(matches!(
            GridMap::parse("2 2\n0 0\n0 0\n"),
            Err(Error::EmptyWater)
        ));
    }

    #[test]
    fn round_trips_through_text() {
        let m = GridMap::ypacarai();
        assert_eq!(GridMap::parse(&m.to_map_string()).unwrap(), m);
    }

    #[test]
    fn bundled_map_shortest_dimension_is_100_cells() {
        // Independent scan of the raw file: bounding extent of the 1-cells.
        let mut lines = BUNDLED_YPACARAI.lines();
        lines.next();
        let (mut rmin, mut rmax, mut cmin, mut cmax) = (usize::MAX, 0, usize::MAX, 0);
        for (r, line) in lines.enumerate() {
            for (c, sym) in line.split(' ').enumerate() {
                if sym == "1" {
                    rmin = rmin.min(r);
                    rmax = rmax.max(r);
                    cmin = cmin.min(c);
                    cmax = cmax.max(c);
                }
            }
        }
        let shortest = (rmax - rmin + 1).min(cmax - cmin + 1);
        assert_eq!(shortest, 100);
        let m = GridMap::ypacarai();
        assert_eq!(m.shortest_extent_cells(), 100);
        assert_eq!(m.shortest_length_m(), 10_000.0);
    }

    #[test]
    fn navigability_uses_floor_rule() {
        let m = diagonal();
        assert!(m.is_navigable(Vec2::new(0.5, 0.5)));
        assert!(!m.is_navigable(Vec2::new(-1.0, 0.0)));
        assert!(!m.is_navigable(Vec2::new(1.5, 0.5)));
        // shared edge x = 1.0 belongs to the cell on its right (land)
        assert!(!m.is_navigable(Vec2::new(1.0, 0.5)));
        assert!(m.is_navigable(Vec2::new(1.0, 1.0)));
        // max edge is out of bounds
        assert!(!m.is_navigable(Vec2::new(2.0, 1.5)));
        assert!(!m.is_navigable(Vec2::new(1.5, 2.0)));
        assert!(!m.is_navigable(Vec2::new(f64::NAN, 0.5)));
    }

    #[test]
    fn clip_returns_target_on_open_water() {
        let m = half_lake();
        let to = Vec2::new(4.5, 9.2);
        assert_eq!(m.clip_move(Vec2::new(0.5, 0.5), to), to);
    }

    #[test]
    fn clip_stops_before_land() {
        let m = half_lake();
        let from = Vec2::new(3.0, 5.0);
        let to = Vec2::new(8.0, 5.0);
        let got = m.clip_move(from, to);
        assert!(m.is_navigable(got));
        assert!(got.x > from.x && got.x < 5.0);
        // brute-force oracle: last navigable point at 0.01 cell resolution
        let mut oracle = from;
        let mut t = 0.01;
        while t <= 5.0 {
            let p = from + Vec2::new(t, 0.0);
            if !m.is_navigable(p) {
                break;
            }
            oracle = p;
            t += 0.01;
        }
        assert!((got - oracle).norm() <= CLIP_RESOLUTION + 1e-9);
    }

    #[test]
    fn clip_blocked_at_shore_returns_from() {
        let m = half_lake();
        let from = Vec2::new(4.95, 2.5);
        assert_eq!(m.clip_move(from, Vec2::new(7.0, 2.5)), from);
    }

    proptest! {
        #[test]
        fn clip_output_is_navigable_and_not_longer(
            fx in 0.0f64..5.0, fy in 0.0f64..10.0,
            tx in -3.0f64..13.0, ty in -3.0f64..13.0,
        ) {
            let m = half_lake();
            let from = Vec2::new(fx, fy);
            let to = Vec2::new(tx, ty);
            let got = m.clip_move(from, to);
            prop_assert!(m.is_navigable(got));
            prop_assert!((got - from).norm() <= (to - from).norm() + 1e-12);
            // collinear with from -> to
            let d = to - from;
            if d.norm() > 1e-9 {
                let cross = d.x * (got.y - from.y) - d.y * (got.x - from.x);
                prop_assert!(cross.abs() / d.norm() < 1e-9);
            }
            prop_assert_eq!(m.clip_move(from, to), got);
        }
    }
}
