//! 2D occupancy grid: cell states, obstacle inflation and segment checks.
//!
//! Cells are addressed by `(ix, iy)` with `ix` growing along +x and `iy` along
//! +y. Cell `(0, 0)` has its lower-left corner at the grid origin.

mod pgm;
mod traversal;
mod world;

use std::collections::HashSet;

pub use pgm::{parse_pgm, write_pgm, PGM_FREE, PGM_OCCUPIED, PGM_RIM, PGM_UNKNOWN};
pub use traversal::{supercover, supercover_cells, supercover_while};
pub use world::{ConvexPolygon, Obstacle, WorldModel};

use crate::error::GridError;
use crate::geometry::{Point2, Rect};

pub const DEFAULT_CELL_SIZE: f64 = 0.5;
pub const DEFAULT_RIM_WIDTH: f64 = 0.5;
pub const DEFAULT_RIM_VALUE: f64 = 0.5;

/// Tolerance used when converting metric distances to whole cells, so that
/// `3.0 / 0.5` is six cells and not seven.
const CELL_ROUNDING_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum CellState {
    #[default]
    Unknown,
    Free,
    Occupied,
    /// Band just outside the inflated region; carries an occupancy probability
    /// strictly between Free (0) and Occupied (1).
    OuterRim(f64),
}

impl CellState {
    pub fn occupancy(self) -> Option<f64> {
        match self {
            CellState::Unknown => None,
            CellState::Free => Some(0.0),
            CellState::Occupied => Some(1.0),
            CellState::OuterRim(v) => Some(v),
        }
    }

    pub fn is_occupied(self) -> bool {
        matches!(self, CellState::Occupied)
    }

    pub fn is_rim(self) -> bool {
        matches!(self, CellState::OuterRim(_))
    }
}

/// Integer cell address.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub ix: usize,
    pub iy: usize,
}

impl Cell {
    pub const fn new(ix: usize, iy: usize) -> Self {
        Self { ix, iy }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    origin: Point2,
    cell_size: f64,
    width: usize,
    height: usize,
    cells: Vec<CellState>,
    /// Whether Unknown cells are flyable in segment checks.
    pub unknown_traversable: bool,
    /// Points rejected by [`OccupancyGrid::mark_occupied`] for lying outside.
    rejected_points: u64,
    /// Bumped on every mutation that changes a cell.
    revision: u64,
}

impl OccupancyGrid {
    /// A grid with every cell in `fill` state.
    pub fn new(
        origin: Point2,
        cell_size: f64,
        width: usize,
        height: usize,
        fill: CellState,
    ) -> Result<Self, GridError> {
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(GridError::Invalid(format!("cell_size must be > 0, got {cell_size}")));
        }
        if width == 0 || height == 0 {
            return Err(GridError::Invalid(format!(
                "grid dimensions must be at least 1x1, got {width}x{height}"
            )));
        }
        if !origin.is_finite() {
            return Err(GridError::Invalid("origin must be finite".into()));
        }
        Ok(Self {
            origin,
            cell_size,
            width,
            height,
            cells: vec![fill; width * height],
            unknown_traversable: true,
            rejected_points: 0,
            revision: 0,
        })
    }

    /// Smallest grid covering `bounds`, with the origin placed at `bounds.min`.
    pub fn covering(bounds: Rect, cell_size: f64, fill: CellState) -> Result<Self, GridError> {
        let width = ((bounds.width() / cell_size) - CELL_ROUNDING_EPS).ceil().max(1.0) as usize;
        let height = ((bounds.height() / cell_size) - CELL_ROUNDING_EPS).ceil().max(1.0) as usize;
        Self::new(bounds.min, cell_size, width, height, fill)
    }

    pub fn origin(&self) -> Point2 {
        self.origin
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn rejected_points(&self) -> u64 {
        self.rejected_points
    }

    pub fn bounds(&self) -> Rect {
        Rect {
            min: self.origin,
            max: self.origin
                + Point2::new(
                    self.width as f64 * self.cell_size,
                    self.height as f64 * self.cell_size,
                ),
        }
    }

    /// Continuous grid coordinates of a world point (cell units).
    pub fn to_grid_coords(&self, p: Point2) -> (f64, f64) {
        (
            (p.x - self.origin.x) / self.cell_size,
            (p.y - self.origin.y) / self.cell_size,
        )
    }

    pub fn world_to_cell(&self, p: Point2) -> Result<Cell, GridError> {
        let (gx, gy) = self.to_grid_coords(p);
        let (fx, fy) = (gx.floor(), gy.floor());
        if !(fx >= 0.0 && fy >= 0.0 && fx < self.width as f64 && fy < self.height as f64) {
            return Err(GridError::OutOfBounds(p));
        }
        Ok(Cell::new(fx as usize, fy as usize))
    }

    /// World coordinates of the cell center.
    pub fn cell_to_world(&self, c: Cell) -> Point2 {
        Point2::new(
            self.origin.x + (c.ix as f64 + 0.5) * self.cell_size,
            self.origin.y + (c.iy as f64 + 0.5) * self.cell_size,
        )
    }

    pub fn in_bounds(&self, p: Point2) -> bool {
        self.world_to_cell(p).is_ok()
    }

    fn cell_from_signed(&self, ix: i64, iy: i64) -> Option<Cell> {
        (ix >= 0 && iy >= 0 && (ix as usize) < self.width && (iy as usize) < self.height)
            .then(|| Cell::new(ix as usize, iy as usize))
    }

    fn idx(&self, c: Cell) -> usize {
        c.iy * self.width + c.ix
    }

    pub fn get(&self, c: Cell) -> CellState {
        self.cells[self.idx(c)]
    }

    pub fn set(&mut self, c: Cell, state: CellState) {
        let i = self.idx(c);
        if self.cells[i] != state {
            self.cells[i] = state;
            self.revision += 1;
        }
    }

    pub fn state_at(&self, p: Point2) -> Result<CellState, GridError> {
        self.world_to_cell(p).map(|c| self.get(c))
    }

    pub fn cells(&self) -> impl Iterator<Item = (Cell, CellState)> + '_ {
        self.cells
            .iter()
            .enumerate()
            .map(|(i, s)| (Cell::new(i % self.width, i / self.width), *s))
    }

    pub fn count(&self, pred: impl Fn(CellState) -> bool) -> usize {
        self.cells.iter().filter(|s| pred(**s)).count()
    }

    /// Marks the cell containing `p` Occupied. Out-of-bounds points are counted
    /// and ignored; the return value says whether the point was inside.
    pub fn mark_occupied(&mut self, p: Point2) -> bool {
        match self.world_to_cell(p) {
            Ok(c) => {
                self.set(c, CellState::Occupied);
                true
            }
            Err(_) => {
                self.rejected_points += 1;
                false
            }
        }
    }

    /// Square inflation: cells within `ceil(d_safe / cell_size)` cells
    /// (Chebyshev) of an Occupied cell become Occupied, and cells out to
    /// `ceil((d_safe + rim_width) / cell_size)` become OuterRim unless they are
    /// already Occupied. Only the Occupied set present before the call seeds
    /// the inflation.
    pub fn inflate(&mut self, d_safe: f64, rim_width: f64) {
        self.inflate_with_rim_value(d_safe, rim_width, DEFAULT_RIM_VALUE);
    }

    pub fn inflate_with_rim_value(&mut self, d_safe: f64, rim_width: f64, rim_value: f64) {
        debug_assert!(d_safe >= 0.0 && rim_width >= 0.0);
        debug_assert!(rim_value > 0.0 && rim_value < 1.0);
        let occ_r = self.cells_for(d_safe);
        let rim_r = self.cells_for(d_safe + rim_width).max(occ_r);
        if rim_r == 0 {
            return;
        }
        let dist = self.chebyshev_distance_field(rim_r);
        let mut changed = false;
        for (state, d) in self.cells.iter_mut().zip(dist) {
            if state.is_occupied() || d > rim_r {
                continue;
            }
            let next = if d <= occ_r {
                CellState::Occupied
            } else {
                CellState::OuterRim(rim_value)
            };
            if *state != next {
                *state = next;
                changed = true;
            }
        }
        if changed {
            self.revision += 1;
        }
    }

    /// Converts a metric distance to a whole number of cells, rounding up.
    pub fn cells_for(&self, meters: f64) -> usize {
        ((meters / self.cell_size) - CELL_ROUNDING_EPS).ceil().max(0.0) as usize
    }

    /// Chebyshev distance (in cells) from every cell to the nearest Occupied
    /// cell, saturated at `cap + 1`. Separable: a horizontal pass per row, then
    /// a vertical min-max over a window of rows.
    fn chebyshev_distance_field(&self, cap: usize) -> Vec<usize> {
        let (w, h) = (self.width, self.height);
        let far = cap + 1;
        let mut row_dist = vec![far; w * h];
        for y in 0..h {
            let row = &self.cells[y * w..(y + 1) * w];
            let out = &mut row_dist[y * w..(y + 1) * w];
            let mut last: Option<usize> = None;
            for x in 0..w {
                if row[x].is_occupied() {
                    last = Some(x);
                }
                if let Some(l) = last {
                    out[x] = (x - l).min(far);
                }
            }
            last = None;
            for x in (0..w).rev() {
                if row[x].is_occupied() {
                    last = Some(x);
                }
                if let Some(l) = last {
                    out[x] = out[x].min((l - x).min(far));
                }
            }
        }
        let mut dist = vec![far; w * h];
        for y in 0..h {
            let y0 = y.saturating_sub(cap);
            let y1 = (y + cap).min(h - 1);
            for yy in y0..=y1 {
                let dy = y.abs_diff(yy);
                let src = &row_dist[yy * w..(yy + 1) * w];
                let dst = &mut dist[y * w..(y + 1) * w];
                for (d, &rd) in dst.iter_mut().zip(src) {
                    let cand = rd.max(dy);
                    if cand < *d {
                        *d = cand;
                    }
                }
            }
        }
        dist
    }

    /// Whether a cell state blocks flight under the given rim rule.
    pub fn blocks(&self, state: CellState, rim_blocks: bool) -> bool {
        match state {
            CellState::Occupied => true,
            CellState::OuterRim(_) => rim_blocks,
            CellState::Unknown => !self.unknown_traversable,
            CellState::Free => false,
        }
    }

    /// Visits every in-bounds cell touched by the segment `a → b`.
    pub fn traverse(&self, a: Point2, b: Point2, mut visit: impl FnMut(Cell, CellState)) {
        supercover(self.to_grid_coords(a), self.to_grid_coords(b), |ix, iy| {
            if let Some(c) = self.cell_from_signed(ix, iy) {
                visit(c, self.get(c));
            }
        });
    }

    /// True iff no cell touched by the segment blocks flight. OuterRim blocks
    /// only when `rim_blocks` is set. Endpoints outside the grid are an error.
    pub fn is_segment_free(&self, a: Point2, b: Point2, rim_blocks: bool) -> Result<bool, GridError> {
        self.world_to_cell(a)?;
        self.world_to_cell(b)?;
        let (ga, gb) = (self.to_grid_coords(a), self.to_grid_coords(b));
        Ok(supercover_while(ga, gb, |ix, iy| {
            self.cell_from_signed(ix, iy)
                .is_none_or(|c| !self.blocks(self.get(c), rim_blocks))
        }))
    }

    /// `is_segment_free` that maps out-of-bounds endpoints to `false`.
    pub fn segment_clear(&self, a: Point2, b: Point2, rim_blocks: bool) -> bool {
        self.is_segment_free(a, b, rim_blocks).unwrap_or(false)
    }

    /// Number of distinct OuterRim cells touched by the polyline.
    pub fn count_rim_cells(&self, path: &[Point2]) -> usize {
        let mut seen: HashSet<Cell> = HashSet::new();
        match path {
            [] => {}
            [p] => {
                if let Ok(c) = self.world_to_cell(*p) {
                    if self.get(c).is_rim() {
                        seen.insert(c);
                    }
                }
            }
            _ => {
                for w in path.windows(2) {
                    self.traverse(w[0], w[1], |c, s| {
                        if s.is_rim() {
                            seen.insert(c);
                        }
                    });
                }
            }
        }
        seen.len()
    }

    /// Copy of the cells covering `window`, snapped outward to this grid's
    /// lattice and clipped to its extent. Returns `None` without overlap.
    pub fn crop(&self, window: &Rect) -> Option<OccupancyGrid> {
        let overlap = window.intersection(&self.bounds())?;
        let (gx0, gy0) = self.to_grid_coords(overlap.min);
        let (gx1, gy1) = self.to_grid_coords(overlap.max);
        let x0 = (gx0 + CELL_ROUNDING_EPS).floor().max(0.0) as usize;
        let y0 = (gy0 + CELL_ROUNDING_EPS).floor().max(0.0) as usize;
        let x1 = ((gx1 - CELL_ROUNDING_EPS).ceil() as usize).min(self.width);
        let y1 = ((gy1 - CELL_ROUNDING_EPS).ceil() as usize).min(self.height);
        if x1 <= x0 || y1 <= y0 {
            return None;
        }
        let (w, h) = (x1 - x0, y1 - y0);
        let mut cells = Vec::with_capacity(w * h);
        for y in y0..y1 {
            cells.extend_from_slice(&self.cells[y * self.width + x0..y * self.width + x1]);
        }
        Some(OccupancyGrid {
            origin: self.origin + Point2::new(x0 as f64, y0 as f64) * self.cell_size,
            cell_size: self.cell_size,
            width: w,
            height: h,
            cells,
            unknown_traversable: self.unknown_traversable,
            rejected_points: 0,
            revision: 0,
        })
    }

    /// Ground-truth raster: every cell whose closed square intersects an
    /// obstacle is Occupied, the rest Free.
    pub fn rasterize(world: &WorldModel, bounds: Rect, cell_size: f64) -> Result<Self, GridError> {
        let mut grid = Self::covering(bounds, cell_size, CellState::Free)?;
        for poly in world.polygons() {
            let bb = poly.bounding_box();
            let (gx0, gy0) = grid.to_grid_coords(bb.min);
            let (gx1, gy1) = grid.to_grid_coords(bb.max);
            let x0 = (gx0.floor() as i64 - 1).max(0) as usize;
            let y0 = (gy0.floor() as i64 - 1).max(0) as usize;
            let x1 = ((gx1.ceil() as i64 + 1).max(0) as usize).min(grid.width);
            let y1 = ((gy1.ceil() as i64 + 1).max(0) as usize).min(grid.height);
            for iy in y0..y1 {
                for ix in x0..x1 {
                    let c = Cell::new(ix, iy);
                    let center = grid.cell_to_world(c);
                    let cell_rect = Rect::from_center(center, cell_size, cell_size);
                    if poly.intersects_rect(&cell_rect) {
                        grid.set(c, CellState::Occupied);
                    }
                }
            }
        }
        Ok(grid)
    }
}
