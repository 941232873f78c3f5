//! Independent oracles and fixtures shared by the integration tests.
//!
//! Nothing here calls into the code under test for the quantity being
//! checked: inflation is recomputed by brute force, cell traversal by exact
//! segment/box clipping, and shortest paths by Dijkstra on the cell graph.
#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rrt_avoid::grid_map::{Cell, CellState, OccupancyGrid};
use rrt_avoid::local_window::LocalMap;
use rrt_avoid::Point2;

pub const EPS: f64 = 1e-9;

pub fn local(grid: OccupancyGrid) -> LocalMap {
    LocalMap {
        window: grid.bounds(),
        grid,
        source_revision: 0,
    }
}

/// Whether the closed segment `a → b` touches the closed axis-aligned box,
/// grown by `EPS`. Liang–Barsky clipping.
pub fn segment_touches_box(a: Point2, b: Point2, min: Point2, max: Point2) -> bool {
    let (min, max) = (
        Point2::new(min.x - EPS, min.y - EPS),
        Point2::new(max.x + EPS, max.y + EPS),
    );
    let d = b - a;
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for (p, q) in [
        (-d.x, a.x - min.x),
        (d.x, max.x - a.x),
        (-d.y, a.y - min.y),
        (d.y, max.y - a.y),
    ] {
        if p == 0.0 {
            if q < 0.0 {
                return false;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                t0 = t0.max(r);
            } else {
                t1 = t1.min(r);
            }
            if t0 > t1 {
                return false;
            }
        }
    }
    true
}

fn cell_box(grid: &OccupancyGrid, c: Cell) -> (Point2, Point2) {
    let o = grid.origin();
    let s = grid.cell_size();
    let min = Point2::new(o.x + c.ix as f64 * s, o.y + c.iy as f64 * s);
    (min, Point2::new(min.x + s, min.y + s))
}

/// Every in-bounds cell the segment touches, by testing each cell's box.
pub fn touched_cells(grid: &OccupancyGrid, a: Point2, b: Point2) -> HashSet<Cell> {
    let mut out = HashSet::new();
    for iy in 0..grid.height() {
        for ix in 0..grid.width() {
            let c = Cell::new(ix, iy);
            let (min, max) = cell_box(grid, c);
            if segment_touches_box(a, b, min, max) {
                out.insert(c);
            }
        }
    }
    out
}

/// Distinct OuterRim cells touched by a polyline.
pub fn rim_cells_oracle(grid: &OccupancyGrid, path: &[Point2]) -> usize {
    let mut seen = HashSet::new();
    for w in path.windows(2) {
        for c in touched_cells(grid, w[0], w[1]) {
            if grid.get(c).is_rim() {
                seen.insert(c);
            }
        }
    }
    seen.len()
}

/// Whether `p` lies in the half-open extent `[min, max)` of the grid.
pub fn inside(grid: &OccupancyGrid, p: Point2) -> bool {
    let o = grid.origin();
    let s = grid.cell_size();
    p.x >= o.x && p.y >= o.y && p.x < o.x + grid.width() as f64 * s && p.y < o.y + grid.height() as f64 * s
}

/// Segment freedom by brute force over all cells. Endpoints outside the
/// grid never count as free.
pub fn segment_free_oracle(grid: &OccupancyGrid, a: Point2, b: Point2, rim_blocks: bool) -> bool {
    inside(grid, a)
        && inside(grid, b)
        && touched_cells(grid, a, b).into_iter().all(|c| match grid.get(c) {
        CellState::Occupied => false,
        CellState::OuterRim(_) => !rim_blocks,
        CellState::Unknown => grid.unknown_traversable,
        CellState::Free => true,
    })
}

/// Square inflation recomputed cell by cell from the Chebyshev distance to
/// the nearest seed.
pub fn inflate_oracle(grid: &OccupancyGrid, d_safe: f64, rim_width: f64) -> Vec<CellState> {
    let cells_for = |m: f64| ((m / grid.cell_size()) - 1e-9).ceil().max(0.0) as usize;
    let occ_r = cells_for(d_safe);
    let rim_r = cells_for(d_safe + rim_width).max(occ_r);
    let seeds: Vec<Cell> = grid
        .cells()
        .filter(|(_, s)| s.is_occupied())
        .map(|(c, _)| c)
        .collect();
    let mut out = Vec::with_capacity(grid.width() * grid.height());
    for iy in 0..grid.height() {
        for ix in 0..grid.width() {
            let state = grid.get(Cell::new(ix, iy));
            let d = seeds
                .iter()
                .map(|s| s.ix.abs_diff(ix).max(s.iy.abs_diff(iy)))
                .min()
                .unwrap_or(usize::MAX);
            out.push(if state.is_occupied() || d <= occ_r {
                CellState::Occupied
            } else if d <= rim_r {
                CellState::OuterRim(0.5)
            } else {
                state
            });
        }
    }
    out
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

/// Shortest 8-connected path length between two cell centers over cells that
/// do not block flight (rim treated as blocking). Diagonal steps may not cut
/// a blocked corner. `None` if unreachable.
pub fn dijkstra_8(grid: &OccupancyGrid, start: Cell, goal: Cell) -> Option<f64> {
    let (w, h) = (grid.width(), grid.height());
    let idx = |c: Cell| c.iy * w + c.ix;
    let passable = |x: i64, y: i64| {
        x >= 0
            && y >= 0
            && (x as usize) < w
            && (y as usize) < h
            && !grid.blocks(grid.get(Cell::new(x as usize, y as usize)), true)
    };
    if !passable(start.ix as i64, start.iy as i64) || !passable(goal.ix as i64, goal.iy as i64) {
        return None;
    }
    let s = grid.cell_size();
    let mut dist = vec![f64::INFINITY; w * h];
    let mut heap = BinaryHeap::new();
    dist[idx(start)] = 0.0;
    heap.push(Entry(0.0, idx(start)));
    while let Some(Entry(d, i)) = heap.pop() {
        if d > dist[i] {
            continue;
        }
        if i == idx(goal) {
            return Some(d);
        }
        let (x, y) = ((i % w) as i64, (i / w) as i64);
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                if (dx, dy) == (0, 0) || !passable(x + dx, y + dy) {
                    continue;
                }
                if dx != 0 && dy != 0 && (!passable(x + dx, y) || !passable(x, y + dy)) {
                    continue;
                }
                let step = if dx != 0 && dy != 0 { s * std::f64::consts::SQRT_2 } else { s };
                let j = ((y + dy) as usize) * w + (x + dx) as usize;
                if d + step < dist[j] {
                    dist[j] = d + step;
                    heap.push(Entry(d + step, j));
                }
            }
        }
    }
    None
}

/// A `size`×`size` meter Free map with random axis-aligned blocks until at
/// least `density` of the cells are Occupied. The two corner regions
/// around `keep_clear` stay free.
pub fn random_block_map(seed: u64, size: f64, cell: f64, density: f64, keep_clear: &[Point2]) -> OccupancyGrid {
    let n = (size / cell).round() as usize;
    let mut grid = OccupancyGrid::new(Point2::ZERO, cell, n, n, CellState::Free).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target = (density * (n * n) as f64).ceil() as usize;
    let mut occupied = 0;
    while occupied < target {
        let bw = rng.random_range(2..=8usize);
        let bh = rng.random_range(2..=8usize);
        let x0 = rng.random_range(0..n - bw);
        let y0 = rng.random_range(0..n - bh);
        for iy in y0..y0 + bh {
            for ix in x0..x0 + bw {
                let c = Cell::new(ix, iy);
                let center = grid.cell_to_world(c);
                if keep_clear.iter().any(|k| k.distance(center) < 2.0) {
                    continue;
                }
                if !grid.get(c).is_occupied() {
                    grid.set(c, CellState::Occupied);
                    occupied += 1;
                }
            }
        }
    }
    grid
}

/// Cell centers reachable from `from` through cells that are not Occupied
/// (4-connected flood fill).
pub fn flood_fill(grid: &OccupancyGrid, from: Cell, passable: impl Fn(CellState) -> bool) -> HashSet<Cell> {
    let mut seen = HashSet::new();
    let mut stack = vec![from];
    while let Some(c) = stack.pop() {
        if !passable(grid.get(c)) || !seen.insert(c) {
            continue;
        }
        let (x, y) = (c.ix as i64, c.iy as i64);
        for (nx, ny) in [(x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)] {
            if nx >= 0 && ny >= 0 && (nx as usize) < grid.width() && (ny as usize) < grid.height() {
                stack.push(Cell::new(nx as usize, ny as usize));
            }
        }
    }
    seen
}

/// Median of a non-empty slice.
pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}
