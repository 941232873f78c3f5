//! Local planning window around the vehicle and its current target.
//!
//! The window is the bounding box of drone and target grown by `d_corner` on
//! every side. Its cells are cropped from the global grid and inflated on
//! their own, so an obstacle just outside the window contributes no safety
//! margin. That blind spot is why `d_corner` must be at least `d_safe`.

use crate::error::WindowError;
use crate::geometry::{Point2, Rect, Vec2};
use crate::grid_map::{OccupancyGrid, DEFAULT_RIM_WIDTH};

#[derive(Debug, Clone, PartialEq)]
pub struct WindowSpec {
    /// Current corner margin, meters.
    pub d_corner: f64,
    /// Corner margin restored by [`WindowSpec::reset`].
    pub base_d_corner: f64,
    pub d_safe: f64,
    pub rim_width: f64,
    pub expansion_step: f64,
    pub expansion_count: u32,
    pub max_expansions: u32,
}

impl Default for WindowSpec {
    fn default() -> Self {
        Self {
            d_corner: 4.0,
            base_d_corner: 4.0,
            d_safe: 3.0,
            rim_width: DEFAULT_RIM_WIDTH,
            expansion_step: 5.0,
            expansion_count: 0,
            max_expansions: 6,
        }
    }
}

impl WindowSpec {
    pub fn validate(&self) -> Result<(), WindowError> {
        if !(self.d_safe >= 0.0) || !(self.rim_width >= 0.0) {
            return Err(WindowError::Invalid("d_safe and rim_width must be >= 0".into()));
        }
        if !(self.d_corner > 0.0) || self.d_corner < self.d_safe {
            return Err(WindowError::Invalid(format!(
                "d_corner ({}) must be positive and at least d_safe ({})",
                self.d_corner, self.d_safe
            )));
        }
        if !(self.expansion_step > 0.0) {
            return Err(WindowError::Invalid("expansion_step must be > 0".into()));
        }
        Ok(())
    }

    /// Grows the corner margin by one step, or fails at the ceiling.
    pub fn maximize_map(&self) -> Result<WindowSpec, WindowError> {
        if self.expansion_count >= self.max_expansions {
            return Err(WindowError::ExpansionCeiling(self.max_expansions));
        }
        Ok(WindowSpec {
            d_corner: self.d_corner + self.expansion_step,
            expansion_count: self.expansion_count + 1,
            ..self.clone()
        })
    }

    pub fn at_ceiling(&self) -> bool {
        self.expansion_count >= self.max_expansions
    }

    pub fn reset(&mut self) {
        self.d_corner = self.base_d_corner;
        self.expansion_count = 0;
    }
}

/// Bounding box of `drone` and `target` grown by `d_corner` on all sides.
pub fn compute_window(drone: Point2, target: Point2, d_corner: f64) -> Rect {
    Rect::spanning(drone, target).expanded(d_corner)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalMap {
    /// Cropped and inflated cells. Its extent is the requested window snapped
    /// outward to the global lattice and clipped to the global grid.
    pub grid: OccupancyGrid,
    /// The requested window.
    pub window: Rect,
    /// Revision of the global grid the map was cut from.
    pub source_revision: u64,
}

impl LocalMap {
    pub fn bounds(&self) -> Rect {
        self.grid.bounds()
    }
}

/// Copies the window's cells out of `global` and inflates them.
pub fn extract_local_map(
    global: &OccupancyGrid,
    window: Rect,
    d_safe: f64,
    rim_width: f64,
) -> Result<LocalMap, WindowError> {
    let mut grid = global.crop(&window).ok_or(WindowError::NoOverlap)?;
    grid.inflate(d_safe, rim_width);
    Ok(LocalMap {
        grid,
        window,
        source_revision: global.revision(),
    })
}

/// Caches the last extracted map and reuses it while neither the snapped
/// window nor the global grid has changed.
#[derive(Debug, Default)]
pub struct LocalMapCache {
    last: Option<(Rect, LocalMap)>,
}

impl LocalMapCache {
    pub fn get(
        &mut self,
        global: &OccupancyGrid,
        window: Rect,
        d_safe: f64,
        rim_width: f64,
    ) -> Result<&LocalMap, WindowError> {
        let snapped = snap_outward(global, window);
        let reuse = matches!(&self.last, Some((key, map))
            if *key == snapped && map.source_revision == global.revision());
        if !reuse {
            let mut map = extract_local_map(global, window, d_safe, rim_width)?;
            map.window = window;
            self.last = Some((snapped, map));
        } else if let Some((_, map)) = self.last.as_mut() {
            map.window = window;
        }
        Ok(&self.last.as_ref().expect("filled above").1)
    }
}

fn snap_outward(global: &OccupancyGrid, window: Rect) -> Rect {
    let cs = global.cell_size();
    let o = global.origin();
    let snap = |v: f64, o: f64, up: bool| {
        let k = (v - o) / cs;
        let k = if up { (k - 1e-9).ceil() } else { (k + 1e-9).floor() };
        o + k * cs
    };
    Rect {
        min: Vec2::new(snap(window.min.x, o.x, false), snap(window.min.y, o.y, false)),
        max: Vec2::new(snap(window.max.x, o.x, true), snap(window.max.y, o.y, true)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_map::{Cell, CellState};

    #[test]
    fn window_examples() {
        let w = compute_window(Point2::ZERO, Point2::new(10.0, 0.0), 4.0);
        assert_eq!(w, Rect::new(Point2::new(-4.0, -4.0), Point2::new(14.0, 4.0)));
        let w = compute_window(Point2::new(5.0, 5.0), Point2::new(5.0, 5.0), 3.0);
        assert_eq!(w, Rect::new(Point2::new(2.0, 2.0), Point2::new(8.0, 8.0)));
    }

    #[test]
    fn expansion_extends_each_side_by_step() {
        let spec = WindowSpec::default();
        let grown = spec.maximize_map().unwrap();
        let (a, b) = (Point2::new(1.0, 2.0), Point2::new(7.0, -3.0));
        let w0 = compute_window(a, b, spec.d_corner);
        let w1 = compute_window(a, b, grown.d_corner);
        assert_eq!(w0.min.x - w1.min.x, spec.expansion_step);
        assert_eq!(w1.max.y - w0.max.y, spec.expansion_step);
    }

    #[test]
    fn maximize_map_steps_and_ceiling() {
        let spec = WindowSpec::default();
        let once = spec.maximize_map().unwrap();
        assert_eq!(once.d_corner, 9.0);
        assert_eq!(once.expansion_count, 1);
        let twice = once.maximize_map().unwrap();
        assert_eq!(twice.d_corner, spec.d_corner + 2.0 * spec.expansion_step);

        let mut s = spec.clone();
        for _ in 0..spec.max_expansions {
            s = s.maximize_map().unwrap();
        }
        assert_eq!(s.maximize_map(), Err(WindowError::ExpansionCeiling(6)));
        s.reset();
        assert_eq!(s.d_corner, 4.0);
        assert_eq!(s.expansion_count, 0);
    }

    #[test]
    fn spec_rejects_corner_smaller_than_safety() {
        let spec = WindowSpec { d_corner: 2.0, ..Default::default() };
        assert!(spec.validate().is_err());
        assert!(WindowSpec::default().validate().is_ok());
    }

    fn global() -> OccupancyGrid {
        OccupancyGrid::new(Point2::new(-20.0, -20.0), 0.5, 80, 80, CellState::Unknown).unwrap()
    }

    #[test]
    fn empty_region_has_no_obstacles() {
        let local = extract_local_map(
            &global(),
            compute_window(Point2::ZERO, Point2::new(5.0, 0.0), 4.0),
            3.0,
            0.5,
        )
        .unwrap();
        assert_eq!(local.grid.count(|s| s.is_occupied() || s.is_rim()), 0);
    }

    #[test]
    fn outside_obstacle_leaves_no_trace() {
        let mut g = global();
        // Just outside the window's right edge, well within d_safe of it.
        g.mark_occupied(Point2::new(9.2, 0.1));
        let window = compute_window(Point2::ZERO, Point2::new(5.0, 0.0), 4.0);
        let local = extract_local_map(&g, window, 3.0, 0.5).unwrap();
        assert_eq!(local.grid.count(|s| s.is_occupied() || s.is_rim()), 0);
    }

    #[test]
    fn zero_overlap_is_error() {
        let window = compute_window(Point2::new(100.0, 100.0), Point2::new(110.0, 100.0), 4.0);
        assert_eq!(
            extract_local_map(&global(), window, 3.0, 0.5).unwrap_err(),
            WindowError::NoOverlap
        );
    }

    #[test]
    fn local_map_contains_window() {
        let window = compute_window(Point2::new(0.3, 0.1), Point2::new(5.7, 1.9), 4.0);
        let local = extract_local_map(&global(), window, 3.0, 0.5).unwrap();
        assert!(local.bounds().contains_rect(&window));
    }

    #[test]
    fn cache_reuses_until_grid_changes() {
        let mut g = global();
        let mut cache = LocalMapCache::default();
        let window = compute_window(Point2::ZERO, Point2::new(5.0, 0.0), 4.0);
        let first = cache.get(&g, window, 3.0, 0.5).unwrap().clone();
        let again = cache.get(&g, window, 3.0, 0.5).unwrap().clone();
        assert_eq!(first, again);
        g.set(Cell::new(45, 40), CellState::Occupied);
        let updated = cache.get(&g, window, 3.0, 0.5).unwrap();
        assert!(updated.grid.count(CellState::is_occupied) > 0);
    }
}
