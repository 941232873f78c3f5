//! Forward-facing depth camera modeled as a planar fan of rays.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::ConfigError;
use crate::geometry::{Point2, Vec2};
use crate::grid_map::{OccupancyGrid, WorldModel};

/// Hits are pushed this far past the obstacle surface before they are binned,
/// so a face lying exactly on a cell boundary marks the cell behind it.
const SURFACE_NUDGE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct SensorConfig {
    /// Horizontal field of view, degrees.
    pub fov_deg: f64,
    /// Maximum sensing distance, meters.
    pub range: f64,
    pub ray_count: usize,
    /// Mounting yaw relative to the vehicle heading, radians.
    pub mount_yaw: f64,
    /// Standard deviation of Gaussian range noise; zero disables noise.
    pub range_noise: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            fov_deg: 87.0,
            range: 10.0,
            ray_count: 128,
            mount_yaw: 0.0,
            range_noise: 0.0,
        }
    }
}

impl SensorConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.fov_deg > 0.0 && self.fov_deg <= 180.0) {
            return Err(ConfigError::invalid("sensor.fov", "must lie in (0, 180] degrees"));
        }
        if !(self.range > 0.0) {
            return Err(ConfigError::invalid("sensor.range", "must be > 0"));
        }
        if self.ray_count < 2 {
            return Err(ConfigError::invalid("sensor.ray_count", "must be >= 2"));
        }
        if !(self.range_noise >= 0.0) {
            return Err(ConfigError::invalid("sensor.range_noise", "must be >= 0"));
        }
        Ok(())
    }

    /// Ray directions for a vehicle heading, from right-most to left-most.
    pub fn ray_angles(&self, heading: f64) -> impl Iterator<Item = f64> + '_ {
        let center = heading + self.mount_yaw;
        let half = self.fov_deg.to_radians() / 2.0;
        let n = self.ray_count;
        (0..n).map(move |i| center - half + (2.0 * half) * i as f64 / (n - 1) as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scan {
    pub origin: Point2,
    pub hits: Vec<Point2>,
    pub timestamp: f64,
}

/// Casts the ray fan and reports the nearest obstacle intersection of each
/// ray that lies within range.
pub fn scan(world: &WorldModel, position: Point2, heading: f64, cfg: &SensorConfig, timestamp: f64) -> Scan {
    let hits = cfg
        .ray_angles(heading)
        .filter_map(|theta| {
            let dir = Vec2::from_angle(theta);
            world
                .ray_cast(position, dir)
                .filter(|(t, _)| *t <= cfg.range)
                .map(|(t, _)| position + dir * t)
        })
        .collect();
    Scan {
        origin: position,
        hits,
        timestamp,
    }
}

/// [`scan`] with Gaussian range noise. Noisy ranges beyond `range` are dropped
/// and negative ranges clamp to zero.
pub fn scan_noisy<R: Rng + ?Sized>(
    world: &WorldModel,
    position: Point2,
    heading: f64,
    cfg: &SensorConfig,
    timestamp: f64,
    rng: &mut R,
) -> Scan {
    if cfg.range_noise == 0.0 {
        return scan(world, position, heading, cfg, timestamp);
    }
    let noise = Normal::new(0.0, cfg.range_noise).expect("validated sigma");
    let mut hits = Vec::new();
    for theta in cfg.ray_angles(heading) {
        let dir = Vec2::from_angle(theta);
        if let Some((t, _)) = world.ray_cast(position, dir) {
            let noisy = (t + noise.sample(rng)).max(0.0);
            if t <= cfg.range && noisy <= cfg.range {
                hits.push(position + dir * noisy);
            }
        }
    }
    Scan {
        origin: position,
        hits,
        timestamp,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IntegrateStats {
    pub marked: usize,
    pub skipped: usize,
}

/// Marks every hit Occupied. Cells are never cleared.
pub fn integrate_scan(grid: &mut OccupancyGrid, s: &Scan) -> IntegrateStats {
    let mut stats = IntegrateStats::default();
    for &hit in &s.hits {
        let p = match (hit - s.origin).normalized() {
            Some(dir) => hit + dir * SURFACE_NUDGE,
            None => hit,
        };
        if grid.mark_occupied(p) {
            stats.marked += 1;
        } else {
            stats.skipped += 1;
        }
    }
    stats
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Rect;
    use crate::grid_map::{CellState, Obstacle};

    fn wall_at(x: f64) -> WorldModel {
        WorldModel::new(
            Rect::new(Point2::new(-20.0, -20.0), Point2::new(20.0, 20.0)),
            vec![Obstacle::Rect(Rect::new(Point2::new(x, -10.0), Point2::new(x + 1.0, 10.0)))],
        )
        .unwrap()
    }

    fn odd_fan() -> SensorConfig {
        // An odd ray count puts one ray exactly on the heading.
        SensorConfig {
            ray_count: 129,
            ..SensorConfig::default()
        }
    }

    #[test]
    fn center_ray_hits_wall_at_five_meters() {
        let s = scan(&wall_at(5.0), Point2::ZERO, 0.0, &odd_fan(), 0.0);
        let center = s
            .hits
            .iter()
            .min_by(|a, b| a.y.abs().total_cmp(&b.y.abs()))
            .unwrap();
        assert!((center.distance(Point2::ZERO) - 5.0).abs() < 1e-9);
        assert!(center.y.abs() < 1e-12);
    }

    #[test]
    fn wall_beyond_range_is_invisible() {
        let s = scan(&wall_at(12.0), Point2::ZERO, 0.0, &SensorConfig::default(), 0.0);
        assert!(s.hits.is_empty());
    }

    #[test]
    fn obstacle_behind_is_invisible() {
        let s = scan(&wall_at(-5.0), Point2::ZERO, 0.0, &SensorConfig::default(), 0.0);
        assert!(s.hits.is_empty());
    }

    #[test]
    fn hits_respect_range() {
        let cfg = SensorConfig::default();
        let s = scan(&wall_at(8.0), Point2::ZERO, 0.3, &cfg, 0.0);
        assert!(!s.hits.is_empty());
        assert!(s.hits.iter().all(|h| h.norm() <= cfg.range + 1e-12));
    }

    #[test]
    fn fan_spans_fov() {
        let cfg = SensorConfig::default();
        let angles: Vec<f64> = cfg.ray_angles(0.0).collect();
        assert_eq!(angles.len(), 128);
        assert!((angles[0] + 87f64.to_radians() / 2.0).abs() < 1e-12);
        assert!((angles[127] - 87f64.to_radians() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn validate_rejects_bad_configs() {
        let bad = [
            SensorConfig { fov_deg: 0.0, ..Default::default() },
            SensorConfig { fov_deg: 181.0, ..Default::default() },
            SensorConfig { range: 0.0, ..Default::default() },
            SensorConfig { ray_count: 1, ..Default::default() },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
        assert!(SensorConfig::default().validate().is_ok());
    }

    fn grid() -> OccupancyGrid {
        OccupancyGrid::new(Point2::ZERO, 0.5, 20, 20, CellState::Unknown).unwrap()
    }

    #[test]
    fn integrate_empty_scan_is_noop() {
        let mut g = grid();
        let before = g.clone();
        let stats = integrate_scan(&mut g, &Scan { origin: Point2::ZERO, hits: vec![], timestamp: 0.0 });
        assert_eq!(stats, IntegrateStats::default());
        assert_eq!(g, before);
    }

    #[test]
    fn integrate_three_distinct_cells() {
        let mut g = grid();
        let hits = vec![Point2::new(1.2, 1.2), Point2::new(3.2, 1.2), Point2::new(5.2, 7.7)];
        let stats = integrate_scan(&mut g, &Scan { origin: Point2::new(0.1, 0.1), hits, timestamp: 0.0 });
        assert_eq!(stats.marked, 3);
        assert_eq!(g.count(CellState::is_occupied), 3);
    }

    #[test]
    fn integrate_skips_out_of_bounds() {
        let mut g = grid();
        let before = g.count(CellState::is_occupied);
        let stats = integrate_scan(
            &mut g,
            &Scan { origin: Point2::new(1.0, 1.0), hits: vec![Point2::new(50.0, 1.0)], timestamp: 0.0 },
        );
        assert_eq!(stats.skipped, 1);
        assert_eq!(g.rejected_points(), 1);
        assert_eq!(g.count(CellState::is_occupied), before);
    }

    #[test]
    fn noise_free_noisy_scan_matches_plain() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let w = wall_at(4.0);
        let cfg = SensorConfig::default();
        assert_eq!(
            scan_noisy(&w, Point2::ZERO, 0.0, &cfg, 0.0, &mut rng),
            scan(&w, Point2::ZERO, 0.0, &cfg, 0.0)
        );
    }
}
