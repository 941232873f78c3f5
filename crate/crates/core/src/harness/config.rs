//! TOML scenario and parameter files.
//!
//! A parameter file has optional `[dynamics]`, `[planner]`, `[window]`,
//! `[sensor]`, `[mission]` and `[run]` sections; every key is optional and
//! overrides the value it names. A scenario file adds a `name`, a `[world]`
//! section with `rect` and `polygon` arrays, and `mission.waypoints`.

use std::path::Path;

use serde::Deserialize;

use crate::error::{HarnessError, WorldError};
use crate::geometry::{Point2, Rect};
use crate::grid_map::{ConvexPolygon, Obstacle, WorldModel};
use crate::local_window::WindowSpec;
use crate::mission::MissionConfig;
use crate::rrt_star::{NearRadius, PlannerConfig};
use crate::sensor::SensorConfig;
use crate::vehicle::DynamicsConfig;

use super::RunConfig;

type Xy = [f64; 2];

fn pt([x, y]: Xy) -> Point2 {
    Point2::new(x, y)
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsSection {
    pub jerk: Option<f64>,
    pub a_max: Option<f64>,
    pub v_cruise: Option<f64>,
    pub heading_rate: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerSection {
    pub max_iterations: Option<usize>,
    pub path_resolution: Option<f64>,
    pub goal_bias: Option<f64>,
    /// A fixed near radius in meters; absent keeps the shrinking radius.
    pub near_radius: Option<f64>,
    pub near_radius_cap: Option<f64>,
    pub goal_tolerance: Option<f64>,
    pub rim_blocks: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSection {
    pub d_corner: Option<f64>,
    pub d_safe: Option<f64>,
    pub rim_width: Option<f64>,
    pub expansion_step: Option<f64>,
    pub max_expansions: Option<u32>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorSection {
    pub fov: Option<f64>,
    pub range: Option<f64>,
    pub ray_count: Option<usize>,
    pub mount_yaw: Option<f64>,
    pub range_noise: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MissionSection {
    pub waypoints: Option<Vec<Xy>>,
    pub spacing: Option<f64>,
    pub arrival_tolerance: Option<f64>,
    pub lookahead_min: Option<usize>,
    pub off_course_threshold: Option<f64>,
    pub rim_weight: Option<f64>,
    pub setpoint_lookahead: Option<f64>,
    pub target_search_distance: Option<f64>,
    pub failures_before_expansion: Option<usize>,
    pub failures_at_ceiling: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub dt: Option<f64>,
    pub max_time: Option<f64>,
    pub collision_radius: Option<f64>,
    pub cell_size: Option<f64>,
}

/// Parameter overrides.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub dynamics: DynamicsSection,
    #[serde(default)]
    pub planner: PlannerSection,
    #[serde(default)]
    pub window: WindowSection,
    #[serde(default)]
    pub sensor: SensorSection,
    #[serde(default)]
    pub mission: MissionSection,
    #[serde(default)]
    pub run: RunSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RectEntry {
    pub min: Xy,
    pub max: Xy,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolygonEntry {
    pub vertices: Vec<Xy>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldSection {
    pub min: Xy,
    pub max: Xy,
    #[serde(default)]
    pub rect: Vec<RectEntry>,
    #[serde(default)]
    pub polygon: Vec<PolygonEntry>,
}

impl WorldSection {
    pub fn to_world(&self) -> Result<WorldModel, WorldError> {
        let mut obstacles: Vec<Obstacle> = self
            .rect
            .iter()
            .map(|r| Obstacle::Rect(Rect::new(pt(r.min), pt(r.max))))
            .collect();
        for (i, p) in self.polygon.iter().enumerate() {
            let poly = ConvexPolygon::new(p.vertices.iter().copied().map(pt).collect())
                .ok_or(WorldError::NotConvex { index: self.rect.len() + i })?;
            obstacles.push(Obstacle::Polygon(poly));
        }
        WorldModel::new(Rect::new(pt(self.min), pt(self.max)), obstacles)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    pub world: WorldSection,
    #[serde(default)]
    pub dynamics: DynamicsSection,
    #[serde(default)]
    pub planner: PlannerSection,
    #[serde(default)]
    pub window: WindowSection,
    #[serde(default)]
    pub sensor: SensorSection,
    #[serde(default)]
    pub mission: MissionSection,
    #[serde(default)]
    pub run: RunSection,
}

impl ScenarioFile {
    pub fn parse(text: &str, path: &Path) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn params(&self) -> ConfigFile {
        ConfigFile {
            dynamics: self.dynamics.clone(),
            planner: self.planner.clone(),
            window: self.window.clone(),
            sensor: self.sensor.clone(),
            mission: self.mission.clone(),
            run: self.run.clone(),
        }
    }
}

impl ConfigFile {
    pub fn parse(text: &str, path: &Path) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn apply_dynamics(&self, d: &mut DynamicsConfig) {
        let s = &self.dynamics;
        set(&mut d.jerk, s.jerk);
        set(&mut d.a_max, s.a_max);
        set(&mut d.v_cruise, s.v_cruise);
        if s.heading_rate.is_some() {
            d.heading_rate = s.heading_rate;
        }
    }

    pub fn apply_planner(&self, p: &mut PlannerConfig) {
        let s = &self.planner;
        set(&mut p.max_iterations, s.max_iterations);
        set(&mut p.path_resolution, s.path_resolution);
        set(&mut p.goal_bias, s.goal_bias);
        set(&mut p.goal_tolerance, s.goal_tolerance);
        set(&mut p.rim_blocks, s.rim_blocks);
        if let Some(r) = s.near_radius {
            p.near_radius = NearRadius::Fixed(r);
        } else if let Some(cap) = s.near_radius_cap {
            p.near_radius = NearRadius::Auto { cap };
        }
    }

    pub fn apply_window(&self, w: &mut WindowSpec) {
        let s = &self.window;
        if let Some(d) = s.d_corner {
            w.d_corner = d;
            w.base_d_corner = d;
        }
        set(&mut w.d_safe, s.d_safe);
        set(&mut w.rim_width, s.rim_width);
        set(&mut w.expansion_step, s.expansion_step);
        set(&mut w.max_expansions, s.max_expansions);
    }

    pub fn apply_sensor(&self, c: &mut SensorConfig) {
        let s = &self.sensor;
        set(&mut c.fov_deg, s.fov);
        set(&mut c.range, s.range);
        set(&mut c.ray_count, s.ray_count);
        set(&mut c.mount_yaw, s.mount_yaw);
        set(&mut c.range_noise, s.range_noise);
    }

    pub fn apply_mission(&self, m: &mut MissionConfig) {
        let s = &self.mission;
        set(&mut m.spacing, s.spacing);
        set(&mut m.arrival_tolerance, s.arrival_tolerance);
        set(&mut m.lookahead_min, s.lookahead_min);
        set(&mut m.off_course_threshold, s.off_course_threshold);
        set(&mut m.rim_weight, s.rim_weight);
        set(&mut m.target_search_distance, s.target_search_distance);
        set(&mut m.failures_before_expansion, s.failures_before_expansion);
        set(&mut m.failures_at_ceiling, s.failures_at_ceiling);
        if s.setpoint_lookahead.is_some() {
            m.setpoint_lookahead = s.setpoint_lookahead;
        }
    }

    pub fn apply_run(&self, r: &mut RunConfig) {
        let s = &self.run;
        set(&mut r.dt, s.dt);
        set(&mut r.max_time, s.max_time);
        set(&mut r.collision_radius, s.collision_radius);
        set(&mut r.cell_size, s.cell_size);
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}
