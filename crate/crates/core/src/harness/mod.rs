//! Scenarios, the deterministic simulation loop, and run metrics.
//!
//! Each control step senses, integrates the scan into the global grid, lets
//! the mission follower pick a setpoint (cropping and inflating its own local
//! window and planning as needed), and advances the vehicle.

mod batch;
pub mod config;
pub mod output;

use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use batch::{batch, batch_sequential, parallel_map, BatchSummary, Stat};
#[cfg(feature = "parallel")]
pub use batch::batch_parallel;
pub use config::{ConfigFile, ScenarioFile};

use crate::error::{ConfigError, HarnessError};
use crate::geometry::{polyline_length, Point2, Vec2};
use crate::grid_map::{CellState, OccupancyGrid, WorldModel, DEFAULT_CELL_SIZE};
use crate::local_window::WindowSpec;
use crate::mission::{Follower, FollowerFailure, FollowerState, MissionConfig, MissionEvent, MissionPlan};
use crate::rrt_star::PlannerConfig;
use crate::sensor::{integrate_scan, scan_noisy, SensorConfig};
use crate::vehicle::{
    apply_impulse, braking_distance, check_collision, step_towards, DynamicsConfig, VehicleState, DEFAULT_COLLISION_RADIUS,
    DEFAULT_DT,
};

pub const BUILTIN_SCENARIOS: [&str; 3] = ["world1", "world2", "empty"];
pub const DEFAULT_MAX_TIME: f64 = 300.0;

const WORLD1: &str = include_str!("../../scenarios/world1.toml");
const WORLD2: &str = include_str!("../../scenarios/world2.toml");
const EMPTY: &str = include_str!("../../scenarios/empty.toml");

/// A velocity impulse applied once, at the first step at or after `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disturbance {
    pub t: f64,
    pub dv: Vec2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dt: f64,
    /// Simulated-time cap, seconds.
    pub max_time: f64,
    pub collision_radius: f64,
    /// Global grid resolution, meters.
    pub cell_size: f64,
    pub disturbance: Option<Disturbance>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dt: DEFAULT_DT,
            max_time: DEFAULT_MAX_TIME,
            collision_radius: DEFAULT_COLLISION_RADIUS,
            cell_size: DEFAULT_CELL_SIZE,
            disturbance: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (field, v) in [
            ("run.dt", self.dt),
            ("run.max_time", self.max_time),
            ("run.cell_size", self.cell_size),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError::invalid(field, "must be finite and > 0"));
            }
        }
        if !(self.collision_radius >= 0.0) {
            return Err(ConfigError::invalid("run.collision_radius", "must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub world: WorldModel,
    pub mission: MissionPlan,
    pub mission_cfg: MissionConfig,
    pub sensor: SensorConfig,
    pub dynamics: DynamicsConfig,
    pub window: WindowSpec,
    pub planner: PlannerConfig,
    pub run: RunConfig,
}

impl Scenario {
    /// Scenario with default parameters, then the file's overrides.
    pub fn from_file_contents(text: &str, path: &Path) -> Result<Self, HarnessError> {
        let file = ScenarioFile::parse(text, path)?;
        let world = file.world.to_world()?;
        let waypoints = file.mission.waypoints.clone().ok_or_else(|| {
            HarnessError::InvalidScenario(format!("{}: mission.waypoints is required", path.display()))
        })?;
        let mut s = Scenario {
            name: file.name.clone(),
            world,
            mission: MissionPlan {
                global_waypoints: waypoints.into_iter().map(|[x, y]| Point2::new(x, y)).collect(),
                spacing: MissionConfig::default().spacing,
            },
            mission_cfg: MissionConfig::default(),
            sensor: SensorConfig::default(),
            dynamics: DynamicsConfig::default(),
            window: WindowSpec::default(),
            planner: PlannerConfig::default(),
            run: RunConfig::default(),
        };
        s.apply(&file.params());
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_file_contents(&text, path)
    }

    /// Applies parameter overrides. Call [`Scenario::validate`] afterwards.
    pub fn apply(&mut self, cfg: &ConfigFile) {
        cfg.apply_dynamics(&mut self.dynamics);
        cfg.apply_planner(&mut self.planner);
        cfg.apply_window(&mut self.window);
        cfg.apply_sensor(&mut self.sensor);
        cfg.apply_mission(&mut self.mission_cfg);
        cfg.apply_run(&mut self.run);
        if let Some(wps) = &cfg.mission.waypoints {
            self.mission.global_waypoints = wps.iter().map(|&[x, y]| Point2::new(x, y)).collect();
        }
        self.mission.spacing = self.mission_cfg.spacing;
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.mission.validate()?;
        self.mission_cfg.validate()?;
        self.sensor.validate()?;
        self.dynamics.validate()?;
        self.planner.validate()?;
        self.run.validate()?;
        self.window
            .validate()
            .map_err(|e| HarnessError::InvalidScenario(e.to_string()))?;
        for (label, p) in [("start", self.mission.start()), ("goal", self.mission.goal())] {
            if !self.world.bounds.contains(p) {
                return Err(HarnessError::InvalidScenario(format!("mission {label} lies outside the world")));
            }
            if self.world.clearance(p) <= self.run.collision_radius {
                return Err(HarnessError::InvalidScenario(format!("mission {label} touches an obstacle")));
            }
        }
        Ok(())
    }

    pub fn with_speed(mut self, v_cruise: f64) -> Self {
        self.dynamics.v_cruise = v_cruise;
        self
    }
}

/// One of the committed scenarios: `world1`, `world2` or `empty`.
pub fn builtin_scenario(name: &str) -> Result<Scenario, HarnessError> {
    let text = match name {
        "world1" => WORLD1,
        "world2" => WORLD2,
        "empty" => EMPTY,
        other => return Err(HarnessError::UnknownScenario(other.to_string())),
    };
    Scenario::from_file_contents(text, Path::new(&format!("scenarios/{name}.toml")))
}

/// Empty global grid covering the world bounds, every cell Unknown.
pub fn global_grid(scenario: &Scenario) -> Result<OccupancyGrid, HarnessError> {
    Ok(OccupancyGrid::covering(scenario.world.bounds, scenario.run.cell_size, CellState::Unknown)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventTag {
    None,
    Transition,
    MapExpanded,
    PlanAdopted,
}

impl EventTag {
    pub fn as_str(self) -> &'static str {
        match self {
            EventTag::None => "none",
            EventTag::Transition => "transition",
            EventTag::MapExpanded => "map_expanded",
            EventTag::PlanAdopted => "plan_adopted",
        }
    }

    fn of(events: &[MissionEvent]) -> Self {
        let has = |f: fn(&MissionEvent) -> bool| events.iter().any(f);
        if has(|e| matches!(e, MissionEvent::Transition { .. })) {
            EventTag::Transition
        } else if has(|e| matches!(e, MissionEvent::MapExpanded { .. })) {
            EventTag::MapExpanded
        } else if has(|e| matches!(e, MissionEvent::PlanAdopted { .. })) {
            EventTag::PlanAdopted
        } else {
            EventTag::None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub t: f64,
    pub position: Point2,
    pub velocity: Vec2,
    pub acceleration: Vec2,
    pub speed: f64,
    pub state: &'static str,
    pub event: EventTag,
    pub setpoint: Point2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Completed,
    Collided,
    Failed(FollowerFailure),
    TimeCap,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Completed => "completed",
            Termination::Collided => "collided",
            Termination::Failed(FollowerFailure::NoPath) => "failed_no_path",
            Termination::Failed(FollowerFailure::NoTarget) => "failed_no_target",
            Termination::TimeCap => "time_cap",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub seed: u64,
    /// Maximum observed speed, m/s.
    pub v_max: f64,
    /// Mean speed while avoiding, m/s; zero without any avoidance.
    pub v_avg_rrt: f64,
    /// Planner calls per second of planner wall time.
    pub f_rrt: f64,
    /// Planner calls per simulated second spent avoiding.
    pub plans_per_sim_second: f64,
    /// Traveled distance, meters.
    pub d_trv: f64,
    pub completed: bool,
    pub collided: bool,
    pub termination: Termination,
    pub expansions: usize,
    /// Wall-clock duration of the run, seconds.
    pub runtime: f64,
    pub sim_time: f64,
    pub steps: usize,
    pub plan_calls: usize,
    pub plan_successes: usize,
    pub avoid_episodes: usize,
    /// Smallest distance between the vehicle center and any obstacle, meters.
    pub min_clearance: f64,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub metrics: RunMetrics,
    /// One record per step, starting with the initial state at t = 0.
    pub trace: Vec<TraceRecord>,
    pub events: Vec<(f64, MissionEvent)>,
    /// Global grid at the end of the run.
    pub grid: OccupancyGrid,
    /// Incremental waypoints of the subdivided mission.
    pub incrementals: Vec<Point2>,
}

/// Simulates one run. Only the planner seed varies between seeds; the
/// result is bit-identical for a given scenario and seed.
pub fn run(scenario: &Scenario, seed: u64) -> Result<RunResult, HarnessError> {
    scenario.validate()?;
    let started = Instant::now();
    let cfg = &scenario.run;
    let dynamics = &scenario.dynamics;
    let mut grid = global_grid(scenario)?;
    let mission_cfg = scenario
        .mission_cfg
        .clone()
        .with_braking_distance(braking_distance(dynamics.v_cruise, dynamics));
    let planner = PlannerConfig {
        seed,
        ..scenario.planner.clone()
    };
    let mut follower = Follower::new(&scenario.mission, mission_cfg, planner, scenario.window.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let start = scenario.mission.start();
    let first_leg = scenario.mission.global_waypoints[1] - start;
    let mut vehicle = VehicleState::at_rest(start, first_leg.angle());
    let mut trace = vec![TraceRecord {
        t: 0.0,
        position: start,
        velocity: Vec2::ZERO,
        acceleration: Vec2::ZERO,
        speed: 0.0,
        state: follower.state().tag(),
        event: EventTag::None,
        setpoint: start,
    }];
    let mut events = Vec::new();
    let mut disturbance = cfg.disturbance;
    let mut min_clearance = scenario.world.clearance(start);
    let max_steps = (cfg.max_time / cfg.dt).ceil() as usize;

    let termination = 'sim: {
        for k in 1..=max_steps {
            let t = k as f64 * cfg.dt;
            let now = t - cfg.dt;
            if let Some(d) = disturbance.filter(|d| now >= d.t) {
                apply_impulse(&mut vehicle, d.dv, dynamics);
                disturbance = None;
            }
            let s = scan_noisy(&scenario.world, vehicle.position, vehicle.heading, &scenario.sensor, now, &mut rng);
            integrate_scan(&mut grid, &s);
            let out = follower.step(&grid, vehicle.position);
            events.extend(out.events.iter().cloned().map(|e| (now, e)));
            let tag = EventTag::of(&out.events);
            match follower.state() {
                FollowerState::Completed => {
                    push_record(&mut trace, t, &vehicle, "completed", tag, out.setpoint);
                    break 'sim Termination::Completed;
                }
                FollowerState::Failed(reason) => {
                    push_record(&mut trace, t, &vehicle, "failed", tag, out.setpoint);
                    break 'sim Termination::Failed(*reason);
                }
                _ => {}
            }
            vehicle = step_towards(&vehicle, out.setpoint, dynamics, cfg.dt);
            push_record(&mut trace, t, &vehicle, follower.state().tag(), tag, out.setpoint);
            min_clearance = min_clearance.min(scenario.world.clearance(vehicle.position));
            if check_collision(&vehicle, &scenario.world, cfg.collision_radius) {
                break 'sim Termination::Collided;
            }
        }
        Termination::TimeCap
    };

    let stats = follower.stats();
    let positions: Vec<Point2> = trace.iter().map(|r| r.position).collect();
    let avoiding: Vec<f64> = trace.iter().filter(|r| r.state == "avoiding").map(|r| r.speed).collect();
    let avoid_time = avoiding.len() as f64 * cfg.dt;
    let plan_secs = stats.plan_wall_time.as_secs_f64();
    let metrics = RunMetrics {
        seed,
        v_max: trace.iter().map(|r| r.speed).fold(0.0, f64::max),
        v_avg_rrt: if avoiding.is_empty() { 0.0 } else { avoiding.iter().sum::<f64>() / avoiding.len() as f64 },
        f_rrt: if plan_secs > 0.0 { stats.plan_calls as f64 / plan_secs } else { 0.0 },
        plans_per_sim_second: if avoid_time > 0.0 { stats.plan_calls as f64 / avoid_time } else { 0.0 },
        d_trv: polyline_length(&positions),
        completed: termination == Termination::Completed,
        collided: termination == Termination::Collided,
        termination,
        expansions: stats.expansions,
        runtime: started.elapsed().as_secs_f64(),
        sim_time: trace.last().map_or(0.0, |r| r.t),
        steps: trace.len(),
        plan_calls: stats.plan_calls,
        plan_successes: stats.plan_successes,
        avoid_episodes: stats.avoid_episodes,
        min_clearance,
    };
    Ok(RunResult {
        metrics,
        trace,
        events,
        grid,
        incrementals: follower.incrementals().to_vec(),
    })
}

fn push_record(trace: &mut Vec<TraceRecord>, t: f64, v: &VehicleState, state: &'static str, event: EventTag, setpoint: Point2) {
    trace.push(TraceRecord {
        t,
        position: v.position,
        velocity: v.velocity,
        acceleration: v.acceleration,
        speed: v.speed(),
        state,
        event,
        setpoint,
    });
}
