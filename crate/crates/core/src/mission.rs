//! Mission follower: keeps the vehicle on the predefined survey path and
//! detours around obstacles with RRT* plans.
//!
//! The global mission is subdivided into incremental waypoints. While the
//! direct line ahead is clear the follower emits those waypoints. When it is
//! obstructed, or the vehicle was pushed off the line, the follower picks the
//! first vacant waypoint past the obstruction as avoidance target, replans
//! toward it once per step, and resumes the mission at that waypoint's index
//! on arrival.

use crate::error::{ConfigError, WindowError};
use crate::geometry::{point_segment_distance, Point2};
use crate::grid_map::{CellState, OccupancyGrid};
use crate::local_window::{compute_window, LocalMap, LocalMapCache, WindowSpec};
use crate::rrt_star::{path_length, plan, FailureReason, PlannedPath, PlannerConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct MissionPlan {
    pub global_waypoints: Vec<Point2>,
    /// Maximum distance between incremental waypoints, meters.
    pub spacing: f64,
}

impl MissionPlan {
    pub fn new(global_waypoints: Vec<Point2>, spacing: f64) -> Result<Self, ConfigError> {
        let plan = Self {
            global_waypoints,
            spacing,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.global_waypoints.len() < 2 {
            return Err(ConfigError::invalid("mission.waypoints", "need at least two"));
        }
        if self.global_waypoints.iter().any(|p| !p.is_finite()) {
            return Err(ConfigError::invalid("mission.waypoints", "must be finite"));
        }
        if !(self.spacing > 0.0) {
            return Err(ConfigError::invalid("mission.spacing", "must be > 0"));
        }
        Ok(())
    }

    pub fn start(&self) -> Point2 {
        self.global_waypoints[0]
    }

    pub fn goal(&self) -> Point2 {
        *self.global_waypoints.last().expect("validated")
    }
}

/// Incremental waypoint along the subdivided mission.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Incremental {
    pub position: Point2,
    /// Whether this point is one of the original mission vertices.
    pub is_vertex: bool,
    /// Distance along the mission from its start, meters.
    pub station: f64,
}

/// Points along the mission polyline no more than `spacing` apart. Every
/// original vertex appears exactly once; segments are split evenly.
pub fn subdivide(plan: &MissionPlan) -> Vec<Point2> {
    subdivide_detailed(plan).into_iter().map(|w| w.position).collect()
}

pub fn subdivide_detailed(plan: &MissionPlan) -> Vec<Incremental> {
    let wps = &plan.global_waypoints;
    let mut out = vec![Incremental {
        position: wps[0],
        is_vertex: true,
        station: 0.0,
    }];
    let mut station = 0.0;
    for w in wps.windows(2) {
        let len = w[0].distance(w[1]);
        if len == 0.0 {
            continue;
        }
        let pieces = ((len / plan.spacing) - 1e-9).ceil().max(1.0) as usize;
        for k in 1..=pieces {
            let t = k as f64 / pieces as f64;
            out.push(Incremental {
                position: if k == pieces { w[1] } else { w[0].lerp(w[1], t) },
                is_vertex: k == pieces,
                station: station + len * t,
            });
        }
        station += len;
    }
    out
}

pub const DEFAULT_SETPOINT_LOOKAHEAD: f64 = 12.0;

#[derive(Debug, Clone, PartialEq)]
pub struct MissionConfig {
    pub spacing: f64,
    /// Distance at which a waypoint or avoidance target counts as reached.
    pub arrival_tolerance: f64,
    /// Minimum number of incremental steps between an obstruction and the
    /// avoidance target.
    pub lookahead_min: usize,
    /// Lateral distance from the mission line that triggers a redirection.
    pub off_course_threshold: f64,
    /// Weight of each outer-rim cell in the current-path cost.
    pub rim_weight: f64,
    /// How far ahead along the mission setpoints are emitted and the direct
    /// path is checked, meters. `None` uses [`DEFAULT_SETPOINT_LOOKAHEAD`];
    /// see [`MissionConfig::with_braking_distance`].
    pub setpoint_lookahead: Option<f64>,
    /// How far ahead along the mission a vacant avoidance target is searched,
    /// before any map expansion, meters.
    pub target_search_distance: f64,
    /// Consecutive failed plans without a usable path before the window is
    /// expanded.
    pub failures_before_expansion: usize,
    /// Consecutive failed plans at the expansion ceiling before the mission
    /// gives up.
    pub failures_at_ceiling: usize,
}

impl Default for MissionConfig {
    fn default() -> Self {
        Self {
            spacing: 2.0,
            arrival_tolerance: 0.75,
            lookahead_min: 1,
            off_course_threshold: 1.5,
            rim_weight: 0.8,
            setpoint_lookahead: None,
            target_search_distance: 20.0,
            failures_before_expansion: 5,
            failures_at_ceiling: 250,
        }
    }
}

impl MissionConfig {
    pub fn lookahead(&self) -> f64 {
        self.setpoint_lookahead.unwrap_or(DEFAULT_SETPOINT_LOOKAHEAD)
    }

    /// Fills in an unset lookahead so the vehicle can reach cruise speed and
    /// still stop at the farthest setpoint: braking distance plus two
    /// waypoint spacings.
    pub fn with_braking_distance(mut self, braking: f64) -> Self {
        if self.setpoint_lookahead.is_none() {
            self.setpoint_lookahead = Some(braking + 2.0 * self.spacing);
        }
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("mission.spacing", self.spacing),
            ("mission.arrival_tolerance", self.arrival_tolerance),
            ("mission.off_course_threshold", self.off_course_threshold),
            ("mission.setpoint_lookahead", self.lookahead()),
            ("mission.target_search_distance", self.target_search_distance),
        ];
        for (field, v) in positive {
            if !(v > 0.0) {
                return Err(ConfigError::invalid(field, "must be > 0"));
            }
        }
        if !(self.rim_weight >= 0.0) {
            return Err(ConfigError::invalid("mission.rim_weight", "must be >= 0"));
        }
        if self.lookahead_min < 1 {
            return Err(ConfigError::invalid("mission.lookahead_min", "must be >= 1"));
        }
        Ok(())
    }
}

/// Cost of continuing on the current path: its remaining length plus a
/// penalty for every outer-rim cell it passes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathCost {
    pub c_length: f64,
    pub n_or: usize,
    pub cell_size: f64,
    pub rim_weight: f64,
}

impl PathCost {
    pub fn c_new(&self) -> f64 {
        self.c_length + self.n_or as f64 * self.cell_size * self.rim_weight
    }
}

/// Cost of the remaining polyline (starting at the current position).
pub fn path_cost_current(remaining: &[Point2], map: &LocalMap, rim_weight: f64) -> PathCost {
    PathCost {
        c_length: path_length(remaining),
        n_or: map.grid.count_rim_cells(remaining),
        cell_size: map.grid.cell_size(),
        rim_weight,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Adopt,
    Keep,
}

/// Adopt the incoming path only if it is strictly shorter than the current
/// path's penalized cost.
pub fn accept_or_keep(current: &PathCost, incoming: &PlannedPath) -> Decision {
    if incoming.length < current.c_new() {
        Decision::Adopt
    } else {
        Decision::Keep
    }
}

/// A direct mission segment may not touch the outer rim.
pub fn check_direct(map: &LocalMap, pos: Point2, wp: Point2) -> bool {
    map.grid.segment_clear(pos, wp, true)
}

/// Skip-node smoothing. `waypoints[0]` is the current position; while the
/// node after next is reachable in a straight line (rim allowed), the next
/// node is dropped.
pub fn smooth(path: &PlannedPath, map: &LocalMap) -> PlannedPath {
    let wps = &path.waypoints;
    if wps.len() < 3 {
        return path.clone();
    }
    let anchor = wps[0];
    let mut skip = 1;
    while skip + 1 < wps.len() && map.grid.segment_clear(anchor, wps[skip + 1], false) {
        skip += 1;
    }
    let mut out = Vec::with_capacity(wps.len() - skip + 1);
    out.push(anchor);
    out.extend_from_slice(&wps[skip..]);
    PlannedPath::new(out)
}

/// Whether a cell is a valid place to resume the mission.
fn vacant(grid: &OccupancyGrid, p: Point2) -> bool {
    match grid.state_at(p) {
        Ok(CellState::Free) => true,
        Ok(CellState::Unknown) => grid.unknown_traversable,
        _ => false,
    }
}

/// Outcome of a target search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TargetSearch {
    Found { position: Point2, index: usize },
    /// Nothing vacant inside the map; the window must grow.
    NeedsExpansion,
}

/// Picks the avoidance target among `incrementals[current + 1..]`.
///
/// If some waypoint from `current` on is obstructed (its cell is not vacant,
/// or the mission segment into it is blocked), the target is the first vacant
/// waypoint at least `lookahead_min` steps past the end of that obstruction.
/// Without any obstruction the vehicle was pushed off course, and the target
/// is the vacant forward waypoint closest to `pos`.
pub fn select_avoidance_target(
    map: &LocalMap,
    incrementals: &[Point2],
    current: usize,
    pos: Point2,
    lookahead_min: usize,
) -> TargetSearch {
    let grid = &map.grid;
    let n = incrementals.len();
    // Index of the obstruction touching waypoint k: the waypoint itself when
    // its cell is taken, the one before it when only the segment into k is.
    let obstruction_at = |k: usize| {
        if !vacant(grid, incrementals[k]) {
            Some(k)
        } else if k > current && !grid.segment_clear(incrementals[k - 1], incrementals[k], true) {
            Some(k - 1)
        } else {
            None
        }
    };
    let first_blocked = (current..n)
        .take_while(|&k| grid.in_bounds(incrementals[k]))
        .find_map(|k| obstruction_at(k).map(|o| (k, o)));

    match first_blocked {
        Some((start, obstruction)) => {
            let mut last_blocked = obstruction;
            let mut k = start + 1;
            while k < n && grid.in_bounds(incrementals[k]) {
                let here = obstruction_at(k);
                if let Some(o) = here {
                    last_blocked = last_blocked.max(o);
                }
                if here.is_none_or(|o| o < k) && k >= last_blocked + lookahead_min {
                    return TargetSearch::Found {
                        position: incrementals[k],
                        index: k,
                    };
                }
                k += 1;
            }
            TargetSearch::NeedsExpansion
        }
        None => {
            let best = (current.max(1)..n)
                .filter(|&k| grid.in_bounds(incrementals[k]) && vacant(grid, incrementals[k]))
                .min_by(|&a, &b| {
                    pos.distance(incrementals[a])
                        .total_cmp(&pos.distance(incrementals[b]))
                        .then(a.cmp(&b))
                });
            match best {
                Some(index) => TargetSearch::Found {
                    position: incrementals[index],
                    index,
                },
                None => TargetSearch::NeedsExpansion,
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FollowerFailure {
    /// No plan could be found even with the largest window.
    NoPath,
    /// No vacant avoidance target exists even with the largest window.
    NoTarget,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FollowerState {
    OnPath {
        next: usize,
    },
    Avoiding {
        /// Remaining detour, starting at the position it was last updated
        /// from; `None` until the first plan succeeds.
        path: Option<PlannedPath>,
        target: Point2,
        target_index: usize,
    },
    Completed,
    Failed(FollowerFailure),
}

impl FollowerState {
    pub fn tag(&self) -> &'static str {
        match self {
            FollowerState::OnPath { .. } => "on_path",
            FollowerState::Avoiding { .. } => "avoiding",
            FollowerState::Completed => "completed",
            FollowerState::Failed(_) => "failed",
        }
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self, FollowerState::Completed | FollowerState::Failed(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MissionEvent {
    Transition { from: &'static str, to: &'static str },
    TargetSelected { index: usize },
    PlanSucceeded { length: f64 },
    PlanFailed { reason: FailureReason },
    PlanAdopted { length: f64, previous_cost: Option<f64> },
    PlanKept { incoming: f64, current_cost: f64 },
    MapExpanded { d_corner: f64 },
    Resumed { index: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub setpoint: Point2,
    pub events: Vec<MissionEvent>,
}

/// Counters the harness turns into run metrics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FollowerStats {
    pub plan_calls: usize,
    pub plan_successes: usize,
    pub plan_wall_time: std::time::Duration,
    pub expansions: usize,
    pub avoid_episodes: usize,
    pub transitions: usize,
}

/// The stepping state machine.
#[derive(Debug)]
pub struct Follower {
    incrementals: Vec<Incremental>,
    points: Vec<Point2>,
    cfg: MissionConfig,
    planner: PlannerConfig,
    window: WindowSpec,
    state: FollowerState,
    cache: LocalMapCache,
    consecutive_failures: usize,
    stats: FollowerStats,
}

impl Follower {
    pub fn new(mission: &MissionPlan, cfg: MissionConfig, planner: PlannerConfig, window: WindowSpec) -> Self {
        let incrementals = subdivide_detailed(&MissionPlan {
            global_waypoints: mission.global_waypoints.clone(),
            spacing: cfg.spacing.min(mission.spacing),
        });
        let points = incrementals.iter().map(|w| w.position).collect();
        Self {
            incrementals,
            points,
            cfg,
            planner,
            window,
            state: FollowerState::OnPath { next: 1 },
            cache: LocalMapCache::default(),
            consecutive_failures: 0,
            stats: FollowerStats::default(),
        }
    }

    pub fn state(&self) -> &FollowerState {
        &self.state
    }

    pub fn incrementals(&self) -> &[Point2] {
        &self.points
    }

    pub fn window_spec(&self) -> &WindowSpec {
        &self.window
    }

    pub fn stats(&self) -> &FollowerStats {
        &self.stats
    }

    pub fn config(&self) -> &MissionConfig {
        &self.cfg
    }

    /// Whether incremental `k` is reached or already behind the vehicle while
    /// it stays near the mission segment leading into it.
    fn passed(&self, pos: Point2, k: usize) -> bool {
        let wp = self.points[k];
        if pos.distance(wp) <= self.cfg.arrival_tolerance {
            return true;
        }
        let prev = self.points[k - 1];
        let Some(dir) = (wp - prev).normalized() else {
            return true;
        };
        (pos - wp).dot(dir) >= 0.0 && (pos - prev).cross(dir).abs() <= self.cfg.off_course_threshold
    }

    fn set_state(&mut self, next: FollowerState, events: &mut Vec<MissionEvent>) {
        let (from, to) = (self.state.tag(), next.tag());
        if from != to {
            events.push(MissionEvent::Transition { from, to });
            self.stats.transitions += 1;
            if matches!(next, FollowerState::Avoiding { .. }) {
                self.stats.avoid_episodes += 1;
            }
        }
        self.state = next;
    }

    fn local_map(&mut self, global: &OccupancyGrid, a: Point2, b: Point2) -> Result<LocalMap, WindowError> {
        let window = compute_window(a, b, self.window.d_corner);
        self.cache
            .get(global, window, self.window.d_safe, self.window.rim_width)
            .cloned()
    }

    /// Advances the state machine by one control step.
    pub fn step(&mut self, global: &OccupancyGrid, pos: Point2) -> StepOutput {
        let mut events = Vec::new();
        let setpoint = match self.state.clone() {
            FollowerState::OnPath { next } => self.step_on_path(global, pos, next, &mut events),
            FollowerState::Avoiding { .. } => self.step_avoiding(global, pos, &mut events),
            FollowerState::Completed => *self.points.last().expect("non-empty"),
            FollowerState::Failed(_) => pos,
        };
        StepOutput { setpoint, events }
    }

    fn step_on_path(&mut self, global: &OccupancyGrid, pos: Point2, mut next: usize, events: &mut Vec<MissionEvent>) -> Point2 {
        let last = self.points.len() - 1;
        while next < last && self.passed(pos, next) {
            next += 1;
        }
        if next == last && pos.distance(self.points[last]) <= self.cfg.arrival_tolerance {
            self.set_state(FollowerState::Completed, events);
            return self.points[last];
        }
        self.state = FollowerState::OnPath { next };

        let look = self.cfg.lookahead();
        // Carrot: the farthest waypoint within the lookahead, never past a
        // mission vertex so corners are flown rather than cut.
        let base = self.incrementals[next].station;
        let mut carrot = next;
        while carrot < last
            && !self.incrementals[carrot].is_vertex
            && self.incrementals[carrot + 1].station - base + pos.distance(self.points[next]) <= look
        {
            carrot += 1;
        }
        // The obstruction check looks ahead the same distance, across vertices.
        let mut check_end = next;
        while check_end < last
            && self.incrementals[check_end + 1].station - base + pos.distance(self.points[next]) <= look
        {
            check_end += 1;
        }

        let Ok(map) = self.local_map(global, pos, self.points[check_end]) else {
            return self.points[next];
        };
        let prev = self.points[next - 1];
        let off_course = point_segment_distance(pos, prev, self.points[next]) > self.cfg.off_course_threshold;
        let obstructed = !check_direct(&map, pos, self.points[carrot])
            || (next..check_end).any(|k| !check_direct(&map, self.points[k], self.points[k + 1]));

        if !off_course && !obstructed {
            return self.points[carrot];
        }
        match self.find_target(global, pos, next, events) {
            Some((target, target_index)) => {
                self.set_state(
                    FollowerState::Avoiding {
                        path: None,
                        target,
                        target_index,
                    },
                    events,
                );
                self.step_avoiding(global, pos, events)
            }
            None => {
                self.set_state(FollowerState::Failed(FollowerFailure::NoTarget), events);
                pos
            }
        }
    }

    /// Searches for an avoidance target, growing the window until one is found
    /// or the expansion ceiling is hit.
    fn find_target(&mut self, global: &OccupancyGrid, pos: Point2, from: usize, events: &mut Vec<MissionEvent>) -> Option<(Point2, usize)> {
        loop {
            let extra = self.window.d_corner - self.window.base_d_corner;
            let horizon = self.cfg.target_search_distance + extra;
            let base = self.incrementals[from].station;
            let last = self.points.len() - 1;
            let mut far = from;
            while far < last && self.incrementals[far + 1].station - base <= horizon {
                far += 1;
            }
            if let Ok(map) = self.local_map(global, pos, self.points[far]) {
                if let TargetSearch::Found { position, index } =
                    select_avoidance_target(&map, &self.points, from, pos, self.cfg.lookahead_min)
                {
                    events.push(MissionEvent::TargetSelected { index });
                    return Some((position, index));
                }
            }
            if !self.expand(events) {
                return None;
            }
        }
    }

    fn expand(&mut self, events: &mut Vec<MissionEvent>) -> bool {
        match self.window.maximize_map() {
            Ok(spec) => {
                self.window = spec;
                self.stats.expansions += 1;
                events.push(MissionEvent::MapExpanded {
                    d_corner: self.window.d_corner,
                });
                true
            }
            Err(_) => false,
        }
    }

    fn step_avoiding(&mut self, global: &OccupancyGrid, pos: Point2, events: &mut Vec<MissionEvent>) -> Point2 {
        let FollowerState::Avoiding {
            path,
            mut target,
            mut target_index,
        } = self.state.clone()
        else {
            unreachable!("called in Avoiding state");
        };
        let mut path = path;

        let last = self.points.len() - 1;
        let passed_target = target_index > 0 && target_index < last && self.passed(pos, target_index);
        if pos.distance(target) <= self.cfg.arrival_tolerance || passed_target {
            self.window.reset();
            self.consecutive_failures = 0;
            events.push(MissionEvent::Resumed { index: target_index });
            self.set_state(FollowerState::OnPath { next: target_index }, events);
            return self.step_on_path(global, pos, target_index, events);
        }

        let Ok(mut map) = self.local_map(global, pos, target) else {
            return pos;
        };

        // New observations may have swallowed the target.
        if !vacant(&map.grid, target) {
            let from = target_index.saturating_sub(1).max(1);
            match self.find_target(global, pos, from, events) {
                Some((t, i)) => {
                    target = t;
                    target_index = i.max(target_index);
                    path = None;
                }
                None => {
                    self.set_state(FollowerState::Failed(FollowerFailure::NoTarget), events);
                    return pos;
                }
            }
            match self.local_map(global, pos, target) {
                Ok(m) => map = m,
                Err(_) => return pos,
            }
        }

        // Keep the active path anchored at the vehicle and drop reached nodes.
        if let Some(p) = path.as_mut() {
            let mut rest: Vec<Point2> = p.waypoints[1..].to_vec();
            while rest.len() > 1 && pos.distance(rest[0]) <= self.cfg.arrival_tolerance {
                rest.remove(0);
            }
            let mut wps = vec![pos];
            wps.extend(rest);
            *p = PlannedPath::new(wps);
        }
        let path_valid = path
            .as_ref()
            .is_some_and(|p| p.waypoints.windows(2).all(|w| map.grid.segment_clear(w[0], w[1], false)));
        if !path_valid {
            path = None;
        }

        let outcome = self.plan_from(&map, global, pos, target);
        match outcome {
            Ok(incoming) => {
                self.consecutive_failures = 0;
                events.push(MissionEvent::PlanSucceeded { length: incoming.length });
                match &path {
                    None => {
                        events.push(MissionEvent::PlanAdopted {
                            length: incoming.length,
                            previous_cost: None,
                        });
                        path = Some(incoming);
                    }
                    Some(current) => {
                        let cost = path_cost_current(&current.waypoints, &map, self.cfg.rim_weight);
                        match accept_or_keep(&cost, &incoming) {
                            Decision::Adopt => {
                                events.push(MissionEvent::PlanAdopted {
                                    length: incoming.length,
                                    previous_cost: Some(cost.c_new()),
                                });
                                path = Some(incoming);
                            }
                            Decision::Keep => events.push(MissionEvent::PlanKept {
                                incoming: incoming.length,
                                current_cost: cost.c_new(),
                            }),
                        }
                    }
                }
            }
            Err(reason) => {
                self.consecutive_failures += 1;
                events.push(MissionEvent::PlanFailed { reason });
                if reason == FailureReason::GoalBlocked {
                    let from = target_index.saturating_sub(1).max(1);
                    if let Some((t, i)) = self.find_target(global, pos, from, events) {
                        target = t;
                        target_index = i.max(target_index);
                    }
                } else if path.is_none() && self.consecutive_failures >= self.cfg.failures_before_expansion {
                    if self.expand(events) {
                        self.consecutive_failures = 0;
                    } else if self.consecutive_failures >= self.cfg.failures_at_ceiling {
                        self.set_state(FollowerState::Failed(FollowerFailure::NoPath), events);
                        return pos;
                    }
                }
            }
        }

        if let Some(p) = path.as_mut() {
            *p = smooth(p, &map);
        }
        let setpoint = path.as_ref().map_or(pos, |p| p.waypoints.get(1).copied().unwrap_or(target));
        self.state = FollowerState::Avoiding {
            path,
            target,
            target_index,
        };
        setpoint
    }

    /// One planner call from `pos`, escaping first to the nearest free cell
    /// when the vehicle sits inside the inflated margin.
    fn plan_from(&mut self, map: &LocalMap, global: &OccupancyGrid, pos: Point2, target: Point2) -> Result<PlannedPath, FailureReason> {
        let mut cfg = self.planner.clone();
        cfg.seed = mix_seed(self.planner.seed, self.stats.plan_calls as u64);
        self.stats.plan_calls += 1;

        let start_blocked = map.grid.state_at(pos).map(|s| map.grid.blocks(s, cfg.rim_blocks)).unwrap_or(true);
        let escape = if start_blocked {
            match nearest_escape(map, global, pos, cfg.rim_blocks) {
                Some(e) => Some(e),
                None => return Err(FailureReason::StartBlocked),
            }
        } else {
            None
        };
        let started = std::time::Instant::now();
        let result = plan(map, escape.unwrap_or(pos), target, &cfg);
        self.stats.plan_wall_time += started.elapsed();
        match result {
            Ok(p) => {
                self.stats.plan_successes += 1;
                Ok(match escape {
                    Some(_) => {
                        let mut wps = vec![pos];
                        wps.extend(p.waypoints);
                        PlannedPath::new(wps)
                    }
                    None => p,
                })
            }
            Err(f) => Err(f.reason),
        }
    }
}

/// Closest cell center (by distance from `pos`) that does not block the
/// planner and is reachable in a straight line without crossing a sensed
/// obstacle.
fn nearest_escape(map: &LocalMap, global: &OccupancyGrid, pos: Point2, rim_blocks: bool) -> Option<Point2> {
    let grid = &map.grid;
    let max_r = grid.width().max(grid.height());
    let center = grid.world_to_cell(pos).ok()?;
    for r in 1..=max_r {
        let mut best: Option<(f64, Point2)> = None;
        let (cx, cy) = (center.ix as i64, center.iy as i64);
        for dy in -(r as i64)..=(r as i64) {
            for dx in -(r as i64)..=(r as i64) {
                if dx.abs().max(dy.abs()) != r as i64 {
                    continue;
                }
                let (x, y) = (cx + dx, cy + dy);
                if x < 0 || y < 0 || x >= grid.width() as i64 || y >= grid.height() as i64 {
                    continue;
                }
                let cell = crate::grid_map::Cell::new(x as usize, y as usize);
                if grid.blocks(grid.get(cell), rim_blocks) {
                    continue;
                }
                let c = grid.cell_to_world(cell);
                if !global.segment_clear(pos, c, false) {
                    continue;
                }
                let d = pos.distance(c);
                if best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, c));
                }
            }
        }
        if let Some((_, c)) = best {
            return Some(c);
        }
    }
    None
}

/// Per-call planner seed derived from the run seed (SplitMix64 finalizer).
pub fn mix_seed(base: u64, counter: u64) -> u64 {
    let mut z = base ^ counter.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
