//! Jerk-limited planar point-mass model tracking position setpoints.
//!
//! The vehicle tracks the fastest velocity toward the setpoint from which it
//! can still stop on it, with jerk-shaped acceleration. As soon as the
//! predicted stopping distance along the line of approach would exceed the
//! remaining distance, it switches to a maximum-effort braking profile on
//! that line and damps cross-track motion with the budget left over.

use crate::error::ConfigError;
use crate::geometry::{Point2, Vec2};
use crate::grid_map::WorldModel;

pub const DEFAULT_DT: f64 = 0.02;
pub const DEFAULT_COLLISION_RADIUS: f64 = 0.35;

/// Below this speed the approach speed is not scaled by alignment.
const ALIGN_MIN_SPEED: f64 = 0.5;
/// Smallest fraction of the approach speed kept when moving away from the
/// setpoint.
const ALIGN_FLOOR: f64 = 0.25;

/// Speeds below this leave the heading unchanged.
const HEADING_MIN_SPEED: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsConfig {
    /// Maximum rate of change of acceleration, m/s³.
    pub jerk: f64,
    /// Maximum horizontal acceleration, m/s².
    pub a_max: f64,
    /// Maximum horizontal speed, m/s.
    pub v_cruise: f64,
    /// Optional yaw rate limit, rad/s. `None` turns instantly.
    pub heading_rate: Option<f64>,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        Self {
            jerk: 4.0,
            a_max: 5.0,
            v_cruise: 4.0,
            heading_rate: None,
        }
    }
}

impl DynamicsConfig {
    pub fn with_speed(v_cruise: f64) -> Self {
        Self {
            v_cruise,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (field, v) in [
            ("dynamics.jerk", self.jerk),
            ("dynamics.a_max", self.a_max),
            ("dynamics.v_cruise", self.v_cruise),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError::invalid(field, "must be finite and > 0"));
            }
        }
        if let Some(r) = self.heading_rate {
            if !(r > 0.0) {
                return Err(ConfigError::invalid("dynamics.heading_rate", "must be > 0"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState {
    pub position: Point2,
    pub velocity: Vec2,
    pub acceleration: Vec2,
    pub heading: f64,
}

impl VehicleState {
    pub fn at_rest(position: Point2, heading: f64) -> Self {
        Self {
            position,
            velocity: Vec2::ZERO,
            acceleration: Vec2::ZERO,
            heading,
        }
    }

    pub fn speed(&self) -> f64 {
        self.velocity.norm()
    }
}

/// Distance, velocity and acceleration after holding jerk `j` for `t` seconds.
fn integrate(x: f64, v: f64, a: f64, j: f64, t: f64) -> (f64, f64, f64) {
    (
        x + v * t + a * t * t / 2.0 + j * t * t * t / 6.0,
        v + a * t + j * t * t / 2.0,
        a + j * t,
    )
}

/// Smallest positive root of `c0 + c1 t + c2 t²` within `[0, t_max]`.
fn first_root(c0: f64, c1: f64, c2: f64, t_max: f64) -> f64 {
    if c2.abs() < 1e-15 {
        return if c1.abs() < 1e-15 { t_max } else { (-c0 / c1).clamp(0.0, t_max) };
    }
    let disc = (c1 * c1 - 4.0 * c2 * c0).max(0.0).sqrt();
    let mut roots = [(-c1 - disc) / (2.0 * c2), (-c1 + disc) / (2.0 * c2)];
    roots.sort_by(f64::total_cmp);
    roots
        .into_iter()
        .find(|t| *t >= 0.0)
        .map_or(t_max, |t| t.min(t_max))
}

/// Distance covered while stopping from speed `v >= 0` with current
/// acceleration `a` along the direction of motion, using the fastest
/// jerk- and acceleration-limited profile that ends with zero acceleration.
pub fn stopping_distance(v: f64, a: f64, jerk: f64, a_max: f64) -> f64 {
    let v = v.max(0.0);
    let a = a.clamp(-a_max, a_max);
    if v == 0.0 && a <= 0.0 {
        return 0.0;
    }
    // Already decelerating hard enough that releasing the brake stops us.
    if a < 0.0 && a * a / (2.0 * jerk) >= v {
        let t_zero = first_root(v, a, jerk / 2.0, -a / jerk);
        return integrate(0.0, v, a, jerk, t_zero).0;
    }
    let peak = (jerk * v + a * a / 2.0).sqrt().min(a_max);
    let t1 = (a + peak) / jerk;
    let (x1, v1, a1) = integrate(0.0, v, a, -jerk, t1);
    let t3 = peak / jerk;
    let v_ramp = peak * peak / (2.0 * jerk);
    let t2 = ((v1 - v_ramp) / peak).max(0.0);
    let (x2, v2, a2) = integrate(x1, v1, a1, 0.0, t2);
    integrate(x2, v2, a2, jerk, t3).0
}

/// Stopping distance from steady flight at speed `v`.
pub fn braking_distance(v: f64, cfg: &DynamicsConfig) -> f64 {
    stopping_distance(v, 0.0, cfg.jerk, cfg.a_max)
}

/// Largest steady speed whose braking distance fits within `d`.
pub fn speed_for_stopping_within(d: f64, cfg: &DynamicsConfig) -> f64 {
    if d <= 0.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, cfg.v_cruise);
    if braking_distance(hi, cfg) <= d {
        return hi;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if braking_distance(mid, cfg) <= d {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Jerk-limited acceleration that closes a velocity error `ev` without
/// overshoot: the largest magnitude from which ramping back to zero exactly
/// uses up the error.
fn shaped_accel(ev: f64, jerk: f64, a_max: f64) -> f64 {
    ev.signum() * (2.0 * jerk * ev.abs()).sqrt().min(a_max)
}

fn toward(current: f64, target: f64, max_step: f64) -> f64 {
    current + (target - current).clamp(-max_step, max_step)
}

fn brake_command(u: f64, au: f64, cfg: &DynamicsConfig, dt: f64) -> f64 {
    let jd = cfg.jerk * dt;
    if u <= 0.0 {
        return toward(au, 0.0, jd);
    }
    if au < 0.0 && au * au / (2.0 * cfg.jerk) >= u {
        return toward(au, 0.0, jd);
    }
    let peak = (cfg.jerk * u + au * au / 2.0).sqrt().min(cfg.a_max);
    toward(au, -peak, jd)
}

/// Advances the vehicle one control step toward `setpoint`.
pub fn step_towards(state: &VehicleState, setpoint: Point2, cfg: &DynamicsConfig, dt: f64) -> VehicleState {
    let delta = setpoint - state.position;
    let d = delta.norm();
    if d < 1e-12 && state.velocity.norm() < 1e-12 && state.acceleration.norm() < 1e-12 {
        return *state;
    }
    let dir = delta
        .normalized()
        .or_else(|| state.velocity.normalized())
        .unwrap_or_else(|| Vec2::from_angle(state.heading));
    let jd = cfg.jerk * dt;

    // Track the fastest velocity toward the setpoint that can still stop on
    // it, scaled down while the current motion points elsewhere so that
    // sideways velocity is shed before speeding up toward the setpoint.
    let alignment = match state.velocity.normalized() {
        Some(v_hat) if state.velocity.norm() > ALIGN_MIN_SPEED => v_hat.dot(dir).max(ALIGN_FLOOR),
        _ => 1.0,
    };
    let v_des = dir * (speed_for_stopping_within(d, cfg) * alignment);
    let err = v_des - state.velocity;
    let a_des = match err.normalized() {
        Some(n) => n * shaped_accel(err.norm(), cfg.jerk, cfg.a_max),
        None => Vec2::ZERO,
    };
    let mut acceleration = (state.acceleration + (a_des - state.acceleration).clamp_norm(jd)).clamp_norm(cfg.a_max);

    // Brake along the line of approach once the stopping distance no longer
    // fits; cross-track gets the leftover jerk and acceleration budgets.
    let u = state.velocity.dot(dir);
    let au = state.acceleration.dot(dir);
    let au_next = acceleration.dot(dir);
    let u_next = u + au_next * dt;
    if u_next > 0.0 && stopping_distance(u_next, au_next, cfg.jerk, cfg.a_max) > d - u_next * dt {
        let au_new = brake_command(u, au, cfg, dt);
        let a_perp = state.acceleration - dir * au;
        let a_des_perp = a_des - dir * a_des.dot(dir);
        let jerk_left = (jd * jd - (au_new - au).powi(2)).max(0.0).sqrt();
        let a_left = (cfg.a_max * cfg.a_max - au_new * au_new).max(0.0).sqrt();
        let ap_new = (a_perp + (a_des_perp - a_perp).clamp_norm(jerk_left)).clamp_norm(a_left);
        let braking = dir * au_new + ap_new;
        acceleration = state.acceleration + (braking - state.acceleration).clamp_norm(jd);
    }

    let velocity = (state.velocity + acceleration * dt).clamp_norm(cfg.v_cruise);
    let position = state.position + velocity * dt;

    let mut heading = state.heading;
    if velocity.norm() > HEADING_MIN_SPEED {
        let target = velocity.angle();
        let diff = wrap_angle(target - heading);
        heading = match cfg.heading_rate {
            Some(rate) => wrap_angle(heading + diff.clamp(-rate * dt, rate * dt)),
            None => target,
        };
    }
    VehicleState {
        position,
        velocity,
        acceleration,
        heading,
    }
}

fn wrap_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let r = (a + std::f64::consts::PI).rem_euclid(two_pi) - std::f64::consts::PI;
    if r <= -std::f64::consts::PI {
        r + two_pi
    } else {
        r
    }
}

/// Adds a velocity impulse, such as a wind gust. The result still respects
/// the cruise-speed ceiling.
pub fn apply_impulse(state: &mut VehicleState, dv: Vec2, cfg: &DynamicsConfig) {
    state.velocity = (state.velocity + dv).clamp_norm(cfg.v_cruise);
}

/// Whether the closed disc of `radius` around the vehicle touches any
/// ground-truth obstacle.
pub fn check_collision(state: &VehicleState, world: &WorldModel, radius: f64) -> bool {
    world.clearance(state.position) <= radius
}
