//! RRT* obstacle avoidance for multicopter survey missions.
//!
//! The pipeline runs in the XY plane: a simulated depth camera fills a global
//! occupancy grid, a local window around the vehicle and its target is cropped
//! and inflated, an RRT* planner searches that window, and a mission follower
//! decides between the predefined survey path and planned detours before
//! handing setpoints to a jerk-limited vehicle model.

pub mod error;
pub mod geometry;
pub mod grid_map;
pub mod harness;
pub mod local_window;
pub mod mission;
pub mod rrt_star;
pub mod sensor;
pub mod vehicle;

pub use error::{ConfigError, GridError, HarnessError, WindowError, WorldError};
pub use geometry::{Point2, Rect, Vec2};
