//! Ground-truth obstacle geometry.

use serde::{Deserialize, Serialize};

use crate::error::WorldError;
use crate::geometry::{point_segment_distance, Point2, Rect, Vec2};

/// Convex polygon with counter-clockwise vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexPolygon {
    vertices: Vec<Point2>,
}

impl ConvexPolygon {
    /// Builds a polygon from vertices in either winding; rejects non-convex or
    /// degenerate input.
    pub fn new(mut vertices: Vec<Point2>) -> Option<Self> {
        if vertices.len() < 3 || vertices.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let area = signed_area(&vertices);
        if area.abs() < 1e-12 {
            return None;
        }
        if area < 0.0 {
            vertices.reverse();
        }
        let n = vertices.len();
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let c = vertices[(i + 2) % n];
            if (b - a).cross(c - b) < -1e-12 {
                return None;
            }
        }
        Some(Self { vertices })
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Closed containment test.
    pub fn contains(&self, p: Point2) -> bool {
        self.edges().all(|(a, b)| (b - a).cross(p - a) >= -1e-12)
    }

    /// Euclidean distance from `p` to the polygon, zero inside.
    pub fn distance(&self, p: Point2) -> f64 {
        if self.contains(p) {
            return 0.0;
        }
        self.edges()
            .map(|(a, b)| point_segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn bounding_box(&self) -> Rect {
        let mut min = self.vertices[0];
        let mut max = self.vertices[0];
        for v in &self.vertices[1..] {
            min = Point2::new(min.x.min(v.x), min.y.min(v.y));
            max = Point2::new(max.x.max(v.x), max.y.max(v.y));
        }
        Rect { min, max }
    }

    /// Smallest non-negative ray parameter `t` with `origin + t·dir` on the
    /// boundary.
    pub fn ray_hit(&self, origin: Point2, dir: Vec2) -> Option<f64> {
        let mut best: Option<f64> = None;
        for (a, b) in self.edges() {
            if let Some(t) = ray_segment(origin, dir, a, b) {
                if best.is_none_or(|bt| t < bt) {
                    best = Some(t);
                }
            }
        }
        best
    }

    /// Separating-axis overlap test against a closed axis-aligned box.
    pub fn intersects_rect(&self, r: &Rect) -> bool {
        let bb = self.bounding_box();
        if bb.max.x < r.min.x || bb.min.x > r.max.x || bb.max.y < r.min.y || bb.min.y > r.max.y {
            return false;
        }
        let corners = r.corners();
        for (a, b) in self.edges() {
            let normal = (b - a).perp();
            // Outward normal of a CCW polygon is the negated left perpendicular.
            let poly_max = self
                .vertices
                .iter()
                .map(|v| -normal.dot(*v - a))
                .fold(f64::NEG_INFINITY, f64::max);
            let rect_min = corners
                .iter()
                .map(|c| -normal.dot(*c - a))
                .fold(f64::INFINITY, f64::min);
            if rect_min > poly_max + 1e-12 {
                return false;
            }
        }
        true
    }
}

fn signed_area(v: &[Point2]) -> f64 {
    let n = v.len();
    (0..n).map(|i| v[i].cross(v[(i + 1) % n])).sum::<f64>() / 2.0
}

/// Ray/segment intersection parameter along the ray, if any.
fn ray_segment(origin: Point2, dir: Vec2, a: Point2, b: Point2) -> Option<f64> {
    let e = b - a;
    let denom = dir.cross(e);
    if denom.abs() < 1e-15 {
        return None;
    }
    let w = a - origin;
    let t = w.cross(e) / denom;
    let u = w.cross(dir) / denom;
    (t >= 0.0 && (-1e-12..=1.0 + 1e-12).contains(&u)).then_some(t)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Obstacle {
    Rect(Rect),
    Polygon(ConvexPolygon),
}

impl Obstacle {
    pub fn as_polygon(&self) -> ConvexPolygon {
        match self {
            Obstacle::Rect(r) => ConvexPolygon::new(r.corners().to_vec())
                .expect("rectangle with positive area is a convex polygon"),
            Obstacle::Polygon(p) => p.clone(),
        }
    }

    pub fn distance(&self, p: Point2) -> f64 {
        match self {
            Obstacle::Rect(r) => {
                let dx = (r.min.x - p.x).max(0.0).max(p.x - r.max.x);
                let dy = (r.min.y - p.y).max(0.0).max(p.y - r.max.y);
                dx.hypot(dy)
            }
            Obstacle::Polygon(poly) => poly.distance(p),
        }
    }

    pub fn bounding_box(&self) -> Rect {
        match self {
            Obstacle::Rect(r) => *r,
            Obstacle::Polygon(p) => p.bounding_box(),
        }
    }
}

/// Ground-truth world: obstacles plus the extent of the simulated area.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldModel {
    pub bounds: Rect,
    pub obstacles: Vec<Obstacle>,
    /// Obstacles converted once for ray casting.
    polygons: Vec<ConvexPolygon>,
}

impl WorldModel {
    pub fn new(bounds: Rect, obstacles: Vec<Obstacle>) -> Result<Self, WorldError> {
        if bounds.area() <= 0.0 || !bounds.min.is_finite() || !bounds.max.is_finite() {
            return Err(WorldError::EmptyBounds);
        }
        for (index, o) in obstacles.iter().enumerate() {
            match o {
                Obstacle::Rect(r) => {
                    if !r.min.is_finite() || !r.max.is_finite() {
                        return Err(WorldError::NonFinite { index });
                    }
                    if r.area() <= 0.0 {
                        return Err(WorldError::NotConvex { index });
                    }
                }
                Obstacle::Polygon(p) => {
                    if p.vertices().iter().any(|v| !v.is_finite()) {
                        return Err(WorldError::NonFinite { index });
                    }
                    if p.area() <= 0.0 {
                        return Err(WorldError::NotConvex { index });
                    }
                }
            }
        }
        let polygons = obstacles.iter().map(Obstacle::as_polygon).collect();
        Ok(Self {
            bounds,
            obstacles,
            polygons,
        })
    }

    pub fn empty(bounds: Rect) -> Self {
        Self::new(bounds, Vec::new()).expect("valid bounds")
    }

    /// Nearest intersection of the ray with any obstacle, as `(t, obstacle index)`.
    pub fn ray_cast(&self, origin: Point2, dir: Vec2) -> Option<(f64, usize)> {
        let mut best: Option<(f64, usize)> = None;
        for (i, poly) in self.polygons.iter().enumerate() {
            if let Some(t) = poly.ray_hit(origin, dir) {
                if best.is_none_or(|(bt, _)| t < bt) {
                    best = Some((t, i));
                }
            }
        }
        best
    }

    /// Distance from `p` to the closest obstacle (infinite with no obstacles).
    pub fn clearance(&self, p: Point2) -> f64 {
        self.obstacles
            .iter()
            .map(|o| o.distance(p))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_inside_obstacle(&self, p: Point2) -> bool {
        self.clearance(p) == 0.0
    }

    pub(crate) fn polygons(&self) -> &[ConvexPolygon] {
        &self.polygons
    }
}
