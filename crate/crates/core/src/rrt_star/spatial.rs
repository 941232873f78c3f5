//! Uniform bucket grid for nearest and radius queries over tree nodes.
//!
//! Results are identical to a linear scan, including the lowest-index rule for
//! ties.

use crate::geometry::{Point2, Rect};

#[derive(Debug, Clone)]
pub(crate) struct BucketIndex {
    origin: Point2,
    bucket: f64,
    cols: usize,
    rows: usize,
    buckets: Vec<Vec<u32>>,
    len: usize,
}

impl BucketIndex {
    pub fn new(bounds: Rect, bucket: f64) -> Self {
        let bucket = bucket.max(1e-6);
        let cols = ((bounds.width() / bucket).ceil() as usize).max(1);
        let rows = ((bounds.height() / bucket).ceil() as usize).max(1);
        Self {
            origin: bounds.min,
            bucket,
            cols,
            rows,
            buckets: vec![Vec::new(); cols * rows],
            len: 0,
        }
    }

    fn bucket_of(&self, p: Point2) -> (usize, usize) {
        let bx = ((p.x - self.origin.x) / self.bucket).floor();
        let by = ((p.y - self.origin.y) / self.bucket).floor();
        (
            (bx.max(0.0) as usize).min(self.cols - 1),
            (by.max(0.0) as usize).min(self.rows - 1),
        )
    }

    pub fn insert(&mut self, id: usize, p: Point2) {
        let (bx, by) = self.bucket_of(p);
        self.buckets[by * self.cols + bx].push(id as u32);
        self.len += 1;
    }

    /// Lowest-index node at minimum distance from `p`.
    pub fn nearest(&self, points: &[Point2], p: Point2) -> Option<usize> {
        if self.len == 0 {
            return None;
        }
        let (bx, by) = self.bucket_of(p);
        // Distance from p to the outside of its own bucket along each axis;
        // ring k (k >= 1) is then at least (k - 1) * bucket + slack away.
        let lo = Point2::new(
            self.origin.x + bx as f64 * self.bucket,
            self.origin.y + by as f64 * self.bucket,
        );
        let slack = [
            p.x - lo.x,
            lo.x + self.bucket - p.x,
            p.y - lo.y,
            lo.y + self.bucket - p.y,
        ]
        .into_iter()
        .fold(f64::INFINITY, f64::min)
        .max(0.0);
        let max_ring = self.cols.max(self.rows);
        let mut best: Option<(f64, usize)> = None;
        for k in 0..=max_ring {
            if let Some((d2, _)) = best {
                let bound = (k as f64 - 1.0) * self.bucket + slack;
                // Queries outside the bounds are clamped to an edge bucket,
                // which only loosens this bound.
                if k >= 1 && bound > 0.0 && bound * bound > d2 {
                    break;
                }
            }
            self.for_ring(bx, by, k, |id| {
                let d2 = points[id].distance_squared(p);
                let better = match best {
                    None => true,
                    Some((bd, bi)) => d2 < bd || (d2 == bd && id < bi),
                };
                if better {
                    best = Some((d2, id));
                }
            });
        }
        best.map(|(_, i)| i)
    }

    /// All nodes within `radius` (closed) of `p`, in ascending index order.
    pub fn within(&self, points: &[Point2], p: Point2, radius: f64) -> Vec<usize> {
        let r2 = radius * radius;
        let (x0, y0) = self.bucket_of(p - Point2::new(radius, radius));
        let (x1, y1) = self.bucket_of(p + Point2::new(radius, radius));
        let mut out = Vec::new();
        for by in y0..=y1 {
            for bx in x0..=x1 {
                for &id in &self.buckets[by * self.cols + bx] {
                    let id = id as usize;
                    if points[id].distance_squared(p) <= r2 {
                        out.push(id);
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    fn for_ring(&self, bx: usize, by: usize, k: usize, mut f: impl FnMut(usize)) {
        let (bx, by, k) = (bx as i64, by as i64, k as i64);
        let (cols, rows) = (self.cols as i64, self.rows as i64);
        let mut visit = |x: i64, y: i64| {
            if x >= 0 && y >= 0 && x < cols && y < rows {
                for &id in &self.buckets[(y * cols + x) as usize] {
                    f(id as usize);
                }
            }
        };
        if k == 0 {
            visit(bx, by);
            return;
        }
        for x in bx - k..=bx + k {
            visit(x, by - k);
            visit(x, by + k);
        }
        for y in by - k + 1..=by + k - 1 {
            visit(bx - k, y);
            visit(bx + k, y);
        }
    }
}
