//! Supercover line traversal.
//!
//! Enumerates every cell whose closed square intersects a closed segment. A
//! segment that passes exactly through a lattice corner touches all four cells
//! around that corner, and a segment running along a grid line touches the
//! cells on both sides of it.

/// Slack in cell units applied to both ends of every interval so that rounding
/// in the interpolation never drops a touched cell.
const EPS: f64 = 1e-9;

/// Visit every integer cell `(ix, iy)` touched by the segment `a → b`, where the
/// endpoints are given in continuous grid coordinates (cell `(i, j)` covers
/// `[i, i+1] × [j, j+1]`). Cells are visited column by column; a cell is never
/// visited twice.
pub fn supercover(a: (f64, f64), b: (f64, f64), mut visit: impl FnMut(i64, i64)) {
    supercover_while(a, b, |x, y| {
        visit(x, y);
        true
    });
}

/// Like [`supercover`], but stops as soon as `visit` returns `false`. Returns
/// whether the traversal ran to completion.
pub fn supercover_while(a: (f64, f64), b: (f64, f64), mut visit: impl FnMut(i64, i64) -> bool) -> bool {
    let (ax, ay) = a;
    let (bx, by) = b;
    let xmin = ax.min(bx);
    let xmax = ax.max(bx);
    let first_col = (xmin - EPS).ceil() as i64 - 1;
    let last_col = (xmax + EPS).floor() as i64;
    let dx = bx - ax;

    for col in first_col..=last_col {
        let lo = (col as f64).max(xmin);
        let hi = ((col + 1) as f64).min(xmax);
        let (y0, y1) = if dx.abs() < 1e-15 {
            (ay, by)
        } else {
            let t0 = ((lo - ax) / dx).clamp(0.0, 1.0);
            let t1 = ((hi - ax) / dx).clamp(0.0, 1.0);
            (ay + (by - ay) * t0, ay + (by - ay) * t1)
        };
        let ylo = y0.min(y1);
        let yhi = y0.max(y1);
        let first_row = (ylo - EPS).ceil() as i64 - 1;
        let last_row = (yhi + EPS).floor() as i64;
        for row in first_row..=last_row {
            if !visit(col, row) {
                return false;
            }
        }
    }
    true
}

/// Collects [`supercover`] into a vector.
pub fn supercover_cells(a: (f64, f64), b: (f64, f64)) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    supercover(a, b, |x, y| out.push((x, y)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn interior_point_is_one_cell() {
        assert_eq!(supercover_cells((2.5, 1.5), (2.5, 1.5)), vec![(2, 1)]);
    }

    #[test]
    fn horizontal_through_centers() {
        let cells = supercover_cells((0.5, 0.5), (3.5, 0.5));
        assert_eq!(cells, vec![(0, 0), (1, 0), (2, 0), (3, 0)]);
    }

    #[test]
    fn corner_crossing_touches_all_four() {
        let cells: HashSet<_> = supercover_cells((0.5, 0.5), (1.5, 1.5)).into_iter().collect();
        let expected: HashSet<_> = [(0, 0), (1, 0), (0, 1), (1, 1)].into_iter().collect();
        assert_eq!(cells, expected);
    }

    #[test]
    fn no_duplicates() {
        let cells = supercover_cells((0.1, 0.3), (7.9, 5.2));
        let unique: HashSet<_> = cells.iter().copied().collect();
        assert_eq!(unique.len(), cells.len());
    }

    #[test]
    fn symmetric_in_direction() {
        let a = (1.3, 7.7);
        let b = (6.1, 0.4);
        let f: HashSet<_> = supercover_cells(a, b).into_iter().collect();
        let r: HashSet<_> = supercover_cells(b, a).into_iter().collect();
        assert_eq!(f, r);
    }
}
