//! Plain-text PGM (P2) snapshots, one pixel per cell.
//!
//! The first image row is the grid's top row (highest `iy`), so the picture
//! reads north-up.

use std::fmt::Write as _;

use super::{Cell, CellState, OccupancyGrid};

pub const PGM_OCCUPIED: u8 = 0;
pub const PGM_RIM: u8 = 128;
pub const PGM_UNKNOWN: u8 = 200;
pub const PGM_FREE: u8 = 255;

fn gray(state: CellState) -> u8 {
    match state {
        CellState::Occupied => PGM_OCCUPIED,
        CellState::OuterRim(_) => PGM_RIM,
        CellState::Unknown => PGM_UNKNOWN,
        CellState::Free => PGM_FREE,
    }
}

pub fn write_pgm(grid: &OccupancyGrid) -> String {
    let (w, h) = (grid.width(), grid.height());
    let mut out = String::with_capacity(w * h * 4 + 32);
    let _ = writeln!(out, "P2\n{w} {h}\n255");
    for iy in (0..h).rev() {
        let row: Vec<String> = (0..w)
            .map(|ix| gray(grid.get(Cell::new(ix, iy))).to_string())
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// Parses a P2 image back into `(width, height, pixels)` with pixels in file
/// order (top row first). Comments are not supported.
pub fn parse_pgm(text: &str) -> Option<(usize, usize, Vec<u8>)> {
    let mut tokens = text.split_ascii_whitespace();
    if tokens.next()? != "P2" {
        return None;
    }
    let w: usize = tokens.next()?.parse().ok()?;
    let h: usize = tokens.next()?.parse().ok()?;
    let max: u32 = tokens.next()?.parse().ok()?;
    if max != 255 {
        return None;
    }
    let pixels: Vec<u8> = tokens.map(|t| t.parse().ok()).collect::<Option<_>>()?;
    (pixels.len() == w * h).then_some((w, h, pixels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point2;

    #[test]
    fn encodes_all_states_north_up() {
        let mut g = OccupancyGrid::new(Point2::ZERO, 1.0, 2, 2, CellState::Unknown).unwrap();
        g.set(Cell::new(0, 0), CellState::Occupied);
        g.set(Cell::new(1, 0), CellState::OuterRim(0.5));
        g.set(Cell::new(0, 1), CellState::Free);
        let text = write_pgm(&g);
        assert_eq!(text, "P2\n2 2\n255\n255 200\n0 128\n");
        let (w, h, px) = parse_pgm(&text).unwrap();
        assert_eq!((w, h), (2, 2));
        assert_eq!(px, vec![255, 200, 0, 128]);
    }
}
