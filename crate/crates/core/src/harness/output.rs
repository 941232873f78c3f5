//! Run artifacts: trace CSV, metrics text, trajectory and speed plots, and
//! the final grid as PGM.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::{BatchSummary, RunMetrics, RunResult, TraceRecord};
use crate::error::HarnessError;
use crate::grid_map::{write_pgm, CellState, OccupancyGrid};

pub const TRACE_HEADER: &str = "t,x,y,vx,vy,speed,state,event";

pub fn trace_csv(trace: &[TraceRecord]) -> String {
    let mut out = String::with_capacity(64 * (trace.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in trace {
        let _ = writeln!(
            out,
            "{:.4},{:.6},{:.6},{:.6},{:.6},{:.6},{},{}",
            r.t,
            r.position.x,
            r.position.y,
            r.velocity.x,
            r.velocity.y,
            r.speed,
            r.state,
            r.event.as_str()
        );
    }
    out
}

/// SHA-256 of the trace CSV, as lowercase hex.
pub fn trace_checksum(trace: &[TraceRecord]) -> String {
    Sha256::digest(trace_csv(trace).as_bytes())
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

/// One `key = value` line per metric.
pub fn metrics_text(m: &RunMetrics) -> String {
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(out, "{k} = {v}");
    };
    kv("seed", m.seed.to_string());
    kv("v_max", format!("{:.4}", m.v_max));
    kv("v_avg_rrt", format!("{:.4}", m.v_avg_rrt));
    kv("f_rrt", format!("{:.2}", m.f_rrt));
    kv("plans_per_sim_second", format!("{:.2}", m.plans_per_sim_second));
    kv("d_trv", format!("{:.4}", m.d_trv));
    kv("completed", m.completed.to_string());
    kv("collided", m.collided.to_string());
    kv("termination", m.termination.as_str().to_string());
    kv("expansions", m.expansions.to_string());
    kv("runtime", format!("{:.4}", m.runtime));
    kv("sim_time", format!("{:.2}", m.sim_time));
    kv("steps", m.steps.to_string());
    kv("plan_calls", m.plan_calls.to_string());
    kv("plan_successes", m.plan_successes.to_string());
    kv("avoid_episodes", m.avoid_episodes.to_string());
    kv("min_clearance", format!("{:.4}", m.min_clearance));
    out
}

pub fn summary_text(s: &BatchSummary) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "scenario = {}", s.scenario);
    let _ = writeln!(out, "v_cruise = {}", s.v_cruise);
    let _ = writeln!(out, "runs = {}", s.runs);
    let _ = writeln!(out, "cmpl = {}", s.cmpl());
    let _ = writeln!(out, "collided = {}", s.collided);
    let _ = writeln!(out, "failed = {}", s.failed);
    for (k, v) in [
        ("v_max", s.v_max),
        ("v_avg_rrt", s.v_avg_rrt),
        ("f_rrt", s.f_rrt),
        ("plans_per_sim_second", s.plans_per_sim_second),
        ("d_trv", s.d_trv),
        ("expansions", s.expansions),
        ("runtime", s.runtime),
    ] {
        let _ = writeln!(out, "{k} = {v}");
    }
    out
}

/// Top-down view: sensed cells after inflation, the mission, and the flown
/// path, in world meters with y up.
pub fn trajectory_svg(result: &RunResult, d_safe: f64, rim_width: f64) -> String {
    let mut grid: OccupancyGrid = result.grid.clone();
    grid.inflate(d_safe, rim_width);
    let b = grid.bounds();
    let scale = 8.0;
    let (w, h) = (b.width() * scale, b.height() * scale);
    let sx = |x: f64| (x - b.min.x) * scale;
    let sy = |y: f64| (b.max.y - y) * scale;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.1} {h:.1}">"#
    );
    let _ = writeln!(out, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);
    let cs = grid.cell_size() * scale;
    for (cell, state) in grid.cells() {
        let fill = match state {
            CellState::Occupied => "#202020",
            CellState::OuterRim(_) => "#9a9a9a",
            _ => continue,
        };
        let c = grid.cell_to_world(cell);
        let _ = writeln!(
            out,
            r#"<rect x="{:.1}" y="{:.1}" width="{cs:.1}" height="{cs:.1}" fill="{fill}"/>"#,
            sx(c.x) - cs / 2.0,
            sy(c.y) - cs / 2.0
        );
    }
    let poly = |pts: &mut dyn Iterator<Item = (f64, f64)>| {
        pts.map(|(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mission = poly(&mut result.incrementals.iter().map(|p| (p.x, p.y)));
    let _ = writeln!(
        out,
        r##"<polyline points="{mission}" fill="none" stroke="#2a7de1" stroke-width="2" stroke-dasharray="6 4"/>"##
    );
    let flown = poly(&mut result.trace.iter().map(|r| (r.position.x, r.position.y)));
    let _ = writeln!(
        out,
        r##"<polyline points="{flown}" fill="none" stroke="#d62728" stroke-width="2"/>"##
    );
    out.push_str("</svg>\n");
    out
}

/// Speed against x position.
pub fn speed_svg(trace: &[TraceRecord], v_cruise: f64) -> String {
    let (w, h, pad) = (800.0, 300.0, 30.0);
    let (x0, x1) = trace
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r.position.x), hi.max(r.position.x)));
    let span = (x1 - x0).max(1e-9);
    let vmax = v_cruise.max(1e-9) * 1.1;
    let px = |x: f64| pad + (x - x0) / span * (w - 2.0 * pad);
    let py = |v: f64| h - pad - v / vmax * (h - 2.0 * pad);
    let pts: Vec<String> = trace
        .iter()
        .map(|r| format!("{:.2},{:.2}", px(r.position.x), py(r.speed)))
        .collect();
    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}">"#);
    let _ = writeln!(out, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);
    let _ = writeln!(
        out,
        r##"<line x1="{pad}" y1="{y:.2}" x2="{x2}" y2="{y:.2}" stroke="#888888" stroke-dasharray="4 4"/>"##,
        y = py(v_cruise),
        x2 = w - pad
    );
    let _ = writeln!(
        out,
        r##"<polyline points="{}" fill="none" stroke="#d62728" stroke-width="1.5"/>"##,
        pts.join(" ")
    );
    let _ = writeln!(out, r#"<text x="{pad}" y="20" font-size="12">speed [m/s] vs x [m], x from {x0:.1} to {x1:.1}</text>"#);
    out.push_str("</svg>\n");
    out
}

fn write(path: PathBuf, contents: &str) -> Result<PathBuf, HarnessError> {
    std::fs::write(&path, contents).map_err(|e| HarnessError::io(&path, e))?;
    Ok(path)
}

/// Writes `trace.csv`, `metrics.txt`, `trajectory.svg`, `speed.svg` and
/// `grid.pgm` into `dir`. An empty trace still gets a header-only CSV, then
/// fails with [`HarnessError::EmptyTrace`].
pub fn emit_outputs(
    result: &RunResult,
    dir: &Path,
    d_safe: f64,
    rim_width: f64,
    v_cruise: f64,
) -> Result<Vec<PathBuf>, HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut written = vec![write(dir.join("trace.csv"), &trace_csv(&result.trace))?];
    if result.trace.is_empty() {
        return Err(HarnessError::EmptyTrace);
    }
    written.push(write(dir.join("metrics.txt"), &metrics_text(&result.metrics))?);
    written.push(write(dir.join("trajectory.svg"), &trajectory_svg(result, d_safe, rim_width))?);
    written.push(write(dir.join("speed.svg"), &speed_svg(&result.trace, v_cruise))?);
    let mut inflated = result.grid.clone();
    inflated.inflate(d_safe, rim_width);
    written.push(write(dir.join("grid.pgm"), &write_pgm(&inflated))?);
    Ok(written)
}

pub fn write_summary(summary: &BatchSummary, dir: &Path) -> Result<PathBuf, HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    write(dir.join("summary.txt"), &summary_text(summary))
}
