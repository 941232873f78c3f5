use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Parser;
use rrt_avoid::harness::{self, output, ConfigFile, Disturbance, RunResult, Scenario, Termination};
use rrt_avoid::Vec2;

const EXIT_COLLISION: u8 = 2;
const EXIT_FAILED: u8 = 3;

/// Simulate RRT* obstacle avoidance on a survey mission.
#[derive(Debug, Parser)]
#[command(name = "simulate", version)]
struct Args {
    /// Built-in scenario (world1, world2, empty) or a scenario file.
    #[arg(long, default_value = "world1")]
    scenario: String,
    /// Cruise speed in m/s.
    #[arg(long)]
    speed: Option<f64>,
    /// Seed of the first run; run i uses seed + i.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    runs: u64,
    /// Control step in seconds.
    #[arg(long)]
    dt: Option<f64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Parameter overrides (TOML); command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Yaw rate limit in rad/s.
    #[arg(long)]
    heading_rate: Option<f64>,
    /// Velocity impulse `t,vx,vy` applied once at time t.
    #[arg(long, value_parser = parse_disturbance)]
    disturb: Option<Disturbance>,
}

fn parse_disturbance(s: &str) -> Result<Disturbance, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [t, vx, vy] => Ok(Disturbance { t, dv: Vec2::new(vx, vy) }),
        _ => Err("expected t,vx,vy".into()),
    }
}

fn load_scenario(args: &Args) -> Result<Scenario> {
    let mut scenario = if harness::BUILTIN_SCENARIOS.contains(&args.scenario.as_str()) {
        harness::builtin_scenario(&args.scenario)?
    } else {
        Scenario::load(Path::new(&args.scenario))?
    };
    if let Some(path) = &args.config {
        scenario.apply(&ConfigFile::load(path)?);
    }
    if let Some(v) = args.speed {
        scenario.dynamics.v_cruise = v;
    }
    if let Some(dt) = args.dt {
        scenario.run.dt = dt;
    }
    if args.heading_rate.is_some() {
        scenario.dynamics.heading_rate = args.heading_rate;
    }
    if args.disturb.is_some() {
        scenario.run.disturbance = args.disturb;
    }
    scenario.validate()?;
    Ok(scenario)
}

fn exit_code(results: &[RunResult]) -> u8 {
    let any = |f: fn(&Termination) -> bool| results.iter().any(|r| f(&r.metrics.termination));
    if any(|t| *t == Termination::Collided) {
        EXIT_COLLISION
    } else if any(|t| *t != Termination::Completed) {
        EXIT_FAILED
    } else {
        0
    }
}

fn main() -> Result<ExitCode> {
    let args = Args::parse();
    if args.runs == 0 {
        bail!("--runs must be at least 1");
    }
    let scenario = load_scenario(&args)?;
    let seeds: Vec<u64> = (0..args.runs).map(|i| args.seed.wrapping_add(i)).collect();
    let (results, summary) = harness::batch(&scenario, &seeds)?;

    let batch_dir = args
        .out
        .join(format!("{}_v{}", scenario.name, scenario.dynamics.v_cruise));
    for r in &results {
        let dir = batch_dir.join(format!("seed_{}", r.metrics.seed));
        output::emit_outputs(
            r,
            &dir,
            scenario.window.d_safe,
            scenario.window.rim_width,
            scenario.dynamics.v_cruise,
        )
        .with_context(|| format!("writing outputs for seed {}", r.metrics.seed))?;
        println!(
            "seed {:>4}: {:<16} d_trv {:>7.2} m  v_max {:.2} m/s  plans {:>5}  expansions {}",
            r.metrics.seed,
            r.metrics.termination.as_str(),
            r.metrics.d_trv,
            r.metrics.v_max,
            r.metrics.plan_calls,
            r.metrics.expansions
        );
    }
    let path = output::write_summary(&summary, &batch_dir)?;
    print!("{}", output::summary_text(&summary));
    println!("outputs in {}", path.parent().unwrap_or(&batch_dir).display());
    Ok(ExitCode::from(exit_code(&results)))
}
