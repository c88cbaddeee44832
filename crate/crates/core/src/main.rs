use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::Parser;

use tilebot::bench::{csv, run_one, sweep_specs, Outcome, PlannerKind};
use tilebot::executor::TransferConfig;
use tilebot::render::trace_frames;
use tilebot::scenario::{load_map, ScenarioFile};
use tilebot::{Error, Moveset, Weight};

const EXIT_INVALID: u8 = 2;
const EXIT_TIMEOUT: u8 = 3;
const EXIT_DEADLOCK: u8 = 4;

/// Plan and execute multi-robot tile reconfiguration scenarios.
///
/// Exit status: 0 when every run is solved, 2 for invalid input, 3 when the
/// first unsolved run timed out, 4 when it deadlocked.
#[derive(Parser, Debug)]
#[command(name = "tilebot", version)]
struct Args {
    /// Map file; defaults to the scenario's MAP entry.
    #[arg(long)]
    map: Option<PathBuf>,
    #[arg(long)]
    scenario: PathBuf,
    /// astar, mstar, temporal or all.
    #[arg(long, default_value = "temporal")]
    planner: String,
    /// Comma-separated heuristic weights.
    #[arg(long, default_value = "1", value_delimiter = ',')]
    epsilon: Vec<String>,
    /// Comma-separated reservation horizons (temporal only).
    #[arg(long, default_value = "5", value_delimiter = ',')]
    horizon: Vec<usize>,
    /// s5 or s7; overrides the scenario's MOVESET.
    #[arg(long)]
    moveset: Option<String>,
    #[arg(long)]
    load_transfer: bool,
    /// Pairing distance for load transfer.
    #[arg(long, default_value_t = 5)]
    dtr: u32,
    /// CSV output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write one SVG per time step into this directory.
    #[arg(long)]
    emit_frames: Option<PathBuf>,
    /// Write each run's trace into this directory.
    #[arg(long)]
    traces: Option<PathBuf>,
    /// Seconds per run.
    #[arg(long, default_value_t = 3600.0)]
    time_limit: f64,
    /// Leave the planning-time column empty.
    #[arg(long)]
    no_timing: bool,
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::InvalidScenario(format!("{}: {e}", path.display()))
}

fn run(args: &Args) -> Result<Vec<Outcome>, Error> {
    let sc = ScenarioFile::load(&args.scenario)?;
    let map_path = match (&args.map, &sc.map) {
        (Some(p), _) => p.clone(),
        (None, Some(p)) => args.scenario.parent().unwrap_or(Path::new(".")).join(p),
        (None, None) => {
            return Err(Error::InvalidScenario(
                "no --map given and the scenario names no MAP".into(),
            ))
        }
    };
    let w = load_map(&map_path)?;
    let map_id = map_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let planner = match args.planner.as_str() {
        "all" => None,
        p => Some(p.parse::<PlannerKind>()?),
    };
    let epsilons: Vec<Weight> = args
        .epsilon
        .iter()
        .map(|e| e.parse())
        .collect::<Result<_, _>>()?;
    let moveset = match &args.moveset {
        Some(m) => m.parse::<Moveset>()?,
        None => sc.moveset,
    };
    if !(args.time_limit >= 0.0 && args.time_limit.is_finite()) {
        return Err(Error::InvalidScenario(format!(
            "invalid time limit {}",
            args.time_limit
        )));
    }
    if args.horizon.contains(&0) {
        return Err(Error::InvalidScenario("horizons must be positive".into()));
    }
    let transfer = TransferConfig {
        enabled: args.load_transfer,
        d_tr: args.dtr,
        ..TransferConfig::default()
    };
    let mut specs = sweep_specs(
        planner,
        &epsilons,
        &args.horizon,
        moveset,
        transfer,
        Duration::from_secs_f64(args.time_limit),
    );
    if planner.is_none() && !sc.is_goal_scenario() {
        specs.retain(|s| s.planner == PlannerKind::Temporal);
    }
    let single = specs.len() == 1;
    let mut rows = Vec::new();
    for spec in &specs {
        let result = run_one(&map_id, &w, &sc, spec)?;
        if let (Some(dir), Some(trace)) = (&args.traces, &result.trace) {
            fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
            let path = dir.join(format!("{map_id}_{}.trace", spec.label()));
            fs::write(&path, trace.to_text()).map_err(|e| io_err(&path, e))?;
        }
        if let (Some(dir), Some(trace)) = (&args.emit_frames, &result.trace) {
            let dir = if single {
                dir.clone()
            } else {
                dir.join(spec.label())
            };
            fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
            for (t, svg) in trace_frames(&w, trace)?.iter().enumerate() {
                let path = dir.join(format!("frame_{t:05}.svg"));
                fs::write(&path, svg).map_err(|e| io_err(&path, e))?;
            }
        }
        rows.push(result.row);
    }
    let text = csv(&rows, !args.no_timing);
    match &args.out {
        Some(path) => fs::write(path, text).map_err(|e| io_err(path, e))?,
        None => print!("{text}"),
    }
    Ok(rows.iter().map(|r| r.outcome).collect())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(outcomes) => match outcomes.iter().find(|o| **o != Outcome::Solved) {
            None => ExitCode::SUCCESS,
            Some(Outcome::Timeout) => ExitCode::from(EXIT_TIMEOUT),
            Some(_) => ExitCode::from(EXIT_DEADLOCK),
        },
        Err(e) => {
            eprintln!("tilebot: {e}");
            ExitCode::from(EXIT_INVALID)
        }
    }
}
