//! Single runs and planner sweeps over one scenario, producing CSV rows and
//! execution traces.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::error::Error;
use crate::executor::{run_scenario, RunConfig, Trace, TraceStep, TransferConfig};
use crate::grid::Workspace;
use crate::mstar::{joint_astar, mstar_plan, JointPlan};
use crate::robot::Moveset;
use crate::scenario::ScenarioFile;
use crate::search::{PlanError, SearchLimits, Weight};
use crate::temporal::{temporal_plan, TemporalConfig};

pub const CSV_HEADER: &str =
    "map,planner,epsilon,horizon,moveset,m,planning_time_ms,time_steps,tiles_traveled,outcome";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PlannerKind {
    /// Plain A* over the joint configuration space.
    Astar,
    Mstar,
    Temporal,
}

impl fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PlannerKind::Astar => "astar",
            PlannerKind::Mstar => "mstar",
            PlannerKind::Temporal => "temporal",
        })
    }
}

impl FromStr for PlannerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "astar" => Ok(PlannerKind::Astar),
            "mstar" => Ok(PlannerKind::Mstar),
            "temporal" => Ok(PlannerKind::Temporal),
            _ => Err(Error::InvalidScenario(format!("unknown planner {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Solved,
    Timeout,
    Deadlock,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Solved => "solved",
            Outcome::Timeout => "timeout",
            Outcome::Deadlock => "deadlock",
        })
    }
}

/// One planner configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSpec {
    pub planner: PlannerKind,
    pub epsilon: Weight,
    /// Temporal A* only.
    pub horizon: Option<usize>,
    pub moveset: Moveset,
    pub transfer: TransferConfig,
    pub time_limit: Duration,
}

impl RunSpec {
    /// Short name used for per-run output files.
    pub fn label(&self) -> String {
        match self.horizon {
            Some(h) => format!("{}_e{}_h{h}", self.planner, self.epsilon),
            None => format!("{}_e{}", self.planner, self.epsilon),
        }
    }

    fn limits(&self) -> SearchLimits {
        SearchLimits {
            max_time: self.time_limit,
            ..SearchLimits::default()
        }
    }
}

/// Every configuration of a sweep: A* and M* once per ε, Temporal A* once
/// per (ε, H). `planner = None` means all three.
pub fn sweep_specs(
    planner: Option<PlannerKind>,
    epsilons: &[Weight],
    horizons: &[usize],
    moveset: Moveset,
    transfer: TransferConfig,
    time_limit: Duration,
) -> Vec<RunSpec> {
    let kinds = match planner {
        Some(p) => vec![p],
        None => vec![
            PlannerKind::Astar,
            PlannerKind::Mstar,
            PlannerKind::Temporal,
        ],
    };
    let mut specs = Vec::new();
    for kind in kinds {
        for &epsilon in epsilons {
            let hs: Vec<Option<usize>> = if kind == PlannerKind::Temporal {
                horizons.iter().map(|&h| Some(h)).collect()
            } else {
                vec![None]
            };
            for horizon in hs {
                specs.push(RunSpec {
                    planner: kind,
                    epsilon,
                    horizon,
                    moveset,
                    transfer,
                    time_limit,
                });
            }
        }
    }
    specs
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRow {
    pub map: String,
    pub spec: RunSpec,
    pub m: usize,
    pub planning_time: Duration,
    pub time_steps: Option<usize>,
    pub tiles_traveled: Option<usize>,
    pub outcome: Outcome,
}

impl BenchmarkRow {
    pub fn csv_line(&self) -> String {
        let opt = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{:.3},{},{},{}",
            self.map,
            self.spec.planner,
            self.spec.epsilon,
            opt(self.spec.horizon),
            self.spec.moveset,
            self.m,
            self.planning_time.as_secs_f64() * 1000.0,
            opt(self.time_steps),
            opt(self.tiles_traveled),
            self.outcome
        )
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub row: BenchmarkRow,
    /// Executed steps; `None` when the planner produced nothing.
    pub trace: Option<Trace>,
}

fn trace_of(plan: &JointPlan) -> Trace {
    let mut trace = Trace::new(plan.poses[0].clone());
    for (t, moves) in plan.moves.iter().enumerate() {
        trace.steps.push(TraceStep {
            t: t + 1,
            moves: moves.clone(),
            poses: plan.poses[t + 1].clone(),
        });
    }
    trace
}

/// Run one configuration on a parsed scenario.
///
/// Goal scenarios may use any planner; task scenarios are executed by the
/// prioritized planner only. A joint planner that proves the goals
/// unreachable reports a deadlock.
pub fn run_one(
    map: &str,
    w: &Workspace,
    sc: &ScenarioFile,
    spec: &RunSpec,
) -> Result<RunResult, Error> {
    sc.validate(w)?;
    let m = sc.robots.len();
    let row = |planning_time, time_steps, tiles_traveled, outcome| BenchmarkRow {
        map: map.to_string(),
        spec: *spec,
        m,
        planning_time,
        time_steps,
        tiles_traveled,
        outcome,
    };
    let failed = |e: PlanError, elapsed: Duration| -> Result<RunResult, Error> {
        match e {
            PlanError::Timeout => Ok(RunResult {
                row: row(spec.time_limit, None, None, Outcome::Timeout),
                trace: None,
            }),
            PlanError::Deadlock(_) | PlanError::Unreachable => Ok(RunResult {
                row: row(elapsed, None, None, Outcome::Deadlock),
                trace: None,
            }),
        }
    };
    let temporal_cfg = || {
        let mut cfg = TemporalConfig::new(spec.moveset, spec.horizon.unwrap_or(5));
        cfg.weight = spec.epsilon;
        cfg.limits = spec.limits();
        cfg
    };

    if !sc.is_goal_scenario() {
        if spec.planner != PlannerKind::Temporal {
            return Err(Error::InvalidScenario(format!(
                "task scenarios run with the temporal planner, not {}",
                spec.planner
            )));
        }
        let state = sc.task_state(w)?;
        let out = run_scenario(
            state,
            &RunConfig {
                planner: temporal_cfg(),
                transfer: spec.transfer,
            },
        );
        let metrics = out.state.metrics;
        return match out.result {
            Ok(()) => Ok(RunResult {
                row: row(
                    metrics.planning_time,
                    Some(metrics.time_steps),
                    Some(metrics.tiles_traveled),
                    Outcome::Solved,
                ),
                trace: Some(out.trace),
            }),
            Err(PlanError::Unreachable) => Ok(RunResult {
                row: row(metrics.planning_time, None, None, Outcome::Deadlock),
                trace: Some(out.trace),
            }),
            Err(PlanError::Timeout) => Ok(RunResult {
                row: row(spec.time_limit, None, None, Outcome::Timeout),
                trace: Some(out.trace),
            }),
            Err(PlanError::Deadlock(_)) => Ok(RunResult {
                row: row(metrics.planning_time, None, None, Outcome::Deadlock),
                trace: Some(out.trace),
            }),
        };
    }

    let started = Instant::now();
    let planned = match spec.planner {
        PlannerKind::Astar => joint_astar(
            &sc.robots,
            &sc.goals,
            w,
            spec.moveset,
            spec.epsilon,
            spec.limits(),
        ),
        PlannerKind::Mstar => mstar_plan(
            &sc.robots,
            &sc.goals,
            w,
            spec.moveset,
            spec.epsilon,
            spec.limits(),
        ),
        PlannerKind::Temporal => temporal_plan(
            &sc.robots,
            &sc.goals,
            w,
            &sc.priority_order(),
            temporal_cfg(),
        ),
    };
    let elapsed = started.elapsed();
    match planned {
        Ok(plan) => Ok(RunResult {
            row: row(
                elapsed,
                Some(plan.makespan()),
                Some(plan.tiles_traveled()),
                Outcome::Solved,
            ),
            trace: Some(trace_of(&plan)),
        }),
        Err(e) => failed(e, elapsed),
    }
}

/// CSV text for `rows`, header included. With `timing = false` the
/// planning-time column is left empty, which makes repeated runs
/// byte-comparable.
pub fn csv(rows: &[BenchmarkRow], timing: bool) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let line = r.csv_line();
        if timing {
            out.push_str(&line);
        } else {
            let mut fields: Vec<&str> = line.split(',').collect();
            fields[6] = "";
            out.push_str(&fields.join(","));
        }
        out.push('\n');
    }
    out
}
