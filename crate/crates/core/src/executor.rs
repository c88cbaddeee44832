//! Task-driven scenario runs: assignment, optional load transfer, planning
//! and synchronized execution, with metrics and a replayable trace.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use crate::error::Error;
use crate::grid::{connected_after_removal, geodesic_distances, Cell, Workspace};
use crate::robot::{MoveKind, RobotPose};
use crate::search::{Goal, PlanError, PolicyField};
use crate::temporal::{step_with_priority, TemporalConfig, TemporalController};
use crate::transfer::{
    arbitrate, candidate_handoffs_excluding, evaluate_dropoff_swap, evaluate_transfer, CostOracle,
    Engaged, Proposal,
};
use crate::world::{StepError, World};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TaskStatus {
    Pending,
    PickedUp,
    Done,
}

/// Move the tile at `pick_at` to `place_at`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Task {
    pub pick_at: Cell,
    pub place_at: Cell,
    pub status: TaskStatus,
    pub assigned_to: Option<usize>,
}

impl Task {
    pub fn new(pick_at: Cell, place_at: Cell) -> Self {
        Task {
            pick_at,
            place_at,
            status: TaskStatus::Pending,
            assigned_to: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Metrics {
    pub time_steps: usize,
    /// Non-wait transitions summed over robots.
    pub tiles_traveled: usize,
    pub planning_time: Duration,
    pub transfers: usize,
    pub swaps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferConfig {
    pub enabled: bool,
    /// Only robots whose front feet are within this Manhattan distance are
    /// paired.
    pub d_tr: u32,
    /// Handoff candidates evaluated per pair.
    pub candidates: usize,
}

impl Default for TransferConfig {
    fn default() -> Self {
        TransferConfig {
            enabled: false,
            d_tr: 5,
            candidates: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub planner: TemporalConfig,
    pub transfer: TransferConfig,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioState {
    pub world: World,
    pub tasks: Vec<Task>,
    /// Tasks each robot will work through, current first.
    pub queues: Vec<VecDeque<usize>>,
    pub t: usize,
    pub metrics: Metrics,
}

impl ScenarioState {
    pub fn new(
        workspace: Workspace,
        robots: Vec<RobotPose>,
        tasks: Vec<Task>,
    ) -> Result<Self, Error> {
        let world = World::new(workspace, robots);
        world
            .check()
            .map_err(|e| Error::InvalidScenario(e.to_string()))?;
        if world.workspace.tile_count() == 0 {
            return Err(Error::InvalidScenario("the structure has no tiles".into()));
        }
        if world.robots.iter().any(|p| p.carrying) {
            return Err(Error::InvalidScenario(
                "robots must start without a tile".into(),
            ));
        }
        for (i, t) in tasks.iter().enumerate() {
            if t.status != TaskStatus::Pending || t.assigned_to.is_some() {
                return Err(Error::InvalidScenario(format!("task {i} is not pending")));
            }
            if !world.workspace.in_bounds(t.pick_at) || !world.workspace.in_bounds(t.place_at) {
                return Err(Error::InvalidScenario(format!(
                    "task {i} lies outside the workspace"
                )));
            }
        }
        expected_final(&world.workspace, &tasks)?;
        let queues = vec![VecDeque::new(); world.robots.len()];
        Ok(ScenarioState {
            world,
            tasks,
            queues,
            t: 0,
            metrics: Metrics::default(),
        })
    }

    pub fn all_done(&self) -> bool {
        self.tasks.iter().all(|t| t.status == TaskStatus::Done)
    }

    pub fn current_task(&self, r: usize) -> Option<usize> {
        self.queues[r].front().copied()
    }

    /// What robot `r` should work toward now. `None` when it has nothing
    /// to do yet (no task, or its pickup is not available).
    pub fn goal_of(&self, r: usize) -> Option<Goal> {
        let task = &self.tasks[self.current_task(r)?];
        let w = &self.world.workspace;
        if self.world.robots[r].carrying {
            return Some(Goal::Place(task.place_at));
        }
        let pickable =
            w.is_tile(task.pick_at) && connected_after_removal(w, task.pick_at).unwrap_or(false);
        pickable.then_some(Goal::Pick(task.pick_at))
    }

    fn task_cells(&self) -> Vec<Cell> {
        self.tasks
            .iter()
            .filter(|t| t.status != TaskStatus::Done)
            .flat_map(|t| [t.pick_at, t.place_at])
            .collect()
    }
}

/// The tile set once every task has been carried out in order.
pub fn expected_final(w: &Workspace, tasks: &[Task]) -> Result<BTreeSet<Cell>, Error> {
    let mut tiles: BTreeSet<Cell> = w.tiles().collect();
    for (i, t) in tasks.iter().enumerate() {
        if !tiles.remove(&t.pick_at) {
            return Err(Error::InvalidScenario(format!(
                "task {i} picks from {} which holds no tile by then",
                t.pick_at
            )));
        }
        if w.is_obstacle(t.place_at) || !tiles.insert(t.place_at) {
            return Err(Error::InvalidScenario(format!(
                "task {i} places onto occupied cell {}",
                t.place_at
            )));
        }
    }
    Ok(tiles)
}

/// A task is ready when its tile can be lifted now and both its cells can
/// be faced by a robot standing on two tiles in line.
fn ready(w: &Workspace, t: &Task) -> bool {
    w.is_tile(t.pick_at)
        && w.is_free(t.place_at)
        && connected_after_removal(w, t.pick_at).unwrap_or(false)
        && has_foothold(w, t.pick_at, t.place_at)
        && has_foothold(w, t.place_at, t.pick_at)
}

fn has_foothold(w: &Workspace, target: Cell, exclude: Cell) -> bool {
    let on = |c: Cell| c != exclude && c != target && w.is_tile(c);
    target
        .neighbors4()
        .into_iter()
        .any(|front| on(front) && on(front + (front - target)))
}

/// Give every idle robot (in ID order) the nearest ready, unassigned task,
/// measured along the structure from its front foot. Ties go to the lower
/// task index.
pub fn assign_tasks(state: &mut ScenarioState) {
    for r in 0..state.world.robots.len() {
        let pose = state.world.robots[r];
        if !state.queues[r].is_empty() || pose.carrying {
            continue;
        }
        let w = &state.world.workspace;
        let dist = geodesic_distances(w, pose.front).expect("front foot on a tile");
        let choice = state
            .tasks
            .iter()
            .enumerate()
            .filter(|(_, t)| {
                t.status == TaskStatus::Pending && t.assigned_to.is_none() && ready(w, t)
            })
            .filter_map(|(i, t)| dist.get(t.pick_at).map(|d| (d, i)))
            .min();
        if let Some((_, i)) = choice {
            state.tasks[i].assigned_to = Some(r);
            state.queues[r].push_back(i);
        }
    }
}

/// Robots' poses after one executed step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub t: usize,
    pub moves: Vec<MoveKind>,
    pub poses: Vec<RobotPose>,
}

/// Start poses plus every executed step; notes are free-form event lines.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    pub starts: Vec<RobotPose>,
    pub steps: Vec<TraceStep>,
    pub notes: Vec<(usize, String)>,
}

impl Trace {
    pub fn new(starts: Vec<RobotPose>) -> Self {
        Trace {
            starts,
            steps: Vec::new(),
            notes: Vec::new(),
        }
    }

    /// Line format, one line per robot per step:
    /// `t robot move front_x,front_y back_x,back_y carrying`, with `t = 0`
    /// lines (move `start`) for the initial poses. Lines starting with `#`
    /// are comments.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# t robot move front back carrying\n");
        for (r, p) in self.starts.iter().enumerate() {
            writeln!(out, "0 {r} start {p}").unwrap();
        }
        let mut notes = self.notes.iter().peekable();
        for step in &self.steps {
            while let Some((_, note)) = notes.next_if(|(t, _)| *t < step.t) {
                writeln!(out, "# {note}").unwrap();
            }
            for (r, (m, p)) in step.moves.iter().zip(&step.poses).enumerate() {
                writeln!(out, "{} {r} {m} {p}", step.t).unwrap();
            }
        }
        for (_, note) in notes {
            writeln!(out, "# {note}").unwrap();
        }
        out
    }

    pub fn parse(text: &str) -> Result<Trace, Error> {
        let mut trace = Trace::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: &str| Error::Parse {
                line: n + 1,
                msg: msg.to_string(),
            };
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 6 {
                return Err(err("expected 6 fields"));
            }
            let t: usize = f[0].parse().map_err(|_| err("bad time step"))?;
            let r: usize = f[1].parse().map_err(|_| err("bad robot id"))?;
            let pose: RobotPose = f[3..]
                .join(" ")
                .parse()
                .map_err(|e: Error| err(&e.to_string()))?;
            if t == 0 {
                if f[2] != "start" || r != trace.starts.len() {
                    return Err(err("start lines must list robots in order"));
                }
                trace.starts.push(pose);
                continue;
            }
            let m: MoveKind = f[2].parse().map_err(|e: Error| err(&e.to_string()))?;
            if r == 0 {
                if t != trace.steps.len() + 1 {
                    return Err(err("time steps must be consecutive"));
                }
                trace.steps.push(TraceStep {
                    t,
                    moves: Vec::new(),
                    poses: Vec::new(),
                });
            }
            let step = trace
                .steps
                .last_mut()
                .filter(|s| s.t == t && s.moves.len() == r)
                .ok_or_else(|| err("robots out of order"))?;
            step.moves.push(m);
            step.poses.push(pose);
        }
        Ok(trace)
    }
}

/// Re-execute a trace through [`World::step`], checking every recorded pose.
pub fn replay(workspace: &Workspace, trace: &Trace) -> Result<World, Error> {
    let mut world = World::new(workspace.clone(), trace.starts.clone());
    world
        .check()
        .map_err(|e| Error::InvalidScenario(e.to_string()))?;
    for step in &trace.steps {
        world = world
            .step(&step.moves)
            .map_err(|e| Error::InvalidScenario(format!("step {}: {e}", step.t)))?;
        if world.robots != step.poses {
            return Err(Error::InvalidScenario(format!(
                "step {}: poses differ from the trace",
                step.t
            )));
        }
    }
    Ok(world)
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub state: ScenarioState,
    pub trace: Trace,
    pub result: Result<(), PlanError>,
}

/// Summed distance-to-goal, recomputed lazily per structure.
struct Progress {
    fields: HashMap<(Goal, bool), PolicyField>,
    structure: Workspace,
}

impl Progress {
    fn value(&mut self, state: &ScenarioState, planner: &TemporalConfig) -> u64 {
        if self.structure != state.world.workspace {
            self.fields.clear();
            self.structure = state.world.workspace.clone();
        }
        let mut total = 0;
        for (r, pose) in state.world.robots.iter().enumerate() {
            let Some(goal) = state.goal_of(r) else {
                continue;
            };
            let field = self.fields.entry((goal, pose.carrying)).or_insert_with(|| {
                PolicyField::new(&state.world.workspace, goal, planner.moveset, pose.carrying)
            });
            total += field.distance(pose).map_or(10_000, u64::from);
        }
        total
    }
}

/// Carry out every task with the prioritized planner.
///
/// Each step: assign idle robots, optionally rewrite assignments by load
/// transfer, plan, execute. Robots waiting without progress are promoted
/// as in [`temporal_plan`](crate::temporal::temporal_plan). Stops when all tasks are done, on planner
/// failure, or when neither a task event nor a drop in summed
/// distance-to-goal has happened for `stall_limit` steps.
pub fn run_scenario(initial: ScenarioState, cfg: &RunConfig) -> RunOutcome {
    let mut state = initial;
    let m = state.world.robots.len();
    let mut trace = Trace::new(state.world.robots.clone());
    let mut ctl = TemporalController::new(cfg.planner, (0..m).collect());
    let mut oracle = CostOracle::new(cfg.planner.moveset, cfg.planner.weight, cfg.planner.limits);
    let mut progress = Progress {
        fields: HashMap::new(),
        structure: state.world.workspace.clone(),
    };
    let mut best = u64::MAX;
    let mut since_event = 0;
    let result = loop {
        if state.all_done() {
            break Ok(());
        }
        let started = Instant::now();
        assign_tasks(&mut state);
        if cfg.transfer.enabled {
            for note in apply_transfers(&mut state, &mut oracle, &cfg.transfer) {
                trace.notes.push((state.t + 1, note));
                since_event = 0;
                best = u64::MAX;
            }
        }
        let goals: Vec<Option<Goal>> = (0..m).map(|r| state.goal_of(r)).collect();
        if ctl.out_of_time() {
            break Err(PlanError::Timeout);
        }
        let proposed = ctl.next_moves(&state.world, &goals);
        state.metrics.planning_time += started.elapsed();
        let proposed = match proposed {
            Ok(p) => p,
            Err(e) => break Err(e),
        };
        let (next, executed) = step_with_priority(&state.world, proposed, ctl.order());
        ctl.commit(&executed, &next);
        state.world = next;
        state.t += 1;
        state.metrics.time_steps = state.t;
        state.metrics.tiles_traveled += executed.iter().filter(|&&mv| mv != MoveKind::Wait).count();
        let mut event = false;
        for (r, &mv) in executed.iter().enumerate() {
            let Some(i) = state.current_task(r) else {
                continue;
            };
            match mv {
                MoveKind::Pick => {
                    state.tasks[i].status = TaskStatus::PickedUp;
                    event = true;
                }
                MoveKind::Place => {
                    state.tasks[i].status = TaskStatus::Done;
                    state.queues[r].pop_front();
                    event = true;
                }
                _ => {}
            }
        }
        trace.steps.push(TraceStep {
            t: state.t,
            moves: executed,
            poses: state.world.robots.clone(),
        });
        let now = progress.value(&state, &cfg.planner);
        if event || now < best {
            best = if event { u64::MAX } else { now };
            since_event = 0;
        } else {
            since_event += 1;
            if since_event % cfg.planner.promote_after.max(1) == 0 {
                ctl.promote_stalled(|r| state.goal_of(r).is_some());
            }
            if since_event > cfg.planner.stall_limit {
                let stuck = ctl
                    .order()
                    .iter()
                    .copied()
                    .find(|&r| state.goal_of(r).is_some())
                    .unwrap_or(0);
                break Err(PlanError::Deadlock(stuck));
            }
        }
    };
    state.metrics.transfers = trace
        .notes
        .iter()
        .filter(|(_, n)| n.starts_with("transfer"))
        .count();
    state.metrics.swaps = trace
        .notes
        .iter()
        .filter(|(_, n)| n.starts_with("swap"))
        .count();
    RunOutcome {
        state,
        trace,
        result,
    }
}

/// Evaluate every eligible robot pair, accept the best non-overlapping
/// proposals and rewrite the task lists. Returns one note per rewrite.
fn apply_transfers(
    state: &mut ScenarioState,
    oracle: &mut CostOracle,
    cfg: &TransferConfig,
) -> Vec<String> {
    let m = state.world.robots.len();
    let w = state.world.workspace.clone();
    let engaged = |r: usize| -> Option<(Engaged, bool)> {
        let i = state.current_task(r)?;
        let task = &state.tasks[i];
        let pose = state.world.robots[r];
        match (pose.carrying, task.status) {
            (true, TaskStatus::PickedUp) => Some((
                Engaged {
                    robot: r,
                    pose,
                    target: task.place_at,
                },
                true,
            )),
            (false, TaskStatus::Pending) if state.goal_of(r).is_some() => Some((
                Engaged {
                    robot: r,
                    pose,
                    target: task.pick_at,
                },
                false,
            )),
            _ => None,
        }
    };
    let robots: Vec<Option<(Engaged, bool)>> = (0..m).map(engaged).collect();
    let excluded = state.task_cells();
    let mut proposals = Vec::new();
    for i in 0..m {
        for j in 0..m {
            let (Some((a, a_carries)), Some((b, b_carries))) = (robots[i], robots[j]) else {
                continue;
            };
            if i == j || !a_carries {
                continue;
            }
            if b_carries {
                if i < j {
                    proposals.extend(
                        evaluate_dropoff_swap(oracle, &w, a, b, cfg.d_tr).map(Proposal::Swap),
                    );
                }
            } else {
                let candidates =
                    candidate_handoffs_excluding(&w, &a.pose, cfg.candidates, &excluded);
                proposals.extend(
                    evaluate_transfer(oracle, &w, a, b, &candidates, cfg.d_tr)
                        .map(Proposal::Transfer),
                );
            }
        }
    }
    let mut notes = Vec::new();
    for p in arbitrate(&proposals) {
        match p {
            Proposal::Swap(s) => {
                let (a, b) = (state.queues[s.first][0], state.queues[s.second][0]);
                let tmp = state.tasks[a].place_at;
                state.tasks[a].place_at = state.tasks[b].place_at;
                state.tasks[b].place_at = tmp;
                notes.push(format!(
                    "swap robots {} {} saving {}",
                    s.first,
                    s.second,
                    s.old_cost - s.new_cost
                ));
            }
            Proposal::Transfer(t) => {
                let carried = state.queues[t.carrier][0];
                let fetched = state.queues[t.fetcher]
                    .pop_front()
                    .expect("fetcher has a task");
                let relay = state.tasks.len();
                state.tasks.push(Task {
                    pick_at: t.handoff,
                    place_at: state.tasks[carried].place_at,
                    status: TaskStatus::Pending,
                    assigned_to: Some(t.fetcher),
                });
                state.tasks[carried].place_at = t.handoff;
                state.tasks[fetched].assigned_to = Some(t.carrier);
                state.queues[t.fetcher].push_front(relay);
                state.queues[t.carrier].insert(1, fetched);
                notes.push(format!(
                    "transfer carrier {} fetcher {} at {} saving {}",
                    t.carrier,
                    t.fetcher,
                    t.handoff,
                    t.old_cost - t.new_cost
                ));
            }
        }
    }
    notes
}

/// Net tile changes of a finished run: removed cells and added cells
/// relative to `start`.
pub fn net_changes(start: &Workspace, end: &Workspace) -> (BTreeSet<Cell>, BTreeSet<Cell>) {
    let a: BTreeSet<Cell> = start.tiles().collect();
    let b: BTreeSet<Cell> = end.tiles().collect();
    (
        a.difference(&b).copied().collect(),
        b.difference(&a).copied().collect(),
    )
}

impl From<StepError> for Error {
    fn from(e: StepError) -> Self {
        Error::InvalidScenario(e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robot::Moveset;

    fn c(x: i32, y: i32) -> Cell {
        Cell::new(x, y)
    }

    fn config(transfer: bool) -> RunConfig {
        RunConfig {
            planner: TemporalConfig::new(Moveset::S7, 5),
            transfer: TransferConfig {
                enabled: transfer,
                ..TransferConfig::default()
            },
        }
    }

    fn strip() -> Workspace {
        "TTTTTT..\nTTTTTTTT\n".parse().unwrap()
    }

    #[test]
    fn zero_tasks_take_zero_steps() {
        let state =
            ScenarioState::new(strip(), vec![RobotPose::new(c(1, 0), c(0, 0))], vec![]).unwrap();
        let out = run_scenario(state.clone(), &config(false));
        assert_eq!(out.result, Ok(()));
        assert_eq!(out.state.metrics.time_steps, 0);
        assert_eq!(out.state.world, state.world);
    }

    #[test]
    fn single_task_run_replays_and_conserves_tiles() {
        let w = strip();
        let tasks = vec![Task::new(c(0, 1), c(6, 1)), Task::new(c(1, 1), c(7, 1))];
        let state = ScenarioState::new(
            w.clone(),
            vec![RobotPose::new(c(2, 0), c(1, 0))],
            tasks.clone(),
        )
        .unwrap();
        let out = run_scenario(state, &config(false));
        assert_eq!(out.result, Ok(()));
        let final_tiles: BTreeSet<Cell> = out.state.world.workspace.tiles().collect();
        assert_eq!(final_tiles, expected_final(&w, &tasks).unwrap());
        let replayed = replay(&w, &out.trace).unwrap();
        assert_eq!(replayed, out.state.world);
        let text = out.trace.to_text();
        assert_eq!(Trace::parse(&text).unwrap().steps, out.trace.steps);
        assert_eq!(out.state.metrics.time_steps, out.trace.steps.len());
        let moved: usize = out
            .trace
            .steps
            .iter()
            .flat_map(|s| &s.moves)
            .filter(|&&m| m != MoveKind::Wait)
            .count();
        assert_eq!(out.state.metrics.tiles_traveled, moved);
    }

    #[test]
    fn assignment_picks_nearest_ready_task() {
        let w: Workspace = "TTTTTT..\nTTTTTTT.\n".parse().unwrap();
        let robots = vec![
            RobotPose::new(c(2, 0), c(1, 0)),
            RobotPose::new(c(5, 0), c(4, 0)),
        ];
        let tasks = vec![Task::new(c(0, 1), c(6, 1)), Task::new(c(5, 1), c(7, 0))];
        let mut state = ScenarioState::new(w, robots, tasks).unwrap();
        assign_tasks(&mut state);
        assert_eq!(state.current_task(0), Some(0));
        assert_eq!(state.current_task(1), Some(1));
    }

    #[test]
    fn equidistant_robots_tie_to_lower_id() {
        let w: Workspace = "TTTTTTT.\nTTTTTTTT\n".parse().unwrap();
        let robots = vec![
            RobotPose::new(c(5, 1), c(6, 1)),
            RobotPose::new(c(1, 1), c(0, 1)),
        ];
        let mut state =
            ScenarioState::new(w.clone(), robots.clone(), vec![Task::new(c(3, 1), c(7, 1))])
                .unwrap();
        assign_tasks(&mut state);
        assert_eq!(state.current_task(0), Some(0));
        assert!(state.queues[1].is_empty());
        let swapped = vec![robots[1], robots[0]];
        let mut state = ScenarioState::new(w, swapped, vec![Task::new(c(3, 1), c(7, 1))]).unwrap();
        assign_tasks(&mut state);
        assert_eq!(state.current_task(0), Some(0));
    }

    #[test]
    fn no_pending_tasks_leaves_robots_idle() {
        let mut state =
            ScenarioState::new(strip(), vec![RobotPose::new(c(1, 0), c(0, 0))], vec![]).unwrap();
        assign_tasks(&mut state);
        assert!(state.queues[0].is_empty());
        assert_eq!(state.goal_of(0), None);
    }

    #[test]
    fn invalid_scenarios_are_rejected() {
        let w = strip();
        assert!(ScenarioState::new(
            w.clone(),
            vec![
                RobotPose::new(c(7, 0), c(6, 0)),
                RobotPose::new(c(6, 0), c(5, 0))
            ],
            vec![]
        )
        .is_err());
        assert!(ScenarioState::new(
            w.clone(),
            vec![RobotPose::new(c(1, 0), c(0, 0))],
            vec![Task::new(c(7, 1), c(6, 1))]
        )
        .is_err());
        assert!(ScenarioState::new(
            w,
            vec![RobotPose::new(c(1, 0), c(0, 0))],
            vec![Task::new(c(0, 1), c(1, 1))]
        )
        .is_err());
    }

    #[test]
    fn tampered_trace_fails_replay() {
        let w = strip();
        let state = ScenarioState::new(
            w.clone(),
            vec![RobotPose::new(c(2, 0), c(1, 0))],
            vec![Task::new(c(0, 1), c(6, 1))],
        )
        .unwrap();
        let out = run_scenario(state, &config(false));
        let mut trace = out.trace.clone();
        trace.steps[0].poses[0] = trace.starts[0];
        assert!(replay(&w, &trace).is_err());
        assert!(Trace::parse("0 0 start 1,0 0,0 0\n2 0 wait 1,0 0,0 0\n").is_err());
    }
}
