//! Prioritized planning with a sliding reservation window (Temporal A*).
//!
//! Robots plan one at a time in priority order. Each robot searches over
//! (pose, step) pairs for the first `horizon` steps, avoiding the cells that
//! higher-priority robots have already reserved for those steps, and over
//! plain poses afterwards. Its own first `horizon` steps are then reserved
//! for everyone below it. Only the first step of each plan is executed;
//! plans are cached and reused while they stay consistent with the window.
//!
//! Robots below the one planning are ignored, except that with a one-step
//! horizon their current footprints are blocked. A robot that cannot find
//! any safe window, not even one that just keeps out of the way, is
//! promoted one place and the round is retried.

use std::cmp::Reverse;
use std::collections::hash_map::Entry;
use std::collections::{BinaryHeap, HashMap};
use std::time::{Duration, Instant};

use crate::error::Error;
use crate::grid::{Cell, Workspace};
use crate::mstar::JointPlan;
use crate::robot::{
    apply_move, can_pick, can_place, collision_set, motion_neighbors, MoveKind, Moveset, RobotPose,
};
use crate::search::{astar, heuristic, Budget, Goal, PlanError, PolicyField, SearchLimits, Weight};
use crate::world::{StepError, World};

/// Planner parameters shared by every robot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemporalConfig {
    pub moveset: Moveset,
    /// Number of steps covered by reservations (at least 1).
    pub horizon: usize,
    pub weight: Weight,
    /// `max_expansions` bounds each single search; `max_time` bounds the
    /// whole run.
    pub limits: SearchLimits,
    /// Steps without improving the best progress value before a run is
    /// declared deadlocked.
    pub stall_limit: usize,
    /// Steps without progress after which the best-ranked unfinished robot
    /// below the top is promoted one place.
    pub promote_after: usize,
}

impl TemporalConfig {
    pub fn new(moveset: Moveset, horizon: usize) -> Self {
        TemporalConfig {
            moveset,
            horizon: horizon.max(1),
            weight: Weight::ONE,
            limits: SearchLimits::default(),
            stall_limit: 100,
            promote_after: 5,
        }
    }
}

/// One planned step: the move and the pose it leads to.
pub type Step = (MoveKind, RobotPose);

#[derive(Debug, Clone)]
struct Cached {
    goal: Option<Goal>,
    start: RobotPose,
    steps: Vec<Step>,
}

enum RoundError {
    Stuck(usize),
    Limit,
}

/// Stateful prioritized planner. Keeps the priority queue and each robot's
/// cached plan between calls.
#[derive(Debug, Clone)]
pub struct TemporalController {
    cfg: TemporalConfig,
    order: Vec<usize>,
    cache: Vec<Option<Cached>>,
    deadline: Instant,
    pub expansions: u64,
    pub promotions: usize,
}

impl TemporalController {
    /// `order[0]` has the highest priority.
    pub fn new(cfg: TemporalConfig, order: Vec<usize>) -> Self {
        let n = order.len();
        let deadline = Instant::now() + cfg.limits.max_time.min(Duration::from_secs(86_400 * 365));
        TemporalController {
            cfg,
            order,
            cache: vec![None; n],
            deadline,
            expansions: 0,
            promotions: 0,
        }
    }

    pub fn config(&self) -> &TemporalConfig {
        &self.cfg
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn out_of_time(&self) -> bool {
        Instant::now() > self.deadline
    }

    pub fn invalidate(&mut self, r: usize) {
        self.cache[r] = None;
    }

    /// Moves for the next synchronized step. `goals[r] == None` means robot
    /// `r` only has to stay out of the way.
    pub fn next_moves(
        &mut self,
        world: &World,
        goals: &[Option<Goal>],
    ) -> Result<Vec<MoveKind>, PlanError> {
        Ok(self
            .plan_windows(world, goals)?
            .into_iter()
            .map(|w| w[0])
            .collect())
    }

    /// Tell the controller which moves were actually executed, so cached
    /// plans advance (or are dropped if a robot was held back).
    pub fn commit(&mut self, executed: &[MoveKind], after: &World) {
        for (r, &kind) in executed.iter().enumerate() {
            let keep = match &mut self.cache[r] {
                Some(c)
                    if c.steps.first().map(|s| s.0) == Some(kind)
                        && c.steps[0].1 == after.robots[r] =>
                {
                    c.start = c.steps.remove(0).1;
                    true
                }
                Some(c) if c.steps.is_empty() && kind == MoveKind::Wait => true,
                _ => false,
            };
            if !keep {
                self.cache[r] = None;
            }
        }
    }

    /// Promote the best-ranked robot below the top for which `unfinished`
    /// holds. Used when robots wait on each other without progress, e.g.
    /// behind a higher-priority robot parked on its goal.
    pub fn promote_stalled(&mut self, unfinished: impl Fn(usize) -> bool) -> Option<usize> {
        let pos = (1..self.order.len()).find(|&i| unfinished(self.order[i]))?;
        let (r, above) = (self.order[pos], self.order[pos - 1]);
        self.order.swap(pos - 1, pos);
        self.cache[r] = None;
        self.cache[above] = None;
        self.promotions += 1;
        Some(r)
    }

    /// Full `horizon`-step windows for every robot, promoting robots that
    /// get stuck. At most m(m-1)/2 promotions are tried per call.
    pub fn plan_windows(
        &mut self,
        world: &World,
        goals: &[Option<Goal>],
    ) -> Result<Vec<Vec<MoveKind>>, PlanError> {
        let m = self.order.len();
        let cap = m * m.saturating_sub(1) / 2;
        let mut tried = 0;
        loop {
            match self.round(world, goals) {
                Ok(windows) => return Ok(windows),
                Err(RoundError::Limit) => return Err(PlanError::Timeout),
                Err(RoundError::Stuck(k)) => {
                    let demoted = match promote(&self.order, k) {
                        Ok(order) if tried < cap => order,
                        _ => return Err(PlanError::Deadlock(k)),
                    };
                    let pos = demoted.iter().position(|&r| r == k).unwrap();
                    self.cache[k] = None;
                    self.cache[demoted[pos + 1]] = None;
                    self.order = demoted;
                    self.promotions += 1;
                    tried += 1;
                }
            }
        }
    }

    fn round(
        &mut self,
        world: &World,
        goals: &[Option<Goal>],
    ) -> Result<Vec<Vec<MoveKind>>, RoundError> {
        let h = self.cfg.horizon;
        let m = self.order.len();
        let mut reserved: Vec<Vec<Cell>> = vec![Vec::new(); h];
        let mut windows = vec![Vec::new(); m];
        for rank in 0..m {
            let r = self.order[rank];
            let pose = world.robots[r];
            let mut blocked = reserved.clone();
            for &lower in self.order[rank + 1..].iter().filter(|_| h == 1) {
                blocked[0].extend_from_slice(world.robots[lower].footprint().cells());
            }
            let reusable = self.cache[r].as_ref().is_some_and(|c| {
                c.goal == goals[r]
                    && c.start == pose
                    && window_ok(&c.steps, pose, &world.workspace, &blocked)
            });
            if !reusable {
                let steps = self.search(r, pose, goals[r], &world.workspace, &blocked)?;
                self.cache[r] = Some(Cached {
                    goal: goals[r],
                    start: pose,
                    steps,
                });
            }
            let steps = &self.cache[r].as_ref().unwrap().steps;
            let mut p = pose;
            for (t, slot) in reserved.iter_mut().enumerate() {
                let (kind, next) = steps.get(t).copied().unwrap_or((MoveKind::Wait, p));
                slot.extend_from_slice(collision_set(&p, kind, p.carrying).cells());
                windows[r].push(kind);
                p = next;
            }
        }
        Ok(windows)
    }

    fn search(
        &mut self,
        r: usize,
        pose: RobotPose,
        goal: Option<Goal>,
        w: &Workspace,
        blocked: &[Vec<Cell>],
    ) -> Result<Vec<Step>, RoundError> {
        let remaining = self.deadline.saturating_duration_since(Instant::now());
        let limits = SearchLimits {
            max_expansions: self.cfg.limits.max_expansions,
            max_time: remaining,
        };
        let (s, weight) = (self.cfg.moveset, self.cfg.weight);
        let mut outcome = windowed_search(
            pose,
            goal,
            w,
            s,
            weight,
            blocked,
            limits,
            &mut self.expansions,
        );
        // a goal that cannot be reached right now: keep out of the way instead
        if goal.is_some() && outcome == Err(PlanError::Unreachable) {
            outcome = windowed_search(
                pose,
                None,
                w,
                s,
                weight,
                blocked,
                limits,
                &mut self.expansions,
            );
        }
        match outcome {
            Ok(steps) => Ok(steps),
            Err(PlanError::Timeout) => Err(RoundError::Limit),
            Err(_) => Err(RoundError::Stuck(r)),
        }
    }
}

/// Does a cached plan still fit the current window?
fn window_ok(steps: &[Step], start: RobotPose, w: &Workspace, blocked: &[Vec<Cell>]) -> bool {
    let mut p = start;
    for (t, cells) in blocked.iter().enumerate() {
        let (kind, next) = steps.get(t).copied().unwrap_or((MoveKind::Wait, p));
        if collision_set(&p, kind, p.carrying).intersects_any(cells) {
            return false;
        }
        let valid = match kind {
            MoveKind::Pick => t > 0 || can_pick(&p, w),
            MoveKind::Place => t > 0 || can_place(&p, w),
            _ => apply_move(&p, kind, w) == Some(next),
        };
        if !valid {
            return false;
        }
        p = next;
    }
    true
}

struct Node {
    pose: RobotPose,
    tau: usize,
    g: u32,
    parent: usize,
    via: MoveKind,
}

/// Whether standing still at `pose` from step `tau` to the end of the
/// window avoids every reservation.
fn safe_to_stay(pose: &RobotPose, tau: usize, blocked: &[Vec<Cell>]) -> bool {
    let fp = pose.footprint();
    blocked
        .iter()
        .skip(tau)
        .all(|cells| !fp.intersects_any(cells))
}

/// Search over (pose, step) for the first `blocked.len()` steps and over
/// poses afterwards. With `goal == None` the search looks for the cheapest
/// way to stand somewhere safe until the window ends. Waits cost one step.
#[allow(clippy::too_many_arguments)]
pub fn windowed_search(
    start: RobotPose,
    goal: Option<Goal>,
    w: &Workspace,
    s: Moveset,
    weight: Weight,
    blocked: &[Vec<Cell>],
    limits: SearchLimits,
    expansions: &mut u64,
) -> Result<Vec<Step>, PlanError> {
    let horizon = blocked.len();
    if blocked.iter().all(Vec::is_empty) {
        return match goal {
            None => Ok(Vec::new()),
            Some(goal) => {
                let plan = astar(start, goal, w, s, weight, limits);
                if let Ok(p) = &plan {
                    *expansions += p.expansions;
                }
                plan.map(|p| {
                    p.moves
                        .into_iter()
                        .zip(p.poses.into_iter().skip(1))
                        .collect()
                })
            }
        };
    }
    let h_of = |p: &RobotPose| goal.map_or(0, |g| heuristic(p, g));
    let mut budget = Budget::new(limits);
    let mut nodes = vec![Node {
        pose: start,
        tau: 0,
        g: 0,
        parent: usize::MAX,
        via: MoveKind::Wait,
    }];
    let mut best: HashMap<(RobotPose, usize), u32> = HashMap::from([((start, 0), 0)]);
    let mut open = BinaryHeap::new();
    let mut seq = 0u64;
    open.push(Reverse((
        weight.f(0, h_of(&start)),
        h_of(&start),
        seq,
        0usize,
    )));
    let result = loop {
        let Some(Reverse((_, _, _, id))) = open.pop() else {
            break Err(PlanError::Unreachable);
        };
        let (pose, tau, g) = (nodes[id].pose, nodes[id].tau, nodes[id].g);
        if best[&(pose, tau)] < g {
            continue;
        }
        if goal.is_none_or(|goal| goal.is_reached(&pose)) && safe_to_stay(&pose, tau, blocked) {
            break Ok(unwind(&nodes, id));
        }
        if let Err(e) = budget.tick() {
            break Err(e);
        }
        let mut succ: Vec<Step> = motion_neighbors(&pose, w, s)
            .into_iter()
            .filter(|t| tau < horizon || t.kind != MoveKind::Wait)
            .map(|t| (t.kind, t.pose))
            .collect();
        if let Some(action) = goal.and_then(|g| g.action_from(&pose, w)) {
            succ.push((
                action,
                RobotPose {
                    carrying: !pose.carrying,
                    ..pose
                },
            ));
        }
        for (kind, next) in succ {
            if tau < horizon
                && collision_set(&pose, kind, pose.carrying).intersects_any(&blocked[tau])
            {
                continue;
            }
            let ntau = (tau + 1).min(horizon);
            let ng = g + 1;
            match best.entry((next, ntau)) {
                Entry::Occupied(mut e) => {
                    if *e.get() <= ng {
                        continue;
                    }
                    e.insert(ng);
                }
                Entry::Vacant(e) => {
                    e.insert(ng);
                }
            }
            let nid = nodes.len();
            nodes.push(Node {
                pose: next,
                tau: ntau,
                g: ng,
                parent: id,
                via: kind,
            });
            let h = h_of(&next);
            seq += 1;
            open.push(Reverse((weight.f(ng, h), h, seq, nid)));
        }
    };
    *expansions += budget.expansions;
    result
}

fn unwind(nodes: &[Node], mut id: usize) -> Vec<Step> {
    let mut steps = Vec::new();
    while nodes[id].parent != usize::MAX {
        steps.push((nodes[id].via, nodes[id].pose));
        id = nodes[id].parent;
    }
    steps.reverse();
    steps
}

/// One planning round with a fixed priority order `q`: each robot's first
/// `horizon` moves. Fails with the robot that could not find a safe window.
pub fn plan_round(
    world: &World,
    goals: &[Option<Goal>],
    q: &[usize],
    cfg: TemporalConfig,
) -> Result<Vec<Vec<MoveKind>>, PlanError> {
    let mut ctl = TemporalController::new(cfg, q.to_vec());
    match ctl.round(world, goals) {
        Ok(windows) => Ok(windows),
        Err(RoundError::Limit) => Err(PlanError::Timeout),
        Err(RoundError::Stuck(k)) => Err(PlanError::Deadlock(k)),
    }
}

/// Move `stuck` one place up in the priority order.
pub fn promote(q: &[usize], stuck: usize) -> Result<Vec<usize>, Error> {
    match q.iter().position(|&r| r == stuck) {
        None => Err(Error::Priority(format!(
            "robot {stuck} is not in the queue"
        ))),
        Some(0) => Err(Error::Priority(format!(
            "robot {stuck} already has the highest priority"
        ))),
        Some(pos) => {
            let mut order = q.to_vec();
            order.swap(pos - 1, pos);
            Ok(order)
        }
    }
}

/// Like [`plan_round`], but a stuck robot is promoted and the round is
/// retried. Returns the windows and the final priority order.
pub fn plan_with_promotion(
    world: &World,
    goals: &[Option<Goal>],
    q: &[usize],
    cfg: TemporalConfig,
) -> Result<(Vec<Vec<MoveKind>>, Vec<usize>), PlanError> {
    let mut ctl = TemporalController::new(cfg, q.to_vec());
    let windows = ctl.plan_windows(world, goals)?;
    Ok((windows, ctl.order))
}

/// Drive every robot's front foot to its target on a fixed structure.
///
/// Robots keep replanning each step until all targets are occupied at once.
/// Every `promote_after` steps without progress a waiting robot is
/// promoted. The run fails with `Deadlock` when the summed single-robot
/// distance to go has not improved for `stall_limit` steps, and with
/// `Timeout` once `limits.max_time` has passed.
pub fn temporal_plan(
    starts: &[RobotPose],
    targets: &[Cell],
    w: &Workspace,
    q: &[usize],
    cfg: TemporalConfig,
) -> Result<JointPlan, PlanError> {
    let goals: Vec<Option<Goal>> = targets.iter().map(|&c| Some(Goal::FrontAt(c))).collect();
    let fields: Vec<PolicyField> = starts
        .iter()
        .zip(targets)
        .map(|(p, &c)| PolicyField::new(w, Goal::FrontAt(c), cfg.moveset, p.carrying))
        .collect();
    let progress = |ps: &[RobotPose]| -> u64 {
        ps.iter()
            .zip(&fields)
            .map(|(p, f)| f.distance(p).map_or(1_000_000, u64::from))
            .sum()
    };
    let mut ctl = TemporalController::new(cfg, q.to_vec());
    let mut world = World::new(w.clone(), starts.to_vec());
    let mut plan = JointPlan {
        poses: vec![starts.to_vec()],
        moves: Vec::new(),
        expansions: 0,
        coupled_expansions: 0,
    };
    let mut best = progress(starts);
    let mut since_best = 0;
    while !world.robots.iter().zip(targets).all(|(p, t)| p.front == *t) {
        if ctl.out_of_time() {
            return Err(PlanError::Timeout);
        }
        let proposed = ctl.next_moves(&world, &goals)?;
        let (next, executed) = step_with_priority(&world, proposed, ctl.order());
        ctl.commit(&executed, &next);
        world = next;
        plan.moves.push(executed);
        plan.poses.push(world.robots.clone());
        let now = progress(&world.robots);
        if now < best {
            best = now;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best % cfg.promote_after.max(1) == 0 {
                ctl.promote_stalled(|r| world.robots[r].front != targets[r]);
            }
            if since_best > cfg.stall_limit {
                let stuck = ctl
                    .order()
                    .iter()
                    .copied()
                    .find(|&r| world.robots[r].front != targets[r])
                    .unwrap_or(0);
                return Err(PlanError::Deadlock(stuck));
            }
        }
    }
    plan.expansions = ctl.expansions;
    Ok(plan)
}

/// Execute `moves`, holding back lower-priority robots (replacing their
/// move by `Wait`) until the step is valid. Returns the new world and the
/// moves actually executed.
pub fn step_with_priority(
    world: &World,
    mut moves: Vec<MoveKind>,
    order: &[usize],
) -> (World, Vec<MoveKind>) {
    let rank = |r: usize| order.iter().position(|&x| x == r).unwrap_or(usize::MAX);
    loop {
        let culprit = match world.step(&moves) {
            Ok(next) => return (next, moves),
            Err(StepError::InvalidMove { robot, .. }) | Err(StepError::OffStructure(robot)) => {
                robot
            }
            Err(StepError::Collision(a, b)) => {
                let moving: Vec<usize> = [a, b]
                    .into_iter()
                    .filter(|&r| moves[r] != MoveKind::Wait)
                    .collect();
                *moving
                    .iter()
                    .max_by_key(|&&r| rank(r))
                    .expect("two waiting robots never collide")
            }
            Err(StepError::Disconnected) => (0..moves.len())
                .filter(|&r| moves[r] == MoveKind::Pick)
                .max_by_key(|&r| rank(r))
                .expect("only picks disconnect"),
            Err(StepError::Arity { .. }) => panic!("one move per robot"),
        };
        moves[culprit] = MoveKind::Wait;
    }
}
