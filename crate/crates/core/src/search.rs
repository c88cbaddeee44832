//! Weighted A* over single-robot configuration graphs.
//!
//! Nodes are ranked by `f = g + w * h` with integer arithmetic (the weight is
//! stored in thousandths), ties broken by smaller `h` and then by insertion
//! order, so every search is deterministic.

use std::cmp::Reverse;
use std::collections::hash_map::Entry;
use std::collections::{BinaryHeap, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::error::Error;
use crate::grid::{manhattan, Cell, Workspace};
use crate::robot::{
    all_poses, can_pick, can_place, motion_neighbors, MoveKind, Moveset, RobotPose,
};

/// Heuristic inflation factor, stored in thousandths. Always at least 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Weight(u32);

impl Weight {
    pub const ONE: Weight = Weight(1000);

    pub fn from_milli(milli: u32) -> Result<Self, Error> {
        if milli < 1000 {
            return Err(Error::Parse {
                line: 0,
                msg: format!("weight must be >= 1, got {}", milli as f64 / 1000.0),
            });
        }
        Ok(Weight(milli))
    }

    pub fn integer(w: u32) -> Self {
        Weight(w.max(1) * 1000)
    }

    pub fn milli(self) -> u32 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / 1000.0
    }

    /// `g + w*h`, scaled by 1000.
    pub fn f(self, g: u32, h: u32) -> u64 {
        g as u64 * 1000 + self.0 as u64 * h as u64
    }
}

impl Default for Weight {
    fn default() -> Self {
        Weight::ONE
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_multiple_of(1000) {
            write!(f, "{}", self.0 / 1000)
        } else {
            let s = format!("{:.3}", self.as_f64());
            f.write_str(s.trim_end_matches('0'))
        }
    }
}

impl FromStr for Weight {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        let v: f64 = s.trim().parse().map_err(|_| Error::Parse {
            line: 0,
            msg: format!("invalid weight {s:?}"),
        })?;
        if !v.is_finite() {
            return Err(Error::Parse {
                line: 0,
                msg: format!("invalid weight {s:?}"),
            });
        }
        Weight::from_milli((v * 1000.0).round() as u32)
    }
}

/// What a single-robot search must achieve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Goal {
    /// Front foot on the cell; back foot anywhere valid.
    FrontAt(Cell),
    /// Finish by picking the tile at the cell.
    Pick(Cell),
    /// Finish by placing the carried tile at the cell.
    Place(Cell),
}

impl Goal {
    pub fn cell(self) -> Cell {
        match self {
            Goal::FrontAt(c) | Goal::Pick(c) | Goal::Place(c) => c,
        }
    }

    pub fn is_reached(self, pose: &RobotPose) -> bool {
        match self {
            Goal::FrontAt(c) => pose.front == c,
            Goal::Pick(c) => pose.carrying && pose.target() == c,
            Goal::Place(c) => !pose.carrying && pose.target() == c,
        }
    }

    /// The terminal action and whether `pose` can take it now.
    pub fn action_from(self, pose: &RobotPose, w: &Workspace) -> Option<MoveKind> {
        match self {
            Goal::FrontAt(_) => None,
            Goal::Pick(c) => (pose.target() == c && can_pick(pose, w)).then_some(MoveKind::Pick),
            Goal::Place(c) => (pose.target() == c && can_place(pose, w)).then_some(MoveKind::Place),
        }
    }
}

/// Lower bound on the moves needed from `pose`. The front foot moves at most
/// one cell per motion, so half the Manhattan gap (rounded up) never
/// overestimates and drops by at most one per move.
pub fn heuristic(pose: &RobotPose, goal: Goal) -> u32 {
    if goal.is_reached(pose) {
        return 0;
    }
    match goal {
        Goal::FrontAt(c) => manhattan(pose.front, c).div_ceil(2),
        Goal::Pick(c) | Goal::Place(c) => manhattan(pose.front, c).abs_diff(1).div_ceil(2) + 1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchLimits {
    pub max_expansions: u64,
    pub max_time: Duration,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits {
            max_expansions: 10_000_000,
            max_time: Duration::from_secs(3600),
        }
    }
}

impl SearchLimits {
    pub fn with_time(secs: f64) -> Self {
        SearchLimits {
            max_time: Duration::from_secs_f64(secs),
            ..Default::default()
        }
    }
}

/// Tracks expansion count and wall clock against [`SearchLimits`].
#[derive(Debug)]
pub struct Budget {
    limits: SearchLimits,
    started: Instant,
    pub expansions: u64,
}

impl Budget {
    pub fn new(limits: SearchLimits) -> Self {
        Budget {
            limits,
            started: Instant::now(),
            expansions: 0,
        }
    }

    /// Count one expansion; errors once a limit is hit.
    pub fn tick(&mut self) -> Result<(), PlanError> {
        self.expansions += 1;
        if self.expansions > self.limits.max_expansions {
            return Err(PlanError::Timeout);
        }
        if self.expansions.is_multiple_of(256) && self.started.elapsed() > self.limits.max_time {
            return Err(PlanError::Timeout);
        }
        Ok(())
    }

    pub fn elapsed(&self) -> Duration {
        self.started.elapsed()
    }
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum PlanError {
    #[error("search limits exhausted")]
    Timeout,
    #[error("goal unreachable")]
    Unreachable,
    #[error("deadlock: robot {0} cannot make progress")]
    Deadlock(usize),
}

/// A single-robot move sequence; `poses[0]` is the start.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plan {
    pub moves: Vec<MoveKind>,
    pub poses: Vec<RobotPose>,
    pub expansions: u64,
}

impl Plan {
    pub fn cost(&self) -> u32 {
        self.moves.len() as u32
    }

    pub fn end(&self) -> RobotPose {
        *self.poses.last().unwrap()
    }
}

struct Node {
    pose: RobotPose,
    g: u32,
    parent: usize,
    via: MoveKind,
}

/// Weighted A* from `start` to `goal` using motions of `s` plus the goal's
/// terminal action. With weight 1 the returned plan is optimal.
pub fn astar(
    start: RobotPose,
    goal: Goal,
    w: &Workspace,
    s: Moveset,
    weight: Weight,
    limits: SearchLimits,
) -> Result<Plan, PlanError> {
    let mut budget = Budget::new(limits);
    let mut nodes: Vec<Node> = vec![Node {
        pose: start,
        g: 0,
        parent: usize::MAX,
        via: MoveKind::Wait,
    }];
    let mut best: HashMap<RobotPose, (u32, usize)> = HashMap::from([(start, (0, 0))]);
    let mut open = BinaryHeap::new();
    let mut seq = 0u64;
    let h0 = heuristic(&start, goal);
    open.push(Reverse((weight.f(0, h0), h0, seq, 0usize)));

    while let Some(Reverse((_, _, _, id))) = open.pop() {
        let (pose, g) = (nodes[id].pose, nodes[id].g);
        if best
            .get(&pose)
            .map(|&(bg, bid)| bg < g || (bg == g && bid != id))
            .unwrap_or(false)
        {
            continue;
        }
        if goal.is_reached(&pose) {
            return Ok(reconstruct(&nodes, id, budget.expansions));
        }
        budget.tick()?;
        let mut succ: Vec<(MoveKind, RobotPose)> = motion_neighbors(&pose, w, s)
            .into_iter()
            .filter(|t| t.kind != MoveKind::Wait)
            .map(|t| (t.kind, t.pose))
            .collect();
        if let Some(action) = goal.action_from(&pose, w) {
            succ.push((
                action,
                RobotPose {
                    carrying: !pose.carrying,
                    ..pose
                },
            ));
        }
        for (kind, next) in succ {
            let ng = g + 1;
            let nid = nodes.len();
            match best.entry(next) {
                Entry::Occupied(mut e) => {
                    if e.get().0 <= ng {
                        continue;
                    }
                    e.insert((ng, nid));
                }
                Entry::Vacant(e) => {
                    e.insert((ng, nid));
                }
            }
            nodes.push(Node {
                pose: next,
                g: ng,
                parent: id,
                via: kind,
            });
            let h = heuristic(&next, goal);
            seq += 1;
            open.push(Reverse((weight.f(ng, h), h, seq, nid)));
        }
    }
    Err(PlanError::Unreachable)
}

fn reconstruct(nodes: &[Node], mut id: usize, expansions: u64) -> Plan {
    let mut moves = Vec::new();
    let mut poses = Vec::new();
    while id != usize::MAX {
        poses.push(nodes[id].pose);
        if nodes[id].parent != usize::MAX {
            moves.push(nodes[id].via);
        }
        id = nodes[id].parent;
    }
    moves.reverse();
    poses.reverse();
    Plan {
        moves,
        poses,
        expansions,
    }
}

/// Exact single-robot cost-to-go toward one goal on a fixed workspace,
/// computed by breadth-first search over reversed motion edges.
#[derive(Debug, Clone)]
pub struct PolicyField {
    goal: Goal,
    moveset: Moveset,
    dist: HashMap<RobotPose, u32>,
}

impl PolicyField {
    pub fn new(w: &Workspace, goal: Goal, s: Moveset, carrying: bool) -> Self {
        let poses = all_poses(w, carrying);
        let index: HashMap<RobotPose, usize> =
            poses.iter().enumerate().map(|(i, p)| (*p, i)).collect();
        let mut reverse: Vec<Vec<usize>> = vec![Vec::new(); poses.len()];
        for (i, p) in poses.iter().enumerate() {
            for t in motion_neighbors(p, w, s) {
                if t.kind != MoveKind::Wait {
                    if let Some(&j) = index.get(&t.pose) {
                        reverse[j].push(i);
                    }
                }
            }
        }
        let mut dist: HashMap<RobotPose, u32> = HashMap::new();
        let mut queue = VecDeque::new();
        for (i, p) in poses.iter().enumerate() {
            let d = match goal {
                Goal::FrontAt(_) if goal.is_reached(p) => Some(0),
                Goal::Pick(_) | Goal::Place(_) if goal.action_from(p, w).is_some() => Some(1),
                _ => None,
            };
            if let Some(d) = d {
                dist.insert(*p, d);
                queue.push_back((i, d));
            }
        }
        // seeds at distance 1 and 0 never mix within one goal kind, so plain BFS order holds
        while let Some((i, d)) = queue.pop_front() {
            for &j in &reverse[i] {
                if let Entry::Vacant(e) = dist.entry(poses[j]) {
                    e.insert(d + 1);
                    queue.push_back((j, d + 1));
                }
            }
        }
        PolicyField {
            goal,
            moveset: s,
            dist,
        }
    }

    pub fn goal(&self) -> Goal {
        self.goal
    }

    /// Moves left to complete the goal, or `None` if it cannot be reached.
    pub fn distance(&self, pose: &RobotPose) -> Option<u32> {
        if self.goal.is_reached(pose) {
            return Some(0);
        }
        self.dist.get(pose).copied()
    }

    /// The first move (in moveset order) that follows an optimal path, or
    /// `Wait` when the goal is reached or unreachable.
    pub fn next_move(&self, pose: &RobotPose, w: &Workspace) -> (MoveKind, RobotPose) {
        let Some(d) = self.distance(pose).filter(|&d| d > 0) else {
            return (MoveKind::Wait, *pose);
        };
        if let Some(action) = self.goal.action_from(pose, w) {
            return (
                action,
                RobotPose {
                    carrying: !pose.carrying,
                    ..*pose
                },
            );
        }
        for t in motion_neighbors(pose, w, self.moveset) {
            if t.kind != MoveKind::Wait && self.distance(&t.pose) == Some(d - 1) {
                return (t.kind, t.pose);
            }
        }
        (MoveKind::Wait, *pose)
    }
}
