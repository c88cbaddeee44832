//! Cooperative task swapping between nearby robots.
//!
//! A robot carrying a tile can drop it at an intermediate handoff cell for
//! another robot to fetch, taking over that robot's pickup instead; two
//! carrying robots can exchange drop-off targets. Either rewrite is only
//! proposed when the summed single-robot plan costs strictly decrease.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};

use crate::grid::{geodesic_distances, manhattan, Cell, CellKind, Workspace};
use crate::robot::{Moveset, RobotPose};
use crate::search::{astar, Goal, SearchLimits, Weight};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ActionKind {
    Pickup,
    Dropoff,
}

/// Cost of `robot` completing a pick or place at `target` from `from`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CostQuery {
    pub robot: usize,
    pub from: RobotPose,
    pub kind: ActionKind,
    pub target: Cell,
}

impl CostQuery {
    pub fn goal(&self) -> Goal {
        match self.kind {
            ActionKind::Pickup => Goal::Pick(self.target),
            ActionKind::Dropoff => Goal::Place(self.target),
        }
    }
}

/// Answers cost queries with single-robot A*, caching by pose, goal and
/// structure.
#[derive(Debug, Clone)]
pub struct CostOracle {
    moveset: Moveset,
    weight: Weight,
    limits: SearchLimits,
    cache: HashMap<(RobotPose, Goal, u64), Option<(u32, RobotPose)>>,
    pub queries: u64,
}

impl CostOracle {
    pub fn new(moveset: Moveset, weight: Weight, limits: SearchLimits) -> Self {
        CostOracle {
            moveset,
            weight,
            limits,
            cache: HashMap::new(),
            queries: 0,
        }
    }

    /// Moves (including the final action) and the pose afterwards, or `None`
    /// if the planner finds no plan.
    pub fn cost(&mut self, q: &CostQuery, w: &Workspace) -> Option<(u32, RobotPose)> {
        self.queries += 1;
        let key = (q.from, q.goal(), structure_key(w));
        if let Some(hit) = self.cache.get(&key) {
            return *hit;
        }
        let answer = astar(q.from, q.goal(), w, self.moveset, self.weight, self.limits)
            .ok()
            .map(|plan| (plan.cost(), plan.end()));
        self.cache.insert(key, answer);
        answer
    }

    pub fn cached_entries(&self) -> usize {
        self.cache.len()
    }
}

fn structure_key(w: &Workspace) -> u64 {
    let mut h = DefaultHasher::new();
    w.hash(&mut h);
    h.finish()
}

fn sum(parts: &[Option<u32>]) -> Option<u32> {
    parts.iter().copied().sum()
}

/// Cost of the current assignment: the carrier drops off and the fetcher
/// picks up as planned. `None` stands for an infinite cost.
pub fn combined_cost(
    oracle: &mut CostOracle,
    w: &Workspace,
    i_drop: &CostQuery,
    j_pick: &CostQuery,
) -> Option<u32> {
    debug_assert_eq!(i_drop.kind, ActionKind::Dropoff);
    debug_assert_eq!(j_pick.kind, ActionKind::Pickup);
    sum(&[
        oracle.cost(i_drop, w).map(|c| c.0),
        oracle.cost(j_pick, w).map(|c| c.0),
    ])
}

/// A robot together with the cell its current task is heading for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Engaged {
    pub robot: usize,
    pub pose: RobotPose,
    pub target: Cell,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransferProposal {
    pub carrier: usize,
    pub fetcher: usize,
    pub handoff: Cell,
    pub handoff_adjacent: Cell,
    pub old_cost: u32,
    pub new_cost: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SwapProposal {
    pub first: usize,
    pub second: usize,
    pub old_cost: u32,
    pub new_cost: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Proposal {
    Transfer(TransferProposal),
    Swap(SwapProposal),
}

impl Proposal {
    pub fn robots(&self) -> (usize, usize) {
        match self {
            Proposal::Transfer(t) => (t.carrier, t.fetcher),
            Proposal::Swap(s) => (s.first, s.second),
        }
    }

    pub fn savings(&self) -> u32 {
        match self {
            Proposal::Transfer(t) => t.old_cost - t.new_cost,
            Proposal::Swap(s) => s.old_cost - s.new_cost,
        }
    }
}

fn within(a: &RobotPose, b: &RobotPose, d_tr: u32) -> bool {
    manhattan(a.front, b.front) <= d_tr
}

/// Best handoff for `carrier` (carrying toward its drop-off) and `fetcher`
/// (heading to a pickup): the carrier drops at the handoff and then takes
/// the fetcher's pickup; the fetcher collects the handoff tile and delivers
/// it to the carrier's drop-off.
pub fn evaluate_transfer(
    oracle: &mut CostOracle,
    w: &Workspace,
    carrier: Engaged,
    fetcher: Engaged,
    candidates: &[(Cell, Cell)],
    d_tr: u32,
) -> Option<TransferProposal> {
    if !within(&carrier.pose, &fetcher.pose, d_tr) {
        return None;
    }
    let query = |robot: usize, from: RobotPose, kind, target| CostQuery {
        robot,
        from,
        kind,
        target,
    };
    let old = combined_cost(
        oracle,
        w,
        &query(
            carrier.robot,
            carrier.pose,
            ActionKind::Dropoff,
            carrier.target,
        ),
        &query(
            fetcher.robot,
            fetcher.pose,
            ActionKind::Pickup,
            fetcher.target,
        ),
    )?;
    let mut best: Option<TransferProposal> = None;
    for &(handoff, adjacent) in candidates {
        let Some((d_i, after_drop)) = oracle.cost(
            &query(carrier.robot, carrier.pose, ActionKind::Dropoff, handoff),
            w,
        ) else {
            continue;
        };
        let mut with_handoff = w.clone();
        with_handoff
            .set(handoff, CellKind::Tile)
            .expect("handoff in bounds");
        let p_i = oracle.cost(
            &query(
                carrier.robot,
                after_drop,
                ActionKind::Pickup,
                fetcher.target,
            ),
            &with_handoff,
        );
        let Some((p_j, after_pick)) = oracle.cost(
            &query(fetcher.robot, fetcher.pose, ActionKind::Pickup, handoff),
            &with_handoff,
        ) else {
            continue;
        };
        let d_j = oracle.cost(
            &query(
                fetcher.robot,
                after_pick,
                ActionKind::Dropoff,
                carrier.target,
            ),
            w,
        );
        let Some(new) = sum(&[Some(d_i), p_i.map(|c| c.0), Some(p_j), d_j.map(|c| c.0)]) else {
            continue;
        };
        if new < old && best.is_none_or(|b| new < b.new_cost) {
            best = Some(TransferProposal {
                carrier: carrier.robot,
                fetcher: fetcher.robot,
                handoff,
                handoff_adjacent: adjacent,
                old_cost: old,
                new_cost: new,
            });
        }
    }
    best
}

/// Whether two carrying robots should exchange drop-off targets.
pub fn evaluate_dropoff_swap(
    oracle: &mut CostOracle,
    w: &Workspace,
    i: Engaged,
    j: Engaged,
    d_tr: u32,
) -> Option<SwapProposal> {
    if !within(&i.pose, &j.pose, d_tr) {
        return None;
    }
    let mut d = |e: Engaged, target: Cell| {
        oracle
            .cost(
                &CostQuery {
                    robot: e.robot,
                    from: e.pose,
                    kind: ActionKind::Dropoff,
                    target,
                },
                w,
            )
            .map(|c| c.0)
    };
    let old = sum(&[d(i, i.target), d(j, j.target)])?;
    let new = sum(&[d(i, j.target), d(j, i.target)])?;
    (new < old).then_some(SwapProposal {
        first: i.robot,
        second: j.robot,
        old_cost: old,
        new_cost: new,
    })
}

/// Up to `k` handoff cells with the tile a robot would stand on to use
/// them, nearest (along the structure) to `near` first.
pub fn candidate_handoffs(w: &Workspace, near: &RobotPose, k: usize) -> Vec<(Cell, Cell)> {
    candidate_handoffs_excluding(w, near, k, &[])
}

/// [`candidate_handoffs`] skipping the cells in `excluded`.
pub fn candidate_handoffs_excluding(
    w: &Workspace,
    near: &RobotPose,
    k: usize,
    excluded: &[Cell],
) -> Vec<(Cell, Cell)> {
    if !w.is_tile(near.front) {
        return Vec::new();
    }
    let dist = geodesic_distances(w, near.front).expect("front foot on a tile");
    let mut found: Vec<(u32, Cell, Cell)> = Vec::new();
    for y in 0..w.height() as i32 {
        for x in 0..w.width() as i32 {
            let cell = Cell::new(x, y);
            if !w.is_free(cell) || excluded.contains(&cell) {
                continue;
            }
            let nearest = cell
                .neighbors4()
                .into_iter()
                .filter_map(|a| dist.get(a).map(|d| (d, a)))
                .min();
            if let Some((d, adjacent)) = nearest {
                found.push((d, cell, adjacent));
            }
        }
    }
    found.sort();
    found.into_iter().take(k).map(|(_, c, a)| (c, a)).collect()
}

/// Accept proposals greedily by savings; each robot joins at most one.
/// Equal savings go to the lexicographically smaller robot pair.
pub fn arbitrate(proposals: &[Proposal]) -> Vec<Proposal> {
    let mut order: Vec<&Proposal> = proposals.iter().collect();
    order.sort_by_key(|p| (std::cmp::Reverse(p.savings()), p.robots()));
    let mut busy: Vec<usize> = Vec::new();
    let mut accepted = Vec::new();
    for p in order {
        let (a, b) = p.robots();
        if !busy.contains(&a) && !busy.contains(&b) {
            busy.extend([a, b]);
            accepted.push(*p);
        }
    }
    accepted
}
