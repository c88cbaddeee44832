//! Subdimensional expansion (M*) for several robots on a fixed structure.
//!
//! Each robot follows its individually optimal policy until its collision
//! sets meet another robot's. The robots involved are then recorded in the
//! collision set of the joint node and of every ancestor that leads to it,
//! and those ancestors are re-queued so the involved robots are searched
//! jointly from there on. Cost is the total number of non-wait moves.

use std::cmp::Reverse;
use std::collections::hash_map::Entry;
use std::collections::{BinaryHeap, HashMap};

use crate::grid::{Cell, Workspace};
use crate::robot::{collision_set, motion_neighbors, CollisionSet, MoveKind, Moveset, RobotPose};
use crate::search::{Budget, Goal, PlanError, PolicyField, SearchLimits, Weight};

/// Synchronized per-robot moves; `poses[t][r]` is robot `r` after step `t`
/// (`poses[0]` holds the starts).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointPlan {
    pub poses: Vec<Vec<RobotPose>>,
    pub moves: Vec<Vec<MoveKind>>,
    pub expansions: u64,
    /// Expansions of nodes whose collision set was non-empty.
    pub coupled_expansions: u64,
}

impl JointPlan {
    pub fn makespan(&self) -> usize {
        self.moves.len()
    }

    /// Total non-wait moves over all robots.
    pub fn tiles_traveled(&self) -> usize {
        self.moves
            .iter()
            .flatten()
            .filter(|m| **m != MoveKind::Wait)
            .count()
    }

    pub fn robot_count(&self) -> usize {
        self.poses.first().map_or(0, Vec::len)
    }

    /// Moves of one robot, padded with waits to the common length.
    pub fn robot_moves(&self, r: usize) -> Vec<MoveKind> {
        self.moves.iter().map(|step| step[r]).collect()
    }

    pub fn final_poses(&self) -> &[RobotPose] {
        self.poses.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

struct JointNode {
    poses: Vec<RobotPose>,
    g: u32,
    collisions: u32,
    back: Vec<usize>,
    parent: usize,
    via: Vec<MoveKind>,
    version: u32,
}

type Option3 = (MoveKind, RobotPose, CollisionSet);

struct Search<'a> {
    w: &'a Workspace,
    s: Moveset,
    weight: Weight,
    policies: Vec<PolicyField>,
    full: bool,
    nodes: Vec<JointNode>,
    index: HashMap<Vec<RobotPose>, usize>,
    open: BinaryHeap<Reverse<OpenEntry>>,
    seq: u64,
}

/// (f, h, insertion order, node, g)
type OpenEntry = (u64, u32, u64, usize, u32);

impl Search<'_> {
    fn h(&self, poses: &[RobotPose]) -> u32 {
        poses
            .iter()
            .zip(&self.policies)
            .map(|(p, f)| f.distance(p).unwrap_or(u32::MAX / 64))
            .sum()
    }

    fn push(&mut self, id: usize) {
        let node = &mut self.nodes[id];
        node.version += 1;
        let version = node.version;
        let h = self.h(&self.nodes[id].poses);
        let g = self.nodes[id].g;
        self.seq += 1;
        self.open
            .push(Reverse((self.weight.f(g, h), h, self.seq, id, version)));
    }

    /// Merge `set` into the collision set of `id` and its ancestors,
    /// re-queueing every node whose set grew.
    fn backprop(&mut self, id: usize, set: u32) {
        let mut stack = vec![(id, set)];
        while let Some((v, set)) = stack.pop() {
            let node = &mut self.nodes[v];
            if set & !node.collisions == 0 {
                continue;
            }
            node.collisions |= set;
            let merged = node.collisions;
            let back = node.back.clone();
            self.push(v);
            stack.extend(back.into_iter().map(|u| (u, merged)));
        }
    }

    fn options(&self, r: usize, pose: &RobotPose, coupled: bool) -> Vec<Option3> {
        if coupled {
            motion_neighbors(pose, self.w, self.s)
                .into_iter()
                .map(|t| (t.kind, t.pose, t.collision))
                .collect()
        } else {
            let (kind, next) = self.policies[r].next_move(pose, self.w);
            vec![(kind, next, collision_set(pose, kind, pose.carrying))]
        }
    }
}

/// M* search for robots whose front feet must reach `targets`.
pub fn mstar_plan(
    starts: &[RobotPose],
    targets: &[Cell],
    w: &Workspace,
    s: Moveset,
    weight: Weight,
    limits: SearchLimits,
) -> Result<JointPlan, PlanError> {
    joint_search(starts, targets, w, s, weight, limits, false)
}

/// Plain A* over the full joint configuration graph: every robot is always
/// treated as coupled.
pub fn joint_astar(
    starts: &[RobotPose],
    targets: &[Cell],
    w: &Workspace,
    s: Moveset,
    weight: Weight,
    limits: SearchLimits,
) -> Result<JointPlan, PlanError> {
    joint_search(starts, targets, w, s, weight, limits, true)
}

fn joint_search(
    starts: &[RobotPose],
    targets: &[Cell],
    w: &Workspace,
    s: Moveset,
    weight: Weight,
    limits: SearchLimits,
    full: bool,
) -> Result<JointPlan, PlanError> {
    let m = starts.len();
    assert_eq!(m, targets.len(), "one target per robot");
    assert!(m <= 32, "collision sets are 32-bit masks");
    let mut budget = Budget::new(limits);
    let policies: Vec<PolicyField> = targets
        .iter()
        .map(|&t| PolicyField::new(w, Goal::FrontAt(t), s, false))
        .collect();
    if starts
        .iter()
        .zip(&policies)
        .any(|(p, f)| f.distance(p).is_none())
    {
        return Err(PlanError::Unreachable);
    }
    if has_clash(&starts.iter().map(|p| p.footprint()).collect::<Vec<_>>()) != 0 {
        return Err(PlanError::Unreachable);
    }
    let all = if m == 32 { u32::MAX } else { (1u32 << m) - 1 };
    let mut search = Search {
        w,
        s,
        weight,
        policies,
        full,
        nodes: Vec::new(),
        index: HashMap::new(),
        open: BinaryHeap::new(),
        seq: 0,
    };
    search.nodes.push(JointNode {
        poses: starts.to_vec(),
        g: 0,
        collisions: if full { all } else { 0 },
        back: Vec::new(),
        parent: usize::MAX,
        via: Vec::new(),
        version: 0,
    });
    search.index.insert(starts.to_vec(), 0);
    search.push(0);
    let mut coupled_expansions = 0;

    while let Some(Reverse((_, _, _, id, version))) = search.open.pop() {
        if search.nodes[id].version != version {
            continue;
        }
        if search.nodes[id]
            .poses
            .iter()
            .zip(targets)
            .all(|(p, t)| p.front == *t)
        {
            return Ok(reconstruct(
                &search.nodes,
                id,
                budget.expansions,
                coupled_expansions,
            ));
        }
        budget.tick()?;
        let collisions = search.nodes[id].collisions;
        if collisions != 0 {
            coupled_expansions += 1;
        }
        let g = search.nodes[id].g;
        let poses = search.nodes[id].poses.clone();
        let options: Vec<Vec<Option3>> = poses
            .iter()
            .enumerate()
            .map(|(r, p)| search.options(r, p, search.full || collisions & (1 << r) != 0))
            .collect();
        let mut choice = vec![0usize; m];
        'product: loop {
            let picked: Vec<&Option3> = (0..m).map(|r| &options[r][choice[r]]).collect();
            let next: Vec<RobotPose> = picked.iter().map(|o| o.1).collect();
            if next != poses {
                let sets: Vec<CollisionSet> = picked.iter().map(|o| o.2.clone()).collect();
                let phi = has_clash(&sets);
                let cost = picked.iter().filter(|o| o.0 != MoveKind::Wait).count() as u32;
                let nid = match search.index.entry(next.clone()) {
                    Entry::Occupied(e) => *e.get(),
                    Entry::Vacant(e) => {
                        let nid = search.nodes.len();
                        e.insert(nid);
                        search.nodes.push(JointNode {
                            poses: next,
                            g: u32::MAX,
                            collisions: if search.full { all } else { 0 },
                            back: Vec::new(),
                            parent: usize::MAX,
                            via: Vec::new(),
                            version: 0,
                        });
                        nid
                    }
                };
                if !search.nodes[nid].back.contains(&id) {
                    search.nodes[nid].back.push(id);
                }
                search.nodes[nid].collisions |= phi;
                let merged = search.nodes[nid].collisions;
                search.backprop(id, merged);
                if phi == 0 && g + cost < search.nodes[nid].g {
                    let node = &mut search.nodes[nid];
                    node.g = g + cost;
                    node.parent = id;
                    node.via = picked.iter().map(|o| o.0).collect();
                    search.push(nid);
                }
            }
            for r in 0..m {
                choice[r] += 1;
                if choice[r] < options[r].len() {
                    continue 'product;
                }
                choice[r] = 0;
            }
            break;
        }
    }
    Err(PlanError::Unreachable)
}

/// Bitmask of robots whose collision sets meet another robot's.
pub(crate) fn has_clash(sets: &[CollisionSet]) -> u32 {
    let mut mask = 0;
    for a in 0..sets.len() {
        for b in a + 1..sets.len() {
            if sets[a].intersects(&sets[b]) {
                mask |= (1 << a) | (1 << b);
            }
        }
    }
    mask
}

fn reconstruct(
    nodes: &[JointNode],
    mut id: usize,
    expansions: u64,
    coupled_expansions: u64,
) -> JointPlan {
    let mut poses = Vec::new();
    let mut moves = Vec::new();
    while id != usize::MAX {
        poses.push(nodes[id].poses.clone());
        if nodes[id].parent != usize::MAX {
            moves.push(nodes[id].via.clone());
        }
        id = nodes[id].parent;
    }
    poses.reverse();
    moves.reverse();
    JointPlan {
        poses,
        moves,
        expansions,
        coupled_expansions,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use crate::search::astar;

    fn c(x: i32, y: i32) -> Cell {
        Cell::new(x, y)
    }

    fn ws(rows: &str) -> Workspace {
        rows.parse().unwrap()
    }

    fn replay_ok(plan: &JointPlan, w: &Workspace) {
        for t in 0..plan.makespan() {
            let sets: Vec<CollisionSet> = (0..plan.robot_count())
                .map(|r| collision_set(&plan.poses[t][r], plan.moves[t][r], false))
                .collect();
            assert_eq!(has_clash(&sets), 0, "collision at step {t}");
            for r in 0..plan.robot_count() {
                let next =
                    crate::robot::apply_move(&plan.poses[t][r], plan.moves[t][r], w).unwrap();
                assert_eq!(next, plan.poses[t + 1][r]);
            }
        }
    }

    #[test]
    fn independent_robots_match_single_robot_astar() {
        let w = ws("TTTTT.TTTTT\nTTTTT.TTTTT\n");
        let starts = [
            RobotPose::new(c(1, 0), c(0, 0)),
            RobotPose::new(c(9, 1), c(10, 1)),
        ];
        let targets = [c(4, 1), c(6, 0)];
        let plan = mstar_plan(
            &starts,
            &targets,
            &w,
            Moveset::S7,
            Weight::ONE,
            SearchLimits::default(),
        )
        .unwrap();
        let solo: usize = (0..2)
            .map(|r| {
                astar(
                    starts[r],
                    Goal::FrontAt(targets[r]),
                    &w,
                    Moveset::S7,
                    Weight::ONE,
                    SearchLimits::default(),
                )
                .unwrap()
                .cost() as usize
            })
            .sum();
        assert_eq!(plan.tiles_traveled(), solo);
        assert_eq!(plan.coupled_expansions, 0);
        replay_ok(&plan, &w);
    }

    #[test]
    fn corridor_crossing_matches_joint_oracle() {
        let w = ws("TTTTTT\nTTTTTT\n");
        let starts = [
            RobotPose::new(c(1, 0), c(0, 0)),
            RobotPose::new(c(4, 0), c(5, 0)),
        ];
        let targets = [c(5, 0), c(0, 0)];
        let plan = mstar_plan(
            &starts,
            &targets,
            &w,
            Moveset::S7,
            Weight::ONE,
            SearchLimits::default(),
        )
        .unwrap();
        let oracle = oracle::joint_cost(&starts, &targets, &w, Moveset::S7, 5_000_000)
            .unwrap()
            .unwrap();
        assert_eq!(plan.tiles_traveled() as u32, oracle);
        assert!(plan.coupled_expansions > 0);
        replay_ok(&plan, &w);
        let joint = joint_astar(
            &starts,
            &targets,
            &w,
            Moveset::S7,
            Weight::ONE,
            SearchLimits::default(),
        )
        .unwrap();
        assert_eq!(joint.tiles_traveled() as u32, oracle);
    }

    #[test]
    fn head_on_bridge_is_unreachable() {
        let w = ws("TTTTTT\n");
        let starts = [
            RobotPose::new(c(1, 0), c(0, 0)),
            RobotPose::new(c(4, 0), c(5, 0)),
        ];
        let targets = [c(4, 0), c(1, 0)];
        assert_eq!(
            oracle::joint_cost(&starts, &targets, &w, Moveset::S7, 1_000_000),
            Ok(None)
        );
        assert_eq!(
            mstar_plan(
                &starts,
                &targets,
                &w,
                Moveset::S7,
                Weight::ONE,
                SearchLimits::default()
            ),
            Err(PlanError::Unreachable)
        );
    }
}
