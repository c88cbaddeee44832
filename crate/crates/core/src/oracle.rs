//! Exhaustive reference searches used to check the planners.
//!
//! These deliberately share nothing with the planners except the robot
//! model: no heuristics, no policies, full neighbor enumeration.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet, VecDeque};

use crate::grid::{Cell, Workspace};
use crate::robot::{apply_move, collision_set, CollisionSet, MoveKind, Moveset, RobotPose};
use crate::search::Goal;

/// The oracle gave up after visiting this many states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateLimit(pub usize);

/// Breadth-first cost of the cheapest single-robot plan, counting every
/// motion and the goal's terminal action as one move.
pub fn single_robot_cost(start: RobotPose, goal: Goal, w: &Workspace, s: Moveset) -> Option<u32> {
    let mut seen = HashSet::from([start]);
    let mut queue = VecDeque::from([(start, 0u32)]);
    while let Some((p, d)) = queue.pop_front() {
        if goal.is_reached(&p) {
            return Some(d);
        }
        let mut next: Vec<RobotPose> = s
            .motions()
            .iter()
            .filter_map(|&m| apply_move(&p, m, w))
            .collect();
        if goal.action_from(&p, w).is_some() {
            next.push(RobotPose {
                carrying: !p.carrying,
                ..p
            });
        }
        for n in next {
            if seen.insert(n) {
                queue.push_back((n, d + 1));
            }
        }
    }
    None
}

/// Minimum total number of non-wait moves that brings every robot's front
/// foot to its target without two robots' collision sets meeting in the
/// same step. Full joint enumeration with Dijkstra's algorithm (edge costs
/// are the number of robots that move).
///
/// `Ok(None)` means no joint plan exists; `Err` means more than
/// `max_states` joint states were needed.
pub fn joint_cost(
    starts: &[RobotPose],
    targets: &[Cell],
    w: &Workspace,
    s: Moveset,
    max_states: usize,
) -> Result<Option<u32>, StateLimit> {
    let m = starts.len();
    let done = |ps: &[RobotPose]| ps.iter().zip(targets).all(|(p, t)| p.front == *t);
    let mut dist: HashMap<Vec<RobotPose>, u32> = HashMap::from([(starts.to_vec(), 0)]);
    let mut heap = BinaryHeap::from([Reverse((0u32, starts.to_vec()))]);
    while let Some(Reverse((d, ps))) = heap.pop() {
        if dist[&ps] < d {
            continue;
        }
        if done(&ps) {
            return Ok(Some(d));
        }
        let options: Vec<Vec<(MoveKind, RobotPose, CollisionSet)>> = ps
            .iter()
            .map(|p| {
                s.motions()
                    .iter()
                    .filter_map(|&mv| {
                        apply_move(p, mv, w).map(|n| (mv, n, collision_set(p, mv, p.carrying)))
                    })
                    .collect()
            })
            .collect();
        let mut choice = vec![0usize; m];
        'product: loop {
            let picked: Vec<&(MoveKind, RobotPose, CollisionSet)> =
                (0..m).map(|r| &options[r][choice[r]]).collect();
            let clash = (0..m).any(|a| (a + 1..m).any(|b| picked[a].2.intersects(&picked[b].2)));
            if !clash {
                let cost = picked.iter().filter(|o| o.0 != MoveKind::Wait).count() as u32;
                if cost > 0 {
                    let next: Vec<RobotPose> = picked.iter().map(|o| o.1).collect();
                    let nd = d + cost;
                    let better = dist.get(&next).is_none_or(|&old| nd < old);
                    if better {
                        if dist.len() >= max_states {
                            return Err(StateLimit(max_states));
                        }
                        dist.insert(next.clone(), nd);
                        heap.push(Reverse((nd, next)));
                    }
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
    Ok(None)
}
