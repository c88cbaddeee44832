//! Synchronized stepping of several robots on a shared structure.

use thiserror::Error;

use crate::grid::{Cell, CellKind, Workspace};
use crate::robot::{
    apply_move, can_pick, can_place, collision_set, CollisionSet, MoveKind, RobotPose,
};

/// The structure plus every robot's pose.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct World {
    pub workspace: Workspace,
    pub robots: Vec<RobotPose>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StepError {
    #[error("expected {expected} moves, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("robot {robot}: {kind} is not valid from {pose}")]
    InvalidMove {
        robot: usize,
        kind: MoveKind,
        pose: RobotPose,
    },
    #[error("robots {0} and {1} collide")]
    Collision(usize, usize),
    #[error("step would disconnect the structure")]
    Disconnected,
    #[error("robot {0} would stand off the structure")]
    OffStructure(usize),
}

impl World {
    pub fn new(workspace: Workspace, robots: Vec<RobotPose>) -> Self {
        World { workspace, robots }
    }

    /// Cells under any robot's foot.
    pub fn feet(&self) -> Vec<Cell> {
        self.robots.iter().flat_map(|p| [p.front, p.back]).collect()
    }

    /// Every world invariant: feet on tiles, no shared or overlapping
    /// footprints, connected structure.
    pub fn check(&self) -> Result<(), StepError> {
        for (r, p) in self.robots.iter().enumerate() {
            if !p.is_valid_on(&self.workspace) {
                return Err(StepError::OffStructure(r));
            }
        }
        let sets: Vec<CollisionSet> = self.robots.iter().map(|p| p.footprint()).collect();
        first_clash(&sets).map_or(Ok(()), |(a, b)| Err(StepError::Collision(a, b)))?;
        if !self.workspace.is_connected() {
            return Err(StepError::Disconnected);
        }
        Ok(())
    }

    /// Apply one move per robot as a single synchronized step.
    ///
    /// The step is rejected if any move is invalid on its own, if two
    /// robots' collision sets meet, or if the resulting world breaks an
    /// invariant.
    pub fn step(&self, moves: &[MoveKind]) -> Result<World, StepError> {
        if moves.len() != self.robots.len() {
            return Err(StepError::Arity {
                expected: self.robots.len(),
                got: moves.len(),
            });
        }
        let feet = self.feet();
        let mut next_poses = Vec::with_capacity(moves.len());
        let mut picks = Vec::new();
        let mut places = Vec::new();
        for (r, (pose, &kind)) in self.robots.iter().zip(moves).enumerate() {
            let invalid = || StepError::InvalidMove {
                robot: r,
                kind,
                pose: *pose,
            };
            let next = match kind {
                MoveKind::Pick => {
                    if !can_pick(pose, &self.workspace) || feet.contains(&pose.target()) {
                        return Err(invalid());
                    }
                    picks.push(pose.target());
                    RobotPose {
                        carrying: true,
                        ..*pose
                    }
                }
                MoveKind::Place => {
                    if !can_place(pose, &self.workspace) {
                        return Err(invalid());
                    }
                    places.push(pose.target());
                    RobotPose {
                        carrying: false,
                        ..*pose
                    }
                }
                _ => apply_move(pose, kind, &self.workspace).ok_or_else(invalid)?,
            };
            next_poses.push(next);
        }
        let sets: Vec<CollisionSet> = self
            .robots
            .iter()
            .zip(moves)
            .map(|(p, &m)| collision_set(p, m, p.carrying))
            .collect();
        if let Some((a, b)) = first_clash(&sets) {
            return Err(StepError::Collision(a, b));
        }
        let mut workspace = self.workspace.clone();
        for c in picks {
            workspace
                .set(c, CellKind::Free)
                .expect("pick target in bounds");
        }
        for c in places {
            workspace
                .set(c, CellKind::Tile)
                .expect("place target in bounds");
        }
        let next = World {
            workspace,
            robots: next_poses,
        };
        for (r, p) in next.robots.iter().enumerate() {
            if !p.is_valid_on(&next.workspace) {
                return Err(StepError::OffStructure(r));
            }
        }
        if !next.workspace.is_connected() {
            return Err(StepError::Disconnected);
        }
        Ok(next)
    }
}

/// First pair (in index order) whose collision sets intersect.
pub fn first_clash(sets: &[CollisionSet]) -> Option<(usize, usize)> {
    (0..sets.len()).find_map(|a| {
        (a + 1..sets.len())
            .find(|&b| sets[a].intersects(&sets[b]))
            .map(|b| (a, b))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: i32, y: i32) -> Cell {
        Cell::new(x, y)
    }

    #[test]
    fn all_wait_and_independent_steps() {
        let w: Workspace = "TTTTTTTTTT\n".parse().unwrap();
        let world = World::new(
            w,
            vec![
                RobotPose::new(c(1, 0), c(0, 0)),
                RobotPose::new(c(7, 0), c(6, 0)),
            ],
        );
        assert_eq!(
            world.step(&[MoveKind::Wait, MoveKind::Wait]).unwrap(),
            world
        );
        let next = world
            .step(&[MoveKind::StepForward, MoveKind::StepForward])
            .unwrap();
        assert_eq!(next.robots[0].front, c(2, 0));
        assert_eq!(next.robots[1].front, c(8, 0));
    }

    #[test]
    fn pivots_into_the_same_cells_collide() {
        // two robots side by side, both swinging their front feet into the column between them
        let w: Workspace = "TTTTT\nTTTTT\nTTTTT\n".parse().unwrap();
        let world = World::new(
            w,
            vec![
                RobotPose::new(c(1, 1), c(1, 0)),
                RobotPose::new(c(3, 1), c(3, 0)),
            ],
        );
        let err = world
            .step(&[MoveKind::FrontPivotRight, MoveKind::FrontPivotLeft])
            .unwrap_err();
        assert_eq!(err, StepError::Collision(0, 1));
        assert!(world
            .step(&[MoveKind::FrontPivotRight, MoveKind::Wait])
            .is_ok());
    }

    #[test]
    fn placing_where_another_robot_steps_is_rejected() {
        let w: Workspace = "TT.TT\n".parse().unwrap();
        let world = World::new(
            w,
            vec![
                RobotPose::carrying(c(1, 0), c(0, 0)),
                RobotPose::new(c(3, 0), c(4, 0)),
            ],
        );
        // robot 1 cannot step onto a free cell anyway; place alone is fine
        assert!(world.step(&[MoveKind::Place, MoveKind::Wait]).is_ok());
        let placed = world.step(&[MoveKind::Place, MoveKind::Wait]).unwrap();
        assert!(placed.workspace.is_tile(c(2, 0)));
        // robot 1 stepping onto the tile robot 0 picks collides
        let w: Workspace = "TTTTT\nTTTTT\n".parse().unwrap();
        let world = World::new(
            w,
            vec![
                RobotPose::new(c(1, 0), c(0, 0)),
                RobotPose::new(c(3, 0), c(4, 0)),
            ],
        );
        assert!(matches!(
            world.step(&[MoveKind::Pick, MoveKind::StepForward]),
            Err(StepError::Collision(0, 1))
        ));
    }

    #[test]
    fn disconnecting_picks_are_rejected() {
        let w: Workspace = "TTTTT\n".parse().unwrap();
        let world = World::new(w, vec![RobotPose::new(c(1, 0), c(0, 0))]);
        assert!(matches!(
            world.step(&[MoveKind::Pick]),
            Err(StepError::InvalidMove { .. })
        ));
    }
}
