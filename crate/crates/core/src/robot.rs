//! Inchworm robot configurations, basic motions and collision sets.

use std::fmt;
use std::str::FromStr;

use crate::error::Error;
use crate::grid::{manhattan, Cell, CellKind, Workspace};

/// Foot positions of one robot plus whether it grips a tile.
///
/// The carried tile, if any, rides one cell beyond the front foot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RobotPose {
    pub front: Cell,
    pub back: Cell,
    pub carrying: bool,
}

impl RobotPose {
    pub fn new(front: Cell, back: Cell) -> Self {
        RobotPose {
            front,
            back,
            carrying: false,
        }
    }

    pub fn carrying(front: Cell, back: Cell) -> Self {
        RobotPose {
            front,
            back,
            carrying: true,
        }
    }

    /// Unit vector from back foot to front foot.
    pub fn heading(&self) -> Cell {
        self.front - self.back
    }

    /// Cell in front of the front foot: the pick/place target and the
    /// position of a carried tile.
    pub fn target(&self) -> Cell {
        self.front + self.heading()
    }

    pub fn is_well_formed(&self) -> bool {
        manhattan(self.front, self.back) == 1
    }

    /// Cells occupied while standing still.
    pub fn footprint(&self) -> CollisionSet {
        collision_set(self, MoveKind::Wait, self.carrying)
    }

    /// Both feet on tiles and the carried tile (if any) not inside an obstacle.
    pub fn is_valid_on(&self, w: &Workspace) -> bool {
        self.is_well_formed()
            && w.is_tile(self.front)
            && w.is_tile(self.back)
            && !(self.carrying && w.is_obstacle(self.target()))
    }
}

impl fmt::Display for RobotPose {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {}",
            self.front,
            self.back,
            u8::from(self.carrying)
        )
    }
}

impl FromStr for RobotPose {
    type Err = Error;

    /// Parses `fx,fy bx,by` with an optional trailing `0` or `1` for
    /// carrying.
    fn from_str(s: &str) -> Result<Self, Error> {
        let parts: Vec<&str> = s.split_whitespace().collect();
        let carrying = match parts.get(2).copied() {
            None | Some("0") => false,
            Some("1") => true,
            Some(other) => {
                return Err(Error::InvalidScenario(format!(
                    "carrying flag must be 0 or 1, got {other:?}"
                )))
            }
        };
        if !(2..=3).contains(&parts.len()) {
            return Err(Error::InvalidScenario(format!(
                "expected a pose as fx,fy bx,by, got {s:?}"
            )));
        }
        let pose = RobotPose {
            front: parts[0].parse()?,
            back: parts[1].parse()?,
            carrying,
        };
        if !pose.is_well_formed() {
            return Err(Error::InvalidScenario(format!(
                "feet of {s:?} are not adjacent"
            )));
        }
        Ok(pose)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MoveKind {
    Wait,
    StepForward,
    StepBackward,
    FrontPivotLeft,
    FrontPivotRight,
    BackPivotLeft,
    BackPivotRight,
    Pick,
    Place,
}

impl MoveKind {
    pub const ALL: [MoveKind; 9] = [
        MoveKind::Wait,
        MoveKind::StepForward,
        MoveKind::StepBackward,
        MoveKind::FrontPivotLeft,
        MoveKind::FrontPivotRight,
        MoveKind::BackPivotLeft,
        MoveKind::BackPivotRight,
        MoveKind::Pick,
        MoveKind::Place,
    ];

    pub fn is_action(self) -> bool {
        matches!(self, MoveKind::Pick | MoveKind::Place)
    }

    pub fn name(self) -> &'static str {
        match self {
            MoveKind::Wait => "Wait",
            MoveKind::StepForward => "StepForward",
            MoveKind::StepBackward => "StepBackward",
            MoveKind::FrontPivotLeft => "FrontPivotLeft",
            MoveKind::FrontPivotRight => "FrontPivotRight",
            MoveKind::BackPivotLeft => "BackPivotLeft",
            MoveKind::BackPivotRight => "BackPivotRight",
            MoveKind::Pick => "Pick",
            MoveKind::Place => "Place",
        }
    }
}

impl fmt::Display for MoveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MoveKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        MoveKind::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Parse {
                line: 0,
                msg: format!("unknown move {s:?}"),
            })
    }
}

/// The set of basic motions available to a robot. Pick and place are
/// available under both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Moveset {
    S5,
    S7,
}

impl Moveset {
    pub fn motions(self) -> &'static [MoveKind] {
        const S5: [MoveKind; 5] = [
            MoveKind::Wait,
            MoveKind::StepForward,
            MoveKind::StepBackward,
            MoveKind::FrontPivotLeft,
            MoveKind::FrontPivotRight,
        ];
        const S7: [MoveKind; 7] = [
            MoveKind::Wait,
            MoveKind::StepForward,
            MoveKind::StepBackward,
            MoveKind::FrontPivotLeft,
            MoveKind::FrontPivotRight,
            MoveKind::BackPivotLeft,
            MoveKind::BackPivotRight,
        ];
        match self {
            Moveset::S5 => &S5,
            Moveset::S7 => &S7,
        }
    }

    pub fn allows(self, m: MoveKind) -> bool {
        m.is_action() || self.motions().contains(&m)
    }
}

impl fmt::Display for Moveset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Moveset::S5 => "s5",
            Moveset::S7 => "s7",
        })
    }
}

impl FromStr for Moveset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "s5" => Ok(Moveset::S5),
            "s7" => Ok(Moveset::S7),
            other => Err(Error::Parse {
                line: 0,
                msg: format!("unknown moveset {other:?}"),
            }),
        }
    }
}

/// Cells occupied or swept by one robot during one transition.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CollisionSet {
    cells: Vec<Cell>,
}

impl CollisionSet {
    fn from_cells(mut cells: Vec<Cell>) -> Self {
        cells.sort_unstable();
        cells.dedup();
        CollisionSet { cells }
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn contains(&self, c: Cell) -> bool {
        self.cells.binary_search(&c).is_ok()
    }

    pub fn intersects(&self, other: &CollisionSet) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.cells.len() && j < other.cells.len() {
            match self.cells[i].cmp(&other.cells[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return true,
            }
        }
        false
    }

    pub fn intersects_any(&self, cells: &[Cell]) -> bool {
        cells.iter().any(|&c| self.contains(c))
    }
}

/// Foot geometry of a motion, ignoring the workspace. Returns `None` for
/// pick/place, which do not move the feet.
fn motion_geometry(pose: &RobotPose, m: MoveKind) -> Option<(Cell, Cell)> {
    let h = pose.heading();
    let (f, b) = (pose.front, pose.back);
    Some(match m {
        MoveKind::Wait => (f, b),
        MoveKind::StepForward => (f + h, f),
        MoveKind::StepBackward => (b, b - h),
        MoveKind::FrontPivotLeft => (f + h.left(), f),
        MoveKind::FrontPivotRight => (f + h.right(), f),
        MoveKind::BackPivotLeft => (b, b + h.left()),
        MoveKind::BackPivotRight => (b, b + h.right()),
        MoveKind::Pick | MoveKind::Place => return None,
    })
}

/// Cell swept by the moving foot during a pivot.
fn swept_corner(pose: &RobotPose, m: MoveKind) -> Option<Cell> {
    let h = pose.heading();
    match m {
        MoveKind::FrontPivotLeft => Some(pose.front + h + h.left()),
        MoveKind::FrontPivotRight => Some(pose.front + h + h.right()),
        MoveKind::BackPivotLeft => Some(pose.front + h.left()),
        MoveKind::BackPivotRight => Some(pose.front + h.right()),
        _ => None,
    }
}

/// Cells occupied or swept when `pose` performs `m`.
///
/// Start and end feet are always included; pivots add the corner cell the
/// swinging foot passes over. A carried tile adds the bounding box of its
/// start and end positions. Pick and place add their target cell.
pub fn collision_set(pose: &RobotPose, m: MoveKind, carrying: bool) -> CollisionSet {
    let mut cells = vec![pose.front, pose.back];
    match motion_geometry(pose, m) {
        None => cells.push(pose.target()),
        Some((front, back)) => {
            cells.push(front);
            cells.push(back);
            cells.extend(swept_corner(pose, m));
            if carrying {
                let start = pose.target();
                let end = front + (front - back);
                for x in start.x.min(end.x)..=start.x.max(end.x) {
                    for y in start.y.min(end.y)..=start.y.max(end.y) {
                        cells.push(Cell::new(x, y));
                    }
                }
            }
        }
    }
    CollisionSet::from_cells(cells)
}

/// Successor pose of a motion, or `None` if invalid on `w`.
///
/// Both feet must land on tiles and no occupied or swept cell may be an
/// obstacle. Pick and place are not motions; use [`pick`] and [`place`].
pub fn apply_move(pose: &RobotPose, m: MoveKind, w: &Workspace) -> Option<RobotPose> {
    let (front, back) = motion_geometry(pose, m)?;
    if !w.is_tile(front) || !w.is_tile(back) {
        return None;
    }
    if m != MoveKind::Wait
        && collision_set(pose, m, pose.carrying)
            .cells()
            .iter()
            .any(|&c| w.is_obstacle(c))
    {
        return None;
    }
    Some(RobotPose {
        front,
        back,
        carrying: pose.carrying,
    })
}

/// Whether `pose` may pick the tile in front of it on `w`, ignoring other
/// robots.
pub fn can_pick(pose: &RobotPose, w: &Workspace) -> bool {
    let t = pose.target();
    !pose.carrying
        && w.is_tile(t)
        && t != pose.back
        && w.connected_after_removal(t).unwrap_or(false)
}

/// Whether `pose` may place its tile in front of it on `w`, ignoring other
/// robots.
pub fn can_place(pose: &RobotPose, w: &Workspace) -> bool {
    pose.carrying && w.is_free(pose.target())
}

/// Pick the tile in front of the robot. `feet` are the foot cells of every
/// robot in the world (including this one).
pub fn pick(pose: &RobotPose, w: &Workspace, feet: &[Cell]) -> Option<(RobotPose, Workspace)> {
    let t = pose.target();
    if !can_pick(pose, w) || feet.contains(&t) {
        return None;
    }
    let mut next = w.clone();
    next.set(t, CellKind::Free).ok()?;
    Some((
        RobotPose {
            carrying: true,
            ..*pose
        },
        next,
    ))
}

/// Place the carried tile in front of the robot. `occupied` are cells held
/// by other robots this step.
pub fn place(pose: &RobotPose, w: &Workspace, occupied: &[Cell]) -> Option<(RobotPose, Workspace)> {
    let t = pose.target();
    if !can_place(pose, w) || occupied.contains(&t) {
        return None;
    }
    let mut next = w.clone();
    next.set(t, CellKind::Tile).ok()?;
    Some((
        RobotPose {
            carrying: false,
            ..*pose
        },
        next,
    ))
}

/// One labelled edge of the configuration graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub kind: MoveKind,
    pub pose: RobotPose,
    pub collision: CollisionSet,
}

/// All single-robot successors of `pose`: valid motions of `s` plus valid
/// pick/place actions.
pub fn neighbors(pose: &RobotPose, w: &Workspace, s: Moveset) -> Vec<Transition> {
    let mut out = Vec::with_capacity(9);
    for &m in s.motions() {
        if let Some(next) = apply_move(pose, m, w) {
            out.push(Transition {
                kind: m,
                pose: next,
                collision: collision_set(pose, m, pose.carrying),
            });
        }
    }
    if can_pick(pose, w) {
        out.push(Transition {
            kind: MoveKind::Pick,
            pose: RobotPose {
                carrying: true,
                ..*pose
            },
            collision: collision_set(pose, MoveKind::Pick, false),
        });
    }
    if can_place(pose, w) {
        out.push(Transition {
            kind: MoveKind::Place,
            pose: RobotPose {
                carrying: false,
                ..*pose
            },
            collision: collision_set(pose, MoveKind::Place, true),
        });
    }
    out
}

/// Motion-only successors (no pick/place), used by the planners.
pub fn motion_neighbors(pose: &RobotPose, w: &Workspace, s: Moveset) -> Vec<Transition> {
    s.motions()
        .iter()
        .filter_map(|&m| {
            apply_move(pose, m, w).map(|next| Transition {
                kind: m,
                pose: next,
                collision: collision_set(pose, m, pose.carrying),
            })
        })
        .collect()
}

/// Every well-formed pose with both feet on tiles, in a fixed order.
pub fn all_poses(w: &Workspace, carrying: bool) -> Vec<RobotPose> {
    let mut out = Vec::new();
    for front in w.tiles() {
        for d in crate::grid::DIRECTIONS {
            let back = front - d;
            let pose = RobotPose {
                front,
                back,
                carrying,
            };
            if pose.is_valid_on(w) {
                out.push(pose);
            }
        }
    }
    out
}
