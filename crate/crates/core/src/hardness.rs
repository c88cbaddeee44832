//! Reduction instances from Hamiltonian path in grid graphs, the two-robot
//! cooperative gadget, and an exact optimal-move oracle for small instances.
//!
//! # Vertex gadget
//!
//! Each graph vertex becomes a vertex tile `V` inside a 7×7 cross of
//! gadget tiles `T` (arms three tiles wide). Four task tiles `S` sit in the
//! concave corners of the cross in the start configuration; in the goal
//! they are gone and four task positions `G`, each next to one corner, are
//! filled instead. The robot enters with its front foot on `F` and its back
//! foot on `B`, facing west. Local coordinates, `y` up:
//!
//! ```text
//!  y= 3   . . T T T G .
//!  y= 2   G S T T T S .
//!  y= 1   T T T T T T T
//!  y= 0   T T T V T T T
//!  y=-1   F B T T T T T
//!  y=-2   . S T T T S G
//!  y=-3   . G T T T . .
//!        x=-3         3
//! ```
//!
//! Adjacent vertices are `s + 7` cells apart and joined by a straight line
//! of `s` edge tiles between the facing arm tips.

use std::cmp::Reverse;
use std::collections::hash_map::Entry;
use std::collections::{BinaryHeap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::Error;
use crate::grid::{manhattan, Cell, CellKind, Workspace};
use crate::robot::{all_poses, apply_move, can_pick, can_place, MoveKind, Moveset, RobotPose};
use crate::scenario::ScenarioFile;
use crate::world::World;

/// Vertices on integer grid positions; every edge joins two vertices at
/// unit distance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridGraph {
    pub vertices: Vec<Cell>,
    pub edges: Vec<(usize, usize)>,
}

impl GridGraph {
    pub fn new(vertices: Vec<Cell>, edges: Vec<(usize, usize)>) -> Result<Self, Error> {
        for (i, v) in vertices.iter().enumerate() {
            if vertices[..i].contains(v) {
                return Err(Error::NotGridGraph(format!("vertex {v} appears twice")));
            }
            if v.x < 0 || v.y < 0 {
                return Err(Error::NotGridGraph(format!(
                    "vertex {v} has a negative coordinate"
                )));
            }
        }
        for &(a, b) in &edges {
            if a >= vertices.len() || b >= vertices.len() || a == b {
                return Err(Error::NotGridGraph(format!(
                    "edge ({a}, {b}) is not between two vertices"
                )));
            }
            if manhattan(vertices[a], vertices[b]) != 1 {
                return Err(Error::NotGridGraph(format!(
                    "edge {}-{} is not of unit length",
                    vertices[a], vertices[b]
                )));
            }
        }
        Ok(GridGraph { vertices, edges })
    }

    /// The graph induced on `vertices`: every unit-distance pair is an edge.
    pub fn induced(vertices: Vec<Cell>) -> Result<Self, Error> {
        let mut edges = Vec::new();
        for a in 0..vertices.len() {
            for b in a + 1..vertices.len() {
                if manhattan(vertices[a], vertices[b]) == 1 {
                    edges.push((a, b));
                }
            }
        }
        GridGraph::new(vertices, edges)
    }

    fn adjacent(&self, a: usize, b: usize) -> bool {
        self.edges
            .iter()
            .any(|&(x, y)| (x, y) == (a, b) || (x, y) == (b, a))
    }

    /// A Hamiltonian path starting at `start`, by plain backtracking.
    pub fn hamiltonian_path_from(&self, start: usize) -> Option<Vec<usize>> {
        fn extend(g: &GridGraph, path: &mut Vec<usize>, used: &mut [bool]) -> bool {
            if path.len() == g.vertices.len() {
                return true;
            }
            let last = *path.last().unwrap();
            for next in 0..g.vertices.len() {
                if !used[next] && g.adjacent(last, next) {
                    used[next] = true;
                    path.push(next);
                    if extend(g, path, used) {
                        return true;
                    }
                    path.pop();
                    used[next] = false;
                }
            }
            false
        }
        if start >= self.vertices.len() {
            return None;
        }
        let mut used = vec![false; self.vertices.len()];
        used[start] = true;
        let mut path = vec![start];
        extend(self, &mut path, &mut used).then_some(path)
    }

    pub fn has_hamiltonian_path(&self) -> bool {
        (0..self.vertices.len()).any(|v| self.hamiltonian_path_from(v).is_some())
    }
}

/// Start and goal structures plus robot entry poses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GadgetInstance {
    pub start: Workspace,
    pub goal: Workspace,
    pub robots: Vec<RobotPose>,
    pub scale: u32,
    pub vertex_count: usize,
    /// Gadget tile centers, in graph vertex order.
    pub centers: Vec<Cell>,
    /// Free cells where a tile may be set down temporarily.
    pub relay: Vec<Cell>,
    /// Pick/place pairs in execution order, for the task-scenario form.
    pub tasks: Vec<(Cell, Cell)>,
}

impl GadgetInstance {
    /// The instance as a task scenario on the start structure. The goal
    /// structure is the start structure after all tasks.
    pub fn scenario(&self, map: Option<&str>) -> ScenarioFile {
        ScenarioFile {
            map: map.map(PathBuf::from),
            moveset: Moveset::S7,
            robots: self.robots.clone(),
            goals: Vec::new(),
            tasks: self.tasks.clone(),
            priority: None,
        }
    }

    /// Write `<name>.txt` (start), `<name>.goal.txt` and `<name>.scn` into
    /// `dir`.
    pub fn write_files(&self, dir: &Path, name: &str) -> Result<(), Error> {
        let map = format!("{name}.txt");
        let files = [
            (map.clone(), self.start.to_ascii()),
            (format!("{name}.goal.txt"), self.goal.to_ascii()),
            (format!("{name}.scn"), self.scenario(Some(&map)).to_text()),
        ];
        let io = |path: &Path, e: std::io::Error| {
            Error::InvalidScenario(format!("{}: {e}", path.display()))
        };
        fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        for (file, text) in files {
            let path = dir.join(file);
            fs::write(&path, text).map_err(|e| io(&path, e))?;
        }
        Ok(())
    }
}

/// Moves one robot needs for an isolated vertex gadget, found by the exact
/// oracle.
pub fn measure_t_g() -> Result<u32, Error> {
    let single = GridGraph::new(vec![Cell::new(0, 0)], Vec::new())?;
    let inst = build_vertex_gadget_instance(&single, 1)?;
    brute_force_optimal(&inst, 1, Moveset::S7, 200, 20_000_000)?
        .map(|sol| sol.cost)
        .ok_or_else(|| Error::InvalidScenario("the isolated gadget has no solution".into()))
}

/// Gadget shape in coordinates relative to the vertex tile.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GadgetLayout {
    /// Gadget tiles, present in start and goal (includes the vertex tile).
    pub cross: Vec<Cell>,
    pub task_tiles: Vec<Cell>,
    pub task_positions: Vec<Cell>,
}

impl GadgetLayout {
    /// Cross with arms `width` tiles wide (odd) inside the 7×7 square; one
    /// task tile per concave corner and the four rotations of `position`.
    pub fn cross(width: i32, position: Cell) -> GadgetLayout {
        let half = width / 2;
        let mut cross = Vec::new();
        for y in -3..=3i32 {
            for x in -3..=3i32 {
                if x.abs() <= half || y.abs() <= half {
                    cross.push(Cell::new(x, y));
                }
            }
        }
        let rot = |c: Cell, k: usize| (0..k).fold(c, |c, _| Cell::new(-c.y, c.x));
        let corner = Cell::new(half + 1, half + 1);
        GadgetLayout {
            cross,
            task_tiles: (0..4).map(|k| rot(corner, k)).collect(),
            task_positions: (0..4).map(|k| rot(position, k)).collect(),
        }
    }

    /// The layout shown in the module diagram.
    pub fn standard() -> GadgetLayout {
        GadgetLayout::cross(3, Cell::new(2, 3))
    }
}

/// Embed `g` at scale `s` (adjacent vertices `s + 7` apart), robot at the
/// first vertex's gadget.
pub fn build_vertex_gadget_instance(g: &GridGraph, s: u32) -> Result<GadgetInstance, Error> {
    build_with_layout(g, s, 0, &GadgetLayout::standard())
}

/// Robot entry pose relative to the start vertex tile.
pub const ENTRY_FRONT: Cell = Cell::new(-3, -1);
pub const ENTRY_BACK: Cell = Cell::new(-2, -1);

pub fn build_with_layout(
    g: &GridGraph,
    s: u32,
    start_vertex: usize,
    layout: &GadgetLayout,
) -> Result<GadgetInstance, Error> {
    let g = GridGraph::new(g.vertices.clone(), g.edges.clone())?;
    if g.vertices.is_empty() || start_vertex >= g.vertices.len() {
        return Err(Error::NotGridGraph(
            "the graph needs the start vertex".into(),
        ));
    }
    if s == 0 {
        return Err(Error::NotGridGraph("scale must be positive".into()));
    }
    let pitch = s as i32 + 7;
    let max_x = g.vertices.iter().map(|v| v.x).max().unwrap();
    let max_y = g.vertices.iter().map(|v| v.y).max().unwrap();
    let width = (max_x * pitch + 7) as usize;
    let height = (max_y * pitch + 7) as usize;
    let centers: Vec<Cell> = g
        .vertices
        .iter()
        .map(|v| Cell::new(3 + v.x * pitch, 3 + v.y * pitch))
        .collect();
    let mut start = Workspace::new(width, height)?;
    for &c in &centers {
        for &d in &layout.cross {
            start.set(c + d, CellKind::Tile)?;
        }
    }
    for &(a, b) in &g.edges {
        let dir = Cell::new(
            (centers[b].x - centers[a].x).signum(),
            (centers[b].y - centers[a].y).signum(),
        );
        for k in 4..4 + s as i32 {
            start.set(centers[a] + dir.scale(k), CellKind::Tile)?;
        }
    }
    let mut goal = start.clone();
    for &c in &centers {
        for &d in &layout.task_tiles {
            start.set(c + d, CellKind::Tile)?;
        }
        for &d in &layout.task_positions {
            goal.set(c + d, CellKind::Tile)?;
        }
    }
    let mut tasks = Vec::new();
    for &c in &centers {
        for (&a, &b) in layout.task_tiles.iter().zip(&layout.task_positions) {
            tasks.push((c + a, c + b));
        }
    }
    let c0 = centers[start_vertex];
    let robots = vec![RobotPose::new(c0 + ENTRY_FRONT, c0 + ENTRY_BACK)];
    Ok(GadgetInstance {
        start,
        goal,
        robots,
        scale: s,
        vertex_count: g.vertices.len(),
        centers,
        relay: Vec::new(),
        tasks,
    })
}

/// Two-robot gadget, `y` up. `T` tiles in both configurations, `s` tiles
/// only in the start, `g` only in the goal. The large task moves the tile
/// on `S` to `G`, eight cells away; `b` is the relay cell halfway between.
pub const COOPERATIVE_GADGET: &str = "\
.......gTTg
......sTTs.
..g..STT...
.sT.TTTg...
.TTTTTs....
.TTTb......
.GTTg......
.TTs.......
gTT........
.sTT.......
";

/// Robot poses for [`COOPERATIVE_GADGET`]: one near the large task's start,
/// one near its goal.
pub const COOPERATIVE_ROBOTS: [(Cell, Cell); 2] = [
    (Cell::new(5, 6), Cell::new(5, 5)),
    (Cell::new(2, 0), Cell::new(3, 0)),
];

/// The cooperative gadget as an instance with its relay cell.
pub fn cooperative_instance() -> GadgetInstance {
    let rows: Vec<&str> = COOPERATIVE_GADGET.lines().collect();
    let (h, w) = (rows.len(), rows[0].len());
    let mut start = Workspace::new(w, h).expect("non-empty gadget");
    let mut goal = start.clone();
    let mut relay = Vec::new();
    let mut large = (Cell::new(0, 0), Cell::new(0, 0));
    for (r, row) in rows.iter().enumerate() {
        for (x, ch) in row.chars().enumerate() {
            let c = Cell::new(x as i32, (h - 1 - r) as i32);
            let (in_start, in_goal) = match ch {
                'T' => (true, true),
                's' => (true, false),
                'g' => (false, true),
                'S' => {
                    large.0 = c;
                    (true, false)
                }
                'G' => {
                    large.1 = c;
                    (false, true)
                }
                'b' => {
                    relay.push(c);
                    (false, false)
                }
                _ => (false, false),
            };
            if in_start {
                start
                    .set(c, CellKind::Tile)
                    .expect("cell inside the gadget");
            }
            if in_goal {
                goal.set(c, CellKind::Tile).expect("cell inside the gadget");
            }
        }
    }
    // Small tasks: each start-only tile to the nearest free goal-only cell.
    let mut sources: Vec<Cell> = start
        .cells()
        .filter(|&c| start.is_tile(c) && !goal.is_tile(c))
        .collect();
    let mut targets: Vec<Cell> = goal
        .cells()
        .filter(|&c| goal.is_tile(c) && !start.is_tile(c))
        .collect();
    let (big_from, big_to) = (
        sources.remove(sources.iter().position(|&c| c == large.0).unwrap()),
        large.1,
    );
    targets.retain(|&c| c != big_to);
    let mut tasks = Vec::new();
    for from in sources {
        let (i, _) = targets
            .iter()
            .enumerate()
            .min_by_key(|(_, &t)| manhattan(from, t))
            .expect("one target per source");
        tasks.push((from, targets.remove(i)));
    }
    tasks.push((big_from, relay[0]));
    tasks.push((relay[0], big_to));
    let robots = COOPERATIVE_ROBOTS
        .iter()
        .map(|&(f, b)| RobotPose::new(f, b))
        .collect();
    GadgetInstance {
        start,
        goal,
        robots,
        scale: 0,
        vertex_count: 0,
        centers: Vec::new(),
        relay,
        tasks,
    }
}

/// An optimal schedule found by [`brute_force_optimal`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    /// Synchronized steps (one move per robot each).
    pub cost: u32,
    pub steps: Vec<Vec<MoveKind>>,
    pub expanded: usize,
}

const INF: u32 = u32::MAX / 4;

/// Exact minimum number of synchronized steps for the first `m` robots of
/// `inst` (at most two) to turn `start` into `goal`, or `Ok(None)` if no
/// schedule of at most `max_moves` steps exists.
///
/// Picks are restricted to tiles absent from the goal and places to goal
/// cells absent from the start or to the instance's relay cells. The search is A* with an admissible bound,
/// so the first goal state popped is optimal. Storing more than
/// `max_states` states is an error.
pub fn brute_force_optimal(
    inst: &GadgetInstance,
    m: usize,
    s: Moveset,
    max_moves: u32,
    max_states: usize,
) -> Result<Option<Solution>, Error> {
    if m == 0 || m > 2 || m > inst.robots.len() {
        return Err(Error::InvalidScenario(format!(
            "the exact oracle handles one or two robots, not {m}"
        )));
    }
    let space = StateSpace::new(inst, s)?;
    let starts = &inst.robots[..m];
    let start_key = space.encode(starts, space.start_bits);
    let h = |poses: &[RobotPose], bits: u64| -> u32 {
        if m == 1 {
            space.single_bound(&poses[0], bits)
        } else {
            space.team_bound(poses, bits)
        }
    };

    struct Node {
        key: u128,
        g: u32,
        parent: u32,
        via: [MoveKind; 2],
    }
    let mut nodes = vec![Node {
        key: start_key,
        g: 0,
        parent: u32::MAX,
        via: [MoveKind::Wait; 2],
    }];
    let mut best: HashMap<u128, u32> = HashMap::from([(start_key, 0)]);
    let mut open = BinaryHeap::new();
    let mut seq = 0u64;
    let h0 = h(starts, space.start_bits);
    if h0 <= max_moves {
        open.push(Reverse((h0, h0, seq, 0u32)));
    }
    let mut expanded = 0;
    while let Some(Reverse((_, _, _, id))) = open.pop() {
        let node = &nodes[id as usize];
        let (key, g) = (node.key, node.g);
        if best[&key] < g {
            continue;
        }
        let (poses, bits) = space.decode(key, m);
        if bits == space.goal_bits && poses.iter().all(|p| !p.carrying) {
            let mut steps = Vec::new();
            let mut at = id;
            while nodes[at as usize].parent != u32::MAX {
                steps.push(nodes[at as usize].via[..m].to_vec());
                at = nodes[at as usize].parent;
            }
            steps.reverse();
            return Ok(Some(Solution {
                cost: g,
                steps,
                expanded,
            }));
        }
        expanded += 1;
        for (moves, np, nb) in space.successors(&poses, bits) {
            let ng = g + 1;
            let nh = h(&np, nb);
            if ng + nh > max_moves {
                continue;
            }
            let nk = space.encode(&np, nb);
            match best.entry(nk) {
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
            if best.len() > max_states {
                return Err(Error::StateSpaceExceeded(max_states));
            }
            let mut via = [MoveKind::Wait; 2];
            via[..m].copy_from_slice(&moves);
            nodes.push(Node {
                key: nk,
                g: ng,
                parent: id,
                via,
            });
            seq += 1;
            open.push(Reverse((ng + nh, nh, seq, nodes.len() as u32 - 1)));
        }
    }
    Ok(None)
}

/// Task cells, pose indexing and precomputed motion distances on the
/// structure with every task cell filled (a relaxation: extra tiles only
/// shorten walks).
struct StateSpace {
    moveset: Moveset,
    base: Workspace,
    task: Vec<Cell>,
    start_bits: u64,
    goal_bits: u64,
    relay_bits: u64,
    poses: Vec<RobotPose>,
    index: HashMap<(Cell, Cell), u32>,
    /// `dist_to[c][p]`: motions from pose `p` to a pose aiming at task cell `c`.
    dist_to: Vec<Vec<u32>>,
    /// `between[a][b]`: motions from a pose aiming at `a` to one aiming at `b`.
    between: Vec<Vec<u32>>,
}

impl StateSpace {
    fn new(inst: &GadgetInstance, s: Moveset) -> Result<Self, Error> {
        let mut task: Vec<Cell> = inst
            .start
            .cells()
            .filter(|&c| inst.start.is_tile(c) != inst.goal.is_tile(c))
            .collect();
        let first_relay = task.len();
        task.extend(
            inst.relay
                .iter()
                .filter(|c| inst.start.is_free(**c) && inst.goal.is_free(**c)),
        );
        let relay_bits: u64 = (first_relay..task.len()).map(|i| 1u64 << i).sum();
        if task.len() > 64 {
            return Err(Error::StateSpaceExceeded(task.len()));
        }
        let mask = |w: &Workspace| -> u64 {
            task.iter()
                .enumerate()
                .filter(|(_, &c)| w.is_tile(c))
                .map(|(i, _)| 1 << i)
                .sum()
        };
        let (start_bits, goal_bits) = (mask(&inst.start), mask(&inst.goal));
        let mut base = inst.start.clone();
        let mut full = inst.start.clone();
        for &c in &task {
            base.set(c, CellKind::Free)?;
            full.set(c, CellKind::Tile)?;
        }
        let poses = all_poses(&full, false);
        if poses.len() >= 1 << 19 {
            return Err(Error::StateSpaceExceeded(poses.len()));
        }
        let index: HashMap<(Cell, Cell), u32> = poses
            .iter()
            .enumerate()
            .map(|(i, p)| ((p.front, p.back), i as u32))
            .collect();
        let motions: Vec<MoveKind> = s
            .motions()
            .iter()
            .copied()
            .filter(|&mv| mv != MoveKind::Wait)
            .collect();
        let mut reverse: Vec<Vec<u32>> = vec![Vec::new(); poses.len()];
        for (i, p) in poses.iter().enumerate() {
            for &mv in &motions {
                if let Some(n) = apply_move(p, mv, &full) {
                    reverse[index[&(n.front, n.back)] as usize].push(i as u32);
                }
            }
        }
        let dist_to: Vec<Vec<u32>> = task
            .iter()
            .map(|&c| {
                let mut d = vec![INF; poses.len()];
                let mut queue = std::collections::VecDeque::new();
                for (i, p) in poses.iter().enumerate() {
                    if p.target() == c {
                        d[i] = 0;
                        queue.push_back(i);
                    }
                }
                while let Some(i) = queue.pop_front() {
                    for &j in &reverse[i] {
                        if d[j as usize] == INF {
                            d[j as usize] = d[i] + 1;
                            queue.push_back(j as usize);
                        }
                    }
                }
                d
            })
            .collect();
        let between = task
            .iter()
            .map(|&a| {
                (0..task.len())
                    .map(|b| {
                        poses
                            .iter()
                            .enumerate()
                            .filter(|(_, p)| p.target() == a)
                            .map(|(i, _)| dist_to[b][i])
                            .min()
                            .unwrap_or(INF)
                    })
                    .collect()
            })
            .collect();
        Ok(StateSpace {
            moveset: s,
            base,
            task,
            start_bits,
            goal_bits,
            relay_bits,
            poses,
            index,
            dist_to,
            between,
        })
    }

    fn encode(&self, poses: &[RobotPose], bits: u64) -> u128 {
        let mut key = bits as u128;
        for (r, p) in poses.iter().enumerate() {
            let code = (self.index[&(p.front, p.back)] as u128) << 1 | p.carrying as u128;
            key |= code << (64 + 20 * r);
        }
        key
    }

    fn decode(&self, key: u128, m: usize) -> (Vec<RobotPose>, u64) {
        let poses = (0..m)
            .map(|r| {
                let code = (key >> (64 + 20 * r)) as u32 & 0xF_FFFF;
                RobotPose {
                    carrying: code & 1 == 1,
                    ..self.poses[(code >> 1) as usize]
                }
            })
            .collect();
        (poses, key as u64)
    }

    fn workspace(&self, bits: u64) -> Workspace {
        let mut w = self.base.clone();
        for (i, &c) in self.task.iter().enumerate() {
            if bits >> i & 1 == 1 {
                w.set(c, CellKind::Tile).unwrap();
            }
        }
        w
    }

    /// Moves of one robot, with picks and places limited to task cells.
    fn options(
        &self,
        p: &RobotPose,
        bits: u64,
        w: &Workspace,
        with_wait: bool,
    ) -> Vec<(MoveKind, RobotPose)> {
        let mut out: Vec<(MoveKind, RobotPose)> = self
            .moveset
            .motions()
            .iter()
            .filter(|&&mv| with_wait || mv != MoveKind::Wait)
            .filter_map(|&mv| apply_move(p, mv, w).map(|n| (mv, n)))
            .collect();
        if let Some(i) = self.task.iter().position(|&c| c == p.target()) {
            let present = bits >> i & 1 == 1;
            let wanted = self.goal_bits >> i & 1 == 1;
            let relay = self.relay_bits >> i & 1 == 1;
            if present && !wanted && can_pick(p, w) {
                out.push((
                    MoveKind::Pick,
                    RobotPose {
                        carrying: true,
                        ..*p
                    },
                ));
            }
            if !present && (wanted || relay) && can_place(p, w) {
                out.push((
                    MoveKind::Place,
                    RobotPose {
                        carrying: false,
                        ..*p
                    },
                ));
            }
        }
        out
    }

    fn successors(
        &self,
        poses: &[RobotPose],
        bits: u64,
    ) -> Vec<(Vec<MoveKind>, Vec<RobotPose>, u64)> {
        let w = self.workspace(bits);
        let flip = |p: &RobotPose| 1u64 << self.task.iter().position(|&c| c == p.target()).unwrap();
        if poses.len() == 1 {
            return self
                .options(&poses[0], bits, &w, false)
                .into_iter()
                .map(|(mv, n)| {
                    let nb = if mv.is_action() {
                        bits ^ flip(&poses[0])
                    } else {
                        bits
                    };
                    (vec![mv], vec![n], nb)
                })
                .collect();
        }
        let world = World::new(w.clone(), poses.to_vec());
        let a = self.options(&poses[0], bits, &w, true);
        let b = self.options(&poses[1], bits, &w, true);
        let mut out = Vec::new();
        for &(ma, _) in &a {
            for &(mb, _) in &b {
                if ma == MoveKind::Wait && mb == MoveKind::Wait {
                    continue;
                }
                if let Ok(next) = world.step(&[ma, mb]) {
                    let mut nb = bits;
                    for (r, mv) in [ma, mb].into_iter().enumerate() {
                        if mv.is_action() {
                            nb ^= flip(&poses[r]);
                        }
                    }
                    out.push((vec![ma, mb], next.robots, nb));
                }
            }
        }
        out
    }

    fn split(&self, bits: u64) -> (Vec<usize>, Vec<usize>) {
        let tiles = (0..self.task.len())
            .filter(|&i| bits >> i & 1 == 1 && self.goal_bits >> i & 1 == 0)
            .collect();
        let holes = (0..self.task.len())
            .filter(|&i| bits >> i & 1 == 0 && self.goal_bits >> i & 1 == 1)
            .collect();
        (tiles, holes)
    }

    /// Remaining actions plus a lower bound on the motions of one robot:
    /// it must walk to every remaining tile, carry it to some hole and
    /// walk on to the next tile.
    fn single_bound(&self, pose: &RobotPose, bits: u64) -> u32 {
        let (tiles, holes) = self.split(bits);
        let at = self.index[&(pose.front, pose.back)] as usize;
        let actions = (tiles.len() + holes.len()) as u32;
        if tiles.is_empty() {
            let walk = if pose.carrying {
                holes
                    .iter()
                    .map(|&p| self.dist_to[p][at])
                    .min()
                    .unwrap_or(INF)
            } else {
                0
            };
            return actions + walk;
        }
        let via = |i: usize, j: usize| {
            holes
                .iter()
                .map(|&p| self.between[i][p] + self.between[p][j])
                .min()
                .unwrap_or(INF)
        };
        let last: Vec<u32> = tiles
            .iter()
            .map(|&i| {
                holes
                    .iter()
                    .map(|&p| self.between[i][p])
                    .min()
                    .unwrap_or(INF)
            })
            .collect();
        let first: Vec<u32> = tiles
            .iter()
            .map(|&j| {
                if pose.carrying {
                    holes
                        .iter()
                        .map(|&p| self.dist_to[p][at] + self.between[p][j])
                        .min()
                        .unwrap_or(INF)
                } else {
                    self.dist_to[j][at]
                }
            })
            .collect();
        let n = tiles.len();
        let leg: Vec<Vec<u32>> = (0..n)
            .map(|a| {
                (0..n)
                    .map(|b| if a == b { 0 } else { via(tiles[a], tiles[b]) })
                    .collect()
            })
            .collect();
        let walk = if n <= 6 {
            // exact shortest visiting order
            let full = (1usize << n) - 1;
            let mut dp = vec![INF; (1 << n) * n];
            for i in 0..n {
                dp[(1 << i) * n + i] = first[i];
            }
            for mask in 1..=full {
                for l in 0..n {
                    let cur = dp[mask * n + l];
                    if cur >= INF || mask >> l & 1 == 0 {
                        continue;
                    }
                    for k in 0..n {
                        if mask >> k & 1 == 0 {
                            let slot = &mut dp[(mask | 1 << k) * n + k];
                            *slot = (*slot).min(cur + leg[l][k]);
                        }
                    }
                }
            }
            (0..n)
                .map(|l| dp[full * n + l].saturating_add(last[l]))
                .min()
                .unwrap()
        } else {
            // spanning tree over the start and the tiles
            let mut in_tree = vec![false; n];
            let mut cost = first.clone();
            let mut total = 0u32;
            for _ in 0..n {
                let k = (0..n)
                    .filter(|&k| !in_tree[k])
                    .min_by_key(|&k| cost[k])
                    .unwrap();
                in_tree[k] = true;
                total = total.saturating_add(cost[k]);
                for o in 0..n {
                    if !in_tree[o] {
                        cost[o] = cost[o].min(leg[k][o].min(leg[o][k]));
                    }
                }
            }
            total.saturating_add(*last.iter().min().unwrap())
        };
        actions.saturating_add(walk).min(INF)
    }

    /// Makespan bound for two robots: the remaining actions split evenly,
    /// and every remaining tile must be reached by someone.
    fn team_bound(&self, poses: &[RobotPose], bits: u64) -> u32 {
        let (tiles, holes) = self.split(bits);
        let actions = (tiles.len() + holes.len()) as u32;
        let idx: Vec<usize> = poses
            .iter()
            .map(|p| self.index[&(p.front, p.back)] as usize)
            .collect();
        let reach = tiles
            .iter()
            .chain(holes.iter())
            .map(|&c| idx.iter().map(|&i| self.dist_to[c][i]).min().unwrap() + 1)
            .max()
            .unwrap_or(0);
        actions.div_ceil(poses.len() as u32).max(reach).min(INF)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(v: &[(i32, i32)]) -> GridGraph {
        GridGraph::induced(v.iter().map(|&(x, y)| Cell::new(x, y)).collect()).unwrap()
    }

    fn diff(inst: &GadgetInstance) -> (usize, usize) {
        let only_start = inst
            .start
            .cells()
            .filter(|&c| inst.start.is_tile(c) && !inst.goal.is_tile(c))
            .count();
        let only_goal = inst
            .start
            .cells()
            .filter(|&c| !inst.start.is_tile(c) && inst.goal.is_tile(c))
            .count();
        (only_start, only_goal)
    }

    #[test]
    fn hamiltonian_paths() {
        assert!(graph(&[(0, 0), (1, 0), (2, 0)]).has_hamiltonian_path());
        assert!(graph(&[(0, 0), (1, 0), (1, 1), (0, 1)]).has_hamiltonian_path());
        assert!(!graph(&[(1, 0), (0, 0), (2, 0), (1, 1)]).has_hamiltonian_path());
        assert_eq!(
            graph(&[(0, 0), (1, 0), (2, 0)]).hamiltonian_path_from(1),
            None
        );
    }

    #[test]
    fn rejects_non_grid_edges() {
        let v = vec![Cell::new(0, 0), Cell::new(2, 0)];
        assert!(matches!(
            GridGraph::new(v, vec![(0, 1)]),
            Err(Error::NotGridGraph(_))
        ));
        assert!(GridGraph::induced(vec![Cell::new(0, 0), Cell::new(0, 0)]).is_err());
    }

    #[test]
    fn single_vertex_differs_only_at_task_cells() {
        let inst = build_vertex_gadget_instance(&graph(&[(0, 0)]), 1).unwrap();
        assert_eq!(diff(&inst), (4, 4));
        let common = inst
            .start
            .cells()
            .filter(|&c| inst.start.is_tile(c) && inst.goal.is_tile(c))
            .count();
        assert_eq!(common, GadgetLayout::standard().cross.len());
    }

    #[test]
    fn scale_two_edge() {
        let inst = build_vertex_gadget_instance(&graph(&[(0, 0), (1, 0)]), 2).unwrap();
        assert_eq!(inst.centers[1] - inst.centers[0], Cell::new(9, 0));
        let cross = GadgetLayout::standard().cross.len();
        let common = inst
            .start
            .cells()
            .filter(|&c| inst.start.is_tile(c) && inst.goal.is_tile(c))
            .count();
        assert_eq!(common, 2 * cross + 2);
        assert_eq!(diff(&inst), (8, 8));
    }

    #[test]
    fn instances_are_connected() {
        for v in [
            &[(0, 0)][..],
            &[(0, 0), (1, 0), (1, 1)],
            &[(1, 0), (0, 0), (2, 0), (1, 1)],
            &[(0, 0), (0, 1), (0, 2)],
        ] {
            for s in 1..=3 {
                let inst = build_vertex_gadget_instance(&graph(v), s).unwrap();
                assert!(inst.start.is_connected() && inst.goal.is_connected());
                assert!(inst.robots[0].is_valid_on(&inst.start));
            }
        }
        let coop = cooperative_instance();
        assert!(coop.start.is_connected() && coop.goal.is_connected());
        assert!(coop
            .relay
            .iter()
            .all(|&c| !coop.start.is_tile(c) && !coop.goal.is_tile(c)));
        assert_eq!(diff(&coop), (7, 7));
    }

    #[test]
    fn start_equal_to_goal_costs_nothing() {
        let mut inst = build_vertex_gadget_instance(&graph(&[(0, 0)]), 1).unwrap();
        inst.goal = inst.start.clone();
        let sol = brute_force_optimal(&inst, 1, Moveset::S7, 10, 1000)
            .unwrap()
            .unwrap();
        assert_eq!(sol.cost, 0);
        assert!(sol.steps.is_empty());
    }

    #[test]
    fn solutions_replay_to_the_goal() {
        let w: Workspace = ".TT.\nTTT.\n".parse().unwrap();
        let mut goal = w.clone();
        goal.set(Cell::new(2, 0), CellKind::Free).unwrap();
        goal.set(Cell::new(3, 1), CellKind::Tile).unwrap();
        let inst = GadgetInstance {
            start: w.clone(),
            goal: goal.clone(),
            robots: vec![RobotPose::new(Cell::new(1, 0), Cell::new(0, 0))],
            scale: 0,
            vertex_count: 0,
            centers: Vec::new(),
            relay: Vec::new(),
            tasks: Vec::new(),
        };
        let sol = brute_force_optimal(&inst, 1, Moveset::S7, 20, 100_000)
            .unwrap()
            .unwrap();
        let mut world = World::new(w, inst.robots.clone());
        for mv in &sol.steps {
            world = world.step(mv).unwrap();
        }
        assert_eq!(world.workspace, goal);
        assert_eq!(sol.cost as usize, sol.steps.len());
        // Pick, two front pivots, place.
        assert_eq!(sol.cost, 4);
    }

    #[test]
    fn every_gadget_costs_the_same_alone() {
        let inst = build_vertex_gadget_instance(&graph(&[(0, 0), (1, 0)]), 1).unwrap();
        let costs: Vec<u32> = inst
            .centers
            .iter()
            .map(|&c| {
                let mut one = inst.clone();
                for other in inst.centers.iter().filter(|&&o| o != c) {
                    for d in GadgetLayout::standard()
                        .task_tiles
                        .iter()
                        .chain(&GadgetLayout::standard().task_positions)
                    {
                        let cell = *other + *d;
                        let kind = if inst.goal.is_tile(cell) {
                            CellKind::Tile
                        } else {
                            CellKind::Free
                        };
                        one.start.set(cell, kind).unwrap();
                    }
                }
                one.robots = vec![RobotPose::new(c + ENTRY_FRONT, c + ENTRY_BACK)];
                brute_force_optimal(&one, 1, Moveset::S7, 60, 5_000_000)
                    .unwrap()
                    .unwrap()
                    .cost
            })
            .collect();
        assert_eq!(costs[0], costs[1]);
    }
}
