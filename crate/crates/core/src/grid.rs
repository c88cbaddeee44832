//! Rectangular workspace of free, tile and obstacle cells.
//!
//! Coordinates have the origin at the lower-left corner, `x` grows to the
//! right and `y` grows upward. Map files are written top row first and are
//! flipped on load.

use std::collections::VecDeque;
use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::str::FromStr;

use crate::error::Error;

/// A grid cell, also used as a unit offset between cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Cell { x, y }
    }

    /// Rotate an offset 90 degrees counter-clockwise.
    pub const fn left(self) -> Self {
        Cell::new(-self.y, self.x)
    }

    /// Rotate an offset 90 degrees clockwise.
    pub const fn right(self) -> Self {
        Cell::new(self.y, -self.x)
    }

    pub fn scale(self, k: i32) -> Self {
        Cell::new(self.x * k, self.y * k)
    }

    pub fn neighbors4(self) -> [Cell; 4] {
        DIRECTIONS.map(|d| self + d)
    }
}

/// East, north, west, south.
pub const DIRECTIONS: [Cell; 4] = [
    Cell::new(1, 0),
    Cell::new(0, 1),
    Cell::new(-1, 0),
    Cell::new(0, -1),
];

impl Add for Cell {
    type Output = Cell;
    fn add(self, o: Cell) -> Cell {
        Cell::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Cell {
    type Output = Cell;
    fn sub(self, o: Cell) -> Cell {
        Cell::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Cell {
    type Output = Cell;
    fn neg(self) -> Cell {
        Cell::new(-self.x, -self.y)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.x, self.y)
    }
}

impl FromStr for Cell {
    type Err = Error;

    /// Parses `x,y`.
    fn from_str(s: &str) -> Result<Self, Error> {
        let bad = || Error::InvalidScenario(format!("expected a cell as x,y, got {s:?}"));
        let (x, y) = s.trim().split_once(',').ok_or_else(bad)?;
        Ok(Cell::new(
            x.trim().parse().map_err(|_| bad())?,
            y.trim().parse().map_err(|_| bad())?,
        ))
    }
}

pub fn manhattan(a: Cell, b: Cell) -> u32 {
    a.x.abs_diff(b.x) + a.y.abs_diff(b.y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellKind {
    Free,
    Tile,
    Obstacle,
}

/// The mutable structure being reconfigured.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Workspace {
    width: usize,
    height: usize,
    cells: Vec<CellKind>,
    tile_count: usize,
}

impl fmt::Debug for Workspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Workspace {}x{}", self.width, self.height)?;
        f.write_str(&self.to_ascii())
    }
}

impl Workspace {
    pub fn new(width: usize, height: usize) -> Result<Self, Error> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidWorkspace(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        Ok(Workspace {
            width,
            height,
            cells: vec![CellKind::Free; width * height],
            tile_count: 0,
        })
    }

    /// Build a workspace from explicit tile and obstacle sets.
    pub fn from_cells(
        width: usize,
        height: usize,
        tiles: impl IntoIterator<Item = Cell>,
        obstacles: impl IntoIterator<Item = Cell>,
    ) -> Result<Self, Error> {
        let mut w = Workspace::new(width, height)?;
        for c in obstacles {
            w.set(c, CellKind::Obstacle)?;
        }
        for c in tiles {
            if w.kind(c) == Some(CellKind::Obstacle) {
                return Err(Error::InvalidWorkspace(format!(
                    "cell {c} is both tile and obstacle"
                )));
            }
            w.set(c, CellKind::Tile)?;
        }
        Ok(w)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.x >= 0 && c.y >= 0 && (c.x as usize) < self.width && (c.y as usize) < self.height
    }

    fn index(&self, c: Cell) -> Option<usize> {
        self.in_bounds(c)
            .then(|| c.y as usize * self.width + c.x as usize)
    }

    /// Dense index of an in-bounds cell, row-major from the bottom row.
    pub fn cell_index(&self, c: Cell) -> Option<usize> {
        self.index(c)
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        Cell::new((index % self.width) as i32, (index / self.width) as i32)
    }

    /// Every cell in index order.
    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.cells.len()).map(|i| self.cell_at(i))
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    /// `None` when out of bounds.
    pub fn kind(&self, c: Cell) -> Option<CellKind> {
        self.index(c).map(|i| self.cells[i])
    }

    pub fn is_tile(&self, c: Cell) -> bool {
        self.kind(c) == Some(CellKind::Tile)
    }

    pub fn is_obstacle(&self, c: Cell) -> bool {
        self.kind(c) == Some(CellKind::Obstacle)
    }

    pub fn is_free(&self, c: Cell) -> bool {
        self.kind(c) == Some(CellKind::Free)
    }

    pub fn set(&mut self, c: Cell, kind: CellKind) -> Result<(), Error> {
        let i = self
            .index(c)
            .ok_or_else(|| Error::InvalidWorkspace(format!("cell {c} out of bounds")))?;
        if self.cells[i] == CellKind::Tile {
            self.tile_count -= 1;
        }
        if kind == CellKind::Tile {
            self.tile_count += 1;
        }
        self.cells[i] = kind;
        Ok(())
    }

    pub fn tile_count(&self) -> usize {
        self.tile_count
    }

    /// Tiles in row-major order from the bottom row.
    pub fn tiles(&self) -> impl Iterator<Item = Cell> + '_ {
        self.cells_of(CellKind::Tile)
    }

    pub fn obstacles(&self) -> impl Iterator<Item = Cell> + '_ {
        self.cells_of(CellKind::Obstacle)
    }

    fn cells_of(&self, kind: CellKind) -> impl Iterator<Item = Cell> + '_ {
        self.cells
            .iter()
            .enumerate()
            .filter(move |(_, k)| **k == kind)
            .map(|(i, _)| self.cell_at(i))
    }

    /// Render in the map file format (top row first).
    pub fn to_ascii(&self) -> String {
        let mut s = String::with_capacity((self.width + 1) * self.height);
        for y in (0..self.height as i32).rev() {
            for x in 0..self.width as i32 {
                s.push(match self.kind(Cell::new(x, y)).unwrap() {
                    CellKind::Free => '.',
                    CellKind::Tile => 'T',
                    CellKind::Obstacle => '#',
                });
            }
            s.push('\n');
        }
        s
    }

    /// Parse the ASCII map format: `.` free, `#` obstacle, `T` tile.
    ///
    /// Blank lines are ignored; rows must all have the same length.
    pub fn parse_ascii(text: &str) -> Result<Self, Error> {
        let rows: Vec<(usize, &str)> = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim_end()))
            .filter(|(_, l)| !l.is_empty())
            .collect();
        let Some(&(_, first)) = rows.first() else {
            return Err(Error::Parse {
                line: 0,
                msg: "empty map".into(),
            });
        };
        let width = first.chars().count();
        let height = rows.len();
        let mut w = Workspace::new(width, height)?;
        for (r, &(line, row)) in rows.iter().enumerate() {
            if row.chars().count() != width {
                return Err(Error::Parse {
                    line,
                    msg: format!(
                        "ragged row: expected {width} cells, found {}",
                        row.chars().count()
                    ),
                });
            }
            let y = (height - 1 - r) as i32;
            for (x, ch) in row.chars().enumerate() {
                let kind = match ch {
                    '.' => CellKind::Free,
                    'T' => CellKind::Tile,
                    '#' => CellKind::Obstacle,
                    other => {
                        return Err(Error::Parse {
                            line,
                            msg: format!("unknown map character {other:?}"),
                        })
                    }
                };
                w.set(Cell::new(x as i32, y), kind)?;
            }
        }
        Ok(w)
    }

    /// Flood fill from `seed` over tiles, skipping `removed`.
    fn flood_count(&self, seed: Cell, removed: Option<Cell>) -> usize {
        let mut seen = vec![false; self.cells.len()];
        let mut queue = VecDeque::new();
        seen[self.index(seed).unwrap()] = true;
        queue.push_back(seed);
        let mut count = 0;
        while let Some(c) = queue.pop_front() {
            count += 1;
            for n in c.neighbors4() {
                if Some(n) == removed || !self.is_tile(n) {
                    continue;
                }
                let i = self.index(n).unwrap();
                if !seen[i] {
                    seen[i] = true;
                    queue.push_back(n);
                }
            }
        }
        count
    }

    /// True iff the tiles form one 4-connected component. Empty and
    /// single-tile structures count as connected.
    pub fn is_connected(&self) -> bool {
        match self.tiles().next() {
            None => true,
            Some(seed) => self.flood_count(seed, None) == self.tile_count,
        }
    }

    /// Whether the structure stays connected after removing tile `c`.
    pub fn connected_after_removal(&self, c: Cell) -> Result<bool, Error> {
        if !self.is_tile(c) {
            return Err(Error::NotATile(c));
        }
        if self.tile_count <= 2 {
            return Ok(true);
        }
        let seed = c.neighbors4().into_iter().find(|&n| self.is_tile(n));
        Ok(match seed {
            // an isolated tile: removing it joins nothing, the rest must already be one piece
            None => {
                let rest = self.tiles().find(|&t| t != c).unwrap();
                self.flood_count(rest, Some(c)) == self.tile_count - 1
            }
            Some(s) => self.flood_count(s, Some(c)) == self.tile_count - 1,
        })
    }

    /// Cut tiles of the structure (articulation points of the 4-adjacency
    /// graph), by an iterative Hopcroft-Tarjan lowpoint search.
    pub fn articulation_points(&self) -> Vec<Cell> {
        let n = self.cells.len();
        let mut disc = vec![0u32; n];
        let mut low = vec![0u32; n];
        let mut is_cut = vec![false; n];
        let mut timer = 0u32;
        for root in self.tiles() {
            let ri = self.index(root).unwrap();
            if disc[ri] != 0 {
                continue;
            }
            timer += 1;
            disc[ri] = timer;
            low[ri] = timer;
            let mut root_children = 0;
            // (cell index, parent index, next direction to try)
            let mut stack: Vec<(usize, usize, usize)> = vec![(ri, usize::MAX, 0)];
            while let Some(top) = stack.last_mut() {
                let (v, parent, dir) = *top;
                if dir < 4 {
                    top.2 += 1;
                    let nc = self.cell_at(v) + DIRECTIONS[dir];
                    if !self.is_tile(nc) {
                        continue;
                    }
                    let u = self.index(nc).unwrap();
                    if disc[u] == 0 {
                        timer += 1;
                        disc[u] = timer;
                        low[u] = timer;
                        if v == ri {
                            root_children += 1;
                        }
                        stack.push((u, v, 0));
                    } else if u != parent {
                        low[v] = low[v].min(disc[u]);
                    }
                } else {
                    stack.pop();
                    if parent != usize::MAX {
                        low[parent] = low[parent].min(low[v]);
                        if parent != ri && low[v] >= disc[parent] {
                            is_cut[parent] = true;
                        }
                    }
                }
            }
            if root_children > 1 {
                is_cut[ri] = true;
            }
        }
        (0..n)
            .filter(|&i| is_cut[i])
            .map(|i| self.cell_at(i))
            .collect()
    }

    /// Breadth-first distances over tile adjacency from `source`.
    pub fn geodesic_distances(&self, source: Cell) -> Result<DistanceField, Error> {
        if !self.is_tile(source) {
            return Err(Error::NotATile(source));
        }
        let mut dist = vec![None; self.cells.len()];
        let mut queue = VecDeque::new();
        dist[self.index(source).unwrap()] = Some(0);
        queue.push_back(source);
        while let Some(c) = queue.pop_front() {
            let d = dist[self.index(c).unwrap()].unwrap();
            for n in c.neighbors4() {
                if self.is_tile(n) {
                    let i = self.index(n).unwrap();
                    if dist[i].is_none() {
                        dist[i] = Some(d + 1);
                        queue.push_back(n);
                    }
                }
            }
        }
        Ok(DistanceField {
            source,
            width: self.width,
            dist,
        })
    }
}

impl FromStr for Workspace {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        Workspace::parse_ascii(s)
    }
}

/// Shortest tile-path lengths from one source tile.
#[derive(Debug, Clone)]
pub struct DistanceField {
    source: Cell,
    width: usize,
    dist: Vec<Option<u32>>,
}

impl DistanceField {
    pub fn source(&self) -> Cell {
        self.source
    }

    /// `None` for unreachable or non-tile cells.
    pub fn get(&self, c: Cell) -> Option<u32> {
        if c.x < 0 || c.y < 0 || c.x as usize >= self.width {
            return None;
        }
        self.dist
            .get(c.y as usize * self.width + c.x as usize)
            .copied()
            .flatten()
    }

    /// Reachable cells and their distances.
    pub fn iter(&self) -> impl Iterator<Item = (Cell, u32)> + '_ {
        self.dist.iter().enumerate().filter_map(move |(i, d)| {
            d.map(|d| {
                (
                    Cell::new((i % self.width) as i32, (i / self.width) as i32),
                    d,
                )
            })
        })
    }
}

pub fn is_connected(w: &Workspace) -> bool {
    w.is_connected()
}

pub fn connected_after_removal(w: &Workspace, c: Cell) -> Result<bool, Error> {
    w.connected_after_removal(c)
}

pub fn geodesic_distances(w: &Workspace, source: Cell) -> Result<DistanceField, Error> {
    w.geodesic_distances(source)
}
