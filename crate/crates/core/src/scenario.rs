//! Scenario files: robots, their goals or a task list, and the moveset.
//!
//! Line-oriented; `#` starts a comment. Keywords:
//!
//! ```text
//! MAP maps/corridor.txt      # optional, relative to the scenario file
//! MOVESET s7
//! ROBOT 1,0 0,0              # front back, one line per robot
//! GOAL 6 0                   # front-foot target, one per robot, in order
//! TASK 3,2 7,2               # pick place, in sequence order
//! PRIORITY 1 0               # optional planning order, highest first
//! ```
//!
//! A scenario has either one GOAL per robot or a TASK list, not both.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::Error;
use crate::executor::{ScenarioState, Task};
use crate::grid::{Cell, Workspace};
use crate::robot::{Moveset, RobotPose};
use crate::world::World;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioFile {
    pub map: Option<PathBuf>,
    pub moveset: Moveset,
    pub robots: Vec<RobotPose>,
    pub goals: Vec<Cell>,
    pub tasks: Vec<(Cell, Cell)>,
    pub priority: Option<Vec<usize>>,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<ScenarioFile, Error> {
        let mut sc = ScenarioFile {
            map: None,
            moveset: Moveset::S7,
            robots: Vec::new(),
            goals: Vec::new(),
            tasks: Vec::new(),
            priority: None,
        };
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Parse { line: n + 1, msg };
            let (key, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
            let rest = rest.trim();
            let args: Vec<&str> = rest.split_whitespace().collect();
            let cell = |s: &str| s.parse::<Cell>().map_err(|e| err(e.to_string()));
            match key.to_ascii_uppercase().as_str() {
                "MAP" if !rest.is_empty() => sc.map = Some(PathBuf::from(rest)),
                "MOVESET" if args.len() == 1 => {
                    sc.moveset = args[0].parse().map_err(|e: Error| err(e.to_string()))?
                }
                "ROBOT" => sc
                    .robots
                    .push(rest.parse().map_err(|e: Error| err(e.to_string()))?),
                "GOAL" if args.len() == 2 => {
                    let xy: Result<Vec<i32>, _> = args.iter().map(|a| a.parse::<i32>()).collect();
                    let xy =
                        xy.map_err(|_| err(format!("GOAL needs two integers, got {rest:?}")))?;
                    sc.goals.push(Cell::new(xy[0], xy[1]));
                }
                "GOAL" if args.len() == 1 => sc.goals.push(cell(args[0])?),
                "TASK" if args.len() == 2 => sc.tasks.push((cell(args[0])?, cell(args[1])?)),
                "PRIORITY" if !args.is_empty() => {
                    let q: Result<Vec<usize>, _> =
                        args.iter().map(|a| a.parse::<usize>()).collect();
                    sc.priority =
                        Some(q.map_err(|_| {
                            err(format!("PRIORITY needs robot indices, got {rest:?}"))
                        })?);
                }
                "MAP" | "MOVESET" | "GOAL" | "TASK" | "PRIORITY" => {
                    return Err(err(format!("wrong number of arguments for {key}")));
                }
                _ => return Err(err(format!("unknown keyword {key:?}"))),
            }
        }
        if sc.robots.is_empty() {
            return Err(Error::InvalidScenario("no ROBOT lines".into()));
        }
        if !sc.goals.is_empty() && !sc.tasks.is_empty() {
            return Err(Error::InvalidScenario(
                "a scenario has either GOAL or TASK lines, not both".into(),
            ));
        }
        if !sc.goals.is_empty() && sc.goals.len() != sc.robots.len() {
            return Err(Error::InvalidScenario(format!(
                "{} robots but {} goals",
                sc.robots.len(),
                sc.goals.len()
            )));
        }
        if let Some(q) = &sc.priority {
            let mut sorted = q.clone();
            sorted.sort_unstable();
            if sorted != (0..sc.robots.len()).collect::<Vec<_>>() {
                return Err(Error::Priority(format!(
                    "PRIORITY {q:?} is not a permutation of the robots"
                )));
            }
        }
        Ok(sc)
    }

    pub fn load(path: &Path) -> Result<ScenarioFile, Error> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidScenario(format!("{}: {e}", path.display())))?;
        ScenarioFile::parse(&text)
    }

    pub fn is_goal_scenario(&self) -> bool {
        !self.goals.is_empty() || self.tasks.is_empty()
    }

    pub fn priority_order(&self) -> Vec<usize> {
        self.priority
            .clone()
            .unwrap_or_else(|| (0..self.robots.len()).collect())
    }

    /// Goals must be tiles; robots must form a valid world.
    pub fn validate(&self, w: &Workspace) -> Result<(), Error> {
        World::new(w.clone(), self.robots.clone()).check()?;
        if self.robots.iter().any(|r| r.carrying) {
            return Err(Error::InvalidScenario(
                "robots must start without a tile".into(),
            ));
        }
        for g in &self.goals {
            if !w.is_tile(*g) {
                return Err(Error::InvalidScenario(format!("goal {g} is not a tile")));
            }
        }
        if !self.tasks.is_empty() {
            self.task_state(w)?;
        }
        Ok(())
    }

    pub fn task_state(&self, w: &Workspace) -> Result<ScenarioState, Error> {
        let tasks = self.tasks.iter().map(|&(p, q)| Task::new(p, q)).collect();
        ScenarioState::new(w.clone(), self.robots.clone(), tasks)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if let Some(map) = &self.map {
            writeln!(out, "MAP {}", map.display()).unwrap();
        }
        writeln!(out, "MOVESET {}", self.moveset).unwrap();
        for r in &self.robots {
            writeln!(out, "ROBOT {} {}", r.front, r.back).unwrap();
        }
        for g in &self.goals {
            writeln!(out, "GOAL {} {}", g.x, g.y).unwrap();
        }
        for (p, q) in &self.tasks {
            writeln!(out, "TASK {p} {q}").unwrap();
        }
        if let Some(q) = &self.priority {
            let q: Vec<String> = q.iter().map(usize::to_string).collect();
            writeln!(out, "PRIORITY {}", q.join(" ")).unwrap();
        }
        out
    }
}

/// Read an ASCII map file.
pub fn load_map(path: &Path) -> Result<Workspace, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidWorkspace(format!("{}: {e}", path.display())))?;
    text.parse()
}
