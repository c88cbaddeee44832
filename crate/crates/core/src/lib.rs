//! Multi-robot planning for reconfiguring a connected structure of tiles
//! with inchworm robots that walk on the tiles and carry them one at a time.

pub mod bench;
pub mod error;
pub mod executor;
pub mod grid;
pub mod hardness;
pub mod mstar;
pub mod oracle;
pub mod render;
pub mod robot;
pub mod scenario;
pub mod search;
pub mod temporal;
pub mod transfer;
pub mod world;

pub use error::Error;
pub use grid::{Cell, Workspace};
pub use robot::{MoveKind, Moveset, RobotPose};
pub use search::{Goal, PlanError, SearchLimits, Weight};
