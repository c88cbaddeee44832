//! Flat SVG frames: tiles gray, obstacles black, robots as two colored
//! circles joined by a bar, carried tiles outlined.

use std::fmt::Write as _;

use crate::error::Error;
use crate::executor::Trace;
use crate::grid::{Cell, CellKind, Workspace};
use crate::robot::RobotPose;
use crate::world::World;

const CELL: i32 = 24;
const COLORS: [&str; 8] = [
    "#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#17becf", "#e377c2", "#8c564b",
];

fn origin(w: &Workspace, c: Cell) -> (i32, i32) {
    (c.x * CELL, (w.height() as i32 - 1 - c.y) * CELL)
}

fn center(w: &Workspace, c: Cell) -> (i32, i32) {
    let (x, y) = origin(w, c);
    (x + CELL / 2, y + CELL / 2)
}

/// One frame of `robots` standing on `w`.
pub fn frame_svg(w: &Workspace, robots: &[RobotPose], t: usize) -> String {
    let (width, height) = (w.width() as i32 * CELL, w.height() as i32 * CELL);
    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#)
        .unwrap();
    writeln!(s, r#"<title>t = {t}</title>"#).unwrap();
    writeln!(
        s,
        r##"<rect width="{width}" height="{height}" fill="#ffffff"/>"##
    )
    .unwrap();
    for c in w.cells() {
        let fill = match w.kind(c) {
            Some(CellKind::Tile) => "#9e9e9e",
            Some(CellKind::Obstacle) => "#000000",
            _ => continue,
        };
        let (x, y) = origin(w, c);
        writeln!(
            s,
            r##"<rect x="{}" y="{}" width="{}" height="{}" fill="{fill}" stroke="#ffffff"/>"##,
            x, y, CELL, CELL
        )
        .unwrap();
    }
    for (r, p) in robots.iter().enumerate() {
        let color = COLORS[r % COLORS.len()];
        if p.carrying {
            let (x, y) = origin(w, p.target());
            writeln!(
                s,
                r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="{color}" stroke-width="3"/>"#,
                x + 2,
                y + 2,
                CELL - 4,
                CELL - 4
            )
            .unwrap();
        }
        let (fx, fy) = center(w, p.front);
        let (bx, by) = center(w, p.back);
        writeln!(
            s,
            r#"<line x1="{fx}" y1="{fy}" x2="{bx}" y2="{by}" stroke="{color}" stroke-width="4"/>"#
        )
        .unwrap();
        writeln!(
            s,
            r#"<circle cx="{fx}" cy="{fy}" r="{}" fill="{color}"/>"#,
            CELL / 3
        )
        .unwrap();
        writeln!(
            s,
            r#"<circle cx="{bx}" cy="{by}" r="{}" fill="{color}" fill-opacity="0.6"/>"#,
            CELL / 4
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

/// Frames for the start and after every step of `trace`.
pub fn trace_frames(w: &Workspace, trace: &Trace) -> Result<Vec<String>, Error> {
    let mut world = World::new(w.clone(), trace.starts.clone());
    let mut frames = vec![frame_svg(&world.workspace, &world.robots, 0)];
    for step in &trace.steps {
        world = world.step(&step.moves)?;
        frames.push(frame_svg(&world.workspace, &world.robots, step.t));
    }
    Ok(frames)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::executor::TraceStep;
    use crate::robot::MoveKind;

    #[test]
    fn one_frame_per_step_plus_start() {
        let w: Workspace = "TTTT#\n".parse().unwrap();
        let mut trace = Trace::new(vec![RobotPose::new(Cell::new(1, 0), Cell::new(0, 0))]);
        trace.steps.push(TraceStep {
            t: 1,
            moves: vec![MoveKind::StepForward],
            poses: vec![RobotPose::new(Cell::new(2, 0), Cell::new(1, 0))],
        });
        let frames = trace_frames(&w, &trace).unwrap();
        assert_eq!(frames.len(), 2);
        assert!(frames[0].starts_with("<svg"));
        assert_eq!(frames[1].matches("<circle").count(), 2);
        assert!(frames[0].contains("#000000"));
    }
}
