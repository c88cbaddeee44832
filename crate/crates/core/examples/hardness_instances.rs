//! Regenerate the reduction instances under `maps/hardness`.
//!
//! Usage: `cargo run --example hardness_instances [output dir]`

use std::path::PathBuf;

use tilebot::hardness::{build_vertex_gadget_instance, cooperative_instance, GridGraph};
use tilebot::{Cell, Error};

const GRAPHS: [(&str, &[(i32, i32)]); 4] = [
    ("gadget_single", &[(0, 0)]),
    ("gadget_pair", &[(0, 0), (1, 0)]),
    ("gadget_ell", &[(0, 0), (1, 0), (1, 1)]),
    ("gadget_star", &[(0, 0), (1, 0), (2, 0), (1, 1)]),
];

fn main() -> Result<(), Error> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("maps/hardness"));
    for (name, vertices) in GRAPHS {
        let g = GridGraph::induced(vertices.iter().map(|&(x, y)| Cell::new(x, y)).collect())?;
        build_vertex_gadget_instance(&g, 1)?.write_files(&dir, name)?;
    }
    cooperative_instance().write_files(&dir, "cooperative")?;
    println!("wrote instances to {}", dir.display());
    Ok(())
}
