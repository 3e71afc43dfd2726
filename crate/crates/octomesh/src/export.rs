//! Output writers: legacy ASCII VTK, stats JSON, and Z-order key dumps.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::morton::{self, MortonKey};
use crate::octree::Octree;
use crate::pipeline::{BenchReport, RunStats};

/// Versioned, self-describing wrapper around the run statistics.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct StatsDocument {
    pub schema_version: u32,
    #[serde(flatten)]
    pub stats: RunStats,
}

impl StatsDocument {
    pub const SCHEMA_VERSION: u32 = 1;

    pub fn new(stats: RunStats) -> Self {
        Self { schema_version: Self::SCHEMA_VERSION, stats }
    }
}

pub fn write_stats_json(stats: &RunStats, path: impl AsRef<Path>) -> Result<()> {
    let doc = StatsDocument::new(stats.clone());
    let file = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), &doc)
        .map_err(std::io::Error::other)?;
    Ok(())
}

pub fn read_stats_json(path: impl AsRef<Path>) -> Result<StatsDocument> {
    let file = std::fs::File::open(path)?;
    serde_json::from_reader(std::io::BufReader::new(file)).map_err(|e| std::io::Error::other(e).into())
}

pub fn write_bench_json(report: &BenchReport, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), report)
        .map_err(std::io::Error::other)?;
    Ok(())
}

// VTK wants quad corners counter-clockwise and hexahedron corners as
// bottom ring then top ring; our corner enumeration is Z-ordered.
const QUAD_ORDER: [usize; 4] = [0, 1, 3, 2];
const HEX_ORDER: [usize; 8] = [0, 1, 3, 2, 4, 5, 7, 6];

/// Write the mesh as a legacy ASCII VTK unstructured grid with an integer
/// "level" scalar per cell. With `merge_points`, identical corners
/// (quantized to 1e-12 of the domain edge) are shared between cells;
/// without it each cell carries its own 2^d points.
pub fn write_vtk<P>(tree: &Octree<P>, path: impl AsRef<Path>, merge_points: bool) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_vtk_to(tree, std::io::BufWriter::new(file), merge_points)
}

pub fn write_vtk_to<P>(tree: &Octree<P>, mut w: impl Write, merge_points: bool) -> Result<()> {
    let config = tree.config();
    let domain = tree.domain();
    let dim = config.dim() as usize;
    let corners = 1usize << dim;
    let (cell_type, order): (u32, &[usize]) = if dim == 2 {
        (9, &QUAD_ORDER)
    } else {
        (12, &HEX_ORDER)
    };

    // Deterministic cell order regardless of backend.
    let mut leaves = Vec::new();
    for key in tree.store().sorted_keys() {
        let level = tree.infer_level(key)?;
        leaves.push((key, level, morton::vertices(key, level, domain, config)?));
    }

    let quantum = 1e-12
        * (0..dim)
            .map(|k| domain.lengths()[k])
            .fold(0.0f64, f64::max);
    let mut points: Vec<[f64; 3]> = Vec::new();
    let mut merged: HashMap<[i64; 3], usize> = HashMap::new();
    let mut cells: Vec<Vec<usize>> = Vec::with_capacity(leaves.len());
    for (_, _, verts) in &leaves {
        let mut cell = Vec::with_capacity(corners);
        for &c in order {
            let v = verts[c];
            let id = if merge_points {
                let q = [
                    (v[0] / quantum).round() as i64,
                    (v[1] / quantum).round() as i64,
                    (v[2] / quantum).round() as i64,
                ];
                *merged.entry(q).or_insert_with(|| {
                    points.push(v);
                    points.len() - 1
                })
            } else {
                points.push(v);
                points.len() - 1
            };
            cell.push(id);
        }
        cells.push(cell);
    }

    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "octomesh adaptive Cartesian mesh")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", points.len())?;
    for p in &points {
        writeln!(w, "{:.17} {:.17} {:.17}", p[0], p[1], p[2])?;
    }
    writeln!(w, "CELLS {} {}", cells.len(), cells.len() * (corners + 1))?;
    for cell in &cells {
        write!(w, "{}", corners)?;
        for id in cell {
            write!(w, " {id}")?;
        }
        writeln!(w)?;
    }
    writeln!(w, "CELL_TYPES {}", cells.len())?;
    for _ in &cells {
        writeln!(w, "{cell_type}")?;
    }
    writeln!(w, "CELL_DATA {}", cells.len())?;
    writeln!(w, "SCALARS level int 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for (_, level, _) in &leaves {
        writeln!(w, "{level}")?;
    }
    w.flush()?;
    Ok(())
}

/// Write one comma-grouped key per line in Z-order iteration order.
/// Requires the ordered backend; lines are strictly increasing under key
/// comparison.
pub fn dump_zorder<P>(tree: &Octree<P>, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    dump_zorder_to(tree, std::io::BufWriter::new(file))
}

pub fn dump_zorder_to<P>(tree: &Octree<P>, mut w: impl Write) -> Result<()> {
    let dim = tree.config().dim();
    let entries: Vec<(MortonKey, u32)> = tree
        .iterate_zorder()?
        .map(|(k, l, _)| (k, l))
        .collect();
    for (key, level) in entries {
        writeln!(w, "{}", key.to_grouped_string(dim, level))?;
    }
    w.flush()?;
    Ok(())
}
