//! Benchmark the two leaf-store backends (ordered binary search tree vs
//! hash map) across refinement levels, including the hashed-versus-
//! linear-scan queue membership comparison.
//!
//! Run with: cargo run --release --example backend_bench

use octomesh::geometry::icosphere;
use octomesh::pipeline::{bench, BenchConfig, GenerateConfig, GeometrySource};
use octomesh::Backend;

fn main() -> octomesh::Result<()> {
    let sphere = icosphere([0.0; 3], 1.0, 2);
    let config = BenchConfig {
        base: GenerateConfig::new(GeometrySource::Triangles(sphere), 3, 6),
        levels: vec![4, 5, 6],
        backends: vec![Backend::Ordered, Backend::Hashed],
        repeat: 3,
    };
    let report = bench(&config)?;

    println!("{:>5} {:>8} {:>12} {:>10} {:>14}", "level", "backend", "median ms", "leaves", "est. bytes");
    for cell in &report.cells {
        println!(
            "{:>5} {:>8} {:>12.2} {:>10} {:>14}",
            cell.max_level, cell.backend, cell.median_ms, cell.total_leaves, cell.estimated_bytes
        );
    }
    println!();
    for m in &report.membership {
        println!(
            "level {}: closure membership hashed {:.2} ms vs linear scan {:.2} ms (sets equal: {})",
            m.max_level, m.hashed_ms, m.linear_scan_ms, m.sets_equal
        );
    }
    Ok(())
}
