//! Full pipeline around an immersed sphere: build a 2:1-balanced octree
//! refined to the surface and export VTK plus run statistics.
//!
//! Run with: cargo run --release --example refine_sphere

use octomesh::export;
use octomesh::geometry::icosphere;
use octomesh::pipeline::{generate, GenerateConfig, GeometrySource};

fn main() -> octomesh::Result<()> {
    let sphere = icosphere([0.0; 3], 1.0, 3); // 1280 facets
    let config = GenerateConfig::new(GeometrySource::Triangles(sphere), 3, 6);
    let (tree, stats) = generate(&config)?;

    assert!(tree.validate_balance());
    assert!(tree.validate_partition());

    println!("leaves per level: {:?}", stats.per_level_counts);
    println!("total leaves:     {}", stats.total_leaves);
    println!("passes:           {}", stats.passes);
    println!("estimated bytes:  {}", stats.estimated_bytes);
    println!(
        "times ms: load {:.2}  encode {:.2}  tag {:.2}  balance {:.2}  refine {:.2}",
        stats.phases.load_ms,
        stats.phases.encode_ms,
        stats.phases.tag_ms,
        stats.phases.balance_ms,
        stats.phases.refine_ms
    );

    let out = std::env::temp_dir().join("sphere_mesh.vtk");
    export::write_vtk(&tree, &out, true)?;
    let stats_path = std::env::temp_dir().join("sphere_stats.json");
    export::write_stats_json(&stats, &stats_path)?;
    println!("wrote {} and {}", out.display(), stats_path.display());
    Ok(())
}
