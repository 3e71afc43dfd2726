//! Deep refinement beyond integer-key limits: with 128-bit keys a 3-D
//! mesh refines to level 25, where a 64-bit integer key would need 75
//! bits and overflows.
//!
//! Run with: cargo run --release --example deep_refinement

use octomesh::morton::{self, DomainBox, MeshConfig};
use octomesh::pipeline::{generate, GenerateConfig, GeometrySource};
use octomesh::MeshError;

fn main() -> octomesh::Result<()> {
    let target = [0.1234, -0.2345, 0.0456];
    let config = GenerateConfig {
        domain: Some(DomainBox::unit(3)),
        ..GenerateConfig::new(GeometrySource::Points(vec![target]), 3, 25)
    };
    let (tree, stats) = generate(&config)?;

    let (key, level) = tree.point_locate(&target)?;
    println!("leaves: {} after {} passes", stats.total_leaves, stats.passes);
    println!("cell containing the point sits at level {level}");

    let mesh_config = MeshConfig::with_key_bits(3, 25, 128)?;
    match morton::to_integer(key, level, 64, &mesh_config) {
        Err(MeshError::Overflow { needed, target }) => {
            println!("64-bit integer key: needs {needed} bits, only {target} available")
        }
        other => panic!("expected overflow, got {other:?}"),
    }
    let wide = morton::to_integer(key, level, 128, &mesh_config)?;
    println!("128-bit integer key: {wide}");

    assert!(tree.validate_balance());
    assert!(tree.validate_partition());
    println!("balance and partition checks pass");
    Ok(())
}
