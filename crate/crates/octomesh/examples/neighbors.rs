//! Neighbor finding on a small quadtree: same-level, coarser, finer and
//! domain-boundary cases, all recovered from the keys by bit manipulation.
//!
//! Run with: cargo run --example neighbors

use octomesh::morton::{DomainBox, FaceDirection, MeshConfig, MortonKey};
use octomesh::{Backend, NeighborResult, Octree};

fn main() -> octomesh::Result<()> {
    let config = MeshConfig::new(2, 3)?;
    let mut tree: Octree = Octree::new(config, DomainBox::unit(2), Backend::Ordered)?;

    // Refine every quadrant once, then push two cells to level 3.
    for (key, level) in tree.leaves() {
        tree.refine_leaf(key, level, |_| vec![(); 4])?;
    }
    for text in ["00,11", "10,01"] {
        let (key, level) = MortonKey::parse_grouped(text, 2)?;
        tree.refine_leaf(key, level, |_| vec![(); 4])?;
    }
    assert!(tree.validate_balance());

    for (key, level) in tree.leaves() {
        for dir in FaceDirection::all(2) {
            let what = match tree.resolve_neighbor(key, level, dir)? {
                NeighborResult::Boundary => "domain boundary".to_string(),
                NeighborResult::Same { key: n, level: l } => {
                    format!("same level  {}", n.to_grouped_string(2, l))
                }
                NeighborResult::Coarser { key: n, level: l } => {
                    format!("coarser     {}", n.to_grouped_string(2, l))
                }
                NeighborResult::Finer { keys, level: l } => format!(
                    "finer       {{{}}}",
                    keys.iter()
                        .map(|k| k.to_grouped_string(2, l))
                        .collect::<Vec<_>>()
                        .join(", ")
                ),
            };
            println!("{:10} {dir} -> {what}", key.to_grouped_string(2, level));
        }
    }
    Ok(())
}
