//! Z-order iteration: the ordered backend stores leaves sorted along the
//! space-filling curve, ready for partitioning without any sort step.
//!
//! Run with: cargo run --example zorder_dump

use octomesh::export;
use octomesh::morton::{self, DomainBox, MeshConfig, MortonKey};
use octomesh::{Backend, Octree};

fn main() -> octomesh::Result<()> {
    let config = MeshConfig::new(2, 2)?;
    let mut tree: Octree = Octree::new(config, DomainBox::unit(2), Backend::Ordered)?;

    // Refine the two right-hand quadrants to level 2.
    for text in ["10", "11"] {
        let (key, level) = MortonKey::parse_grouped(text, 2)?;
        tree.refine_leaf(key, level, |_| vec![(); 4])?;
    }

    // Iteration follows the curve; keys double as integers.
    for (key, level, _) in tree.iterate_zorder()? {
        let n = morton::to_integer(key, 2, 64, &config)?;
        println!("{:8}  (integer {n:2})", key.to_grouped_string(2, level));
    }

    let mut out = Vec::new();
    export::dump_zorder_to(&tree, &mut out)?;
    assert_eq!(String::from_utf8(out).unwrap().lines().count(), tree.len());
    Ok(())
}
