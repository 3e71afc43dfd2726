//! Morton key basics: encode a point, read the key back as geometry,
//! convert to an integer, and walk to siblings.
//!
//! Run with: cargo run --example key_algebra

use octomesh::morton::{self, DomainBox, MeshConfig, MortonKey};

fn main() -> octomesh::Result<()> {
    let config = MeshConfig::new(3, 3)?;
    let domain = DomainBox::unit(3);

    // Encode a point at level 3: three bisections per axis.
    let p = [-0.3, -0.45, 0.2];
    let key = morton::encode_point(&p, &domain, 3, &config)?;
    println!("point {p:?}");
    println!("key   {}", key.to_grouped_string(3, 3));

    // The key alone recovers the cell geometry.
    let c = morton::centroid(key, 3, &domain, &config)?;
    let h = morton::edge_length(3, &domain, &config)?;
    println!("centroid {c:?}, edge {h:?}");

    // Keys order identically as bit strings and as integers.
    let n = morton::to_integer(key, 3, 64, &config)?;
    println!("as integer (first 9 bits): {n}");

    // Each sibling is one bit flip away.
    for axis in 0..3 {
        let sib = morton::sibling_key(key, 3, axis, &config)?;
        println!("sibling across axis {axis}: {}", sib.to_grouped_string(3, 3));
    }

    // Round-trip through the textual form.
    let (parsed, level) = MortonKey::parse_grouped(&key.to_grouped_string(3, 3), 3)?;
    assert_eq!((parsed, level), (key, 3));
    Ok(())
}
