//! Immersed geometry handling: STL ingestion, domain fitting, geometry
//! encoding for O(1) refinement tagging, and coarse voxelization.
//!
//! The mesher only ever consumes points. Each selected geometry point is
//! Morton-encoded once at the finest level; an element is then tagged for
//! refinement by a plain set lookup of its own key, with no search over
//! the triangles.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::sync::OnceLock;

use crate::error::{MeshError, Result};
use crate::morton::{self, DomainBox, Level, MeshConfig, MortonKey};

/// One STL facet: three vertices, the stored (not recomputed) normal and
/// the binary attribute word.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle {
    pub vertices: [[f64; 3]; 3],
    pub normal: [f64; 3],
    pub attribute: u16,
}

impl Triangle {
    pub fn new(vertices: [[f64; 3]; 3], normal: [f64; 3]) -> Self {
        Self { vertices, normal, attribute: 0 }
    }

    pub fn centroid(&self) -> [f64; 3] {
        let mut c = [0.0; 3];
        for v in &self.vertices {
            for k in 0..3 {
                c[k] += v[k] / 3.0;
            }
        }
        c
    }
}

/// A bag of triangles with its tight bounding box.
#[derive(Debug, Clone)]
pub struct TriangleSoup {
    triangles: Vec<Triangle>,
    bbox_min: [f64; 3],
    bbox_max: [f64; 3],
}

impl TriangleSoup {
    pub fn from_triangles(triangles: Vec<Triangle>) -> Result<Self> {
        if triangles.is_empty() {
            return Err(MeshError::EmptyGeometry);
        }
        let mut bbox_min = [f64::INFINITY; 3];
        let mut bbox_max = [f64::NEG_INFINITY; 3];
        for t in &triangles {
            for v in &t.vertices {
                if v.iter().any(|c| !c.is_finite()) {
                    return Err(MeshError::MalformedStl("non-finite vertex".into()));
                }
                for k in 0..3 {
                    bbox_min[k] = bbox_min[k].min(v[k]);
                    bbox_max[k] = bbox_max[k].max(v[k]);
                }
            }
        }
        Ok(Self { triangles, bbox_min, bbox_max })
    }

    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn bbox(&self) -> ([f64; 3], [f64; 3]) {
        (self.bbox_min, self.bbox_max)
    }
}

/// Which geometry points feed the encoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GeometryPoints {
    /// Triangle centroids only. A triangle much larger than a fine cell
    /// can leave cells it crosses untagged.
    #[default]
    Centroids,
    /// Centroids plus the three vertices, four points per triangle.
    CentroidsAndVertices,
}

impl std::str::FromStr for GeometryPoints {
    type Err = MeshError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "centroids" => Ok(GeometryPoints::Centroids),
            "all" => Ok(GeometryPoints::CentroidsAndVertices),
            other => Err(MeshError::InvalidConfig(format!(
                "unknown geometry point mode '{other}'"
            ))),
        }
    }
}

/// The points selected from a soup under the given mode.
pub fn geometry_points(soup: &TriangleSoup, mode: GeometryPoints) -> Vec<[f64; 3]> {
    let mut points = Vec::new();
    for t in soup.triangles() {
        points.push(t.centroid());
        if mode == GeometryPoints::CentroidsAndVertices {
            points.extend_from_slice(&t.vertices);
        }
    }
    points
}

const STL_HEADER_LEN: usize = 80;
const STL_RECORD_LEN: usize = 50;

/// Load an STL file, auto-detecting the flavor: a file whose size matches
/// the binary record formula (84 + 50n) is binary even if it starts with
/// "solid"; otherwise a "solid" prefix means ASCII.
pub fn load_stl(path: impl AsRef<Path>) -> Result<TriangleSoup> {
    let bytes = std::fs::read(path)?;
    read_stl(&bytes)
}

pub fn read_stl(bytes: &[u8]) -> Result<TriangleSoup> {
    if bytes.len() >= STL_HEADER_LEN + 4 {
        let count = u32::from_le_bytes(bytes[80..84].try_into().unwrap()) as usize;
        if bytes.len() == STL_HEADER_LEN + 4 + STL_RECORD_LEN * count {
            return read_stl_binary(bytes, count);
        }
    }
    if bytes.starts_with(b"solid") {
        return read_stl_ascii(bytes);
    }
    Err(MeshError::MalformedStl(
        "size does not match the binary record formula and no 'solid' header".into(),
    ))
}

fn read_stl_binary(bytes: &[u8], count: usize) -> Result<TriangleSoup> {
    if count == 0 {
        return Err(MeshError::EmptyGeometry);
    }
    let mut triangles = Vec::with_capacity(count);
    let mut offset = STL_HEADER_LEN + 4;
    for _ in 0..count {
        let record = &bytes[offset..offset + STL_RECORD_LEN];
        let f = |i: usize| {
            f32::from_le_bytes(record[4 * i..4 * i + 4].try_into().unwrap()) as f64
        };
        let normal = [f(0), f(1), f(2)];
        let mut vertices = [[0.0; 3]; 3];
        for (v, vertex) in vertices.iter_mut().enumerate() {
            for k in 0..3 {
                vertex[k] = f(3 + 3 * v + k);
            }
        }
        let attribute = u16::from_le_bytes(record[48..50].try_into().unwrap());
        triangles.push(Triangle { vertices, normal, attribute });
        offset += STL_RECORD_LEN;
    }
    TriangleSoup::from_triangles(triangles)
}

fn read_stl_ascii(bytes: &[u8]) -> Result<TriangleSoup> {
    let text = std::str::from_utf8(bytes)
        .map_err(|_| MeshError::MalformedStl("ASCII STL is not valid UTF-8".into()))?;
    let mut tokens = text.split_whitespace().peekable();
    let bad = |what: &str| MeshError::MalformedStl(format!("expected {what}"));
    let mut triangles = Vec::new();
    // "solid" plus an optional name.
    if tokens.next() != Some("solid") {
        return Err(bad("'solid'"));
    }
    while let Some(&tok) = tokens.peek() {
        if tok == "facet" {
            break;
        }
        if tok == "endsolid" {
            break;
        }
        tokens.next();
    }
    loop {
        match tokens.next() {
            Some("facet") => {}
            Some("endsolid") | None => break,
            Some(other) => return Err(MeshError::MalformedStl(format!("unexpected token '{other}'"))),
        }
        if tokens.next() != Some("normal") {
            return Err(bad("'normal'"));
        }
        let mut read_f64 = |what: &str| -> Result<f64> {
            tokens
                .next()
                .and_then(|t| t.parse::<f64>().ok())
                .ok_or_else(|| bad(what))
        };
        let normal = [read_f64("normal x")?, read_f64("normal y")?, read_f64("normal z")?];
        if tokens.next() != Some("outer") || tokens.next() != Some("loop") {
            return Err(bad("'outer loop'"));
        }
        let mut vertices = [[0.0; 3]; 3];
        for vertex in &mut vertices {
            if tokens.next() != Some("vertex") {
                return Err(bad("'vertex'"));
            }
            for c in vertex.iter_mut() {
                *c = tokens
                    .next()
                    .and_then(|t| t.parse::<f64>().ok())
                    .ok_or_else(|| bad("vertex coordinate"))?;
            }
        }
        if tokens.next() != Some("endloop") {
            return Err(bad("'endloop'"));
        }
        if tokens.next() != Some("endfacet") {
            return Err(bad("'endfacet'"));
        }
        triangles.push(Triangle { vertices, normal, attribute: 0 });
    }
    TriangleSoup::from_triangles(triangles)
}

/// Write binary STL. Float payloads and the attribute word round-trip
/// bit-exactly through `load_stl`.
pub fn write_stl_binary(soup: &TriangleSoup, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    let mut header = [0u8; STL_HEADER_LEN];
    header[..8].copy_from_slice(b"octomesh");
    w.write_all(&header)?;
    w.write_all(&(soup.len() as u32).to_le_bytes())?;
    for t in soup.triangles() {
        for c in t.normal {
            w.write_all(&(c as f32).to_le_bytes())?;
        }
        for v in &t.vertices {
            for &c in v {
                w.write_all(&(c as f32).to_le_bytes())?;
            }
        }
        w.write_all(&t.attribute.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Load a 2-D plain-text point list: one "x y" pair per line, whitespace
/// separated, '#' starts a comment. Returned points carry z = 0.
pub fn load_points_2d(path: impl AsRef<Path>) -> Result<Vec<[f64; 3]>> {
    let file = std::fs::File::open(path)?;
    read_points_2d(BufReader::new(file))
}

pub fn read_points_2d(reader: impl Read) -> Result<Vec<[f64; 3]>> {
    let mut points = Vec::new();
    for line in BufReader::new(reader).lines() {
        let line = line?;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_whitespace().map(str::parse::<f64>);
        match (it.next(), it.next(), it.next()) {
            (Some(Ok(x)), Some(Ok(y)), None) => points.push([x, y, 0.0]),
            _ => return Err(MeshError::MalformedStl(format!("bad point line '{line}'"))),
        }
    }
    if points.is_empty() {
        return Err(MeshError::EmptyGeometry);
    }
    Ok(points)
}

/// Fit a cubic (square in 2-D) domain around a bounding box: centered on
/// the box, edge = pad_factor times the largest extent.
pub fn fit_domain_bbox(
    bbox_min: [f64; 3],
    bbox_max: [f64; 3],
    pad_factor: f64,
    dim: u32,
) -> Result<DomainBox> {
    if pad_factor < 1.0 {
        return Err(MeshError::InvalidConfig("pad factor must be at least 1".into()));
    }
    let d = dim as usize;
    let extent = (0..d)
        .map(|k| bbox_max[k] - bbox_min[k])
        .fold(0.0f64, f64::max);
    if !(extent > 0.0) {
        return Err(MeshError::EmptyGeometry);
    }
    let center: Vec<f64> = (0..d).map(|k| 0.5 * (bbox_min[k] + bbox_max[k])).collect();
    DomainBox::new(&center, &vec![pad_factor * extent; d])
}

/// Cubic domain around a triangle soup; default pad factor is 1.5.
pub fn fit_domain(soup: &TriangleSoup, pad_factor: f64) -> Result<DomainBox> {
    let (lo, hi) = soup.bbox();
    fit_domain_bbox(lo, hi, pad_factor, 3)
}

/// Square domain around a 2-D point cloud.
pub fn fit_domain_points(points: &[[f64; 3]], pad_factor: f64, dim: u32) -> Result<DomainBox> {
    if points.is_empty() {
        return Err(MeshError::EmptyGeometry);
    }
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in points {
        for k in 0..dim as usize {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    fit_domain_bbox(lo, hi, pad_factor, dim)
}

/// Encoded geometry points: the finest-level key of every point, plus
/// lazily built truncations per coarser level.
#[derive(Debug)]
pub struct TagSets {
    config: MeshConfig,
    fullres: HashSet<MortonKey>,
    per_level: Vec<OnceLock<HashSet<MortonKey>>>,
}

/// Encode each point once at the maximum level; duplicates collapse.
/// Cost is linear in the point count and independent of the mesh size.
pub fn encode_geometry(
    points: &[[f64; 3]],
    domain: &DomainBox,
    config: &MeshConfig,
) -> Result<TagSets> {
    let mut fullres = HashSet::with_capacity(points.len());
    for p in points {
        fullres.insert(morton::encode_point(p, domain, config.max_level(), config)?);
    }
    let per_level = (0..config.max_level()).map(|_| OnceLock::new()).collect();
    Ok(TagSets { config: *config, fullres, per_level })
}

impl TagSets {
    /// Keys at the finest level, one per distinct encoded point cell.
    pub fn fullres(&self) -> &HashSet<MortonKey> {
        &self.fullres
    }

    /// The truncated key set for one level, built on first use.
    pub fn level_set(&self, level: Level) -> &HashSet<MortonKey> {
        assert!((1..=self.config.max_level()).contains(&level));
        self.per_level[level as usize - 1].get_or_init(|| {
            if level == self.config.max_level() {
                return self.fullres.clone();
            }
            self.fullres
                .iter()
                .map(|k| morton::truncate_to_level(*k, level, self.config.dim()))
                .collect()
        })
    }

    /// Whether the element `(key, level)` contains an encoded point:
    /// a single hashed lookup of the element's own key.
    pub fn is_tagged(&self, key: MortonKey, level: Level) -> bool {
        if level < 1 || level > self.config.max_level() {
            return false;
        }
        self.level_set(level)
            .contains(&morton::truncate_to_level(key, level, self.config.dim()))
    }
}

/// Coarse voxel map from level-V keys to the triangles whose centroids
/// they contain. The voxel grid is not an octree of its own and need not
/// be balanced.
#[derive(Debug, Clone)]
pub struct VoxelIndex {
    voxel_level: Level,
    index: HashMap<MortonKey, Vec<usize>>,
}

/// Assign every triangle to the level-`voxel_level` voxel containing its
/// centroid. Empty voxels are not stored.
pub fn voxelize(
    soup: &TriangleSoup,
    domain: &DomainBox,
    voxel_level: Level,
    config: &MeshConfig,
) -> Result<VoxelIndex> {
    if voxel_level < 1 || voxel_level > config.max_level() {
        return Err(MeshError::LevelOutOfRange { level: voxel_level, max: config.max_level() });
    }
    let mut index: HashMap<MortonKey, Vec<usize>> = HashMap::new();
    for (i, t) in soup.triangles().iter().enumerate() {
        let key = morton::encode_point(&t.centroid(), domain, voxel_level, config)?;
        index.entry(key).or_default().push(i);
    }
    Ok(VoxelIndex { voxel_level, index })
}

impl VoxelIndex {
    pub fn voxel_level(&self) -> Level {
        self.voxel_level
    }

    pub fn voxel_count(&self) -> usize {
        self.index.len()
    }

    pub fn voxels(&self) -> impl Iterator<Item = (&MortonKey, &[usize])> {
        self.index.iter().map(|(k, v)| (k, v.as_slice()))
    }

    /// Triangle indices relevant to the element `(key, level)`: its own
    /// voxel when at or below voxel resolution, or all voxels under it
    /// when coarser.
    pub fn query(&self, key: MortonKey, level: Level, config: &MeshConfig) -> Vec<usize> {
        let dim = config.dim();
        if level >= self.voxel_level {
            let voxel = morton::truncate_to_level(key, self.voxel_level, dim);
            return self.index.get(&voxel).cloned().unwrap_or_default();
        }
        let prefix = morton::truncate_to_level(key, level, dim);
        let mut out = Vec::new();
        for (vk, tris) in &self.index {
            if morton::truncate_to_level(*vk, level, dim) == prefix {
                out.extend_from_slice(tris);
            }
        }
        out
    }
}

/// Procedurally generated icosphere: a regular icosahedron subdivided
/// `subdivisions` times and projected onto the sphere. 20 * 4^n facets.
pub fn icosphere(center: [f64; 3], radius: f64, subdivisions: u32) -> TriangleSoup {
    let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
    let base: Vec<[f64; 3]> = vec![
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ];
    let faces: [[usize; 3]; 20] = [
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ];
    let project = |v: [f64; 3]| -> [f64; 3] {
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        [
            center[0] + radius * v[0] / n,
            center[1] + radius * v[1] / n,
            center[2] + radius * v[2] / n,
        ]
    };
    let mut tris: Vec<[[f64; 3]; 3]> = faces
        .iter()
        .map(|f| [base[f[0]], base[f[1]], base[f[2]]])
        .collect();
    for _ in 0..subdivisions {
        let mut next = Vec::with_capacity(tris.len() * 4);
        for [a, b, c] in tris {
            let mid = |p: [f64; 3], q: [f64; 3]| {
                [(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0, (p[2] + q[2]) / 2.0]
            };
            let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
            next.push([a, ab, ca]);
            next.push([ab, b, bc]);
            next.push([ca, bc, c]);
            next.push([ab, bc, ca]);
        }
        tris = next;
    }
    let triangles = tris
        .into_iter()
        .map(|t| {
            let v = [project(t[0]), project(t[1]), project(t[2])];
            let e1 = [v[1][0] - v[0][0], v[1][1] - v[0][1], v[1][2] - v[0][2]];
            let e2 = [v[2][0] - v[0][0], v[2][1] - v[0][1], v[2][2] - v[0][2]];
            let mut n = [
                e1[1] * e2[2] - e1[2] * e2[1],
                e1[2] * e2[0] - e1[0] * e2[2],
                e1[0] * e2[1] - e1[1] * e2[0],
            ];
            let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
            if len > 0.0 {
                for c in &mut n {
                    *c /= len;
                }
            }
            Triangle::new(v, n)
        })
        .collect();
    TriangleSoup::from_triangles(triangles).expect("icosphere is never empty")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::morton::{encode_point, vertices};

    fn unit_sphere() -> TriangleSoup {
        icosphere([0.0; 3], 1.0, 2)
    }

    #[test]
    fn binary_stl_single_triangle() {
        let soup = TriangleSoup::from_triangles(vec![Triangle::new(
            [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            [0.0, 0.0, 1.0],
        )])
        .unwrap();
        let dir = std::env::temp_dir().join("octomesh_stl_one.stl");
        write_stl_binary(&soup, &dir).unwrap();
        assert_eq!(std::fs::metadata(&dir).unwrap().len(), 134);
        let back = load_stl(&dir).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back.triangles()[0], soup.triangles()[0]);
    }

    #[test]
    fn ascii_stl_roundtrip_of_unit_right_triangle() {
        let text = "solid tri\n facet normal 0 0 1\n  outer loop\n   vertex 0 0 0\n   vertex 1 0 0\n   vertex 0 1 0\n  endloop\n endfacet\nendsolid tri\n";
        let soup = read_stl(text.as_bytes()).unwrap();
        assert_eq!(soup.len(), 1);
        assert_eq!(
            soup.triangles()[0].vertices,
            [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]
        );
        assert_eq!(soup.triangles()[0].normal, [0.0, 0.0, 1.0]);
    }

    #[test]
    fn icosphere_binary_roundtrip_is_bit_exact() {
        let soup = unit_sphere();
        assert_eq!(soup.len(), 320);
        let path = std::env::temp_dir().join("octomesh_icosphere.stl");
        write_stl_binary(&soup, &path).unwrap();
        let back = load_stl(&path).unwrap();
        assert_eq!(back.len(), soup.len());
        for (a, b) in soup.triangles().iter().zip(back.triangles()) {
            // Written as f32, so compare the f32 payloads exactly.
            for k in 0..3 {
                assert_eq!(a.normal[k] as f32, b.normal[k] as f32);
                for v in 0..3 {
                    assert_eq!(a.vertices[v][k] as f32, b.vertices[v][k] as f32);
                }
            }
            assert_eq!(a.attribute, b.attribute);
        }
    }

    #[test]
    fn malformed_stl_is_rejected() {
        assert!(matches!(read_stl(b"not an stl"), Err(MeshError::MalformedStl(_))));
        let mut bytes = vec![0u8; 84];
        bytes[80..84].copy_from_slice(&5u32.to_le_bytes());
        // Truncated: claims 5 records, provides none, and no solid header.
        assert!(read_stl(&bytes).is_err());
        let text = "solid t\n facet normal 0 0 1\n outer loop\n vertex 0 0\n";
        assert!(matches!(read_stl(text.as_bytes()), Err(MeshError::MalformedStl(_))));
    }

    #[test]
    fn point_list_parsing() {
        let text = "# a comment\n0.5 0.25\n\n 1.0 2.0 # trailing\n";
        let points = read_points_2d(text.as_bytes()).unwrap();
        assert_eq!(points, vec![[0.5, 0.25, 0.0], [1.0, 2.0, 0.0]]);
        assert!(read_points_2d("1.0 2.0 3.0\n".as_bytes()).is_err());
        assert!(read_points_2d("".as_bytes()).is_err());
    }

    #[test]
    fn domain_fit_unit_cube() {
        let soup = TriangleSoup::from_triangles(vec![
            Triangle::new([[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], [0.0; 3]),
            Triangle::new([[1.0; 3], [1.0, 0.0, 1.0], [0.0, 1.0, 1.0]], [0.0; 3]),
        ])
        .unwrap();
        let d = fit_domain(&soup, 1.5).unwrap();
        assert_eq!(d.center(), [0.5, 0.5, 0.5]);
        assert_eq!(d.lengths(), [1.5, 1.5, 1.5]);
        let tight = fit_domain(&soup, 1.0).unwrap();
        assert_eq!(tight.lengths()[0], 1.0);
        assert!(fit_domain(&soup, 0.5).is_err());
    }

    #[test]
    fn fitted_domain_contains_all_centroids() {
        let soup = unit_sphere();
        let domain = fit_domain(&soup, 1.3).unwrap();
        for t in soup.triangles() {
            let c = t.centroid();
            for k in 0..3 {
                assert!(c[k] > domain.min(k) && c[k] < domain.max(k));
            }
        }
    }

    #[test]
    fn encode_geometry_single_point() {
        let config = MeshConfig::new(3, 3).unwrap();
        let domain = DomainBox::unit(3);
        let eps = 1e-6;
        let tags = encode_geometry(&[[eps, eps, eps]], &domain, &config).unwrap();
        let (expect, _) = MortonKey::parse_grouped("111,000,000", 3).unwrap();
        assert_eq!(tags.fullres().len(), 1);
        assert!(tags.fullres().contains(&expect));
    }

    #[test]
    fn duplicate_points_collapse() {
        let config = MeshConfig::new(3, 4).unwrap();
        let domain = DomainBox::unit(3);
        let p = [0.1, 0.2, -0.3];
        let tags = encode_geometry(&[p, p], &domain, &config).unwrap();
        assert_eq!(tags.fullres().len(), 1);
        let level1 = tags.level_set(1);
        assert_eq!(level1.len(), 1);
    }

    #[test]
    fn tagging_matches_brute_force_box_test() {
        let config = MeshConfig::new(3, 4).unwrap();
        let soup = unit_sphere();
        let domain = fit_domain(&soup, 1.5).unwrap();
        let points = geometry_points(&soup, GeometryPoints::Centroids);
        let tags = encode_geometry(&points, &domain, &config).unwrap();
        // Every element at every level: tagged iff a point falls in its
        // half-open box (lower edges inclusive).
        for level in 1..=config.max_level() {
            let mut expect: HashSet<MortonKey> = HashSet::new();
            for p in &points {
                expect.insert(encode_point(p, &domain, level, &config).unwrap());
            }
            assert_eq!(tags.level_set(level), &expect, "level {level}");
        }
        // An element far from the surface is untagged.
        let far = encode_point(&domain.center(), &domain, 4, &config).unwrap();
        assert!(!tags.is_tagged(far, 4) || points.iter().any(|p| {
            let v = vertices(far, 4, &domain, &config).unwrap();
            (0..3).all(|k| {
                let lo = v.iter().map(|c| c[k]).fold(f64::INFINITY, f64::min);
                let hi = v.iter().map(|c| c[k]).fold(f64::NEG_INFINITY, f64::max);
                p[k] >= lo && p[k] < hi
            })
        }));
    }

    #[test]
    fn voxelize_sphere_spans_all_octants() {
        let config = MeshConfig::new(3, 6).unwrap();
        let soup = unit_sphere();
        let domain = fit_domain(&soup, 1.5).unwrap();
        let index = voxelize(&soup, &domain, 1, &config).unwrap();
        assert_eq!(index.voxel_count(), 8);
        let total: usize = index.voxels().map(|(_, t)| t.len()).sum();
        assert_eq!(total, soup.len());
        assert!(voxelize(&soup, &domain, 0, &config).is_err());
    }

    #[test]
    fn voxel_query_prefix_semantics() {
        let config = MeshConfig::new(3, 6).unwrap();
        let soup = unit_sphere();
        let domain = fit_domain(&soup, 1.5).unwrap();
        let index = voxelize(&soup, &domain, 2, &config).unwrap();
        // A deep element inherits its covering voxel's list.
        let t0 = soup.triangles()[0].centroid();
        let deep = encode_point(&t0, &domain, 5, &config).unwrap();
        let voxel = encode_point(&t0, &domain, 2, &config).unwrap();
        assert_eq!(index.query(deep, 5, &config), index.query(voxel, 2, &config));
        assert!(index.query(deep, 5, &config).contains(&0));
        // A coarse element collects all its voxels; the root-level-1 cells
        // together return every triangle exactly once.
        let mut seen = 0;
        for key in morton::child_keys(MortonKey::zero(), 0, &config).unwrap() {
            seen += index.query(key, 1, &config).len();
        }
        assert_eq!(seen, soup.len());
        // Empty region deep inside the sphere: at level 3 the voxel at the
        // domain center lies strictly under the surface.
        let fine = voxelize(&soup, &domain, 3, &config).unwrap();
        let center_voxel = encode_point(&domain.center(), &domain, 3, &config).unwrap();
        assert!(fine.query(center_voxel, 3, &config).is_empty());
    }
}
