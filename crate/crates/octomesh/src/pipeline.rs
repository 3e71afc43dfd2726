//! End-to-end mesh generation driver and backend benchmark harness.

use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{MeshError, Result};
use crate::geometry::{self, GeometryPoints, TriangleSoup};
use crate::morton::{DomainBox, Level, MeshConfig};
use crate::octree::{Backend, Octree, QueueMembership, RefineQueue};

/// Where the geometry comes from.
#[derive(Debug, Clone)]
pub enum GeometrySource {
    /// STL file on disk (binary or ASCII, auto-detected). 3-D only.
    StlPath(PathBuf),
    /// Plain-text 2-D point list on disk.
    PointsPath(PathBuf),
    /// In-memory triangle soup. 3-D only.
    Triangles(TriangleSoup),
    /// In-memory point cloud; z is ignored in 2-D.
    Points(Vec<[f64; 3]>),
}

/// Full description of one generation run.
#[derive(Debug, Clone)]
pub struct GenerateConfig {
    pub source: GeometrySource,
    pub dim: u32,
    pub key_bits: u32,
    pub max_level: Level,
    pub backend: Backend,
    /// Explicit domain box; fitted around the geometry when absent.
    pub domain: Option<DomainBox>,
    pub pad_factor: f64,
    pub point_mode: GeometryPoints,
    /// When set, a coarse voxel index is built and its size reported.
    pub voxel_level: Option<Level>,
    /// Membership structure for the balance queue; `Hashed` unless
    /// benchmarking the linear-scan alternative.
    pub membership: QueueMembership,
}

impl GenerateConfig {
    pub fn new(source: GeometrySource, dim: u32, max_level: Level) -> Self {
        Self {
            source,
            dim,
            key_bits: MeshConfig::DEFAULT_KEY_BITS,
            max_level,
            backend: Backend::Ordered,
            domain: None,
            pad_factor: 1.5,
            point_mode: GeometryPoints::Centroids,
            voxel_level: None,
            membership: QueueMembership::Hashed,
        }
    }

    pub fn mesh_config(&self) -> Result<MeshConfig> {
        MeshConfig::with_key_bits(self.dim, self.max_level, self.key_bits)
    }
}

/// Wall time per pipeline phase, in milliseconds. `export` is filled in
/// by whoever writes the output files.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct PhaseTimes {
    pub load_ms: f64,
    pub encode_ms: f64,
    pub tag_ms: f64,
    pub balance_ms: f64,
    pub refine_ms: f64,
    pub export_ms: f64,
}

impl PhaseTimes {
    pub fn total_ms(&self) -> f64 {
        self.load_ms + self.encode_ms + self.tag_ms + self.balance_ms + self.refine_ms
            + self.export_ms
    }
}

/// Everything measured about one generation run.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunStats {
    pub backend: String,
    pub key_bits: u32,
    pub dim: u32,
    pub max_level: Level,
    pub phases: PhaseTimes,
    /// Leaf count per level, index 0 = level 1; sums to `total_leaves`.
    pub per_level_counts: Vec<usize>,
    pub total_leaves: usize,
    /// Analytic store footprint: entries x (key bytes + payload bytes).
    pub estimated_bytes: u64,
    pub passes: u32,
    pub geometry_points: usize,
    pub encoded_cells: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub voxel_count: Option<usize>,
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1000.0
}

/// Run the whole pipeline: load geometry, fit or accept the domain,
/// encode the points once at the finest level, then refine tagged leaves
/// one level per pass with 2:1 balance closure until every tagged leaf
/// sits at the maximum level.
pub fn generate(config: &GenerateConfig) -> Result<(Octree, RunStats)> {
    let mesh_config = config.mesh_config()?;

    let t = Instant::now();
    let (points, soup) = load_source(&config.source, config.dim, config.point_mode)?;
    let load_ms = ms(t);

    let domain = match &config.domain {
        Some(d) => *d,
        None => geometry::fit_domain_points(&points, config.pad_factor, config.dim)?,
    };

    let t = Instant::now();
    let tags = geometry::encode_geometry(&points, &domain, &mesh_config)?;
    let voxel_count = match (config.voxel_level, &soup) {
        (Some(v), Some(soup)) => {
            Some(geometry::voxelize(soup, &domain, v, &mesh_config)?.voxel_count())
        }
        (Some(_), None) => None,
        _ => None,
    };
    let encode_ms = ms(t);

    let mut tree = Octree::new(mesh_config, domain, config.backend)?;
    let mut phases = PhaseTimes { load_ms, encode_ms, ..Default::default() };
    let mut passes = 0u32;
    loop {
        let t = Instant::now();
        let mut queue = RefineQueue::new();
        for (key, level) in tree.leaves() {
            if level < mesh_config.max_level() && tags.is_tagged(key, level) {
                queue.push(key, level);
            }
        }
        phases.tag_ms += ms(t);
        if queue.is_empty() {
            break;
        }
        if passes >= mesh_config.max_level() {
            return Err(MeshError::NonTermination { max: mesh_config.max_level() });
        }

        let t = Instant::now();
        let queue = tree.balance_closure_with(queue, config.membership)?;
        phases.balance_ms += ms(t);

        let t = Instant::now();
        tree.apply_refinement(&queue)?;
        phases.refine_ms += ms(t);
        passes += 1;
    }

    let per_level_counts = tree.level_histogram();
    let total_leaves = tree.len();
    let entry_bytes = (config.key_bits as u64).div_ceil(8) + std::mem::size_of::<()>() as u64;
    let stats = RunStats {
        backend: config.backend.name().to_string(),
        key_bits: config.key_bits,
        dim: config.dim,
        max_level: config.max_level,
        phases,
        per_level_counts,
        total_leaves,
        estimated_bytes: total_leaves as u64 * entry_bytes,
        passes,
        geometry_points: points.len(),
        encoded_cells: tags.fullres().len(),
        voxel_count,
    };
    Ok((tree, stats))
}

fn load_source(
    source: &GeometrySource,
    dim: u32,
    mode: GeometryPoints,
) -> Result<(Vec<[f64; 3]>, Option<TriangleSoup>)> {
    match source {
        GeometrySource::StlPath(path) => {
            require_3d(dim)?;
            let soup = geometry::load_stl(path)?;
            Ok((geometry::geometry_points(&soup, mode), Some(soup)))
        }
        GeometrySource::Triangles(soup) => {
            require_3d(dim)?;
            Ok((geometry::geometry_points(soup, mode), Some(soup.clone())))
        }
        GeometrySource::PointsPath(path) => Ok((geometry::load_points_2d(path)?, None)),
        GeometrySource::Points(points) => {
            if points.is_empty() {
                return Err(MeshError::EmptyGeometry);
            }
            Ok((points.clone(), None))
        }
    }
}

fn require_3d(dim: u32) -> Result<()> {
    if dim != 3 {
        return Err(MeshError::InvalidConfig(
            "triangle geometry requires --dim 3".into(),
        ));
    }
    Ok(())
}

/// One benchmarked (level, backend) combination.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchCell {
    pub max_level: Level,
    pub backend: String,
    /// Raw end-to-end wall times, one per repetition.
    pub samples_ms: Vec<f64>,
    pub median_ms: f64,
    pub median_phases: PhaseTimes,
    pub total_leaves: usize,
    pub estimated_bytes: u64,
}

/// Hashed-set versus linear-scan queue membership at one level.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MembershipComparison {
    pub max_level: Level,
    pub hashed_ms: f64,
    pub linear_scan_ms: f64,
    /// Both membership structures must yield the same mesh.
    pub sets_equal: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchReport {
    pub repeat: usize,
    pub cells: Vec<BenchCell>,
    pub membership: Vec<MembershipComparison>,
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub base: GenerateConfig,
    pub levels: Vec<Level>,
    pub backends: Vec<Backend>,
    pub repeat: usize,
}

fn median(samples: &[f64]) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let n = s.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Run `generate` for every (level, backend) pair `repeat` times and
/// report per-cell medians, plus one hashed-versus-linear-scan queue
/// membership comparison per level.
pub fn bench(config: &BenchConfig) -> Result<BenchReport> {
    if config.levels.is_empty() || config.backends.is_empty() || config.repeat == 0 {
        return Err(MeshError::InvalidConfig(
            "bench needs at least one level, one backend and repeat >= 1".into(),
        ));
    }
    let mut cells = Vec::new();
    let mut membership = Vec::new();
    for &level in &config.levels {
        for &backend in &config.backends {
            let mut run = config.base.clone();
            run.max_level = level;
            run.backend = backend;
            run.membership = QueueMembership::Hashed;
            let mut samples = Vec::with_capacity(config.repeat);
            let mut runs = Vec::with_capacity(config.repeat);
            for _ in 0..config.repeat {
                let (_, stats) = generate(&run)?;
                samples.push(stats.phases.total_ms());
                runs.push(stats);
            }
            let pick = |f: fn(&PhaseTimes) -> f64| {
                median(&runs.iter().map(|s| f(&s.phases)).collect::<Vec<_>>())
            };
            cells.push(BenchCell {
                max_level: level,
                backend: backend.name().to_string(),
                median_ms: median(&samples),
                median_phases: PhaseTimes {
                    load_ms: pick(|p| p.load_ms),
                    encode_ms: pick(|p| p.encode_ms),
                    tag_ms: pick(|p| p.tag_ms),
                    balance_ms: pick(|p| p.balance_ms),
                    refine_ms: pick(|p| p.refine_ms),
                    export_ms: 0.0,
                },
                total_leaves: runs[0].total_leaves,
                estimated_bytes: runs[0].estimated_bytes,
                samples_ms: samples,
            });
        }

        // Queue-structure comparison: same run, hashed vs linear-scan
        // membership inside the closure; meshes must be identical.
        let mut run = config.base.clone();
        run.max_level = level;
        run.backend = config.backends[0];
        run.membership = QueueMembership::Hashed;
        let mut hashed_samples = Vec::with_capacity(config.repeat);
        let mut linear_samples = Vec::with_capacity(config.repeat);
        let (hashed_tree, _) = generate(&run)?;
        for _ in 0..config.repeat {
            let t = Instant::now();
            generate(&run)?;
            hashed_samples.push(ms(t));
        }
        run.membership = QueueMembership::LinearScan;
        let (linear_tree, _) = generate(&run)?;
        for _ in 0..config.repeat {
            let t = Instant::now();
            generate(&run)?;
            linear_samples.push(ms(t));
        }
        let a: std::collections::HashSet<_> = hashed_tree.store().keys().into_iter().collect();
        let b: std::collections::HashSet<_> = linear_tree.store().keys().into_iter().collect();
        membership.push(MembershipComparison {
            max_level: level,
            hashed_ms: median(&hashed_samples),
            linear_scan_ms: median(&linear_samples),
            sets_equal: a == b,
        });
    }
    Ok(BenchReport { repeat: config.repeat, cells, membership })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::icosphere;

    #[test]
    fn single_point_2d_reaches_max_level() {
        let config = GenerateConfig {
            domain: Some(DomainBox::unit(2)),
            ..GenerateConfig::new(GeometrySource::Points(vec![[0.31, -0.12, 0.0]]), 2, 3)
        };
        let (tree, stats) = generate(&config).unwrap();
        assert!(tree.validate_balance());
        assert!(tree.validate_partition());
        let (_, level) = tree.point_locate(&[0.31, -0.12]).unwrap();
        assert_eq!(level, 3);
        assert_eq!(stats.total_leaves, tree.len());
        assert_eq!(stats.per_level_counts.iter().sum::<usize>(), stats.total_leaves);
        assert!(stats.passes <= 3);
    }

    #[test]
    fn icosphere_run_is_balanced_partition() {
        let soup = icosphere([0.0; 3], 1.0, 1);
        let config = GenerateConfig::new(GeometrySource::Triangles(soup), 3, 4);
        let (tree, stats) = generate(&config).unwrap();
        assert!(tree.validate_balance());
        assert!(tree.validate_partition());
        // Tagged-depth property: no leaf below max level is tagged.
        let domain = *tree.domain();
        let mesh_config = *tree.config();
        let points = geometry::geometry_points(
            &icosphere([0.0; 3], 1.0, 1),
            GeometryPoints::Centroids,
        );
        let tags = geometry::encode_geometry(&points, &domain, &mesh_config).unwrap();
        for (key, level) in tree.leaves() {
            if level < 4 {
                assert!(!tags.is_tagged(key, level));
            }
        }
        assert_eq!(stats.geometry_points, 80);
    }

    #[test]
    fn backends_agree_and_loads_points_mode() {
        let soup = icosphere([0.5, 0.0, -0.25], 0.8, 1);
        let mut config = GenerateConfig::new(GeometrySource::Triangles(soup), 3, 4);
        config.point_mode = GeometryPoints::CentroidsAndVertices;
        let (ordered, _) = generate(&config).unwrap();
        config.backend = Backend::Hashed;
        let (hashed, _) = generate(&config).unwrap();
        assert_eq!(ordered.store().sorted_keys(), hashed.store().sorted_keys());
    }

    #[test]
    fn triangle_source_rejects_2d() {
        let soup = icosphere([0.0; 3], 1.0, 0);
        let config = GenerateConfig::new(GeometrySource::Triangles(soup), 2, 3);
        assert!(matches!(generate(&config), Err(MeshError::InvalidConfig(_))));
    }

    #[test]
    fn bench_report_shape() {
        let config = BenchConfig {
            base: GenerateConfig {
                domain: Some(DomainBox::unit(2)),
                ..GenerateConfig::new(
                    GeometrySource::Points(vec![[0.2, 0.2, 0.0], [-0.3, 0.1, 0.0]]),
                    2,
                    3,
                )
            },
            levels: vec![3, 4],
            backends: vec![Backend::Ordered, Backend::Hashed],
            repeat: 3,
        };
        let report = bench(&config).unwrap();
        assert_eq!(report.cells.len(), 4);
        assert_eq!(report.membership.len(), 2);
        for cell in &report.cells {
            assert_eq!(cell.samples_ms.len(), 3);
            assert!(cell.median_ms >= 0.0);
        }
        // Equal leaf counts across backends at the same level.
        for &level in &[3, 4] {
            let counts: Vec<usize> = report
                .cells
                .iter()
                .filter(|c| c.max_level == level)
                .map(|c| c.total_leaves)
                .collect();
            assert!(counts.windows(2).all(|w| w[0] == w[1]));
        }
        for cmp in &report.membership {
            assert!(cmp.sets_equal);
        }
    }

    #[test]
    fn median_of_samples() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
