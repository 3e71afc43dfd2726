//! Generation of 2:1-balanced Cartesian octree meshes around immersed
//! triangulated geometries.
//!
//! Elements are indexed by arbitrary-width bit-string Morton keys and the
//! leaf set lives in one of two interchangeable associative backends: an
//! ordered map that preserves the Z-order curve exactly, or a hash map
//! with average-constant lookup. Neighbor connectivity, element geometry
//! and refinement tagging are all recovered from the keys by bit
//! manipulation; nothing is stored per element beyond its key and payload.
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod error;
pub mod export;
pub mod geometry;
pub mod morton;
pub mod octree;
pub mod pipeline;

pub use error::{MeshError, Result};
pub use export::StatsDocument;
pub use geometry::{GeometryPoints, TagSets, Triangle, TriangleSoup, VoxelIndex};
pub use morton::{DomainBox, FaceDirection, Level, MeshConfig, MortonKey, Sign};
pub use octree::{Backend, NeighborResult, Octree, QueueMembership, RefineQueue};
pub use pipeline::{
    BenchConfig, BenchReport, GenerateConfig, GeometrySource, PhaseTimes, RunStats,
};
