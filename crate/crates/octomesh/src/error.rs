use thiserror::Error;

/// Errors shared across the meshing stack.
#[derive(Debug, Error)]
pub enum MeshError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("point {point:?} lies outside the domain box")]
    PointOutsideDomain { point: [f64; 3] },
    #[error("level {level} out of range (max {max})")]
    LevelOutOfRange { level: u32, max: u32 },
    #[error("key needs {needed} bits but target integer width is {target}")]
    Overflow { needed: u32, target: u32 },
    #[error("cannot refine past the maximum level {max}")]
    MaxDepthExceeded { max: u32 },
    #[error("entry is not a leaf of the tree")]
    NotALeaf,
    #[error("key not present in the leaf store")]
    KeyNotFound,
    #[error("not all children of the requested parent are leaves")]
    ChildrenNotLeaves,
    #[error("coarsening would introduce a face level jump greater than one")]
    WouldViolateBalance,
    #[error("leaf partition is inconsistent: expected neighbor is missing")]
    InconsistentPartition,
    #[error("tree is not 2:1 balanced near the queried element")]
    UnbalancedTree,
    #[error("operation requires the ordered backend")]
    UnsupportedBackend,
    #[error("malformed STL: {0}")]
    MalformedStl(String),
    #[error("geometry contains no triangles or points")]
    EmptyGeometry,
    #[error("refinement loop exceeded {max} passes without terminating")]
    NonTermination { max: u32 },
    #[error("cannot parse key '{0}'")]
    ParseKey(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, MeshError>;
