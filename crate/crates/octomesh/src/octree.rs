//! Leaf storage and tree-level operations: exact level inference against
//! the leaf set, refinement and coarsening, cross-level neighbor
//! resolution, and 2:1 balance closure.
//!
//! Leaves are keyed by their padded bit strings alone. The zero child of a
//! refined element shares the parent's padded bits, so an element's exact
//! level is recovered by probing sibling keys against the store
//! (`infer_level`) rather than stored per entry.

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::error::{MeshError, Result};
use crate::morton::{
    self, bit_position, DomainBox, FaceDirection, Level, MeshConfig, MortonKey, Sign,
};

/// Which associative container backs the leaf store.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    /// Tree map: iteration follows the Z-order curve exactly.
    Ordered,
    /// Hash map: average-constant lookup, unspecified iteration order.
    Hashed,
}

impl Backend {
    pub fn name(&self) -> &'static str {
        match self {
            Backend::Ordered => "ordered",
            Backend::Hashed => "hashed",
        }
    }
}

impl std::str::FromStr for Backend {
    type Err = MeshError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ordered" => Ok(Backend::Ordered),
            "hashed" => Ok(Backend::Hashed),
            other => Err(MeshError::InvalidConfig(format!("unknown backend '{other}'"))),
        }
    }
}

/// Associative container from Morton key to payload with two backends.
#[derive(Debug, Clone)]
pub enum LeafStore<P> {
    Ordered(BTreeMap<MortonKey, P>),
    Hashed(HashMap<MortonKey, P>),
}

impl<P> LeafStore<P> {
    pub fn new(backend: Backend) -> Self {
        match backend {
            Backend::Ordered => LeafStore::Ordered(BTreeMap::new()),
            Backend::Hashed => LeafStore::Hashed(HashMap::new()),
        }
    }

    pub fn backend(&self) -> Backend {
        match self {
            LeafStore::Ordered(_) => Backend::Ordered,
            LeafStore::Hashed(_) => Backend::Hashed,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            LeafStore::Ordered(m) => m.len(),
            LeafStore::Hashed(m) => m.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, key: &MortonKey) -> bool {
        match self {
            LeafStore::Ordered(m) => m.contains_key(key),
            LeafStore::Hashed(m) => m.contains_key(key),
        }
    }

    pub fn get(&self, key: &MortonKey) -> Option<&P> {
        match self {
            LeafStore::Ordered(m) => m.get(key),
            LeafStore::Hashed(m) => m.get(key),
        }
    }

    pub fn insert(&mut self, key: MortonKey, payload: P) -> Option<P> {
        match self {
            LeafStore::Ordered(m) => m.insert(key, payload),
            LeafStore::Hashed(m) => m.insert(key, payload),
        }
    }

    pub fn remove(&mut self, key: &MortonKey) -> Option<P> {
        match self {
            LeafStore::Ordered(m) => m.remove(key),
            LeafStore::Hashed(m) => m.remove(key),
        }
    }

    /// Grow the hashed backend ahead of a refinement burst; rehashing
    /// mid-insert is expensive. No-op for the ordered backend.
    pub fn reserve(&mut self, additional: usize) {
        if let LeafStore::Hashed(m) = self {
            m.reserve(additional);
        }
    }

    /// Keys in unspecified order.
    pub fn keys(&self) -> Vec<MortonKey> {
        match self {
            LeafStore::Ordered(m) => m.keys().copied().collect(),
            LeafStore::Hashed(m) => m.keys().copied().collect(),
        }
    }

    /// Keys in Z-order; the hashed backend pays an explicit sort.
    pub fn sorted_keys(&self) -> Vec<MortonKey> {
        match self {
            LeafStore::Ordered(m) => m.keys().copied().collect(),
            LeafStore::Hashed(m) => {
                let mut keys: Vec<MortonKey> = m.keys().copied().collect();
                keys.sort_unstable();
                keys
            }
        }
    }
}

/// Face neighbor of a leaf in a 2:1 balanced tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NeighborResult {
    /// The face lies on the domain boundary.
    Boundary,
    /// Neighbor leaf one level coarser.
    Coarser { key: MortonKey, level: Level },
    /// Neighbor leaf at the same level.
    Same { key: MortonKey, level: Level },
    /// The 2^(d-1) finer leaves sharing the face, one level deeper.
    Finer { keys: Vec<MortonKey>, level: Level },
}

/// How `balance_closure` tests queue membership.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueueMembership {
    /// Hashed set: amortized O(1) per test.
    Hashed,
    /// Linear scan of the queue: O(n) per test. Same result, only slower;
    /// kept for the data-structure comparison harness.
    LinearScan,
}

/// Insertion-ordered refinement list with a hashed membership set.
#[derive(Debug, Clone, Default)]
pub struct RefineQueue {
    entries: Vec<(MortonKey, Level)>,
    members: HashSet<MortonKey>,
}

impl RefineQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries(entries: impl IntoIterator<Item = (MortonKey, Level)>) -> Self {
        let mut q = Self::new();
        for (key, level) in entries {
            q.push(key, level);
        }
        q
    }

    /// Append unless already present; returns whether it was appended.
    pub fn push(&mut self, key: MortonKey, level: Level) -> bool {
        if self.members.insert(key) {
            self.entries.push((key, level));
            true
        } else {
            false
        }
    }

    pub fn contains(&self, key: &MortonKey) -> bool {
        self.members.contains(key)
    }

    fn contains_with(&self, key: &MortonKey, membership: QueueMembership) -> bool {
        match membership {
            QueueMembership::Hashed => self.members.contains(key),
            QueueMembership::LinearScan => self.entries.iter().any(|(k, _)| k == key),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(MortonKey, Level)] {
        &self.entries
    }

    pub fn key_set(&self) -> &HashSet<MortonKey> {
        &self.members
    }
}

/// Linear octree over a domain box: configuration, root box and leaf store.
#[derive(Debug, Clone)]
pub struct Octree<P = ()> {
    config: MeshConfig,
    domain: DomainBox,
    store: LeafStore<P>,
}

impl<P: Default> Octree<P> {
    /// The smallest stored mesh: the root refined once into 2^d level-1
    /// leaves. The root itself is never a leaf.
    pub fn new(config: MeshConfig, domain: DomainBox, backend: Backend) -> Result<Self> {
        let mut store = LeafStore::new(backend);
        for key in morton::child_keys(MortonKey::zero(), 0, &config)? {
            store.insert(key, P::default());
        }
        Ok(Self { config, domain, store })
    }
}

impl<P> Octree<P> {
    pub fn config(&self) -> &MeshConfig {
        &self.config
    }

    pub fn domain(&self) -> &DomainBox {
        &self.domain
    }

    pub fn store(&self) -> &LeafStore<P> {
        &self.store
    }

    pub fn backend(&self) -> Backend {
        self.store.backend()
    }

    pub fn len(&self) -> usize {
        self.store.len()
    }

    pub fn is_empty(&self) -> bool {
        self.store.is_empty()
    }

    /// Exact level of the leaf stored under `key`.
    ///
    /// `scan_level` only bounds the level from below when the key ends in
    /// zero groups. Probing the level-L sibling key (axis-0 bit flipped)
    /// resolves it: for any L at or below the true level that probe is the
    /// padded key of a leaf covering the sibling region, which exists in a
    /// full-children octree, while for L above the true level the probe
    /// falls strictly inside this leaf and cannot be stored.
    pub fn infer_level(&self, key: MortonKey) -> Result<Level> {
        if !self.store.contains(&key) {
            return Err(MeshError::KeyNotFound);
        }
        let dim = self.config.dim();
        let lower = morton::scan_level(key, &self.config);
        for level in (lower + 1..=self.config.max_level()).rev() {
            let probe = key.with_flipped(bit_position(dim, level, 0));
            if self.store.contains(&probe) {
                return Ok(level);
            }
        }
        Ok(lower.max(1))
    }

    /// All leaves with their exact levels, in store order.
    pub fn leaves(&self) -> Vec<(MortonKey, Level)> {
        self.store
            .keys()
            .into_iter()
            .map(|k| (k, self.infer_level(k).expect("stored key")))
            .collect()
    }

    /// Per-level leaf counts, index 0 holding level 1.
    pub fn level_histogram(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.config.max_level() as usize];
        for (_, level) in self.leaves() {
            counts[level as usize - 1] += 1;
        }
        counts
    }

    /// Replace the leaf `(key, level)` by its 2^d children. `split` maps
    /// the parent payload to exactly 2^d child payloads in child Z-order.
    pub fn refine_leaf(
        &mut self,
        key: MortonKey,
        level: Level,
        split: impl FnOnce(P) -> Vec<P>,
    ) -> Result<()> {
        if level >= self.config.max_level() {
            return Err(MeshError::MaxDepthExceeded { max: self.config.max_level() });
        }
        if self.infer_level(key).map_err(|_| MeshError::NotALeaf)? != level {
            return Err(MeshError::NotALeaf);
        }
        let children = morton::child_keys(key, level, &self.config)?;
        let parent_payload = self.store.remove(&key).expect("checked above");
        let payloads = split(parent_payload);
        assert_eq!(payloads.len(), children.len(), "split must produce 2^d payloads");
        for (child, payload) in children.into_iter().zip(payloads) {
            self.store.insert(child, payload);
        }
        Ok(())
    }

    /// Replace a full family of 2^d sibling leaves by their parent.
    /// Refused when any face neighbor of the would-be parent is more than
    /// one level finer than it, which would break the 2:1 balance.
    pub fn coarsen_family(
        &mut self,
        parent_key: MortonKey,
        parent_level: Level,
        merge: impl FnOnce(Vec<P>) -> P,
    ) -> Result<()> {
        if parent_level < 1 {
            return Err(MeshError::LevelOutOfRange { level: parent_level, max: self.config.max_level() });
        }
        let child_level = parent_level + 1;
        let children = morton::child_keys(parent_key, parent_level, &self.config)?;
        for child in &children {
            match self.infer_level(*child) {
                Ok(l) if l == child_level => {}
                _ => return Err(MeshError::ChildrenNotLeaves),
            }
        }
        // Any leaf beyond the family's outer faces deeper than child_level
        // would face the new parent with a two-level jump.
        for child in &children {
            for dir in FaceDirection::all(self.config.dim() as usize) {
                let outward = match morton::same_level_neighbor_key(*child, child_level, dir, &self.config)
                {
                    Some(n) => morton::truncate_to_level(n, parent_level, self.config.dim()) != parent_key,
                    None => false,
                };
                if !outward {
                    continue;
                }
                if let NeighborResult::Finer { .. } = self.resolve_neighbor(*child, child_level, dir)? {
                    return Err(MeshError::WouldViolateBalance);
                }
            }
        }
        let mut payloads = Vec::with_capacity(children.len());
        for child in &children {
            payloads.push(self.store.remove(child).expect("checked above"));
        }
        self.store.insert(parent_key, merge(payloads));
        Ok(())
    }

    /// Face neighbor of the leaf `(key, level)` across `dir`, resolved
    /// against the leaf set of a 2:1 balanced tree.
    pub fn resolve_neighbor(
        &self,
        key: MortonKey,
        level: Level,
        dir: FaceDirection,
    ) -> Result<NeighborResult> {
        let dim = self.config.dim();
        let candidate = match morton::same_level_neighbor_key(key, level, dir, &self.config) {
            Some(n) => n,
            None => return Ok(NeighborResult::Boundary),
        };
        if self.store.contains(&candidate) {
            // The stored leaf under the candidate's bits is its zero
            // descendant, which may sit away from the shared face and be
            // arbitrarily deep; any level above ours means "subdivided".
            let found = self.infer_level(candidate)?;
            if found == level {
                return Ok(NeighborResult::Same { key: candidate, level });
            }
            if found > level {
                // The face children of the candidate are those whose bit at
                // the finer level points back toward the query element. In
                // a balanced tree each is a leaf exactly one level deeper.
                let facing = matches!(dir.sign, Sign::Minus);
                let keys: Vec<MortonKey> = morton::child_keys(candidate, level, &self.config)?
                    .into_iter()
                    .filter(|c| c.bit(bit_position(dim, level + 1, dir.axis)) == facing)
                    .collect();
                debug_assert_eq!(keys.len(), 1 << (dim - 1));
                for key in &keys {
                    match self.infer_level(*key) {
                        Ok(l) if l == level + 1 => {}
                        _ => return Err(MeshError::UnbalancedTree),
                    }
                }
                return Ok(NeighborResult::Finer { keys, level: level + 1 });
            }
            if found + 1 == level {
                return Ok(NeighborResult::Coarser {
                    key: morton::truncate_to_level(candidate, level - 1, dim),
                    level: level - 1,
                });
            }
            return Err(MeshError::UnbalancedTree);
        }
        // Candidate region is neither a leaf nor subdivided (its zero child
        // would share the candidate's bits), so a coarser leaf covers it.
        if level < 2 {
            return Err(MeshError::InconsistentPartition);
        }
        let coarse = morton::truncate_to_level(candidate, level - 1, dim);
        match self.infer_level(coarse) {
            Ok(l) if l + 1 == level => Ok(NeighborResult::Coarser { key: coarse, level: l }),
            Ok(_) => Err(MeshError::UnbalancedTree),
            Err(_) => Err(MeshError::InconsistentPartition),
        }
    }

    /// Extend a refinement list until refining every entry by one level
    /// leaves the tree 2:1 balanced: sweep the newly appended segment,
    /// appending any face neighbor coarser than the element in hand, until
    /// a sweep adds nothing.
    pub fn balance_closure(&self, queue: RefineQueue) -> Result<RefineQueue> {
        self.balance_closure_with(queue, QueueMembership::Hashed)
    }

    pub fn balance_closure_with(
        &self,
        mut queue: RefineQueue,
        membership: QueueMembership,
    ) -> Result<RefineQueue> {
        let dim = self.config.dim() as usize;
        let mut start = 0;
        let mut end = queue.len();
        while start < end {
            for i in start..end {
                let (key, level) = queue.entries[i];
                for dir in FaceDirection::all(dim) {
                    if let NeighborResult::Coarser { key: nb, level: nb_level } =
                        self.resolve_neighbor(key, level, dir)?
                    {
                        if !queue.contains_with(&nb, membership) {
                            queue.push(nb, nb_level);
                        }
                    }
                }
            }
            start = end;
            end = queue.len();
        }
        Ok(queue)
    }

    /// Locate the leaf containing `p`: encode at the finest level and walk
    /// prefixes until one is a stored leaf.
    pub fn point_locate(&self, p: &[f64]) -> Result<(MortonKey, Level)> {
        let fine = morton::encode_point(p, &self.domain, self.config.max_level(), &self.config)?;
        for level in 1..=self.config.max_level() {
            let prefix = morton::truncate_to_level(fine, level, self.config.dim());
            if self.store.contains(&prefix) && self.infer_level(prefix)? == level {
                return Ok((prefix, level));
            }
        }
        Err(MeshError::InconsistentPartition)
    }

    /// Check the 2:1 balance of every leaf/face pair, both through
    /// neighbor resolution and through geometric point location just past
    /// each face.
    pub fn validate_balance(&self) -> bool {
        let dim = self.config.dim() as usize;
        let eps_scale = (0.5f64).powi(self.config.max_level() as i32) / 4.0;
        for (key, level) in self.leaves() {
            let Ok(center) = morton::centroid(key, level, &self.domain, &self.config) else {
                return false;
            };
            let Ok(edge) = morton::edge_length(level, &self.domain, &self.config) else {
                return false;
            };
            for dir in FaceDirection::all(dim) {
                let resolved = match self.resolve_neighbor(key, level, dir) {
                    Ok(r) => r,
                    Err(_) => return false,
                };
                // Probe a point just across the face.
                let mut probe = center;
                let step = 0.5 * edge[dir.axis] + eps_scale * self.domain.lengths()[dir.axis];
                probe[dir.axis] += match dir.sign {
                    Sign::Plus => step,
                    Sign::Minus => -step,
                };
                let outside = !self.domain.contains(&probe, dim);
                match resolved {
                    NeighborResult::Boundary => {
                        if !outside {
                            return false;
                        }
                    }
                    NeighborResult::Same { level: l, .. }
                    | NeighborResult::Coarser { level: l, .. }
                    | NeighborResult::Finer { level: l, .. } => {
                        if outside {
                            return false;
                        }
                        match self.point_locate(&probe) {
                            Ok((_, located)) => {
                                if located != l || located.abs_diff(level) > 1 {
                                    return false;
                                }
                            }
                            Err(_) => return false,
                        }
                    }
                }
            }
        }
        true
    }

    /// Check that the leaves tile the domain exactly: in Z-order, each
    /// leaf's key interval must end where the next one starts, the first
    /// at the domain origin and the last at the domain end. Also sums the
    /// volumes against the domain volume.
    pub fn validate_partition(&self) -> bool {
        let dim = self.config.dim();
        let keys = self.store.sorted_keys();
        if keys.is_empty() || !keys[0].is_zero() {
            return false;
        }
        let mut volume = 0.0;
        let mut cursor = Some(MortonKey::zero());
        for key in &keys {
            let Ok(level) = self.infer_level(*key) else {
                return false;
            };
            if cursor != Some(*key) {
                return false;
            }
            cursor = interval_end(*key, level, dim);
            let Ok(edge) = morton::edge_length(level, &self.domain, &self.config) else {
                return false;
            };
            volume += edge[..dim as usize].iter().product::<f64>();
        }
        if cursor.is_some() {
            return false;
        }
        let total = self.domain.volume(dim as usize);
        (volume - total).abs() <= 1e-9 * total
    }

    /// Leaves in exact Z-order with levels and payloads. Ordered backend
    /// only; the hashed backend must sort explicitly via `sorted_keys`.
    pub fn iterate_zorder(&self) -> Result<impl Iterator<Item = (MortonKey, Level, &P)> + '_> {
        match &self.store {
            LeafStore::Ordered(map) => Ok(map.iter().map(move |(k, p)| {
                (*k, self.infer_level(*k).expect("stored key"), p)
            })),
            LeafStore::Hashed(_) => Err(MeshError::UnsupportedBackend),
        }
    }
}

impl<P: Default + Clone> Octree<P> {
    /// Refine every entry of a closed refinement list by one level. The
    /// list must already be its own balance closure.
    pub fn apply_refinement(&mut self, queue: &RefineQueue) -> Result<()> {
        let children = self.config.children();
        self.store.reserve(queue.len() * (children - 1));
        for &(key, level) in queue.entries() {
            self.refine_leaf(key, level, |_| vec![P::default(); children])?;
        }
        Ok(())
    }
}

/// First key past the interval covered by a level-`level` element, or
/// `None` when the element touches the end of the domain. Binary
/// increment of the d*level-bit prefix.
fn interval_end(key: MortonKey, level: Level, dim: u32) -> Option<MortonKey> {
    let mut out = key;
    for pos in (0..dim * level).rev() {
        if out.bit(pos) {
            out = out.with_bit(pos, false);
        } else {
            return Some(out.with_bit(pos, true));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(text: &str, dim: u32) -> MortonKey {
        MortonKey::parse_grouped(text, dim).unwrap().0
    }

    fn tree2(max: u32, backend: Backend) -> Octree {
        let config = MeshConfig::new(2, max).unwrap();
        Octree::new(config, DomainBox::unit(2), backend).unwrap()
    }

    /// The worked neighbor-identification mesh: a uniform level-2 grid
    /// with cells (00,11) and (10,01) refined once more, so the red,
    /// orange, yellow, cyan and green cells sit at level 3 next to the
    /// magenta cell at level 2.
    fn two_patch_tree(backend: Backend) -> Octree {
        let mut t = tree2(4, backend);
        for quadrant in ["00", "01", "10", "11"] {
            t.refine_leaf(key(quadrant, 2), 1, |_| vec![(); 4]).unwrap();
        }
        t.refine_leaf(key("00,11", 2), 2, |_| vec![(); 4]).unwrap();
        t.refine_leaf(key("10,01", 2), 2, |_| vec![(); 4]).unwrap();
        assert!(t.validate_balance());
        t
    }

    #[test]
    fn init_mesh_has_all_level1_leaves() {
        let t = tree2(3, Backend::Ordered);
        assert_eq!(t.len(), 4);
        for text in ["00", "01", "10", "11"] {
            assert!(t.store().contains(&key(text, 2)));
        }
        let ordered: Vec<MortonKey> = t.iterate_zorder().unwrap().map(|(k, _, _)| k).collect();
        let mut sorted = ordered.clone();
        sorted.sort_unstable();
        assert_eq!(ordered, sorted);
    }

    #[test]
    fn init_mesh_3d() {
        let config = MeshConfig::new(3, 3).unwrap();
        let t: Octree = Octree::new(config, DomainBox::unit(3), Backend::Hashed).unwrap();
        assert_eq!(t.len(), 8);
        assert!(t.validate_partition());
    }

    #[test]
    fn infer_level_examples() {
        // Two refined branches at different depths.
        let config = MeshConfig::new(3, 5).unwrap();
        let mut t: Octree = Octree::new(config, DomainBox::unit(3), Backend::Ordered).unwrap();
        t.refine_leaf(key("001", 3), 1, |_| vec![(); 8]).unwrap();
        t.refine_leaf(key("001,000", 3), 2, |_| vec![(); 8]).unwrap();
        assert_eq!(t.infer_level(key("001,000,101", 3)).unwrap(), 3);

        let mut t2 = tree2(4, Backend::Ordered);
        assert_eq!(t2.infer_level(MortonKey::zero()).unwrap(), 1);
        t2.refine_leaf(MortonKey::zero(), 1, |_| vec![(); 4]).unwrap();
        assert_eq!(t2.infer_level(MortonKey::zero()).unwrap(), 2);
        assert!(t2.infer_level(key("01,01", 2)).is_err());
    }

    #[test]
    fn refine_reaches_single_patch_mesh() {
        let mut t = tree2(3, Backend::Ordered);
        t.refine_leaf(key("10", 2), 1, |_| vec![(); 4]).unwrap();
        assert_eq!(t.len(), 7);
        let expect: Vec<MortonKey> = ["00", "01", "10,00", "10,01", "10,10", "10,11", "11"]
            .iter()
            .map(|t| key(t, 2))
            .collect();
        let mut got = t.store().keys();
        got.sort_unstable();
        let mut want = expect;
        want.sort_unstable();
        assert_eq!(got, want);
        assert!(t.validate_partition());
        assert!(matches!(
            t.refine_leaf(key("01", 2), 2, |_| vec![(); 4]),
            Err(MeshError::NotALeaf)
        ));
    }

    #[test]
    fn coarsen_inverts_refine() {
        let mut t = tree2(3, Backend::Ordered);
        t.refine_leaf(key("10", 2), 1, |_| vec![(); 4]).unwrap();
        let mut calls = 0;
        t.coarsen_family(key("10", 2), 1, |payloads| {
            calls += 1;
            assert_eq!(payloads.len(), 4);
        })
        .unwrap();
        assert_eq!(calls, 1);
        assert_eq!(t.len(), 4);
        assert!(t.validate_partition());
    }

    #[test]
    fn coarsen_refuses_two_level_jump() {
        let mut t = tree2(4, Backend::Ordered);
        t.refine_leaf(key("10", 2), 1, |_| vec![(); 4]).unwrap();
        t.refine_leaf(key("10,01", 2), 2, |_| vec![(); 4]).unwrap();
        assert!(matches!(
            t.coarsen_family(key("10", 2), 1, |_| ()),
            Err(MeshError::ChildrenNotLeaves)
        ));
        // (00)'s children face the level-3 leaves inside (10,01); merging
        // them back to level 1 would leave a 3-vs-1 face.
        t.refine_leaf(key("00", 2), 1, |_| vec![(); 4]).unwrap();
        assert!(matches!(
            t.coarsen_family(key("00", 2), 1, |_| ()),
            Err(MeshError::WouldViolateBalance)
        ));
    }

    #[test]
    fn resolve_neighbor_mixed_cases() {
        for backend in [Backend::Ordered, Backend::Hashed] {
            let t = two_patch_tree(backend);
            let red = key("10,01,01", 2);
            assert_eq!(
                t.resolve_neighbor(red, 3, FaceDirection::new(0, Sign::Minus)).unwrap(),
                NeighborResult::Same { key: key("00,11,11", 2), level: 3 }
            );
            assert_eq!(
                t.resolve_neighbor(red, 3, FaceDirection::new(1, Sign::Plus)).unwrap(),
                NeighborResult::Coarser { key: key("11,00", 2), level: 2 }
            );
            assert_eq!(
                t.resolve_neighbor(key("11,00", 2), 2, FaceDirection::new(1, Sign::Minus)).unwrap(),
                NeighborResult::Finer {
                    keys: vec![key("10,01,01", 2), key("10,01,11", 2)],
                    level: 3
                }
            );
        }
    }

    #[test]
    fn closure_on_single_patch_mesh() {
        let mut t = tree2(3, Backend::Ordered);
        t.refine_leaf(key("10", 2), 1, |_| vec![(); 4]).unwrap();
        let q = RefineQueue::from_entries([(key("10,01", 2), 2)]);
        let closed = t.balance_closure(q).unwrap();
        let got: HashSet<MortonKey> = closed.key_set().clone();
        let want: HashSet<MortonKey> =
            [key("10,01", 2), key("11", 2), key("00", 2)].into_iter().collect();
        assert_eq!(got, want);
        // Applying it leaves the tree balanced.
        t.apply_refinement(&closed).unwrap();
        assert!(t.validate_balance());
        assert!(t.validate_partition());
    }

    #[test]
    fn closure_of_coarsest_level_is_identity() {
        let t = tree2(3, Backend::Ordered);
        let q = RefineQueue::from_entries([(key("01", 2), 1)]);
        let closed = t.balance_closure(q).unwrap();
        assert_eq!(closed.len(), 1);
    }

    #[test]
    fn closure_ripples_down_a_staircase() {
        // Refining the zero corner repeatedly builds a staircase of leaf
        // levels along the +x axis. Tagging the level-5 leaf one step off
        // the corner then ripples through one coarser neighbor per level.
        let mut t = tree2(6, Backend::Ordered);
        for level in 1..5 {
            let q = t
                .balance_closure(RefineQueue::from_entries([(MortonKey::zero(), level)]))
                .unwrap();
            t.apply_refinement(&q).unwrap();
        }
        assert!(t.validate_balance());
        let seed = key("00,00,00,00,10", 2);
        let q = t
            .balance_closure(RefineQueue::from_entries([(seed, 5)]))
            .unwrap();
        assert_eq!(q.len(), 5);
        let levels: HashSet<Level> = q.entries().iter().map(|&(_, l)| l).collect();
        assert_eq!(levels, (1..=5).collect());
    }

    #[test]
    fn membership_modes_agree() {
        let t = two_patch_tree(Backend::Ordered);
        let q = || RefineQueue::from_entries([(key("10,01,01", 2), 3)]);
        let hashed = t.balance_closure_with(q(), QueueMembership::Hashed).unwrap();
        let linear = t.balance_closure_with(q(), QueueMembership::LinearScan).unwrap();
        assert_eq!(hashed.key_set(), linear.key_set());
        assert_eq!(hashed.entries(), linear.entries());
    }

    #[test]
    fn validate_balance_rejects_constructed_jump() {
        let mut t = tree2(4, Backend::Ordered);
        // Bypass closure: refine (10) then (10,01) leaves (00) at level 1
        // next to level-3 leaves.
        t.refine_leaf(key("10", 2), 1, |_| vec![(); 4]).unwrap();
        t.refine_leaf(key("10,01", 2), 2, |_| vec![(); 4]).unwrap();
        assert!(!t.validate_balance());
        assert!(t.validate_partition());
    }

    #[test]
    fn partition_detects_missing_leaf() {
        let mut t = tree2(3, Backend::Ordered);
        assert!(t.validate_partition());
        t.store.remove(&key("01", 2));
        assert!(!t.validate_partition());
    }

    #[test]
    fn zorder_iteration_matches_sorted_hashed() {
        let ordered = two_patch_tree(Backend::Ordered);
        let hashed = two_patch_tree(Backend::Hashed);
        assert!(hashed.iterate_zorder().is_err());
        let a: Vec<MortonKey> = ordered.iterate_zorder().unwrap().map(|(k, _, _)| k).collect();
        assert_eq!(a, hashed.store().sorted_keys());
    }
}
