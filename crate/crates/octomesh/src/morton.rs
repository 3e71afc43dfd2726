//! Store-independent algebra on bit-string Morton keys.
//!
//! A key is a fixed-width bit string read left to right: the group of `d`
//! bits at positions `d*j .. d*j+d` describes level `j+1`, one bit per axis
//! (x first). A set bit selects the upper half along that axis, so sorting
//! keys lexicographically traces the Z-order curve. The root (level 0) is
//! not represented; unused positions are always zero.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{MeshError, Result};

/// Number of 64-bit words backing a key; caps the key width at 256 bits,
/// i.e. 85 levels in 3-D.
pub const KEY_WORDS: usize = 4;

/// Maximum representable key width in bits.
pub const MAX_KEY_BITS: u32 = (KEY_WORDS * 64) as u32;

/// Refinement level. Level 0 is the conceptual root and is never stored
/// as a leaf.
pub type Level = u32;

/// Axis-aligned face direction of an element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FaceDirection {
    pub axis: usize,
    pub sign: Sign,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Minus,
    Plus,
}

impl FaceDirection {
    pub fn new(axis: usize, sign: Sign) -> Self {
        Self { axis, sign }
    }

    /// The 2d face directions of a d-dimensional element, minus side first
    /// per axis.
    pub fn all(dim: usize) -> impl Iterator<Item = FaceDirection> {
        (0..dim).flat_map(|axis| {
            [Sign::Minus, Sign::Plus]
                .into_iter()
                .map(move |sign| FaceDirection { axis, sign })
        })
    }

    pub fn opposite(self) -> Self {
        let sign = match self.sign {
            Sign::Minus => Sign::Plus,
            Sign::Plus => Sign::Minus,
        };
        Self { axis: self.axis, sign }
    }
}

impl fmt::Display for FaceDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = match self.sign {
            Sign::Minus => '-',
            Sign::Plus => '+',
        };
        write!(f, "{}{}", sign, ['x', 'y', 'z'][self.axis.min(2)])
    }
}

/// Static mesh parameters: dimension, key width and maximum depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeshConfig {
    dim: u32,
    key_bits: u32,
    max_level: u32,
}

impl MeshConfig {
    pub const DEFAULT_KEY_BITS: u32 = 128;

    /// A config with the default 128-bit key width.
    pub fn new(dim: u32, max_level: u32) -> Result<Self> {
        Self::with_key_bits(dim, max_level, Self::DEFAULT_KEY_BITS)
    }

    pub fn with_key_bits(dim: u32, max_level: u32, key_bits: u32) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(MeshError::InvalidConfig(format!(
                "dimension must be 2 or 3, got {dim}"
            )));
        }
        if max_level < 1 {
            return Err(MeshError::InvalidConfig(
                "maximum level must be at least 1".into(),
            ));
        }
        if key_bits > MAX_KEY_BITS {
            return Err(MeshError::InvalidConfig(format!(
                "key width {key_bits} exceeds the supported maximum {MAX_KEY_BITS}"
            )));
        }
        if dim * max_level > key_bits {
            return Err(MeshError::InvalidConfig(format!(
                "{dim}-D keys need {} bits for {max_level} levels but width is {key_bits}",
                dim * max_level
            )));
        }
        Ok(Self { dim, key_bits, max_level })
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn key_bits(&self) -> u32 {
        self.key_bits
    }

    pub fn max_level(&self) -> u32 {
        self.max_level
    }

    /// Children per refined element: 2^d.
    pub fn children(&self) -> usize {
        1 << self.dim
    }

    /// Face neighbors per element: 2d.
    pub fn faces(&self) -> usize {
        2 * self.dim as usize
    }

    fn check_level(&self, level: Level) -> Result<()> {
        if level > self.max_level {
            return Err(MeshError::LevelOutOfRange { level, max: self.max_level });
        }
        Ok(())
    }
}

/// Root box of the mesh: centroid and per-axis edge lengths.
///
/// Only the first `d` components are meaningful in 2-D.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainBox {
    center: [f64; 3],
    lengths: [f64; 3],
}

impl DomainBox {
    pub fn new(center: &[f64], lengths: &[f64]) -> Result<Self> {
        if center.len() != lengths.len() || !(2..=3).contains(&center.len()) {
            return Err(MeshError::InvalidConfig(
                "domain box needs 2 or 3 matching center/length components".into(),
            ));
        }
        let mut c = [0.0; 3];
        let mut l = [1.0; 3];
        for (i, (&ci, &li)) in center.iter().zip(lengths).enumerate() {
            if !ci.is_finite() || !li.is_finite() || li <= 0.0 {
                return Err(MeshError::InvalidConfig(format!(
                    "domain lengths must be finite and positive, got {li} on axis {i}"
                )));
            }
            c[i] = ci;
            l[i] = li;
        }
        Ok(Self { center: c, lengths: l })
    }

    /// A cube of edge `length` centered at `center`.
    pub fn cube(center: [f64; 3], length: f64) -> Result<Self> {
        Self::new(&center, &[length; 3])
    }

    /// The unit box centered at the origin.
    pub fn unit(dim: u32) -> Self {
        Self::new(&vec![0.0; dim as usize], &vec![1.0; dim as usize]).unwrap()
    }

    pub fn center(&self) -> [f64; 3] {
        self.center
    }

    pub fn lengths(&self) -> [f64; 3] {
        self.lengths
    }

    pub fn min(&self, axis: usize) -> f64 {
        self.center[axis] - 0.5 * self.lengths[axis]
    }

    pub fn max(&self, axis: usize) -> f64 {
        self.center[axis] + 0.5 * self.lengths[axis]
    }

    pub fn contains(&self, p: &[f64], dim: usize) -> bool {
        (0..dim).all(|k| p[k] >= self.min(k) && p[k] <= self.max(k))
    }

    pub fn volume(&self, dim: usize) -> f64 {
        self.lengths[..dim].iter().product()
    }
}

/// Fixed-width bit-string Morton key.
///
/// Bit position 0 is the leftmost (most significant) bit of the written
/// notation, so the derived ordering is the lexicographic order on the
/// padded bit string — the Z-order.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct MortonKey {
    words: [u64; KEY_WORDS],
}

impl MortonKey {
    /// The all-zero key (the zero descendant at every level).
    pub const fn zero() -> Self {
        Self { words: [0; KEY_WORDS] }
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    #[inline]
    pub fn bit(&self, pos: u32) -> bool {
        debug_assert!(pos < MAX_KEY_BITS);
        self.words[(pos / 64) as usize] >> (63 - pos % 64) & 1 == 1
    }

    #[inline]
    pub fn with_bit(mut self, pos: u32, value: bool) -> Self {
        debug_assert!(pos < MAX_KEY_BITS);
        let mask = 1u64 << (63 - pos % 64);
        if value {
            self.words[(pos / 64) as usize] |= mask;
        } else {
            self.words[(pos / 64) as usize] &= !mask;
        }
        self
    }

    #[inline]
    pub fn with_flipped(mut self, pos: u32) -> Self {
        debug_assert!(pos < MAX_KEY_BITS);
        self.words[(pos / 64) as usize] ^= 1u64 << (63 - pos % 64);
        self
    }

    /// Position of the highest set bit, if any.
    fn last_set_bit(&self) -> Option<u32> {
        // Scan from the fine (right) end.
        for (i, &w) in self.words.iter().enumerate().rev() {
            if w != 0 {
                return Some(i as u32 * 64 + 63 - w.trailing_zeros());
            }
        }
        None
    }

    /// Render the first `level` groups as "b..b,b..b,...", coarsest first.
    pub fn to_grouped_string(&self, dim: u32, level: Level) -> String {
        let mut out = String::new();
        for j in 0..level {
            if j > 0 {
                out.push(',');
            }
            for k in 0..dim {
                out.push(if self.bit(dim * j + k) { '1' } else { '0' });
            }
        }
        if level == 0 {
            out.push('0');
        }
        out
    }

    /// Parse the comma-grouped notation, e.g. "001,000,101". Group width
    /// must equal `dim`; trailing zero groups are accepted and do not count
    /// toward the returned level.
    pub fn parse_grouped(text: &str, dim: u32) -> Result<(Self, Level)> {
        let mut key = MortonKey::zero();
        let mut level: Level = 0;
        let bad = || MeshError::ParseKey(text.to_string());
        for (j, group) in text.split(',').enumerate() {
            let group = group.trim();
            if group.len() != dim as usize {
                return Err(bad());
            }
            let pos0 = dim * j as u32;
            if pos0 + dim > MAX_KEY_BITS {
                return Err(bad());
            }
            for (k, ch) in group.chars().enumerate() {
                match ch {
                    '0' => {}
                    '1' => key = key.with_bit(pos0 + k as u32, true),
                    _ => return Err(bad()),
                }
            }
            level = j as Level + 1;
        }
        Ok((key, level))
    }
}

impl fmt::Debug for MortonKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Debug shows up to the last set bit, in raw (ungrouped) form.
        let n = self.last_set_bit().map_or(0, |p| p + 1);
        write!(f, "MortonKey(")?;
        for p in 0..n {
            write!(f, "{}", self.bit(p) as u8)?;
        }
        write!(f, ")")
    }
}

/// Bit position of the axis-`axis` bit of level `level` (level >= 1).
#[inline]
pub fn bit_position(dim: u32, level: Level, axis: usize) -> u32 {
    dim * (level - 1) + axis as u32
}

/// Encode the point `p` into the key of the level-`level` element
/// containing it, by per-axis interval bisection.
///
/// Ties go to the upper half: a coordinate exactly on a midpoint belongs
/// to the element on its positive side.
pub fn encode_point(
    p: &[f64],
    domain: &DomainBox,
    level: Level,
    config: &MeshConfig,
) -> Result<MortonKey> {
    config.check_level(level)?;
    if level < 1 {
        return Err(MeshError::LevelOutOfRange { level, max: config.max_level() });
    }
    let dim = config.dim();
    let mut point = [0.0; 3];
    point[..dim as usize].copy_from_slice(&p[..dim as usize]);
    if !domain.contains(p, dim as usize) {
        return Err(MeshError::PointOutsideDomain { point });
    }
    let mut key = MortonKey::zero();
    for k in 0..dim as usize {
        let mut lo = domain.min(k);
        let mut hi = domain.max(k);
        for j in 0..level {
            let mid = 0.5 * (lo + hi);
            if p[k] < mid {
                hi = mid;
            } else {
                key = key.with_bit(dim * j + k as u32, true);
                lo = mid;
            }
        }
    }
    Ok(key)
}

/// Zero every bit at or beyond level `level + 1`, keeping the coarse prefix.
pub fn truncate_to_level(key: MortonKey, level: Level, dim: u32) -> MortonKey {
    let keep = dim * level;
    let mut out = MortonKey::zero();
    for (i, w) in out.words.iter_mut().enumerate() {
        let lo = i as u32 * 64;
        if keep >= lo + 64 {
            *w = key.words[i];
        } else if keep > lo {
            *w = key.words[i] & (u64::MAX << (64 - (keep - lo)));
        }
    }
    out
}

/// Level of the finest nonzero d-bit group, or 0 for the all-zero key.
///
/// This is a lower bound on the element's true level; trailing-zero keys
/// are resolved exactly against the leaf set by the octree module.
pub fn scan_level(key: MortonKey, config: &MeshConfig) -> Level {
    match key.last_set_bit() {
        Some(p) => p / config.dim() + 1,
        None => 0,
    }
}

/// Sibling across the face `axis` at the element's own level: flip that
/// single bit.
pub fn sibling_key(
    key: MortonKey,
    level: Level,
    axis: usize,
    config: &MeshConfig,
) -> Result<MortonKey> {
    config.check_level(level)?;
    if level < 1 {
        return Err(MeshError::LevelOutOfRange { level, max: config.max_level() });
    }
    Ok(key.with_flipped(bit_position(config.dim(), level, axis)))
}

/// Coarsest level at which the axis bit differs from the element's own
/// axis bit, scanning from `level - 1` up toward the root. `None` means
/// the key carries no flip in that direction (a domain boundary).
pub fn flip_level(key: MortonKey, level: Level, axis: usize, config: &MeshConfig) -> Option<Level> {
    let dim = config.dim();
    let own = key.bit(bit_position(dim, level, axis));
    (1..level)
        .rev()
        .find(|&l| key.bit(bit_position(dim, l, axis)) != own)
}

/// Same-level neighbor key across `dir`, or `None` at a domain boundary.
///
/// When the face points away from the sibling the neighbor is off-branch:
/// every axis bit from the element's level up through the bit-flip level
/// is flipped.
pub fn same_level_neighbor_key(
    key: MortonKey,
    level: Level,
    dir: FaceDirection,
    config: &MeshConfig,
) -> Option<MortonKey> {
    let dim = config.dim();
    let own = key.bit(bit_position(dim, level, dir.axis));
    let toward_sibling = match dir.sign {
        Sign::Plus => !own,
        Sign::Minus => own,
    };
    if toward_sibling {
        return Some(key.with_flipped(bit_position(dim, level, dir.axis)));
    }
    let flip = flip_level(key, level, dir.axis, config)?;
    let mut out = key;
    for l in flip..=level {
        out = out.with_flipped(bit_position(dim, l, dir.axis));
    }
    Some(out)
}

/// True when the element sits on the domain boundary in direction `dir`:
/// all its axis bits already point that way.
pub fn is_boundary(key: MortonKey, level: Level, dir: FaceDirection, config: &MeshConfig) -> bool {
    let dim = config.dim();
    let wanted = matches!(dir.sign, Sign::Plus);
    (1..=level).all(|l| key.bit(bit_position(dim, l, dir.axis)) == wanted)
}

/// Per-axis edge lengths of a level-`level` element: l0 / 2^level.
pub fn edge_length(level: Level, domain: &DomainBox, config: &MeshConfig) -> Result<[f64; 3]> {
    config.check_level(level)?;
    let scale = (0.5f64).powi(level as i32);
    let l = domain.lengths();
    Ok([l[0] * scale, l[1] * scale, l[2] * scale])
}

/// Centroid of the element: per axis, each level contributes a half-step
/// toward the upper or lower half depending on its bit.
pub fn centroid(
    key: MortonKey,
    level: Level,
    domain: &DomainBox,
    config: &MeshConfig,
) -> Result<[f64; 3]> {
    config.check_level(level)?;
    if level < 1 {
        return Err(MeshError::LevelOutOfRange { level, max: config.max_level() });
    }
    let dim = config.dim();
    let mut x = domain.center();
    for k in 0..dim as usize {
        let mut offset = 0.0;
        for j in 0..level {
            let s = if key.bit(dim * j + k as u32) { 1.0 } else { -1.0 };
            offset += s * (0.5f64).powi(j as i32 + 2);
        }
        x[k] += domain.lengths()[k] * offset;
    }
    Ok(x)
}

/// The 2^d corner coordinates: centroid plus/minus half the element's own
/// edge length per axis. Corner `c` takes the positive side on axis `k`
/// iff bit `k` of `c` is set.
pub fn vertices(
    key: MortonKey,
    level: Level,
    domain: &DomainBox,
    config: &MeshConfig,
) -> Result<Vec<[f64; 3]>> {
    let c = centroid(key, level, domain, config)?;
    let h = edge_length(level, domain, config)?;
    let dim = config.dim() as usize;
    let mut out = Vec::with_capacity(1 << dim);
    for corner in 0..1u32 << dim {
        let mut v = c;
        for k in 0..dim {
            let s = if corner >> k & 1 == 1 { 0.5 } else { -0.5 };
            v[k] += s * h[k];
        }
        out.push(v);
    }
    Ok(out)
}

/// Interpret the first d·level bits as a big-endian unsigned integer.
///
/// Fails with `Overflow` when the bits do not fit `target_width`, which is
/// exactly the depth ceiling of integer-indexed schemes: floor(width / d)
/// levels.
pub fn to_integer(
    key: MortonKey,
    level: Level,
    target_width: u32,
    config: &MeshConfig,
) -> Result<u128> {
    let needed = config.dim() * level;
    if needed > target_width || needed > 128 {
        return Err(MeshError::Overflow { needed, target: target_width });
    }
    let mut value: u128 = 0;
    for p in 0..needed {
        value = value << 1 | key.bit(p) as u128;
    }
    Ok(value)
}

/// Z-order comparison: lexicographic on the padded bit strings.
pub fn compare_keys(a: &MortonKey, b: &MortonKey) -> Ordering {
    a.cmp(b)
}

/// The 2^d children of the element, ordered by their level+1 group bits.
/// The zero child shares the parent's padded bit string.
pub fn child_keys(key: MortonKey, level: Level, config: &MeshConfig) -> Result<Vec<MortonKey>> {
    if level >= config.max_level() {
        return Err(MeshError::MaxDepthExceeded { max: config.max_level() });
    }
    let dim = config.dim();
    let mut out = Vec::with_capacity(config.children());
    for pattern in 0..1u32 << dim {
        let mut child = key;
        for k in 0..dim as usize {
            // The x bit is leftmost inside the group, so iterating patterns
            // with x as the most significant bit emits children in Z-order.
            if pattern >> (dim as usize - 1 - k) & 1 == 1 {
                child = child.with_bit(bit_position(dim, level + 1, k), true);
            }
        }
        out.push(child);
    }
    Ok(out)
}
