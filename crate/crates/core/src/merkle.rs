//! Append-only k-ary Merkle tree over scalars.
//!
//! Every internal node is the sponge hash of its `k` children, left to right.
//! Unfilled positions hold a fixed empty-leaf constant; revoked positions are
//! overwritten with a distinct tombstone constant. Only the filled prefix of
//! each level is stored, so deep trees (the default is `4^17` leaves) cost
//! memory proportional to the number of appended leaves.

use std::collections::HashMap;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{self, Canonical, CodecError, Decoder, Encoder};
use crate::crypto::{domain_tag, sponge, Element, Scalar};

pub const DEFAULT_ARITY: usize = 4;
pub const DEFAULT_DEPTH: usize = 17;

static EMPTY_LEAF: LazyLock<Scalar> = LazyLock::new(|| sponge(&[Element::Scalar(domain_tag("EMPTY"))]));
static TOMBSTONE: LazyLock<Scalar> = LazyLock::new(|| sponge(&[Element::Scalar(domain_tag("REVOKED"))]));

/// Value of a position that was never written.
pub fn empty_leaf() -> Scalar {
    *EMPTY_LEAF
}

/// Value written over a revoked position.
pub fn tombstone() -> Scalar {
    *TOMBSTONE
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MerkleError {
    #[error("tree is full")]
    Full,
    #[error("position {0} is vacant")]
    Vacant(u64),
    #[error("unsupported shape: arity {arity}, depth {depth}")]
    BadShape { arity: usize, depth: usize },
    #[error("malformed proof: {0}")]
    MalformedProof(&'static str),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MerkleProof {
    pub leaf: Scalar,
    pub pos: u64,
    /// One row per level, leaf level first; each row holds the `k - 1`
    /// siblings in left-to-right order with the path node removed.
    pub siblings: Vec<Vec<Scalar>>,
    /// Index of the path node among its `k` siblings, per level.
    pub child_indices: Vec<u8>,
}

impl MerkleProof {
    pub fn depth(&self) -> usize {
        self.siblings.len()
    }

    fn arity(&self) -> usize {
        self.siblings.first().map_or(0, |row| row.len() + 1)
    }
}

/// Recomputes the path from `proof.leaf` and compares with `root`.
///
/// `Ok(false)` means a well-formed proof for a different root; malformed
/// shapes (ragged rows, out-of-range indices, indices inconsistent with
/// `pos`) are errors.
pub fn verify(root: &Scalar, proof: &MerkleProof) -> Result<bool, MerkleError> {
    let depth = proof.depth();
    let arity = proof.arity();
    if depth == 0 || arity < 2 {
        return Err(MerkleError::MalformedProof("empty path"));
    }
    if proof.child_indices.len() != depth {
        return Err(MerkleError::MalformedProof("index count differs from depth"));
    }
    if proof.siblings.iter().any(|row| row.len() + 1 != arity) {
        return Err(MerkleError::MalformedProof("ragged sibling rows"));
    }
    let mut pos_from_indices: u128 = 0;
    let mut weight: u128 = 1;
    for &idx in &proof.child_indices {
        if idx as usize >= arity {
            return Err(MerkleError::MalformedProof("child index out of range"));
        }
        pos_from_indices += idx as u128 * weight;
        weight = weight.saturating_mul(arity as u128);
    }
    if pos_from_indices != proof.pos as u128 {
        return Err(MerkleError::MalformedProof("child indices disagree with position"));
    }

    let mut current = proof.leaf;
    let mut children = Vec::with_capacity(arity);
    for (row, &idx) in proof.siblings.iter().zip(&proof.child_indices) {
        children.clear();
        children.extend(row[..idx as usize].iter().map(|s| Element::Scalar(*s)));
        children.push(Element::Scalar(current));
        children.extend(row[idx as usize..].iter().map(|s| Element::Scalar(*s)));
        current = sponge(&children);
    }
    Ok(current == *root)
}

#[derive(Clone, Debug)]
pub struct MerkleTree {
    arity: usize,
    depth: usize,
    /// `levels[0]` are the leaves, `levels[depth]` holds the root once
    /// anything has been appended.
    levels: Vec<Vec<Scalar>>,
    /// Root of an all-empty subtree of each height.
    empty: Vec<Scalar>,
    history: Vec<Scalar>,
    history_index: HashMap<Scalar, usize>,
    last_invalidation: Option<usize>,
}

impl Default for MerkleTree {
    fn default() -> Self {
        Self::new(DEFAULT_ARITY, DEFAULT_DEPTH).expect("default shape is valid")
    }
}

impl PartialEq for MerkleTree {
    fn eq(&self, other: &Self) -> bool {
        self.arity == other.arity
            && self.depth == other.depth
            && self.levels[0] == other.levels[0]
            && self.history == other.history
            && self.last_invalidation == other.last_invalidation
    }
}

impl MerkleTree {
    pub fn new(arity: usize, depth: usize) -> Result<Self, MerkleError> {
        let shape_ok = (2..=16).contains(&arity)
            && depth >= 1
            && (arity as u64).checked_pow(depth as u32).is_some_and(|c| c <= 1 << 48);
        if !shape_ok {
            return Err(MerkleError::BadShape { arity, depth });
        }
        let mut empty = Vec::with_capacity(depth + 1);
        empty.push(empty_leaf());
        for l in 0..depth {
            let below = Element::Scalar(empty[l]);
            empty.push(sponge(&vec![below; arity]));
        }
        let root = empty[depth];
        Ok(MerkleTree {
            arity,
            depth,
            levels: vec![Vec::new(); depth + 1],
            empty,
            history: vec![root],
            history_index: HashMap::from([(root, 0)]),
            last_invalidation: None,
        })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn capacity(&self) -> u64 {
        (self.arity as u64).pow(self.depth as u32)
    }

    pub fn len(&self) -> u64 {
        self.levels[0].len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.levels[0].is_empty()
    }

    pub fn leaves(&self) -> &[Scalar] {
        &self.levels[0]
    }

    pub fn leaf(&self, pos: u64) -> Option<Scalar> {
        self.levels[0].get(pos as usize).copied()
    }

    pub fn root(&self) -> Scalar {
        *self.history.last().expect("history starts with the empty root")
    }

    /// Every root this tree has had, oldest first.
    pub fn root_history(&self) -> &[Scalar] {
        &self.history
    }

    /// Latest history index at which `root` was the current root.
    pub fn root_index(&self, root: &Scalar) -> Option<usize> {
        self.history_index.get(root).copied()
    }

    pub fn contains_root(&self, root: &Scalar) -> bool {
        self.history_index.contains_key(root)
    }

    /// History index of the root produced by the most recent invalidation.
    pub fn last_invalidation(&self) -> Option<usize> {
        self.last_invalidation
    }

    fn node(&self, level: usize, index: usize) -> Scalar {
        self.levels[level].get(index).copied().unwrap_or(self.empty[level])
    }

    fn set_node(&mut self, level: usize, index: usize, value: Scalar) {
        let row = &mut self.levels[level];
        if index < row.len() {
            row[index] = value;
        } else {
            debug_assert_eq!(index, row.len());
            row.push(value);
        }
    }

    fn rehash_path(&mut self, pos: usize) -> Scalar {
        let mut index = pos;
        let mut children = Vec::with_capacity(self.arity);
        for level in 0..self.depth {
            let parent = index / self.arity;
            children.clear();
            let first = parent * self.arity;
            children.extend((first..first + self.arity).map(|c| Element::Scalar(self.node(level, c))));
            let h = sponge(&children);
            self.set_node(level + 1, parent, h);
            index = parent;
        }
        self.levels[self.depth][0]
    }

    fn record_root(&mut self, root: Scalar) {
        self.history_index.insert(root, self.history.len());
        self.history.push(root);
    }

    /// Appends at the next free position and returns `(pos, new_root)`.
    pub fn append(&mut self, leaf: Scalar) -> Result<(u64, Scalar), MerkleError> {
        if self.len() >= self.capacity() {
            return Err(MerkleError::Full);
        }
        let pos = self.levels[0].len();
        self.levels[0].push(leaf);
        let root = self.rehash_path(pos);
        self.record_root(root);
        Ok((pos as u64, root))
    }

    pub fn prove(&self, pos: u64) -> Result<MerkleProof, MerkleError> {
        if pos >= self.len() {
            return Err(MerkleError::Vacant(pos));
        }
        let mut index = pos as usize;
        let mut siblings = Vec::with_capacity(self.depth);
        let mut child_indices = Vec::with_capacity(self.depth);
        for level in 0..self.depth {
            let parent = index / self.arity;
            let first = parent * self.arity;
            siblings.push((first..first + self.arity).filter(|&c| c != index).map(|c| self.node(level, c)).collect());
            child_indices.push((index - first) as u8);
            index = parent;
        }
        Ok(MerkleProof { leaf: self.levels[0][pos as usize], pos, siblings, child_indices })
    }

    /// Overwrites the leaf at `pos` with the tombstone. Idempotent: a second
    /// call returns the current root without recording a new one.
    pub fn invalidate(&mut self, pos: u64) -> Result<Scalar, MerkleError> {
        if pos >= self.len() {
            return Err(MerkleError::Vacant(pos));
        }
        if self.levels[0][pos as usize] == tombstone() {
            return Ok(self.root());
        }
        self.levels[0][pos as usize] = tombstone();
        let root = self.rehash_path(pos as usize);
        self.record_root(root);
        self.last_invalidation = Some(self.history.len() - 1);
        Ok(root)
    }

    /// Accepts a proof against any historical root, provided the proven leaf
    /// is still the current value at its position.
    pub fn verify_historical(&self, root: &Scalar, proof: &MerkleProof) -> bool {
        self.contains_root(root)
            && self.leaf(proof.pos) == Some(proof.leaf)
            && proof.depth() == self.depth
            && verify(root, proof).unwrap_or(false)
    }

    /// Rebuilds all levels bottom-up from `leaves`.
    fn from_leaves(arity: usize, depth: usize, leaves: Vec<Scalar>) -> Result<Self, MerkleError> {
        let mut tree = Self::new(arity, depth)?;
        if leaves.len() as u64 > tree.capacity() {
            return Err(MerkleError::Full);
        }
        tree.levels[0] = leaves;
        for level in 0..depth {
            let pad = tree.empty[level];
            let next: Vec<Scalar> = tree.levels[level]
                .chunks(arity)
                .map(|chunk| {
                    let mut children: Vec<Element> = chunk.iter().map(|s| Element::Scalar(*s)).collect();
                    children.resize(arity, Element::Scalar(pad));
                    sponge(&children)
                })
                .collect();
            tree.levels[level + 1] = next;
        }
        Ok(tree)
    }

    const FILE_MAGIC: &'static [u8; 8] = b"CITMRKL\0";
    const FILE_VERSION: u16 = 1;

    /// Versioned, checksummed file image.
    pub fn to_file_bytes(&self) -> Vec<u8> {
        codec::seal_envelope(Self::FILE_MAGIC, Self::FILE_VERSION, &self.to_canonical_bytes())
    }

    pub fn from_file_bytes(bytes: &[u8]) -> Result<Self, CodecError> {
        let payload = codec::open_envelope(Self::FILE_MAGIC, Self::FILE_VERSION, bytes)?;
        Self::from_canonical_bytes(payload)
    }
}

impl Canonical for MerkleProof {
    fn encode(&self, enc: &mut Encoder) {
        enc.scalar(&self.leaf);
        enc.u64(self.pos);
        enc.seq(&self.siblings, |e, row| e.seq(row, |e, s| e.scalar(s)));
        enc.bytes(&self.child_indices);
    }

    fn decode(dec: &mut Decoder<'_>) -> Result<Self, CodecError> {
        Ok(MerkleProof {
            leaf: dec.scalar()?,
            pos: dec.u64()?,
            siblings: dec.seq(|d| d.seq(|d| d.scalar()))?,
            child_indices: dec.bytes()?,
        })
    }
}

impl Canonical for MerkleTree {
    fn encode(&self, enc: &mut Encoder) {
        enc.u32(self.arity as u32);
        enc.u32(self.depth as u32);
        enc.u64(self.len());
        for leaf in &self.levels[0] {
            enc.scalar(leaf);
        }
        enc.seq(&self.history, |e, r| e.scalar(r));
        enc.option(self.last_invalidation.as_ref(), |e, i| e.u64(*i as u64));
    }

    fn decode(dec: &mut Decoder<'_>) -> Result<Self, CodecError> {
        let arity = dec.u32()? as usize;
        let depth = dec.u32()? as usize;
        let count = dec.u64()?;
        if count > (dec.remaining() / 32) as u64 {
            return Err(CodecError::Truncated);
        }
        let leaves = (0..count).map(|_| dec.scalar()).collect::<Result<Vec<_>, _>>()?;
        let history = dec.seq(|d| d.scalar())?;
        let last_invalidation = dec.option(|d| d.u64().map(|v| v as usize))?;

        let mut tree = Self::from_leaves(arity, depth, leaves).map_err(|e| CodecError::Invalid(e.to_string()))?;
        let rebuilt = if tree.is_empty() { tree.empty[depth] } else { tree.levels[depth][0] };
        if history.last() != Some(&rebuilt) {
            return Err(CodecError::Invalid("root history does not end at the rebuilt root".into()));
        }
        if last_invalidation.is_some_and(|i| i >= history.len()) {
            return Err(CodecError::Invalid("invalidation index beyond history".into()));
        }
        tree.history_index = history.iter().enumerate().map(|(i, r)| (*r, i)).collect();
        tree.history = history;
        tree.last_invalidation = last_invalidation;
        Ok(tree)
    }
}
