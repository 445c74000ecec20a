//! Byte-oriented hashing: BLAKE2b for the fast hash and for deriving the
//! fixed generators.

use std::sync::LazyLock;

use blake2::{Blake2b512, Digest};
use group::cofactor::CofactorGroup;
use jubjub::{AffinePoint, ExtendedPoint};

use super::field::{GroupElement, Scalar};

pub(crate) fn blake2b_512(data: &[u8]) -> [u8; 64] {
    let mut out = [0u8; 64];
    out.copy_from_slice(&Blake2b512::digest(data));
    out
}

/// BLAKE2b-512 of `bytes`, reduced into `F_t`.
pub fn hash_fast(bytes: &[u8]) -> Scalar {
    Scalar::from_bytes_wide(&blake2b_512(bytes))
}

/// Try-and-increment hash into the prime-order subgroup.
///
/// Candidate encodings come from BLAKE2b(tag || counter); the first one that
/// decodes to a curve point whose cofactor-cleared multiple is not the
/// identity is used.
pub fn hash_to_group(tag: &[u8]) -> GroupElement {
    for counter in 0u32.. {
        let mut msg = tag.to_vec();
        msg.extend_from_slice(&counter.to_le_bytes());
        let digest = blake2b_512(&msg);
        let mut candidate = [0u8; 32];
        candidate.copy_from_slice(&digest[..32]);
        let Some(affine) = Option::<AffinePoint>::from(AffinePoint::from_bytes(candidate)) else {
            continue;
        };
        let p = ExtendedPoint::from(affine).clear_cofactor();
        let g = GroupElement::from_subgroup(p);
        if !g.is_identity() {
            return g;
        }
    }
    unreachable!("counter space exhausted")
}

static G: LazyLock<GroupElement> = LazyLock::new(|| hash_to_group(b"citadel/generator/G"));
static G_PRIME: LazyLock<GroupElement> = LazyLock::new(|| hash_to_group(b"citadel/generator/G'"));

/// First protocol generator `G`.
pub fn generator_g() -> GroupElement {
    *G
}

/// Second protocol generator `G'`, with no known discrete log relative to `G`.
pub fn generator_g_prime() -> GroupElement {
    *G_PRIME
}
