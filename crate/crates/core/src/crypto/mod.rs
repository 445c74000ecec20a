//! Group, field, hashing, commitments, signatures, note keys and symmetric
//! encryption.

mod cipher;
mod commitment;
mod field;
mod hash;
mod keys;
mod schnorr;
mod sponge;

pub use cipher::{decode_elements, decrypt, derive_symmetric_key, encode_elements, encrypt, SymKey};
pub use commitment::{commit, open, CommitKey};
pub use field::{Element, GroupElement, Scalar};
pub use hash::{generator_g, generator_g_prime, hash_fast, hash_to_group};
pub use keys::{
    gen_note_keypair, gen_static_keys, recover_note_secret, NoteKeyPair, NoteSecretKey, PublicKey, StaticKeys, ViewKey,
};
pub use schnorr::{public_key, sign_double, sign_single, verify_double, verify_single, DoubleSignature, Signature};
pub use sponge::hash_sponge;

pub(crate) use cipher::{open_bytes, seal_bytes};
pub(crate) use hash::blake2b_512;
pub(crate) use sponge::sponge;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CryptoError {
    #[error("non-canonical scalar encoding")]
    NonCanonicalScalar,
    #[error("invalid or non-canonical group element encoding")]
    InvalidPoint,
    #[error("expected {expected} bytes, got {got}")]
    BadLength { expected: usize, got: usize },
    #[error("invalid hex")]
    BadHex,
    #[error("sponge hash needs at least one input")]
    EmptyHashInput,
    #[error("identity or zero key")]
    IdentityKey,
    #[error("note is not addressed to this key")]
    NotAddressedToKey,
    #[error("authentication failure")]
    Authentication,
    #[error("malformed plaintext")]
    MalformedPlaintext,
}

/// Packs a byte string into field elements: its length, then 31-byte
/// little-endian chunks.
pub fn bytes_to_elements(bytes: &[u8]) -> Vec<Element> {
    let mut out = Vec::with_capacity(1 + bytes.len().div_ceil(31));
    out.push(Element::from(bytes.len() as u64));
    out.extend(bytes.chunks(31).map(|c| Element::Scalar(Scalar::from_le_bytes_short(c))));
    out
}

/// ASCII tag packed into a single scalar.
pub fn domain_tag(tag: &str) -> Scalar {
    Scalar::from_le_bytes_short(tag.as_bytes())
}
