//! Long-term and per-note keys.
//!
//! A user holds `(a, b)` with public `(A, B) = (a·G, b·G)`. A sender picks an
//! ephemeral `r`, shares `k_dh = r·A` and addresses the note to the one-time
//! key `npk = H(k_dh)·G + B`, publishing `R = r·G`. Whoever knows `a` can
//! recognise the note (`a·R = k_dh`); only whoever also knows `b` can compute
//! `nsk = H(k_dh) + b`, the discrete log of `npk`.

use rand::CryptoRng;
use serde::{Deserialize, Serialize};

use super::field::{GroupElement, Scalar};
use super::hash::{generator_g, generator_g_prime, hash_fast};
use super::CryptoError;

#[derive(Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct StaticKeys {
    pub a: Scalar,
    pub b: Scalar,
    pub pk: PublicKey,
}

impl std::fmt::Debug for StaticKeys {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StaticKeys").field("pk", &self.pk).finish_non_exhaustive()
    }
}

/// The public pair `(A, B)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PublicKey {
    pub a: GroupElement,
    pub b: GroupElement,
}

impl PublicKey {
    pub fn to_bytes(&self) -> [u8; 64] {
        let mut out = [0u8; 64];
        out[..32].copy_from_slice(&self.a.to_bytes());
        out[32..].copy_from_slice(&self.b.to_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CryptoError> {
        if bytes.len() != 64 {
            return Err(CryptoError::BadLength { expected: 64, got: bytes.len() });
        }
        Ok(PublicKey { a: GroupElement::from_slice(&bytes[..32])?, b: GroupElement::from_slice(&bytes[32..])? })
    }
}

/// Scanning capability: detects incoming notes, cannot spend them.
#[derive(Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
pub struct ViewKey {
    pub a: Scalar,
    pub b_pub: GroupElement,
}

impl std::fmt::Debug for ViewKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ViewKey").field("b_pub", &self.b_pub).finish_non_exhaustive()
    }
}

/// Addressing data a sender attaches to a note, plus the shared point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NoteKeyPair {
    pub npk: GroupElement,
    pub r: GroupElement,
    pub k_dh: GroupElement,
}

/// Spend authority over one note: `nsk` and the nullification key
/// `npk' = nsk·G'`.
#[derive(Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoteSecretKey {
    pub nsk: Scalar,
    pub npk_prime: GroupElement,
}

impl std::fmt::Debug for NoteSecretKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NoteSecretKey").field("npk_prime", &self.npk_prime).finish_non_exhaustive()
    }
}

impl NoteSecretKey {
    pub fn from_nsk(nsk: Scalar) -> Self {
        NoteSecretKey { nsk, npk_prime: generator_g_prime() * nsk }
    }

    /// `nsk·G`, the note public key this secret controls.
    pub fn npk(&self) -> GroupElement {
        generator_g() * self.nsk
    }
}

pub fn gen_static_keys<R: CryptoRng + ?Sized>(rng: &mut R) -> StaticKeys {
    let a = Scalar::random_nonzero(rng);
    let b = Scalar::random_nonzero(rng);
    StaticKeys::from_secrets(a, b).expect("non-zero secrets")
}

impl StaticKeys {
    pub fn from_secrets(a: Scalar, b: Scalar) -> Result<Self, CryptoError> {
        if a.is_zero() || b.is_zero() {
            return Err(CryptoError::IdentityKey);
        }
        let g = generator_g();
        Ok(StaticKeys { a, b, pk: PublicKey { a: g * a, b: g * b } })
    }

    pub fn view_key(&self) -> ViewKey {
        ViewKey { a: self.a, b_pub: self.pk.b }
    }
}

fn one_time_offset(k_dh: &GroupElement) -> Scalar {
    hash_fast(&k_dh.to_bytes())
}

/// Sender side: derive `(npk, R, k_dh)` for the receiver `pk`; also returns
/// the ephemeral `r`.
pub fn gen_note_keypair<R: CryptoRng + ?Sized>(
    pk: &PublicKey,
    rng: &mut R,
) -> Result<(NoteKeyPair, Scalar), CryptoError> {
    if pk.a.is_identity() || pk.b.is_identity() {
        return Err(CryptoError::IdentityKey);
    }
    let r = Scalar::random_nonzero(rng);
    let k_dh = pk.a * r;
    let npk = generator_g() * one_time_offset(&k_dh) + pk.b;
    Ok((NoteKeyPair { npk, r: generator_g() * r, k_dh }, r))
}

impl ViewKey {
    /// Receiver's view of the shared point, `a·R`.
    pub fn shared_point(&self, r: &GroupElement) -> GroupElement {
        *r * self.a
    }

    /// Whether `(npk, R)` addresses the owner of this view key.
    pub fn owns(&self, npk: &GroupElement, r: &GroupElement) -> bool {
        let k_dh = self.shared_point(r);
        generator_g() * one_time_offset(&k_dh) + self.b_pub == *npk
    }
}

/// Receiver side: `nsk = H(a·R) + b`, after checking the note is addressed
/// to `sk`.
pub fn recover_note_secret(
    sk: &StaticKeys,
    npk: &GroupElement,
    r: &GroupElement,
) -> Result<NoteSecretKey, CryptoError> {
    if !sk.view_key().owns(npk, r) {
        return Err(CryptoError::NotAddressedToKey);
    }
    let k_dh = *r * sk.a;
    Ok(NoteSecretKey::from_nsk(one_time_offset(&k_dh) + sk.b))
}
