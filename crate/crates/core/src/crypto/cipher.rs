//! Authenticated symmetric encryption of field-element lists.
//!
//! XChaCha20-Poly1305 with the key taken from [`SymKey`] and the 24-byte
//! nonce taken from the low bytes of a scalar nonce. Each plaintext element
//! is serialized as a kind byte followed by its 32-byte canonical encoding.

use chacha20poly1305::aead::{Aead, KeyInit, Payload};
use chacha20poly1305::{Key, XChaCha20Poly1305, XNonce};
use serde::{Deserialize, Serialize};

use super::field::{Element, GroupElement, Scalar};
use super::hash::hash_fast;
use super::CryptoError;

/// 32-byte symmetric key.
#[derive(Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymKey(pub [u8; 32]);

impl SymKey {
    /// Uses a field element as key material directly.
    pub fn from_scalar(k: Scalar) -> Self {
        SymKey(k.to_bytes())
    }
}

impl std::fmt::Debug for SymKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("SymKey(..)")
    }
}

/// `hash_fast` of the point's canonical encoding.
pub fn derive_symmetric_key(k: &GroupElement) -> SymKey {
    SymKey(hash_fast(&k.to_bytes()).to_bytes())
}

fn nonce_bytes(nonce: &Scalar) -> XNonce {
    let b = nonce.to_bytes();
    XNonce::from(<[u8; 24]>::try_from(&b[..24]).unwrap())
}

fn cipher(key: &SymKey) -> XChaCha20Poly1305 {
    XChaCha20Poly1305::new(&Key::from(key.0))
}

const AAD: &[u8] = b"citadel/note-encryption/v1";

pub fn encode_elements(items: &[Element]) -> Vec<u8> {
    let mut out = Vec::with_capacity(items.len() * 33);
    for e in items {
        out.push(e.tag());
        out.extend_from_slice(&e.to_bytes());
    }
    out
}

pub fn decode_elements(bytes: &[u8]) -> Result<Vec<Element>, CryptoError> {
    if !bytes.len().is_multiple_of(33) {
        return Err(CryptoError::MalformedPlaintext);
    }
    bytes
        .chunks(33)
        .map(|chunk| {
            let body = &chunk[1..];
            match chunk[0] {
                0 => Scalar::from_slice(body).map(Element::Scalar),
                1 => GroupElement::from_slice(body).map(Element::Point),
                _ => Err(CryptoError::MalformedPlaintext),
            }
        })
        .collect()
}

pub fn encrypt(key: &SymKey, plaintext: &[Element], nonce: &Scalar) -> Vec<u8> {
    let msg = encode_elements(plaintext);
    cipher(key).encrypt(&nonce_bytes(nonce), Payload { msg: &msg, aad: AAD }).expect("in-memory encryption cannot fail")
}

pub fn decrypt(key: &SymKey, ciphertext: &[u8], nonce: &Scalar) -> Result<Vec<Element>, CryptoError> {
    let msg = cipher(key)
        .decrypt(&nonce_bytes(nonce), Payload { msg: ciphertext, aad: AAD })
        .map_err(|_| CryptoError::Authentication)?;
    decode_elements(&msg)
}

/// Raw AEAD over bytes with caller-chosen nonce and associated data.
pub(crate) fn seal_bytes(key: &SymKey, nonce: &[u8; 24], aad: &[u8], msg: &[u8]) -> Vec<u8> {
    cipher(key).encrypt(&XNonce::from(*nonce), Payload { msg, aad }).expect("in-memory encryption cannot fail")
}

pub(crate) fn open_bytes(key: &SymKey, nonce: &[u8; 24], aad: &[u8], ct: &[u8]) -> Result<Vec<u8>, CryptoError> {
    cipher(key).decrypt(&XNonce::from(*nonce), Payload { msg: ct, aad }).map_err(|_| CryptoError::Authentication)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::generator_g;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn sample() -> (SymKey, Vec<Element>, Scalar) {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let k = derive_symmetric_key(&(generator_g() * Scalar::random(&mut rng)));
        let pt = vec![Element::from(10u64), Element::Point(generator_g()), Element::Scalar(Scalar::random(&mut rng))];
        (k, pt, Scalar::random(&mut rng))
    }

    #[test]
    fn roundtrip() {
        let (k, pt, n) = sample();
        assert_eq!(decrypt(&k, &encrypt(&k, &pt, &n), &n).unwrap(), pt);
    }

    #[test]
    fn every_bit_flip_fails_closed() {
        let (k, pt, n) = sample();
        let ct = encrypt(&k, &pt, &n);
        for i in 0..ct.len() * 8 {
            let mut bad = ct.clone();
            bad[i / 8] ^= 1 << (i % 8);
            assert!(matches!(decrypt(&k, &bad, &n), Err(CryptoError::Authentication)));
        }
    }

    #[test]
    fn wrong_key_or_nonce_fails_closed() {
        let (k, pt, n) = sample();
        let ct = encrypt(&k, &pt, &n);
        let mut other = k;
        other.0[0] ^= 1;
        assert!(matches!(decrypt(&other, &ct, &n), Err(CryptoError::Authentication)));
        assert!(matches!(decrypt(&k, &ct, &(n + Scalar::ONE)), Err(CryptoError::Authentication)));
    }
}
