//! Single-key and double-key Schnorr signatures.
//!
//! Challenges are sponge hashes so that verification uses the same hash as
//! the relation checks. The double-key variant proves that `pk = sk·G` and
//! `pk' = sk·G'` share one secret.

use rand::CryptoRng;
use serde::{Deserialize, Serialize};

use super::field::{Element, GroupElement, Scalar};
use super::hash::{generator_g, generator_g_prime};
use super::sponge::sponge;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Signature {
    pub r: GroupElement,
    pub u: Scalar,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DoubleSignature {
    pub r: GroupElement,
    pub r_prime: GroupElement,
    pub u: Scalar,
}

fn challenge_single(m: Scalar, r: &GroupElement) -> Scalar {
    sponge(&[Element::Scalar(m), Element::Point(*r)])
}

fn challenge_double(m: Scalar, r: &GroupElement, r_prime: &GroupElement) -> Scalar {
    sponge(&[Element::Scalar(m), Element::Point(*r), Element::Point(*r_prime)])
}

pub fn public_key(sk: Scalar) -> GroupElement {
    generator_g() * sk
}

pub fn sign_single<R: CryptoRng + ?Sized>(sk: Scalar, m: Scalar, rng: &mut R) -> Signature {
    let nonce = Scalar::random_nonzero(rng);
    let r = generator_g() * nonce;
    let c = challenge_single(m, &r);
    Signature { r, u: nonce - c * sk }
}

pub fn verify_single(pk: &GroupElement, m: Scalar, sig: &Signature) -> bool {
    let c = challenge_single(m, &sig.r);
    sig.r == generator_g() * sig.u + *pk * c
}

pub fn sign_double<R: CryptoRng + ?Sized>(sk: Scalar, m: Scalar, rng: &mut R) -> DoubleSignature {
    let nonce = Scalar::random_nonzero(rng);
    let r = generator_g() * nonce;
    let r_prime = generator_g_prime() * nonce;
    let c = challenge_double(m, &r, &r_prime);
    DoubleSignature { r, r_prime, u: nonce - c * sk }
}

pub fn verify_double(pk: &GroupElement, pk_prime: &GroupElement, m: Scalar, sig: &DoubleSignature) -> bool {
    let c = challenge_double(m, &sig.r, &sig.r_prime);
    sig.r == generator_g() * sig.u + *pk * c && sig.r_prime == generator_g_prime() * sig.u + *pk_prime * c
}
