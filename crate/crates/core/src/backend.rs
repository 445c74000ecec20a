//! Proving-backend contract and the default transparent backend.
//!
//! A [`Relation`] is a statement/witness pair with a checker that either
//! accepts or names the first clause that fails. A [`ProofBackend`] turns a
//! satisfying pair into a [`Proof`] and later decides whether a proof is
//! valid for a statement.
//!
//! [`TransparentBackend`] is not zero-knowledge and not succinct. Its proof
//! is a commitment to `(statement, witness)` plus the witness sealed under the
//! backend's verifier key; verification opens the seal, re-checks the
//! commitment and re-runs the relation checker. Anyone holding the verifier
//! key learns the witness.

use std::fmt;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{Canonical, CodecError, Decoder, Encoder};
use crate::crypto::{blake2b_512, hash_fast, open_bytes, seal_bytes, SymKey};

/// Machine-readable identifier of a relation clause.
pub trait Clause: Copy + fmt::Debug + fmt::Display + PartialEq + Eq {
    fn id(&self) -> &'static str;
}

pub trait Relation {
    const NAME: &'static str;
    type Statement: Serialize + DeserializeOwned;
    type Witness: Serialize + DeserializeOwned;
    type Clause: Clause;

    fn check(statement: &Self::Statement, witness: &Self::Witness) -> Result<(), Self::Clause>;
}

#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Proof {
    pub backend: String,
    pub relation: String,
    #[serde(with = "hex_bytes")]
    pub commitment: Vec<u8>,
    #[serde(with = "hex_bytes")]
    pub body: Vec<u8>,
}

impl fmt::Debug for Proof {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Proof")
            .field("backend", &self.backend)
            .field("relation", &self.relation)
            .field("commitment", &hex::encode(&self.commitment))
            .field("body_len", &self.body.len())
            .finish()
    }
}

impl Canonical for Proof {
    fn encode(&self, enc: &mut Encoder) {
        enc.bytes(self.backend.as_bytes());
        enc.bytes(self.relation.as_bytes());
        enc.bytes(&self.commitment);
        enc.bytes(&self.body);
    }

    fn decode(dec: &mut Decoder<'_>) -> Result<Self, CodecError> {
        let text = |b: Vec<u8>| String::from_utf8(b).map_err(|_| CodecError::Invalid("non-utf8 identifier".into()));
        Ok(Proof {
            backend: text(dec.bytes()?)?,
            relation: text(dec.bytes()?)?,
            commitment: dec.bytes()?,
            body: dec.bytes()?,
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BackendError {
    #[error("relation {relation} not satisfied: clause {clause}")]
    Unsatisfied { relation: &'static str, clause: &'static str },
    #[error("proof was produced by backend {0}")]
    WrongBackend(String),
    #[error("proof is for relation {0}")]
    WrongRelation(String),
    #[error("proof does not match the statement")]
    Mismatch,
    #[error("malformed proof: {0}")]
    Malformed(String),
}

impl BackendError {
    /// Clause identifier when the failure is a relation clause.
    pub fn clause(&self) -> Option<&'static str> {
        match self {
            BackendError::Unsatisfied { clause, .. } => Some(clause),
            _ => None,
        }
    }
}

pub trait ProofBackend {
    fn id(&self) -> &'static str;

    fn prove<R: Relation>(&self, statement: &R::Statement, witness: &R::Witness) -> Result<Proof, BackendError>;

    fn verify<R: Relation>(&self, statement: &R::Statement, proof: &Proof) -> Result<(), BackendError>;
}

/// Re-checks the relation on verification from a witness sealed to the
/// verifier.
#[derive(Clone)]
pub struct TransparentBackend {
    seal_key: SymKey,
}

impl fmt::Debug for TransparentBackend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("TransparentBackend")
    }
}

impl Default for TransparentBackend {
    fn default() -> Self {
        Self::with_seed(b"citadel/transparent-backend/default")
    }
}

impl TransparentBackend {
    pub const ID: &'static str = "transparent-witness-check/v1";

    /// Backend whose verifier key is derived from `seed`. Prover and verifier
    /// must agree on the seed.
    pub fn with_seed(seed: &[u8]) -> Self {
        TransparentBackend { seal_key: SymKey(hash_fast(seed).to_bytes()) }
    }

    fn commitment(relation: &str, statement: &[u8], witness: &[u8]) -> [u8; 32] {
        let mut msg = b"citadel/transparent-backend/commitment".to_vec();
        for part in [relation.as_bytes(), statement, witness] {
            msg.extend_from_slice(&(part.len() as u64).to_le_bytes());
            msg.extend_from_slice(part);
        }
        blake2b_512(&msg)[..32].try_into().unwrap()
    }

    fn aad(relation: &str, statement: &[u8]) -> Vec<u8> {
        let mut aad = relation.as_bytes().to_vec();
        aad.push(0);
        aad.extend_from_slice(statement);
        aad
    }

    /// Seals a witness without checking the relation first. Honest provers
    /// use [`ProofBackend::prove`]; this exists so tests can submit proofs of
    /// false statements and watch the verifier reject them.
    pub fn prove_unchecked<R: Relation>(&self, statement: &R::Statement, witness: &R::Witness) -> Proof {
        let stmt = serde_json::to_vec(statement).expect("statement serializes");
        let wit = serde_json::to_vec(witness).expect("witness serializes");
        let commitment = Self::commitment(R::NAME, &stmt, &wit);
        let nonce: [u8; 24] = commitment[..24].try_into().unwrap();
        let body = seal_bytes(&self.seal_key, &nonce, &Self::aad(R::NAME, &stmt), &wit);
        Proof { backend: Self::ID.into(), relation: R::NAME.into(), commitment: commitment.to_vec(), body }
    }
}

impl ProofBackend for TransparentBackend {
    fn id(&self) -> &'static str {
        Self::ID
    }

    fn prove<R: Relation>(&self, statement: &R::Statement, witness: &R::Witness) -> Result<Proof, BackendError> {
        R::check(statement, witness).map_err(|c| BackendError::Unsatisfied { relation: R::NAME, clause: c.id() })?;
        Ok(self.prove_unchecked::<R>(statement, witness))
    }

    fn verify<R: Relation>(&self, statement: &R::Statement, proof: &Proof) -> Result<(), BackendError> {
        if proof.backend != Self::ID {
            return Err(BackendError::WrongBackend(proof.backend.clone()));
        }
        if proof.relation != R::NAME {
            return Err(BackendError::WrongRelation(proof.relation.clone()));
        }
        let nonce: [u8; 24] = proof
            .commitment
            .get(..24)
            .and_then(|n| n.try_into().ok())
            .ok_or_else(|| BackendError::Malformed("short commitment".into()))?;
        let stmt = serde_json::to_vec(statement).expect("statement serializes");
        let wit = open_bytes(&self.seal_key, &nonce, &Self::aad(R::NAME, &stmt), &proof.body)
            .map_err(|_| BackendError::Mismatch)?;
        if Self::commitment(R::NAME, &stmt, &wit)[..] != proof.commitment[..] {
            return Err(BackendError::Mismatch);
        }
        let witness: R::Witness = serde_json::from_slice(&wit).map_err(|e| BackendError::Malformed(e.to_string()))?;
        R::check(statement, &witness).map_err(|c| BackendError::Unsatisfied { relation: R::NAME, clause: c.id() })
    }
}

pub(crate) mod hex_bytes {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(b: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(b))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        hex::decode(s).map_err(serde::de::Error::custom)
    }
}
