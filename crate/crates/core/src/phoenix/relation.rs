//! The transaction relation.
//!
//! Per spend: the note type is public and a value type, the note is in the
//! tree, the prover controls `(npk, npk')`, the nullifier is `H(npk', pos)`
//! and the commitment opens. Over all openings the balance equation holds
//! with every term range-checked.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::backend::{Clause, Relation};
use crate::crypto::{commit, verify_double, CommitKey, DoubleSignature, GroupElement, Scalar};
use crate::merkle::{self, MerkleProof};

use super::note::{in_range, note_hash, nullifier_from_key, Note, NoteType, ValueOpening};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TxStatement {
    pub notes_root: Scalar,
    pub nullifiers: Vec<Scalar>,
    /// Type of each spent note, public so the network can refuse NFT spends.
    pub spend_types: Vec<NoteType>,
    /// Commitments of the value notes minted, in mint order.
    pub mint_commitments: Vec<GroupElement>,
    pub gas: Scalar,
    pub tx_hash: Scalar,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpendWitness {
    pub note: Note,
    pub merkle_proof: MerkleProof,
    pub npk_prime: GroupElement,
    pub opening: ValueOpening,
    pub sig: DoubleSignature,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TxWitness {
    pub spends: Vec<SpendWitness>,
    pub mints: Vec<ValueOpening>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TxClause {
    Membership,
    Ownership,
    Nullification,
    Commitment,
    Balance,
    TypePublicity,
}

impl TxClause {
    pub const ALL: [TxClause; 6] = [
        TxClause::Membership,
        TxClause::Ownership,
        TxClause::Nullification,
        TxClause::Commitment,
        TxClause::Balance,
        TxClause::TypePublicity,
    ];
}

impl Clause for TxClause {
    fn id(&self) -> &'static str {
        match self {
            TxClause::Membership => "tx/membership",
            TxClause::Ownership => "tx/ownership",
            TxClause::Nullification => "tx/nullification",
            TxClause::Commitment => "tx/commitment",
            TxClause::Balance => "tx/balance",
            TxClause::TypePublicity => "tx/type-publicity",
        }
    }
}

impl fmt::Display for TxClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

pub struct TxRelation;

impl Relation for TxRelation {
    const NAME: &'static str = "phoenix/tx/v1";
    type Statement = TxStatement;
    type Witness = TxWitness;
    type Clause = TxClause;

    fn check(st: &TxStatement, w: &TxWitness) -> Result<(), TxClause> {
        check_tx_relation(st, w)
    }
}

pub fn check_tx_relation(st: &TxStatement, w: &TxWitness) -> Result<(), TxClause> {
    use TxClause::*;
    let ck = CommitKey::protocol();

    if st.spend_types.len() != w.spends.len() {
        return Err(TypePublicity);
    }
    if st.nullifiers.len() != w.spends.len() {
        return Err(Nullification);
    }
    if st.mint_commitments.len() != w.mints.len() {
        return Err(Commitment);
    }

    for ((sw, ty), nullifier) in w.spends.iter().zip(&st.spend_types).zip(&st.nullifiers) {
        if !ty.is_value() || sw.note.note_type != *ty {
            return Err(TypePublicity);
        }

        let pos = sw.note.pos.ok_or(Membership)?;
        let leaf = note_hash(&sw.note).map_err(|_| Membership)?;
        if sw.merkle_proof.leaf != leaf || sw.merkle_proof.pos != pos {
            return Err(Membership);
        }
        if !merkle::verify(&st.notes_root, &sw.merkle_proof).unwrap_or(false) {
            return Err(Membership);
        }

        if !verify_double(&sw.note.npk, &sw.npk_prime, st.tx_hash, &sw.sig) {
            return Err(Ownership);
        }

        if nullifier_from_key(&sw.npk_prime, pos).0 != *nullifier {
            return Err(Nullification);
        }

        match sw.note.com {
            Some(com) if commit(&ck, sw.opening.value, sw.opening.blinder) == com => {}
            _ => return Err(Commitment),
        }
    }
    for (opening, com) in w.mints.iter().zip(&st.mint_commitments) {
        if commit(&ck, opening.value, opening.blinder) != *com {
            return Err(Commitment);
        }
    }

    // Each term is below 2^62 and there are far fewer than 2^190 terms, so
    // the field equation cannot wrap.
    let terms = w.spends.iter().map(|s| &s.opening.value).chain(w.mints.iter().map(|m| &m.value));
    for v in terms.chain(std::iter::once(&st.gas)) {
        if in_range(v).is_none() {
            return Err(Balance);
        }
    }
    let spent: Scalar = w.spends.iter().map(|s| s.opening.value).sum();
    let minted: Scalar = w.mints.iter().map(|m| m.value).sum();
    if spent - minted - st.gas != Scalar::ZERO {
        return Err(Balance);
    }
    Ok(())
}
