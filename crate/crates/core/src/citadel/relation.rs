use std::fmt;

use serde::{Deserialize, Serialize};

use crate::backend::{Clause, Proof, Relation};
use crate::codec::{Canonical, CodecError, Decoder, Encoder};
use crate::crypto::{
    commit, sponge, verify_double, verify_single, CommitKey, DoubleSignature, Element, GroupElement, Scalar, Signature,
};
use crate::merkle::{self, MerkleProof};
use crate::phoenix::{note_hash, Note};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LicenseStatement {
    pub notes_root: Scalar,
    pub nullifier_lic: Scalar,
    pub com0: Scalar,
    pub com1: GroupElement,
    pub com2: GroupElement,
    pub tx_hash: Scalar,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LicenseWitness {
    pub license_note: Note,
    pub merkle_proof: MerkleProof,
    pub npk_user: GroupElement,
    pub npk_prime_user: GroupElement,
    pub sig_tx: DoubleSignature,
    pub sig_lic: Signature,
    pub attr: Scalar,
    pub c: Scalar,
    pub lic_pk: GroupElement,
    pub s0: Scalar,
    pub s1: Scalar,
    pub s2: Scalar,
}

/// Public part of a license contract call; covered by the tx hash.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LicenseCallBody {
    pub notes_root: Scalar,
    pub nullifier_lic: Scalar,
    pub com0: Scalar,
    pub com1: GroupElement,
    pub com2: GroupElement,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LicenseCall {
    #[serde(flatten)]
    pub body: LicenseCallBody,
    pub proof: Proof,
}

impl LicenseCallBody {
    pub fn statement(&self, tx_hash: Scalar) -> LicenseStatement {
        LicenseStatement {
            notes_root: self.notes_root,
            nullifier_lic: self.nullifier_lic,
            com0: self.com0,
            com1: self.com1,
            com2: self.com2,
            tx_hash,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LicenseClause {
    LicenseSignature,
    Ownership,
    Membership,
    Nullifier,
    ProviderBlinding,
    AttributeCommitment,
    ChallengeCommitment,
}

impl LicenseClause {
    pub const ALL: [LicenseClause; 7] = [
        LicenseClause::LicenseSignature,
        LicenseClause::Ownership,
        LicenseClause::Membership,
        LicenseClause::Nullifier,
        LicenseClause::ProviderBlinding,
        LicenseClause::AttributeCommitment,
        LicenseClause::ChallengeCommitment,
    ];
}

impl Clause for LicenseClause {
    fn id(&self) -> &'static str {
        match self {
            LicenseClause::LicenseSignature => "license/signature",
            LicenseClause::Ownership => "license/ownership",
            LicenseClause::Membership => "license/membership",
            LicenseClause::Nullifier => "license/nullifier",
            LicenseClause::ProviderBlinding => "license/provider-blinding",
            LicenseClause::AttributeCommitment => "license/attribute-commitment",
            LicenseClause::ChallengeCommitment => "license/challenge-commitment",
        }
    }
}

impl fmt::Display for LicenseClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

pub struct LicenseRelation;

impl Relation for LicenseRelation {
    const NAME: &'static str = "citadel/license/v1";
    type Statement = LicenseStatement;
    type Witness = LicenseWitness;
    type Clause = LicenseClause;

    fn check(st: &LicenseStatement, w: &LicenseWitness) -> Result<(), LicenseClause> {
        check_license_relation(st, w)
    }
}

/// Message signed by the provider when issuing a license.
pub fn license_message(npk_user: &GroupElement, attr: Scalar) -> Scalar {
    sponge(&[Element::Point(*npk_user), Element::Scalar(attr)])
}

pub fn license_nullifier(npk_prime_user: &GroupElement, c: Scalar) -> Scalar {
    sponge(&[Element::Point(*npk_prime_user), Element::Scalar(c)])
}

pub fn provider_commitment(lic_pk: &GroupElement, s0: Scalar) -> Scalar {
    sponge(&[Element::Point(*lic_pk), Element::Scalar(s0)])
}

pub fn check_license_relation(st: &LicenseStatement, w: &LicenseWitness) -> Result<(), LicenseClause> {
    use LicenseClause::*;
    let ck = CommitKey::protocol();

    if !verify_single(&w.lic_pk, license_message(&w.npk_user, w.attr), &w.sig_lic) {
        return Err(LicenseSignature);
    }
    if !verify_double(&w.npk_user, &w.npk_prime_user, st.tx_hash, &w.sig_tx) {
        return Err(Ownership);
    }
    let leaf = note_hash(&w.license_note).map_err(|_| Membership)?;
    if w.license_note.npk != w.npk_user
        || w.merkle_proof.leaf != leaf
        || Some(w.merkle_proof.pos) != w.license_note.pos
        || !merkle::verify(&st.notes_root, &w.merkle_proof).unwrap_or(false)
    {
        return Err(Membership);
    }
    if license_nullifier(&w.npk_prime_user, w.c) != st.nullifier_lic {
        return Err(Nullifier);
    }
    if provider_commitment(&w.lic_pk, w.s0) != st.com0 {
        return Err(ProviderBlinding);
    }
    if commit(&ck, w.attr, w.s1) != st.com1 {
        return Err(AttributeCommitment);
    }
    if commit(&ck, w.c, w.s2) != st.com2 {
        return Err(ChallengeCommitment);
    }
    Ok(())
}

impl Canonical for LicenseCallBody {
    fn encode(&self, enc: &mut Encoder) {
        enc.scalar(&self.notes_root);
        enc.scalar(&self.nullifier_lic);
        enc.scalar(&self.com0);
        enc.point(&self.com1);
        enc.point(&self.com2);
    }

    fn decode(dec: &mut Decoder<'_>) -> Result<Self, CodecError> {
        Ok(LicenseCallBody {
            notes_root: dec.scalar()?,
            nullifier_lic: dec.scalar()?,
            com0: dec.scalar()?,
            com1: dec.point()?,
            com2: dec.point()?,
        })
    }
}

impl Canonical for LicenseCall {
    fn encode(&self, enc: &mut Encoder) {
        enc.item(&self.body);
        enc.item(&self.proof);
    }

    fn decode(dec: &mut Decoder<'_>) -> Result<Self, CodecError> {
        Ok(LicenseCall { body: dec.item()?, proof: dec.item()? })
    }
}
