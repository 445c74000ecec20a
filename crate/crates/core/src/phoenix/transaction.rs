use rand::CryptoRng;
use serde::{Deserialize, Serialize};

use crate::backend::{Proof, ProofBackend};
use crate::citadel::{LicenseCall, LicenseCallBody};
use crate::codec::{open_envelope, seal_envelope, Canonical, CodecError, Decoder, Encoder};
use crate::crypto::{
    bytes_to_elements, commit, derive_symmetric_key, domain_tag, gen_note_keypair, sign_double, sponge, CommitKey,
    DoubleSignature, Element, GroupElement, NoteSecretKey, PublicKey, Scalar, SymKey,
};
use crate::merkle::{self, MerkleProof};

use super::note::{
    compute_nullifier, mint_nft, mint_value_note, note_hash, NonceLog, Note, NoteType, Nullifier, ValueOpening,
    MAX_VALUE,
};
use super::relation::{SpendWitness, TxRelation, TxStatement, TxWitness};
use super::TxError;

const TX_MAGIC: &[u8; 8] = b"CITADLTX";
const TX_VERSION: u16 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "call", rename_all = "kebab-case")]
pub enum ContractCall {
    License(LicenseCall),
}

impl ContractCall {
    pub fn as_license(&self) -> Option<&LicenseCall> {
        match self {
            ContractCall::License(c) => Some(c),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    pub spends: Vec<Nullifier>,
    pub mints: Vec<Note>,
    pub gas: u64,
    pub contract_call: Option<ContractCall>,
    pub tx_hash: Scalar,
    pub sig_tx: Vec<DoubleSignature>,
    pub statement: TxStatement,
    pub proof: Proof,
}

/// Sponge hash over the canonical encoding of spends, mints, gas and the
/// public part of the contract call. Signatures and proofs are excluded.
pub fn tx_hash_of(spends: &[Nullifier], mints: &[Note], gas: u64, call: Option<&LicenseCallBody>) -> Scalar {
    let mut enc = Encoder::default();
    enc.seq(spends, |e, n| e.scalar(&n.0));
    enc.seq(mints, |e, n| e.item(n));
    enc.u64(gas);
    enc.option(call, |e, c| {
        e.u8(0);
        e.item(c)
    });
    let mut items = vec![Element::Scalar(domain_tag("citadel/tx-hash"))];
    items.extend(bytes_to_elements(&enc.finish()));
    sponge(&items)
}

impl Transaction {
    pub fn compute_hash(&self) -> Scalar {
        let body = self.contract_call.as_ref().and_then(|c| c.as_license()).map(|c| &c.body);
        tx_hash_of(&self.spends, &self.mints, self.gas, body)
    }

    /// Commitments of the value notes among the mints, in order.
    pub fn value_mint_commitments(&self) -> Vec<GroupElement> {
        value_commitments(&self.mints)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        seal_envelope(TX_MAGIC, TX_VERSION, &self.to_canonical_bytes())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CodecError> {
        Self::from_canonical_bytes(open_envelope(TX_MAGIC, TX_VERSION, bytes)?)
    }
}

fn value_commitments(mints: &[Note]) -> Vec<GroupElement> {
    mints.iter().filter(|n| n.note_type.is_value()).filter_map(|n| n.com).collect()
}

/// A value note the caller can spend, with its current membership proof.
#[derive(Clone, Debug)]
pub struct SpendInput {
    pub note: Note,
    pub nsk: NoteSecretKey,
    pub opening: ValueOpening,
    pub merkle_proof: MerkleProof,
}

#[derive(Clone, Debug)]
pub enum NftRecipient {
    /// Fresh one-time key for a static public key; obfuscated payloads use
    /// the Diffie-Hellman key.
    Key(PublicKey),
    /// Explicit one-time key and symmetric key.
    OneTime { npk: GroupElement, r: GroupElement, key: SymKey },
}

#[derive(Clone, Debug)]
pub enum Output {
    Value { to: PublicKey, value: u64, obfuscated: bool },
    Nft { recipient: NftRecipient, payload: Vec<Element>, obfuscated: bool },
}

/// Value notes chosen to pay for a transaction, the root their proofs
/// verify against, and where change goes.
#[derive(Clone, Debug)]
pub struct Funding {
    pub spends: Vec<SpendInput>,
    pub notes_root: Scalar,
    pub change_to: PublicKey,
}

impl Funding {
    pub fn total(&self) -> u128 {
        self.spends.iter().filter_map(|s| s.opening.value_u64()).map(u128::from).sum()
    }

    /// Adds an obfuscated change note of `Σ spent - Σ minted - gas`, if
    /// non-zero.
    pub fn add_change(&self, outputs: &mut Vec<Output>, gas: u64) -> Result<(), TxError> {
        let out: u128 = outputs
            .iter()
            .map(|o| match o {
                Output::Value { value, .. } => *value as u128,
                Output::Nft { .. } => 0,
            })
            .sum();
        let needed = out + gas as u128;
        let change =
            self.total().checked_sub(needed).ok_or(TxError::InsufficientFunds { needed, available: self.total() })?;
        if change > 0 {
            let value = u64::try_from(change).map_err(|_| TxError::ValueOutOfRange)?;
            outputs.push(Output::Value { to: self.change_to, value, obfuscated: true });
        }
        Ok(())
    }
}

/// Everything up to the tx hash; proofs and signatures come in
/// [`PreparedTx::finalize`].
#[derive(Clone, Debug)]
pub struct PreparedTx {
    spends: Vec<SpendInput>,
    nullifiers: Vec<Nullifier>,
    mints: Vec<Note>,
    mint_openings: Vec<Option<ValueOpening>>,
    gas: u64,
    call: Option<LicenseCallBody>,
    notes_root: Scalar,
    tx_hash: Scalar,
}

/// A finished transaction plus the secrets its builder knows.
#[derive(Clone, Debug)]
pub struct BuiltTx {
    pub tx: Transaction,
    /// Opening of each mint, `None` for NFTs.
    pub mint_openings: Vec<Option<ValueOpening>>,
    pub witness: TxWitness,
}

fn u64_value(opening: &ValueOpening) -> Result<u64, TxError> {
    opening.value_u64().ok_or(TxError::ValueOutOfRange)
}

pub fn prepare_transaction<R: CryptoRng + ?Sized>(
    spends: Vec<SpendInput>,
    outputs: &[Output],
    gas: u64,
    call: Option<LicenseCallBody>,
    notes_root: Scalar,
    log: &mut NonceLog,
    rng: &mut R,
) -> Result<PreparedTx, TxError> {
    if gas >= MAX_VALUE {
        return Err(TxError::ValueOutOfRange);
    }
    let mut inputs: u128 = 0;
    let mut nullifiers = Vec::with_capacity(spends.len());
    for s in &spends {
        let pos = s.note.pos.ok_or(TxError::UnassignedPosition)?;
        if !s.note.note_type.is_value() {
            return Err(TxError::NotAValueNote(pos));
        }
        if s.nsk.npk() != s.note.npk {
            return Err(TxError::MissingKey(pos));
        }
        let opens = s.note.com == Some(commit(&CommitKey::protocol(), s.opening.value, s.opening.blinder));
        if !opens {
            return Err(TxError::BadOpening(pos));
        }
        let leaf = note_hash(&s.note)?;
        if s.merkle_proof.leaf != leaf || !merkle::verify(&notes_root, &s.merkle_proof).unwrap_or(false) {
            return Err(TxError::StaleMembership(pos));
        }
        inputs += u64_value(&s.opening)? as u128;
        nullifiers.push(compute_nullifier(&s.nsk, pos));
    }

    let mut outputs_total: u128 = 0;
    let mut mints = Vec::with_capacity(outputs.len());
    let mut mint_openings = Vec::with_capacity(outputs.len());
    for out in outputs {
        match out {
            Output::Value { to, value, obfuscated } => {
                let (note, opening) = mint_value_note(to, *value, *obfuscated, rng)?;
                outputs_total += *value as u128;
                mints.push(note);
                mint_openings.push(Some(opening));
            }
            Output::Nft { recipient, payload, obfuscated } => {
                let (npk, r, key) = match recipient {
                    NftRecipient::Key(pk) => {
                        let (keys, _) = gen_note_keypair(pk, rng).map_err(super::NoteError::from)?;
                        (keys.npk, keys.r, derive_symmetric_key(&keys.k_dh))
                    }
                    NftRecipient::OneTime { npk, r, key } => (*npk, *r, *key),
                };
                mints.push(mint_nft(npk, r, payload.clone(), &key, *obfuscated, log, rng)?);
                mint_openings.push(None);
            }
        }
    }

    if inputs != outputs_total + gas as u128 {
        return Err(TxError::Unbalanced { inputs, outputs: outputs_total, gas });
    }

    let tx_hash = tx_hash_of(&nullifiers, &mints, gas, call.as_ref());
    Ok(PreparedTx { spends, nullifiers, mints, mint_openings, gas, call, notes_root, tx_hash })
}

impl PreparedTx {
    pub fn tx_hash(&self) -> Scalar {
        self.tx_hash
    }

    pub fn notes_root(&self) -> Scalar {
        self.notes_root
    }

    pub fn mints(&self) -> &[Note] {
        &self.mints
    }

    /// Signs the tx hash once per spend and proves the transaction relation.
    /// A contract call prepared earlier needs its proof here.
    pub fn finalize<B: ProofBackend, R: CryptoRng + ?Sized>(
        self,
        license_proof: Option<Proof>,
        backend: &B,
        rng: &mut R,
    ) -> Result<BuiltTx, TxError> {
        let contract_call = match (self.call, license_proof) {
            (None, None) => None,
            (Some(body), Some(proof)) => Some(ContractCall::License(LicenseCall { body, proof })),
            _ => return Err(TxError::ContractCallMismatch),
        };
        let sig_tx: Vec<DoubleSignature> =
            self.spends.iter().map(|s| sign_double(s.nsk.nsk, self.tx_hash, rng)).collect();
        let statement = TxStatement {
            notes_root: self.notes_root,
            nullifiers: self.nullifiers.iter().map(|n| n.0).collect(),
            spend_types: self.spends.iter().map(|s| s.note.note_type).collect(),
            mint_commitments: value_commitments(&self.mints),
            gas: Scalar::from(self.gas),
            tx_hash: self.tx_hash,
        };
        let witness = TxWitness {
            spends: self
                .spends
                .into_iter()
                .zip(&sig_tx)
                .map(|(s, sig)| SpendWitness {
                    note: s.note,
                    merkle_proof: s.merkle_proof,
                    npk_prime: s.nsk.npk_prime,
                    opening: s.opening,
                    sig: *sig,
                })
                .collect(),
            mints: self.mint_openings.iter().flatten().copied().collect(),
        };
        let proof = backend.prove::<TxRelation>(&statement, &witness)?;
        let tx = Transaction {
            spends: self.nullifiers,
            mints: self.mints,
            gas: self.gas,
            contract_call,
            tx_hash: self.tx_hash,
            sig_tx,
            statement,
            proof,
        };
        Ok(BuiltTx { tx, mint_openings: self.mint_openings, witness })
    }
}

/// Builds a plain transaction. Inputs must balance exactly:
/// `Σ spent = Σ minted value + gas`.
pub fn build_transaction<B: ProofBackend, R: CryptoRng + ?Sized>(
    spends: Vec<SpendInput>,
    outputs: &[Output],
    gas: u64,
    notes_root: Scalar,
    backend: &B,
    log: &mut NonceLog,
    rng: &mut R,
) -> Result<BuiltTx, TxError> {
    prepare_transaction(spends, outputs, gas, None, notes_root, log, rng)?.finalize(None, backend, rng)
}

impl Canonical for TxStatement {
    fn encode(&self, enc: &mut Encoder) {
        enc.scalar(&self.notes_root);
        enc.seq(&self.nullifiers, |e, n| e.scalar(n));
        enc.seq(&self.spend_types, |e, t| e.u8(t.as_u8()));
        enc.seq(&self.mint_commitments, |e, c| e.point(c));
        enc.scalar(&self.gas);
        enc.scalar(&self.tx_hash);
    }

    fn decode(dec: &mut Decoder<'_>) -> Result<Self, CodecError> {
        Ok(TxStatement {
            notes_root: dec.scalar()?,
            nullifiers: dec.seq(|d| d.scalar())?,
            spend_types: dec.seq(|d| {
                let t = d.u8()?;
                NoteType::from_u8(t).ok_or(CodecError::BadTag(t))
            })?,
            mint_commitments: dec.seq(|d| d.point())?,
            gas: dec.scalar()?,
            tx_hash: dec.scalar()?,
        })
    }
}

impl Canonical for Transaction {
    fn encode(&self, enc: &mut Encoder) {
        enc.seq(&self.spends, |e, n| e.scalar(&n.0));
        enc.seq(&self.mints, |e, n| e.item(n));
        enc.u64(self.gas);
        enc.option(self.contract_call.as_ref(), |e, ContractCall::License(c)| {
            e.u8(0);
            e.item(c)
        });
        enc.scalar(&self.tx_hash);
        enc.seq(&self.sig_tx, |e, s| e.item(s));
        enc.item(&self.statement);
        enc.item(&self.proof);
    }

    fn decode(dec: &mut Decoder<'_>) -> Result<Self, CodecError> {
        Ok(Transaction {
            spends: dec.seq(|d| d.scalar().map(Nullifier))?,
            mints: dec.seq(|d| d.item())?,
            gas: dec.u64()?,
            contract_call: dec.option(|d| match d.u8()? {
                0 => d.item().map(ContractCall::License),
                t => Err(CodecError::BadTag(t)),
            })?,
            tx_hash: dec.scalar()?,
            sig_tx: dec.seq(|d| d.item())?,
            statement: dec.item()?,
            proof: dec.item()?,
        })
    }
}
