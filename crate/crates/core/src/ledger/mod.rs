//! Single-node ledger: one event per block, strict sequential application.
//!
//! A submission is validated against the current state in full before any
//! mutation, so a rejected transaction leaves the state untouched.

mod persist;

pub use persist::{parse_event_log, LoggedEvent};

use std::collections::{BTreeSet, HashMap};

use rand::CryptoRng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{BackendError, ProofBackend};
use crate::citadel::{IssuanceProof, LicenseRelation};
use crate::codec::{Canonical, CodecError, Encoder};
use crate::crypto::{hash_fast, PublicKey, Scalar, ViewKey};
use crate::merkle::{MerkleError, MerkleProof, MerkleTree, DEFAULT_ARITY, DEFAULT_DEPTH};
use crate::phoenix::{mint_value_note, note_hash, Note, NoteError, Transaction, TxRelation, ValueOpening};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LedgerConfig {
    /// Flat fee every transaction must pay exactly.
    pub gas_fee: u64,
    pub arity: usize,
    pub depth: usize,
}

impl Default for LedgerConfig {
    fn default() -> Self {
        LedgerConfig { gas_fee: 3, arity: DEFAULT_ARITY, depth: DEFAULT_DEPTH }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum Event {
    Faucet { note: Note },
    Transaction { tx: Transaction },
    Revocation { pos: u64, proof: IssuanceProof },
}

/// A note in the tree, with the height of the event that added it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoteRecord {
    pub note: Note,
    pub pos: u64,
    pub height: u64,
    pub tx_hash: Option<Scalar>,
}

#[derive(Clone, Copy, Debug)]
pub struct TxRecord<'a> {
    pub tx: &'a Transaction,
    pub height: u64,
    pub positions: &'a [u64],
}

/// Why a submission was refused. [`Reject::code`] is the stable identifier.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Reject {
    #[error("transaction already included")]
    DuplicateTx,
    #[error("tx hash does not match the transaction body")]
    TxHashMismatch,
    #[error("statement does not match the transaction: {0}")]
    StatementMismatch(&'static str),
    #[error("spent note type is not a value type")]
    NftSpend,
    #[error("gas {got} differs from the flat fee {expected}")]
    Gas { expected: u64, got: u64 },
    #[error("one signature per spend required")]
    SignatureCount,
    #[error("malformed mint: {0}")]
    MalformedMint(String),
    #[error("nullifier repeated within the transaction")]
    DuplicateNullifier,
    #[error("nullifier seen")]
    NullifierSeen,
    #[error("unknown root")]
    UnknownRoot,
    #[error("notes tree is full")]
    TreeFull,
    #[error("transaction proof rejected: {0}")]
    Proof(BackendError),
    #[error("license call against an unknown root")]
    LicenseUnknownRoot,
    #[error("license nullifier seen")]
    LicenseNullifierSeen,
    #[error("license proof rejected: {0}")]
    LicenseProof(BackendError),
    #[error("transaction carries no contract call")]
    NoContractCall,
}

impl Reject {
    pub fn code(&self) -> String {
        let proof_code = |prefix: &str, e: &BackendError| match e.clause() {
            Some(clause) => format!("{prefix}:{clause}"),
            None => format!("{prefix}:invalid"),
        };
        match self {
            Reject::DuplicateTx => "duplicate-tx".into(),
            Reject::TxHashMismatch => "tx-hash-mismatch".into(),
            Reject::StatementMismatch(what) => format!("statement-mismatch:{what}"),
            Reject::NftSpend => "nft-spend".into(),
            Reject::Gas { .. } => "gas".into(),
            Reject::SignatureCount => "signature-count".into(),
            Reject::MalformedMint(_) => "malformed-mint".into(),
            Reject::DuplicateNullifier => "duplicate-nullifier".into(),
            Reject::NullifierSeen => "nullifier-seen".into(),
            Reject::UnknownRoot => "unknown-root".into(),
            Reject::TreeFull => "tree-full".into(),
            Reject::Proof(e) => proof_code("proof", e),
            Reject::LicenseUnknownRoot => "license-unknown-root".into(),
            Reject::LicenseNullifierSeen => "license-nullifier-seen".into(),
            Reject::LicenseProof(e) => proof_code("license-proof", e),
            Reject::NoContractCall => "no-contract-call".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Receipt {
    pub tx_hash: Scalar,
    pub accepted: bool,
    pub positions: Vec<u64>,
    #[serde(serialize_with = "reject_code")]
    pub reject_reason: Option<Reject>,
}

fn reject_code<S: serde::Serializer>(r: &Option<Reject>, s: S) -> Result<S::Ok, S::Error> {
    match r {
        Some(r) => s.serialize_some(&r.code()),
        None => s.serialize_none(),
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LedgerError {
    #[error("no note at position {0}")]
    Vacant(u64),
    #[error("note at position {0} is revoked")]
    Revoked(u64),
    #[error("notes tree is full")]
    Full,
    #[error("invalid ledger configuration")]
    BadConfig,
    #[error("revocation refused: {0}")]
    Revocation(&'static str),
    #[error(transparent)]
    Note(#[from] NoteError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error("i/o: {0}")]
    Io(String),
    #[error("state digest mismatch after restore")]
    DigestMismatch,
    #[error("replay stopped at height {height}: {reason}")]
    Replay { height: u64, reason: String },
}

impl From<MerkleError> for LedgerError {
    fn from(e: MerkleError) -> Self {
        match e {
            MerkleError::Vacant(p) => LedgerError::Vacant(p),
            MerkleError::Full => LedgerError::Full,
            _ => LedgerError::BadConfig,
        }
    }
}

#[derive(Clone, Debug)]
struct TxIndex {
    event: usize,
    positions: Vec<u64>,
}

#[derive(Clone, Debug)]
pub struct Ledger {
    config: LedgerConfig,
    notes_tree: MerkleTree,
    notes: Vec<NoteRecord>,
    revoked: BTreeSet<u64>,
    spent: BTreeSet<Scalar>,
    license_tree: MerkleTree,
    license_nullifiers: BTreeSet<Scalar>,
    txs: HashMap<Scalar, TxIndex>,
    events: Vec<Event>,
}

impl Default for Ledger {
    fn default() -> Self {
        Ledger::new(LedgerConfig::default()).expect("default configuration is valid")
    }
}

impl Ledger {
    pub fn new(config: LedgerConfig) -> Result<Self, LedgerError> {
        let tree = || MerkleTree::new(config.arity, config.depth).map_err(|_| LedgerError::BadConfig);
        Ok(Ledger {
            config,
            notes_tree: tree()?,
            notes: Vec::new(),
            revoked: BTreeSet::new(),
            spent: BTreeSet::new(),
            license_tree: tree()?,
            license_nullifiers: BTreeSet::new(),
            txs: HashMap::new(),
            events: Vec::new(),
        })
    }

    pub fn config(&self) -> &LedgerConfig {
        &self.config
    }

    /// Number of events applied; one event per block.
    pub fn height(&self) -> u64 {
        self.events.len() as u64
    }

    pub fn notes_root(&self) -> Scalar {
        self.notes_tree.root()
    }

    pub fn license_root(&self) -> Scalar {
        self.license_tree.root()
    }

    pub fn notes_tree(&self) -> &MerkleTree {
        &self.notes_tree
    }

    pub fn license_tree(&self) -> &MerkleTree {
        &self.license_tree
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn notes(&self) -> &[NoteRecord] {
        &self.notes
    }

    pub fn note(&self, pos: u64) -> Option<&NoteRecord> {
        self.notes.get(pos as usize)
    }

    pub fn spent_nullifiers(&self) -> &BTreeSet<Scalar> {
        &self.spent
    }

    pub fn license_nullifiers(&self) -> &BTreeSet<Scalar> {
        &self.license_nullifiers
    }

    pub fn is_spent(&self, nullifier: &Scalar) -> bool {
        self.spent.contains(nullifier)
    }

    pub fn is_revoked(&self, pos: u64) -> bool {
        self.revoked.contains(&pos)
    }

    pub fn transaction(&self, tx_hash: &Scalar) -> Option<TxRecord<'_>> {
        let idx = self.txs.get(tx_hash)?;
        match &self.events[idx.event] {
            Event::Transaction { tx } => Some(TxRecord { tx, height: idx.event as u64, positions: &idx.positions }),
            _ => None,
        }
    }

    /// Hashes of all included transactions in order.
    pub fn transaction_hashes(&self) -> Vec<Scalar> {
        self.events
            .iter()
            .filter_map(|e| match e {
                Event::Transaction { tx } => Some(tx.tx_hash),
                _ => None,
            })
            .collect()
    }

    /// A root is usable if it is in the history and no revocation happened
    /// after it was current. Otherwise a proof against an old root could
    /// still show a revoked leaf.
    pub fn is_usable_root(&self, root: &Scalar) -> bool {
        match self.notes_tree.root_index(root) {
            Some(i) => i >= self.notes_tree.last_invalidation().unwrap_or(0),
            None => false,
        }
    }

    /// Membership proof for the note at `pos` under the current root.
    pub fn prove(&self, pos: u64) -> Result<MerkleProof, LedgerError> {
        if self.revoked.contains(&pos) {
            return Err(LedgerError::Revoked(pos));
        }
        Ok(self.notes_tree.prove(pos)?)
    }

    /// Notes at or above `from_height` addressed to `vk`'s owner.
    pub fn scan(&self, vk: &ViewKey, from_height: u64) -> Vec<NoteRecord> {
        let start = self.notes.partition_point(|r| r.height < from_height);
        self.notes[start..].iter().filter(|r| vk.owns(&r.note.npk, &r.note.r)).cloned().collect()
    }

    /// Simulation-only issuance of a fresh value note.
    pub fn faucet<R: CryptoRng + ?Sized>(
        &mut self,
        to: &PublicKey,
        value: u64,
        obfuscated: bool,
        rng: &mut R,
    ) -> Result<(NoteRecord, ValueOpening), LedgerError> {
        let (note, opening) = mint_value_note(to, value, obfuscated, rng)?;
        let record = self.faucet_note(note)?;
        Ok((record, opening))
    }

    pub fn faucet_note(&mut self, note: Note) -> Result<NoteRecord, LedgerError> {
        if note.pos.is_some() {
            return Err(NoteError::Malformed("faucet note already has a position").into());
        }
        note.validate()?;
        if self.notes_tree.len() >= self.notes_tree.capacity() {
            return Err(LedgerError::Full);
        }
        self.apply(Event::Faucet { note });
        Ok(self.notes.last().expect("just appended").clone())
    }

    pub fn submit_tx<B: ProofBackend>(&mut self, tx: &Transaction, backend: &B) -> Receipt {
        match self.validate(tx, backend) {
            Ok(()) => {
                self.apply(Event::Transaction { tx: tx.clone() });
                let positions = self.txs[&tx.tx_hash].positions.clone();
                Receipt { tx_hash: tx.tx_hash, accepted: true, positions, reject_reason: None }
            }
            Err(reason) => {
                Receipt { tx_hash: tx.tx_hash, accepted: false, positions: Vec::new(), reject_reason: Some(reason) }
            }
        }
    }

    /// Submission path for transactions that call the license contract.
    pub fn call_license_contract<B: ProofBackend>(&mut self, tx: &Transaction, backend: &B) -> Receipt {
        if tx.contract_call.is_none() {
            return Receipt {
                tx_hash: tx.tx_hash,
                accepted: false,
                positions: Vec::new(),
                reject_reason: Some(Reject::NoContractCall),
            };
        }
        self.submit_tx(tx, backend)
    }

    /// All acceptance checks; never mutates.
    pub fn validate<B: ProofBackend>(&self, tx: &Transaction, backend: &B) -> Result<(), Reject> {
        if tx.compute_hash() != tx.tx_hash {
            return Err(Reject::TxHashMismatch);
        }
        let st = &tx.statement;
        if st.tx_hash != tx.tx_hash {
            return Err(Reject::StatementMismatch("tx-hash"));
        }
        if st.nullifiers.len() != tx.spends.len() || st.nullifiers.iter().zip(&tx.spends).any(|(a, b)| *a != b.0) {
            return Err(Reject::StatementMismatch("nullifiers"));
        }
        if st.spend_types.len() != tx.spends.len() {
            return Err(Reject::StatementMismatch("spend-types"));
        }
        if st.mint_commitments != tx.value_mint_commitments() {
            return Err(Reject::StatementMismatch("mint-commitments"));
        }
        if st.gas != Scalar::from(tx.gas) {
            return Err(Reject::StatementMismatch("gas"));
        }
        if st.spend_types.iter().any(|t| !t.is_value()) {
            return Err(Reject::NftSpend);
        }
        if tx.gas != self.config.gas_fee {
            return Err(Reject::Gas { expected: self.config.gas_fee, got: tx.gas });
        }
        if tx.sig_tx.len() != tx.spends.len() {
            return Err(Reject::SignatureCount);
        }
        for note in &tx.mints {
            if note.pos.is_some() {
                return Err(Reject::MalformedMint("position assigned before inclusion".into()));
            }
            note.validate().map_err(|e| Reject::MalformedMint(e.to_string()))?;
        }
        if self.notes_tree.len() + tx.mints.len() as u64 > self.notes_tree.capacity() {
            return Err(Reject::TreeFull);
        }
        let unique: BTreeSet<&Scalar> = st.nullifiers.iter().collect();
        if unique.len() != st.nullifiers.len() {
            return Err(Reject::DuplicateNullifier);
        }
        if st.nullifiers.iter().any(|n| self.spent.contains(n)) {
            return Err(Reject::NullifierSeen);
        }
        if self.txs.contains_key(&tx.tx_hash) {
            return Err(Reject::DuplicateTx);
        }
        if !self.is_usable_root(&st.notes_root) {
            return Err(Reject::UnknownRoot);
        }
        backend.verify::<TxRelation>(st, &tx.proof).map_err(Reject::Proof)?;

        if let Some(call) = tx.contract_call.as_ref().and_then(|c| c.as_license()) {
            if !self.is_usable_root(&call.body.notes_root) {
                return Err(Reject::LicenseUnknownRoot);
            }
            if self.license_nullifiers.contains(&call.body.nullifier_lic) {
                return Err(Reject::LicenseNullifierSeen);
            }
            if self.license_tree.len() >= self.license_tree.capacity() {
                return Err(Reject::TreeFull);
            }
            let statement = call.body.statement(tx.tx_hash);
            backend.verify::<LicenseRelation>(&statement, &call.proof).map_err(Reject::LicenseProof)?;
        }
        Ok(())
    }

    /// Revokes the license note at `pos`, given proof that the caller issued
    /// it. Revoking an already revoked note is a no-op.
    pub fn revoke_license_note(&mut self, pos: u64, proof: &IssuanceProof) -> Result<Scalar, LedgerError> {
        let record = self.notes.get(pos as usize).ok_or(LedgerError::Vacant(pos))?;
        proof.verify(&record.note, pos).map_err(LedgerError::Revocation)?;
        if self.revoked.contains(&pos) {
            return Ok(self.notes_root());
        }
        self.apply(Event::Revocation { pos, proof: proof.clone() });
        Ok(self.notes_root())
    }

    /// Applies an event that has already been validated.
    fn apply(&mut self, event: Event) {
        let height = self.height();
        match &event {
            Event::Faucet { note } => {
                self.append_note(note.clone(), height, None);
            }
            Event::Transaction { tx } => {
                self.spent.extend(tx.spends.iter().map(|n| n.0));
                let positions =
                    tx.mints.iter().map(|n| self.append_note(n.clone(), height, Some(tx.tx_hash))).collect();
                if let Some(call) = tx.contract_call.as_ref().and_then(|c| c.as_license()) {
                    self.license_tree.append(call.body.nullifier_lic).expect("capacity checked in validation");
                    self.license_nullifiers.insert(call.body.nullifier_lic);
                }
                self.txs.insert(tx.tx_hash, TxIndex { event: self.events.len(), positions });
            }
            Event::Revocation { pos, .. } => {
                self.notes_tree.invalidate(*pos).expect("position checked before revocation");
                self.revoked.insert(*pos);
            }
        }
        self.events.push(event);
    }

    fn append_note(&mut self, note: Note, height: u64, tx_hash: Option<Scalar>) -> u64 {
        let pos = self.notes_tree.len();
        let note = note.with_pos(pos);
        let leaf = note_hash(&note).expect("position just assigned");
        self.notes_tree.append(leaf).expect("capacity checked in validation");
        self.notes.push(NoteRecord { note, pos, height, tx_hash });
        pos
    }

    /// Hash of everything observable about the state.
    pub fn digest(&self) -> Scalar {
        let mut enc = Encoder::default();
        enc.raw(b"citadel/ledger-digest/v1");
        enc.u64(self.config.gas_fee);
        enc.u64(self.config.arity as u64);
        enc.u64(self.config.depth as u64);
        enc.u64(self.height());
        enc.bytes(&self.notes_tree.to_canonical_bytes());
        enc.bytes(&self.license_tree.to_canonical_bytes());
        let spent: Vec<Scalar> = self.spent.iter().copied().collect();
        enc.seq(&spent, |e, s| e.scalar(s));
        let lic: Vec<Scalar> = self.license_nullifiers.iter().copied().collect();
        enc.seq(&lic, |e, s| e.scalar(s));
        let revoked: Vec<u64> = self.revoked.iter().copied().collect();
        enc.seq(&revoked, |e, p| e.u64(*p));
        enc.seq(&self.transaction_hashes(), |e, h| e.scalar(h));
        hash_fast(&enc.finish())
    }

    /// Rebuilds a ledger from events, re-validating every transaction and
    /// revocation.
    pub fn replay<B: ProofBackend>(
        config: LedgerConfig,
        events: impl IntoIterator<Item = Event>,
        backend: &B,
    ) -> Result<Self, LedgerError> {
        let mut ledger = Ledger::new(config)?;
        for event in events {
            let height = ledger.height();
            let fail = |reason: String| LedgerError::Replay { height, reason };
            match event {
                Event::Faucet { note } => {
                    ledger.faucet_note(note).map_err(|e| fail(e.to_string()))?;
                }
                Event::Transaction { tx } => {
                    let receipt = ledger.submit_tx(&tx, backend);
                    if let Some(r) = receipt.reject_reason {
                        return Err(fail(r.code()));
                    }
                }
                Event::Revocation { pos, proof } => {
                    if ledger.is_revoked(pos) {
                        return Err(fail("repeated revocation".into()));
                    }
                    ledger.revoke_license_note(pos, &proof).map_err(|e| fail(e.to_string()))?;
                }
            }
        }
        Ok(ledger)
    }
}
