//! Notes, nullifiers and transactions.
//!
//! Four note types share one structure: transparent and obfuscated value
//! notes carry a commitment to their value, transparent and obfuscated NFTs
//! carry an arbitrary payload and no commitment. Only value notes can be
//! spent by a transaction; the spent note types are part of the public
//! statement so the network can enforce this.

mod note;
mod relation;
mod transaction;

pub use note::{
    compute_nullifier, mint_nft, mint_nft_with_nonce, mint_value_note, note_hash, NonceLog, Note, NotePayload,
    NoteType, Nullifier, ValueOpening, MAX_VALUE,
};
pub use relation::{check_tx_relation, SpendWitness, TxClause, TxRelation, TxStatement, TxWitness};
pub use transaction::{
    build_transaction, prepare_transaction, tx_hash_of, BuiltTx, ContractCall, Funding, NftRecipient, Output,
    PreparedTx, SpendInput, Transaction,
};

use thiserror::Error;

use crate::backend::BackendError;
use crate::crypto::CryptoError;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NoteError {
    #[error("value outside [0, 2^62)")]
    ValueOutOfRange,
    #[error("NFT payload is empty")]
    EmptyPayload,
    #[error("nonce already used under this key")]
    NonceReuse,
    #[error("note has no position yet")]
    UnassignedPosition,
    #[error("operation not defined for {0:?} notes")]
    WrongNoteType(NoteType),
    #[error("malformed note: {0}")]
    Malformed(&'static str),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TxError {
    #[error("unbalanced: inputs {inputs} != outputs {outputs} + gas {gas}")]
    Unbalanced { inputs: u128, outputs: u128, gas: u64 },
    #[error("value outside [0, 2^62)")]
    ValueOutOfRange,
    #[error("insufficient funds: need {needed}, have {available}")]
    InsufficientFunds { needed: u128, available: u128 },
    #[error("note at position {0} is not a value note")]
    NotAValueNote(u64),
    #[error("no matching secret key for the note at position {0}")]
    MissingKey(u64),
    #[error("opening does not match the commitment of the note at position {0}")]
    BadOpening(u64),
    #[error("note has no position yet")]
    UnassignedPosition,
    #[error("membership proof for position {0} does not match the notes root")]
    StaleMembership(u64),
    #[error("contract call and contract proof must be supplied together")]
    ContractCallMismatch,
    #[error(transparent)]
    Note(#[from] NoteError),
    #[error(transparent)]
    Backend(#[from] BackendError),
}
