//! License issuance and use.
//!
//! A user pays a provider and sends it a request NFT holding a fresh
//! one-time key. The provider signs `(npk_user, attr)` and mints the license
//! back to that key. To use it, the user calls the license contract with a
//! proof that it owns a signed license in the notes tree, a nullifier bound
//! to a challenge `c`, and commitments to the provider key, the attribute
//! and `c`. The openings reach the provider off-chain.

mod protocol;
mod relation;

pub use protocol::{
    derive_k_user, fetch_licenses, grant_service, issue_license, open_license, prove_issuance, read_license_request,
    request_service, revocation_message, send_license_request, use_license, Grant, IssuanceProof, LicensePayload,
    LicenseRequest, LicenseUse, OwnedLicense, ServiceRequest, SessionCookie, SpKeys, SpPublic,
};
pub use relation::{
    check_license_relation, license_message, license_nullifier, provider_commitment, LicenseCall, LicenseCallBody,
    LicenseClause, LicenseRelation, LicenseStatement, LicenseWitness,
};

use serde::Serialize;
use thiserror::Error;

use crate::backend::BackendError;
use crate::crypto::CryptoError;
use crate::phoenix::{NoteError, TxError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CitadelError {
    #[error("note is not a license request")]
    NotARequest,
    #[error("malformed license request")]
    MalformedRequest,
    #[error("note is not a license for this user")]
    NotALicense,
    #[error("note is not confirmed on the ledger")]
    Unconfirmed,
    #[error("license is revoked or absent from the notes tree")]
    LicenseUnavailable,
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error(transparent)]
    Note(#[from] NoteError),
    #[error(transparent)]
    Tx(#[from] TxError),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

/// Why a provider refused a service request.
#[derive(Debug, Error, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Deny {
    #[error("unknown transaction")]
    UnknownTx,
    #[error("transaction does not use a license")]
    NotALicenseUse,
    #[error("license key is not this provider's")]
    ForeignProvider,
    #[error("rejected by provider policy")]
    Policy,
    #[error("openings do not match the on-chain commitments")]
    OpeningMismatch,
    #[error("session cookie was not delivered to the provider")]
    MissingCookie,
}

impl Deny {
    pub fn code(&self) -> &'static str {
        match self {
            Deny::UnknownTx => "unknown-tx",
            Deny::NotALicenseUse => "not-a-license-use",
            Deny::ForeignProvider => "foreign-provider",
            Deny::Policy => "policy",
            Deny::OpeningMismatch => "opening-mismatch",
            Deny::MissingCookie => "missing-cookie",
        }
    }
}
