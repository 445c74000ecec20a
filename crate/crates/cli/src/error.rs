use std::fmt::Display;

use citadel_core::citadel::{CitadelError, Deny};
use citadel_core::ledger::{LedgerError, Reject};
use citadel_core::wallet::WalletError;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

/// Failure class; each maps to its own process exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorKind {
    /// Storage failure, corrupt state file or wrong passphrase.
    Io,
    /// Bad flags, config or environment.
    Usage,
    /// Input that can never succeed: malformed values, unknown ids, missing funds.
    Validation,
    /// Well-formed request refused by a ledger rule or a provider policy.
    Rejected,
}

impl ErrorKind {
    pub fn exit_code(self) -> u8 {
        match self {
            ErrorKind::Io => 1,
            ErrorKind::Usage => 2,
            ErrorKind::Validation => 3,
            ErrorKind::Rejected => 4,
        }
    }
}

#[derive(Debug, Error)]
#[error("{message}")]
pub struct CliError {
    pub kind: ErrorKind,
    /// Stable kebab-case identifier.
    pub code: String,
    pub message: String,
}

impl CliError {
    pub fn new(kind: ErrorKind, code: impl Into<String>, message: impl Display) -> Self {
        CliError { kind, code: code.into(), message: message.to_string() }
    }

    pub fn io(code: impl Into<String>, message: impl Display) -> Self {
        Self::new(ErrorKind::Io, code, message)
    }

    pub fn usage(code: impl Into<String>, message: impl Display) -> Self {
        Self::new(ErrorKind::Usage, code, message)
    }

    pub fn validation(code: impl Into<String>, message: impl Display) -> Self {
        Self::new(ErrorKind::Validation, code, message)
    }

    pub fn rejected(code: impl Into<String>, message: impl Display) -> Self {
        Self::new(ErrorKind::Rejected, code, message)
    }

    pub fn exit_code(&self) -> u8 {
        self.kind.exit_code()
    }

    pub fn to_json(&self) -> Value {
        json!({ "kind": self.kind, "code": self.code, "message": self.message })
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::io("io", e)
    }
}

impl From<LedgerError> for CliError {
    fn from(e: LedgerError) -> Self {
        match &e {
            LedgerError::Io(_) => CliError::io("ledger-io", e),
            LedgerError::Codec(_) | LedgerError::DigestMismatch | LedgerError::Replay { .. } => {
                CliError::io("ledger-corrupt", e)
            }
            LedgerError::BadConfig => CliError::usage("bad-config", e),
            LedgerError::Full => CliError::rejected("tree-full", e),
            LedgerError::Revoked(_) => CliError::rejected("license-unavailable", e),
            LedgerError::Vacant(_) => CliError::validation("vacant-position", e),
            LedgerError::Revocation(_) => CliError::rejected("revocation", e),
            LedgerError::Note(_) => CliError::validation("malformed-note", e),
        }
    }
}

impl From<CitadelError> for CliError {
    fn from(e: CitadelError) -> Self {
        match &e {
            CitadelError::LicenseUnavailable => CliError::rejected("license-unavailable", e),
            CitadelError::Unconfirmed => CliError::validation("unconfirmed", e),
            _ => CliError::validation("protocol", e),
        }
    }
}

impl From<WalletError> for CliError {
    fn from(e: WalletError) -> Self {
        match e {
            WalletError::InsufficientFunds { .. } => CliError::validation("insufficient-funds", e),
            WalletError::UnknownRequest(_) => CliError::validation("unknown-request", e),
            WalletError::UnknownLicense(_) => CliError::validation("unknown-license", e),
            WalletError::NotIssued(_) => CliError::validation("not-issued", e),
            WalletError::Ledger(e) => e.into(),
            WalletError::Citadel(e) => e.into(),
            WalletError::Tx(e) => CliError::validation("tx-build", e),
        }
    }
}

impl From<Reject> for CliError {
    fn from(r: Reject) -> Self {
        CliError::rejected(r.code(), format!("ledger rejected the transaction: {r}"))
    }
}

impl From<Deny> for CliError {
    fn from(d: Deny) -> Self {
        let message = format!("service denied: {d}");
        match d {
            Deny::Policy => CliError::rejected(d.code(), message),
            _ => CliError::validation(d.code(), message),
        }
    }
}
