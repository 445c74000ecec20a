//! Command-line driver over a ledger state file and an encrypted wallet
//! file. Every invocation prints exactly one JSON document on stdout.

pub mod commands;
pub mod config;
pub mod error;
pub mod store;

use serde_json::{json, Value};

pub use commands::{execute, Cli, Command, LedgerCommand};
pub use error::{CliError, ErrorKind};

/// Version tag carried by every output document.
pub const SCHEMA: &str = "citadel-cli/1";

pub fn success_document(command: &str, result: Value) -> Value {
    json!({ "schema": SCHEMA, "command": command, "ok": true, "result": result })
}

pub fn error_document(command: Option<&str>, err: &CliError) -> Value {
    json!({ "schema": SCHEMA, "command": command, "ok": false, "error": err.to_json() })
}
