//! State file and event log.
//!
//! The state file stores the configuration, the event sequence and the
//! state digest inside a checksummed envelope. Restoring re-applies the
//! events without re-verifying proofs and then compares digests.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::codec::{open_envelope, seal_envelope, Canonical, CodecError, Decoder, Encoder};

use super::{Event, Ledger, LedgerConfig, LedgerError};

const MAGIC: &[u8; 8] = b"CITLEDGR";
const VERSION: u16 = 1;

impl Canonical for Event {
    fn encode(&self, enc: &mut Encoder) {
        match self {
            Event::Faucet { note } => {
                enc.u8(0);
                enc.item(note);
            }
            Event::Transaction { tx } => {
                enc.u8(1);
                enc.item(tx);
            }
            Event::Revocation { pos, proof } => {
                enc.u8(2);
                enc.u64(*pos);
                enc.item(proof);
            }
        }
    }

    fn decode(dec: &mut Decoder<'_>) -> Result<Self, CodecError> {
        match dec.u8()? {
            0 => Ok(Event::Faucet { note: dec.item()? }),
            1 => Ok(Event::Transaction { tx: dec.item()? }),
            2 => Ok(Event::Revocation { pos: dec.u64()?, proof: dec.item()? }),
            t => Err(CodecError::BadTag(t)),
        }
    }
}

/// One line of the JSON event log.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoggedEvent {
    pub height: u64,
    #[serde(flatten)]
    pub event: Event,
}

/// Parses a JSON-lines event log, requiring heights `0, 1, 2, ...`.
pub fn parse_event_log(text: &str) -> Result<Vec<Event>, LedgerError> {
    let mut events = Vec::new();
    for (i, line) in text.lines().filter(|l| !l.trim().is_empty()).enumerate() {
        let logged: LoggedEvent =
            serde_json::from_str(line).map_err(|e| CodecError::Invalid(format!("event log line {}: {e}", i + 1)))?;
        if logged.height != i as u64 {
            return Err(CodecError::Invalid(format!("event log line {} has height {}", i + 1, logged.height)).into());
        }
        events.push(logged.event);
    }
    Ok(events)
}

impl Ledger {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut enc = Encoder::default();
        enc.u64(self.config.gas_fee);
        enc.u32(self.config.arity as u32);
        enc.u32(self.config.depth as u32);
        enc.seq(&self.events, |e, ev| e.item(ev));
        enc.scalar(&self.digest());
        seal_envelope(MAGIC, VERSION, &enc.finish())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, LedgerError> {
        let payload = open_envelope(MAGIC, VERSION, bytes)?;
        let mut dec = Decoder::new(payload);
        let config = LedgerConfig { gas_fee: dec.u64()?, arity: dec.u32()? as usize, depth: dec.u32()? as usize };
        let events: Vec<Event> = dec.seq(|d| d.item())?;
        let digest = dec.scalar()?;
        dec.finish()?;

        let mut ledger = Ledger::new(config)?;
        for event in events {
            ledger.check_applicable(&event)?;
            ledger.apply(event);
        }
        if ledger.digest() != digest {
            return Err(LedgerError::DigestMismatch);
        }
        Ok(ledger)
    }

    /// Bounds checks that keep [`Ledger::apply`] from panicking on a file
    /// that passed the checksum but is still inconsistent.
    fn check_applicable(&self, event: &Event) -> Result<(), LedgerError> {
        let new_notes = match event {
            Event::Faucet { .. } => 1,
            Event::Transaction { tx } => tx.mints.len() as u64,
            Event::Revocation { pos, .. } => {
                return if *pos < self.notes_tree.len() { Ok(()) } else { Err(LedgerError::Vacant(*pos)) };
            }
        };
        if self.notes_tree.len() + new_notes > self.notes_tree.capacity() {
            return Err(LedgerError::Full);
        }
        if let Event::Transaction { tx } = event {
            if tx.contract_call.is_some() && self.license_tree.len() >= self.license_tree.capacity() {
                return Err(LedgerError::Full);
            }
        }
        Ok(())
    }

    /// Writes the state file atomically: temp file, fsync, rename.
    pub fn persist(&self, path: &Path) -> Result<(), LedgerError> {
        let io = |e: std::io::Error| LedgerError::Io(e.to_string());
        let tmp = path.with_extension("tmp");
        let mut f = fs::File::create(&tmp).map_err(io)?;
        f.write_all(&self.to_bytes()).map_err(io)?;
        f.sync_all().map_err(io)?;
        fs::rename(&tmp, path).map_err(io)
    }

    pub fn restore(path: &Path) -> Result<Self, LedgerError> {
        let bytes = fs::read(path).map_err(|e| LedgerError::Io(e.to_string()))?;
        Self::from_bytes(&bytes)
    }

    /// JSON-lines log of every event, one object per line with its height.
    pub fn event_log(&self) -> String {
        let mut out = String::new();
        for (height, event) in self.events.iter().enumerate() {
            let line = LoggedEvent { height: height as u64, event: event.clone() };
            out.push_str(&serde_json::to_string(&line).expect("events serialize"));
            out.push('\n');
        }
        out
    }
}
