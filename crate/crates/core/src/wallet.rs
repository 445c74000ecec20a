//! Key holder plus a note cache rebuilt from ledger scans.
//!
//! Every wallet can act as both user and provider: its note keys receive
//! payments, requests and licenses, and its license key signs licenses.

use rand::CryptoRng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::ProofBackend;
use crate::citadel::{
    self, open_license, prove_issuance, read_license_request, CitadelError, Deny, Grant, IssuanceProof, LicenseRequest,
    LicenseUse, OwnedLicense, ServiceRequest, SpKeys, SpPublic,
};
use crate::crypto::{recover_note_secret, PublicKey, Scalar};
use crate::ledger::{Ledger, LedgerError};
use crate::phoenix::{
    compute_nullifier, prepare_transaction, BuiltTx, Funding, NonceLog, Note, Nullifier, Output, SpendInput, TxError,
    ValueOpening,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WalletError {
    #[error("insufficient funds: need {needed}, have {available}")]
    InsufficientFunds { needed: u64, available: u64 },
    #[error("no license request at position {0}")]
    UnknownRequest(u64),
    #[error("no license at position {0}")]
    UnknownLicense(u64),
    #[error("request at position {0} has not been answered on the ledger")]
    NotIssued(u64),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Citadel(#[from] CitadelError),
    #[error(transparent)]
    Tx(#[from] TxError),
}

/// A value note owned by the wallet.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OwnedNote {
    pub note: Note,
    pub pos: u64,
    pub height: u64,
    pub tx_hash: Option<Scalar>,
    pub opening: ValueOpening,
    pub nullifier: Nullifier,
    pub spent: bool,
}

impl OwnedNote {
    pub fn value(&self) -> u64 {
        self.opening.value_u64().unwrap_or(0)
    }
}

/// A license request received as provider.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReceivedRequest {
    pub pos: u64,
    pub tx_hash: Option<Scalar>,
    pub request: LicenseRequest,
    /// Value received in the same transaction.
    pub paid: u64,
    /// Position of the license minted to the requester, once on the ledger.
    pub license_pos: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalletLicense {
    pub license: OwnedLicense,
    pub revoked: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalletCache {
    pub scanned_height: u64,
    pub notes: Vec<OwnedNote>,
    pub licenses: Vec<WalletLicense>,
    pub requests: Vec<ReceivedRequest>,
    /// Other NFTs addressed to this wallet, by position.
    pub other_nfts: Vec<u64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Wallet {
    pub keys: SpKeys,
    pub nonce_log: NonceLog,
    pub cache: WalletCache,
}

impl Wallet {
    pub fn generate<R: CryptoRng + ?Sized>(rng: &mut R) -> Self {
        Self::from_keys(SpKeys::generate(rng))
    }

    pub fn from_keys(keys: SpKeys) -> Self {
        Wallet { keys, nonce_log: NonceLog::default(), cache: WalletCache::default() }
    }

    pub fn public(&self) -> SpPublic {
        self.keys.public()
    }

    pub fn note_pk(&self) -> PublicKey {
        self.keys.note_keys.pk
    }

    /// Scans events since the last sync and refreshes spent and revoked
    /// flags.
    pub fn sync(&mut self, ledger: &Ledger) {
        let vk = self.keys.note_keys.view_key();
        let from = self.cache.scanned_height;
        let start = ledger.notes().partition_point(|r| r.height < from);
        for rec in &ledger.notes()[start..] {
            for req in self.cache.requests.iter_mut().filter(|r| r.license_pos.is_none()) {
                if rec.note.npk == req.request.npk_user && rec.pos != req.pos {
                    req.license_pos = Some(rec.pos);
                }
            }
            if !vk.owns(&rec.note.npk, &rec.note.r) {
                continue;
            }
            if rec.note.note_type.is_value() {
                let (Ok(nsk), Ok(opening)) = (
                    recover_note_secret(&self.keys.note_keys, &rec.note.npk, &rec.note.r),
                    rec.note.value_opening(&vk),
                ) else {
                    continue;
                };
                self.cache.notes.push(OwnedNote {
                    note: rec.note.clone(),
                    pos: rec.pos,
                    height: rec.height,
                    tx_hash: rec.tx_hash,
                    opening,
                    nullifier: compute_nullifier(&nsk, rec.pos),
                    spent: false,
                });
            } else if let Ok(license) = open_license(&self.keys.note_keys, &rec.note) {
                self.cache.licenses.push(WalletLicense { license, revoked: false });
            } else if let Ok(request) = read_license_request(&self.keys, &rec.note) {
                self.cache.requests.push(ReceivedRequest {
                    pos: rec.pos,
                    tx_hash: rec.tx_hash,
                    request,
                    paid: 0,
                    license_pos: None,
                });
            } else {
                self.cache.other_nfts.push(rec.pos);
            }
        }
        for req in &mut self.cache.requests {
            req.paid = self
                .cache
                .notes
                .iter()
                .filter(|n| n.tx_hash.is_some() && n.tx_hash == req.tx_hash)
                .map(OwnedNote::value)
                .sum();
        }
        for n in &mut self.cache.notes {
            n.spent = ledger.is_spent(&n.nullifier.0);
        }
        for l in &mut self.cache.licenses {
            l.revoked = ledger.is_revoked(l.license.pos);
        }
        self.cache.scanned_height = ledger.height();
    }

    /// Drops the cache and scans from genesis.
    pub fn rescan(&mut self, ledger: &Ledger) {
        self.cache = WalletCache::default();
        self.sync(ledger);
    }

    pub fn balance(&self) -> u64 {
        self.cache.notes.iter().filter(|n| !n.spent).map(OwnedNote::value).sum()
    }

    pub fn unspent(&self) -> impl Iterator<Item = &OwnedNote> {
        self.cache.notes.iter().filter(|n| !n.spent)
    }

    /// Largest-first selection of unspent notes covering `amount`.
    pub fn fund(&self, ledger: &Ledger, amount: u64) -> Result<Funding, WalletError> {
        let mut candidates: Vec<&OwnedNote> = self.unspent().filter(|n| !ledger.is_spent(&n.nullifier.0)).collect();
        candidates.sort_by_key(|n| std::cmp::Reverse(n.value()));
        let available: u64 = candidates.iter().map(|n| n.value()).sum();
        let mut total = 0u64;
        let mut spends = Vec::new();
        for n in candidates {
            if total >= amount {
                break;
            }
            let nsk = recover_note_secret(&self.keys.note_keys, &n.note.npk, &n.note.r).map_err(CitadelError::from)?;
            spends.push(SpendInput {
                note: n.note.clone(),
                nsk,
                opening: n.opening,
                merkle_proof: ledger.prove(n.pos)?,
            });
            total += n.value();
        }
        if total < amount {
            return Err(WalletError::InsufficientFunds { needed: amount, available });
        }
        Ok(Funding { spends, notes_root: ledger.notes_root(), change_to: self.note_pk() })
    }

    pub fn send<B: ProofBackend, R: CryptoRng + ?Sized>(
        &mut self,
        ledger: &Ledger,
        to: &PublicKey,
        amount: u64,
        backend: &B,
        rng: &mut R,
    ) -> Result<BuiltTx, WalletError> {
        let gas = ledger.config().gas_fee;
        let funding = self.fund(ledger, amount.saturating_add(gas))?;
        let mut outputs = vec![Output::Value { to: *to, value: amount, obfuscated: true }];
        funding.add_change(&mut outputs, gas)?;
        Ok(prepare_transaction(funding.spends, &outputs, gas, None, funding.notes_root, &mut self.nonce_log, rng)?
            .finalize(None, backend, rng)?)
    }

    pub fn request_license<B: ProofBackend, R: CryptoRng + ?Sized>(
        &mut self,
        ledger: &Ledger,
        sp: &SpPublic,
        price: u64,
        backend: &B,
        rng: &mut R,
    ) -> Result<(BuiltTx, LicenseRequest), WalletError> {
        let gas = ledger.config().gas_fee;
        let funding = self.fund(ledger, price.saturating_add(gas))?;
        Ok(citadel::send_license_request(
            &self.keys.note_keys,
            sp,
            price,
            gas,
            funding,
            backend,
            &mut self.nonce_log,
            rng,
        )?)
    }

    pub fn request(&self, request_pos: u64) -> Result<&ReceivedRequest, WalletError> {
        self.cache.requests.iter().find(|r| r.pos == request_pos).ok_or(WalletError::UnknownRequest(request_pos))
    }

    pub fn issue_license<B: ProofBackend, R: CryptoRng + ?Sized>(
        &mut self,
        ledger: &Ledger,
        request_pos: u64,
        attr: Scalar,
        backend: &B,
        rng: &mut R,
    ) -> Result<BuiltTx, WalletError> {
        let request = self.request(request_pos)?.request;
        let gas = ledger.config().gas_fee;
        let funding = self.fund(ledger, gas)?;
        Ok(citadel::issue_license(&self.keys, &request, attr, gas, funding, backend, &mut self.nonce_log, rng)?)
    }

    pub fn license(&self, pos: u64) -> Result<&WalletLicense, WalletError> {
        self.cache.licenses.iter().find(|l| l.license.pos == pos).ok_or(WalletError::UnknownLicense(pos))
    }

    pub fn use_license<B: ProofBackend, R: CryptoRng + ?Sized>(
        &mut self,
        ledger: &Ledger,
        license_pos: u64,
        sp: &SpPublic,
        c: Scalar,
        backend: &B,
        rng: &mut R,
    ) -> Result<LicenseUse, WalletError> {
        let license = self.license(license_pos)?.license.clone();
        let membership = match ledger.prove(license_pos) {
            Ok(p) => p,
            Err(LedgerError::Revoked(_)) => return Err(CitadelError::LicenseUnavailable.into()),
            Err(e) => return Err(e.into()),
        };
        let gas = ledger.config().gas_fee;
        let funding = self.fund(ledger, gas)?;
        Ok(citadel::use_license(&license, membership, c, sp, gas, funding, backend, &mut self.nonce_log, rng)?)
    }

    pub fn grant_service(
        &self,
        req: &ServiceRequest,
        ledger: &Ledger,
        policy: impl Fn(Scalar, Scalar) -> bool,
    ) -> Result<Grant, Deny> {
        citadel::grant_service(&self.keys, req, ledger, policy)
    }

    /// Proof that this wallet issued the license answering `request_pos`.
    pub fn prove_issuance<R: CryptoRng + ?Sized>(
        &self,
        ledger: &Ledger,
        request_pos: u64,
        rng: &mut R,
    ) -> Result<(u64, IssuanceProof), WalletError> {
        let req = self.request(request_pos)?;
        let pos = req.license_pos.ok_or(WalletError::NotIssued(request_pos))?;
        let note = &ledger.note(pos).ok_or(LedgerError::Vacant(pos))?.note;
        Ok((pos, prove_issuance(&self.keys, &req.request, note, rng)?))
    }
}
