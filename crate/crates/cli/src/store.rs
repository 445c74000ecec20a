//! On-disk state: the encrypted wallet file, the ledger file and its lock.

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use argon2::{Algorithm, Argon2, Params, Version};
use chacha20poly1305::aead::{Aead, KeyInit, Payload};
use chacha20poly1305::{Key, XChaCha20Poly1305, XNonce};
use citadel_core::citadel::SpPublic;
use citadel_core::crypto::GroupElement;
use citadel_core::ledger::{Ledger, LedgerConfig};
use citadel_core::wallet::Wallet;
use rand::{CryptoRng, RngExt};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

const WALLET_VERSION: u32 = 1;
const KDF_ALGORITHM: &str = "argon2id";

/// Provider a license request was addressed to, keyed by the license's
/// one-time key so `use-license` can find it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProviderLink {
    pub license_npk: GroupElement,
    pub provider: SpPublic,
}

/// Everything inside the wallet ciphertext.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalletState {
    pub wallet: Wallet,
    pub providers: Vec<ProviderLink>,
}

impl WalletState {
    pub fn new(wallet: Wallet) -> Self {
        WalletState { wallet, providers: Vec::new() }
    }

    pub fn provider_for(&self, license_npk: &GroupElement) -> Option<SpPublic> {
        self.providers.iter().find(|l| &l.license_npk == license_npk).map(|l| l.provider)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KdfParams {
    pub algorithm: String,
    pub salt: String,
    pub memory_kib: u32,
    pub iterations: u32,
    pub parallelism: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Envelope {
    version: u32,
    kdf: KdfParams,
    nonce: String,
    ciphertext: String,
}

fn header_aad(kdf: &KdfParams) -> Vec<u8> {
    serde_json::to_vec(&(WALLET_VERSION, kdf)).expect("header serializes")
}

/// A decrypted wallet plus the derived key, so saving skips the KDF.
pub struct OpenWallet {
    pub state: WalletState,
    kdf: KdfParams,
    key: [u8; 32],
}

impl OpenWallet {
    pub fn create<R: CryptoRng + ?Sized>(state: WalletState, passphrase: &[u8], rng: &mut R) -> Result<Self, CliError> {
        let salt: [u8; 16] = rng.random();
        let defaults = Params::default();
        let kdf = KdfParams {
            algorithm: KDF_ALGORITHM.into(),
            salt: hex::encode(salt),
            memory_kib: defaults.m_cost(),
            iterations: defaults.t_cost(),
            parallelism: defaults.p_cost(),
        };
        let key = derive_key(passphrase, &kdf)?;
        Ok(OpenWallet { state, kdf, key })
    }

    pub fn open(bytes: &[u8], passphrase: &[u8]) -> Result<Self, CliError> {
        let corrupt = |what: &str| CliError::io("wallet-corrupt", format!("wallet file is malformed: {what}"));
        let env: Envelope = serde_json::from_slice(bytes).map_err(|e| corrupt(&e.to_string()))?;
        if env.version != WALLET_VERSION {
            return Err(corrupt(&format!("unsupported version {}", env.version)));
        }
        let nonce = hex::decode(&env.nonce).ok().filter(|n| n.len() == 24).ok_or_else(|| corrupt("nonce"))?;
        let ciphertext = hex::decode(&env.ciphertext).map_err(|_| corrupt("ciphertext"))?;
        let key = derive_key(passphrase, &env.kdf)?;
        let plaintext = XChaCha20Poly1305::new(&Key::from(key))
            .decrypt(
                &XNonce::from(<[u8; 24]>::try_from(nonce.as_slice()).expect("length checked")),
                Payload { msg: &ciphertext, aad: &header_aad(&env.kdf) },
            )
            .map_err(|_| {
                CliError::io("bad-passphrase", "wallet decryption failed: wrong passphrase or tampered file")
            })?;
        let state = serde_json::from_slice(&plaintext).map_err(|e| corrupt(&e.to_string()))?;
        Ok(OpenWallet { state, kdf: env.kdf, key })
    }

    pub fn load(path: &Path, passphrase: &[u8]) -> Result<Self, CliError> {
        let bytes = fs::read(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => {
                CliError::usage("no-wallet", format!("no wallet at {}; run keygen first", path.display()))
            }
            _ => CliError::io("wallet-io", format!("cannot read {}: {e}", path.display())),
        })?;
        Self::open(&bytes, passphrase)
    }

    /// Fresh nonce per seal; the key and salt stay fixed for the file's life.
    pub fn seal<R: CryptoRng + ?Sized>(&self, rng: &mut R) -> Vec<u8> {
        let nonce: [u8; 24] = rng.random();
        let plaintext = serde_json::to_vec(&self.state).expect("wallet serializes");
        let ciphertext = XChaCha20Poly1305::new(&Key::from(self.key))
            .encrypt(&XNonce::from(nonce), Payload { msg: &plaintext, aad: &header_aad(&self.kdf) })
            .expect("in-memory encryption cannot fail");
        let env = Envelope {
            version: WALLET_VERSION,
            kdf: self.kdf.clone(),
            nonce: hex::encode(nonce),
            ciphertext: hex::encode(ciphertext),
        };
        serde_json::to_vec_pretty(&env).expect("envelope serializes")
    }

    pub fn save<R: CryptoRng + ?Sized>(&self, path: &Path, rng: &mut R) -> Result<(), CliError> {
        write_atomic(path, &self.seal(rng))
    }
}

fn derive_key(passphrase: &[u8], kdf: &KdfParams) -> Result<[u8; 32], CliError> {
    let bad = |what: String| CliError::io("wallet-corrupt", format!("wallet key derivation: {what}"));
    if kdf.algorithm != KDF_ALGORITHM {
        return Err(bad(format!("unsupported algorithm {}", kdf.algorithm)));
    }
    let salt = hex::decode(&kdf.salt).map_err(|_| bad("salt is not hex".into()))?;
    let params =
        Params::new(kdf.memory_kib, kdf.iterations, kdf.parallelism, Some(32)).map_err(|e| bad(e.to_string()))?;
    let mut key = [0u8; 32];
    Argon2::new(Algorithm::Argon2id, Version::V0x13, params)
        .hash_password_into(passphrase, &salt, &mut key)
        .map_err(|e| bad(e.to_string()))?;
    Ok(key)
}

/// Temp file, fsync, rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::io("io", format!("cannot write {}: {e}", path.display()));
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let mut f = File::create(&tmp).map_err(io)?;
    f.write_all(bytes).map_err(io)?;
    f.sync_all().map_err(io)?;
    fs::rename(&tmp, path).map_err(io)
}

/// Advisory lock on `<ledger>.lock`, held until drop.
pub struct LedgerLock {
    _file: File,
}

impl LedgerLock {
    pub fn acquire(ledger: &Path, exclusive: bool) -> Result<Self, CliError> {
        let mut path = ledger.as_os_str().to_owned();
        path.push(".lock");
        let path = PathBuf::from(path);
        let io = |e: std::io::Error| CliError::io("lock", format!("cannot lock {}: {e}", path.display()));
        let file = OpenOptions::new().create(true).truncate(false).write(true).open(&path).map_err(io)?;
        if exclusive {
            file.lock().map_err(io)?;
        } else {
            file.lock_shared().map_err(io)?;
        }
        Ok(LedgerLock { _file: file })
    }
}

/// Restores the ledger at `path`, or starts an empty one if absent.
pub fn load_ledger(path: &Path, config: LedgerConfig) -> Result<Ledger, CliError> {
    if !path.exists() {
        return Ok(Ledger::new(config)?);
    }
    let ledger = Ledger::restore(path)?;
    if *ledger.config() != config {
        return Err(CliError::usage(
            "config-mismatch",
            format!("{} was created with {:?}, config says {:?}", path.display(), ledger.config(), config),
        ));
    }
    Ok(ledger)
}
