use std::fs;
use std::path::{Path, PathBuf};

use citadel_core::backend::TransparentBackend;
use citadel_core::citadel::{ServiceRequest, SpPublic};
use citadel_core::crypto::{hash_fast, PublicKey, Scalar};
use citadel_core::ledger::{Ledger, Receipt};
use citadel_core::phoenix::BuiltTx;
use clap::{ArgAction, Parser, Subcommand};
use log::{debug, info};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde_json::{json, Value};

use crate::config::Config;
use crate::error::CliError;
use crate::store::{load_ledger, LedgerLock, OpenWallet, ProviderLink, WalletState};

/// Environment variable holding the wallet passphrase.
pub const PASSPHRASE_ENV: &str = "CITADEL_PASSPHRASE";
/// Optional u64 seed making every random choice reproducible.
pub const SEED_ENV: &str = "CITADEL_SEED";

#[derive(Debug, Parser)]
#[command(name = "citadel", version, about = "Anonymous service licenses on a simulated private-note ledger")]
pub struct Cli {
    /// TOML config file.
    #[arg(long, global = true, env = "CITADEL_CONFIG", value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Ledger state file; overrides the config.
    #[arg(long, global = true, env = "CITADEL_LEDGER", value_name = "PATH")]
    pub ledger: Option<PathBuf>,
    /// Encrypted wallet file; overrides the config.
    #[arg(long, global = true, env = "CITADEL_WALLET", value_name = "PATH")]
    pub wallet: Option<PathBuf>,
    /// Read the passphrase from this file instead of CITADEL_PASSPHRASE.
    #[arg(long, global = true, value_name = "PATH")]
    pub passphrase_file: Option<PathBuf>,
    /// Log to stderr; repeat for more detail.
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Create a new wallet.
    Keygen {
        /// Overwrite an existing wallet file.
        #[arg(long)]
        force: bool,
    },
    /// Print the wallet's public address.
    Address,
    /// Mint a value note to this wallet (simulation only).
    Faucet {
        amount: u64,
        /// Mint a transparent note instead of an obfuscated one.
        #[arg(long)]
        transparent: bool,
    },
    /// Pay another address.
    Send { to: String, amount: u64 },
    /// Pay a provider and ask it for a license.
    RequestLicense { sp: String, price: u64 },
    /// Answer a received request with a license carrying `attr`.
    IssueLicense { request_id: u64, attr: String },
    /// List held licenses and received requests.
    Licenses,
    /// Prove possession of a license on the ledger and write the service request.
    UseLicense {
        id: u64,
        /// Challenge bound to this use; random if omitted.
        #[arg(long)]
        challenge: Option<String>,
        /// Provider address; defaults to the one the license was requested from.
        #[arg(long)]
        provider: Option<String>,
        #[arg(long, default_value = "service-request.json", value_name = "PATH")]
        out: PathBuf,
    },
    /// Check a service request against the ledger and this wallet's license key.
    GrantService {
        request: PathBuf,
        /// Accept only these attributes; repeatable.
        #[arg(long, value_name = "ATTR")]
        require_attr: Vec<String>,
        /// Accept only this challenge.
        #[arg(long, value_name = "C")]
        require_challenge: Option<String>,
    },
    /// Read-only ledger queries.
    #[command(subcommand)]
    Ledger(LedgerCommand),
    /// Drop the wallet cache and rebuild it from the ledger.
    Rescan,
}

#[derive(Debug, Subcommand)]
pub enum LedgerCommand {
    Root,
    Tx { hash: String },
    Nullifiers,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Keygen { .. } => "keygen",
            Command::Address => "address",
            Command::Faucet { .. } => "faucet",
            Command::Send { .. } => "send",
            Command::RequestLicense { .. } => "request-license",
            Command::IssueLicense { .. } => "issue-license",
            Command::Licenses => "licenses",
            Command::UseLicense { .. } => "use-license",
            Command::GrantService { .. } => "grant-service",
            Command::Ledger(LedgerCommand::Root) => "ledger root",
            Command::Ledger(LedgerCommand::Tx { .. }) => "ledger tx",
            Command::Ledger(LedgerCommand::Nullifiers) => "ledger nullifiers",
            Command::Rescan => "rescan",
        }
    }
}

/// Resolved settings for one invocation.
struct Env {
    config: Config,
    passphrase_file: Option<PathBuf>,
    seed: Option<u64>,
    /// Mixed into seeded randomness so distinct invocations differ.
    context: String,
}

impl Env {
    fn from_cli(cli: &Cli) -> Result<Self, CliError> {
        let mut config = Config::load(cli.config.as_deref())?;
        if let Some(p) = &cli.ledger {
            config.ledger = p.clone();
        }
        if let Some(p) = &cli.wallet {
            config.wallet = p.clone();
        }
        config.validate()?;
        let seed = match std::env::var(SEED_ENV) {
            Ok(s) => Some(s.parse().map_err(|_| CliError::usage("bad-seed", format!("{SEED_ENV} must be a u64")))?),
            Err(_) => None,
        };
        Ok(Env { config, passphrase_file: cli.passphrase_file.clone(), seed, context: format!("{:?}", cli.command) })
    }

    fn passphrase(&self) -> Result<Vec<u8>, CliError> {
        let pass = match &self.passphrase_file {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| CliError::usage("passphrase", format!("cannot read {}: {e}", path.display())))?;
                text.trim_end_matches(['\r', '\n']).to_owned()
            }
            None => std::env::var(PASSPHRASE_ENV).unwrap_or_default(),
        };
        if pass.is_empty() {
            return Err(CliError::usage(
                "passphrase",
                format!("no passphrase: set {PASSPHRASE_ENV} or pass --passphrase-file"),
            ));
        }
        Ok(pass.into_bytes())
    }

    fn rng(&self, parts: &[&[u8]]) -> ChaCha20Rng {
        let Some(seed) = self.seed else {
            return ChaCha20Rng::from_rng(&mut rand::rng());
        };
        let mut bytes = b"citadel-cli/rng/v1".to_vec();
        for part in [&seed.to_le_bytes()[..], self.context.as_bytes()].iter().chain(parts) {
            bytes.extend_from_slice(&(part.len() as u64).to_le_bytes());
            bytes.extend_from_slice(part);
        }
        ChaCha20Rng::from_seed(hash_fast(&bytes).to_bytes())
    }
}

/// Ledger and wallet loaded under the ledger lock.
struct Session {
    ledger: Ledger,
    wallet: OpenWallet,
    rng: ChaCha20Rng,
    backend: TransparentBackend,
    _lock: LedgerLock,
}

impl Session {
    fn open(env: &Env) -> Result<Self, CliError> {
        let lock = LedgerLock::acquire(&env.config.ledger, true)?;
        let ledger = load_ledger(&env.config.ledger, env.config.ledger_config())?;
        let wallet = OpenWallet::load(&env.config.wallet, &env.passphrase()?)?;
        let address = wallet.state.wallet.public().to_bytes();
        let rng = env.rng(&[&ledger.digest().to_bytes(), &address]);
        debug!("ledger at height {} loaded from {}", ledger.height(), env.config.ledger.display());
        let mut session = Session { ledger, wallet, rng, backend: TransparentBackend::default(), _lock: lock };
        session.sync();
        Ok(session)
    }

    fn state(&mut self) -> &mut WalletState {
        &mut self.wallet.state
    }

    fn sync(&mut self) {
        self.wallet.state.wallet.sync(&self.ledger);
    }

    fn submit(&mut self, built: &BuiltTx) -> Result<Receipt, CliError> {
        let receipt = if built.tx.contract_call.is_some() {
            self.ledger.call_license_contract(&built.tx, &self.backend)
        } else {
            self.ledger.submit_tx(&built.tx, &self.backend)
        };
        if let Some(reason) = receipt.reject_reason.clone() {
            info!("transaction {} rejected: {}", receipt.tx_hash.to_hex(), reason.code());
            return Err(reason.into());
        }
        info!("transaction {} accepted at positions {:?}", receipt.tx_hash.to_hex(), receipt.positions);
        Ok(receipt)
    }

    /// Writes the ledger, then the refreshed wallet.
    fn commit(&mut self, env: &Env, ledger_changed: bool) -> Result<(), CliError> {
        if ledger_changed {
            self.ledger.persist(&env.config.ledger)?;
            info!("ledger saved at height {}", self.ledger.height());
        }
        self.sync();
        self.wallet.save(&env.config.wallet, &mut self.rng)
    }
}

/// Runs one command and returns its `result` object.
pub fn execute(cli: &Cli) -> Result<Value, CliError> {
    let env = Env::from_cli(cli)?;
    match &cli.command {
        Command::Keygen { force } => keygen(&env, *force),
        Command::Address => address(&env),
        Command::Faucet { amount, transparent } => faucet(&env, *amount, !transparent),
        Command::Send { to, amount } => send(&env, to, *amount),
        Command::RequestLicense { sp, price } => request_license(&env, sp, *price),
        Command::IssueLicense { request_id, attr } => issue_license(&env, *request_id, attr),
        Command::Licenses => licenses(&env),
        Command::UseLicense { id, challenge, provider, out } => {
            use_license(&env, *id, challenge.as_deref(), provider.as_deref(), out)
        }
        Command::GrantService { request, require_attr, require_challenge } => {
            grant_service(&env, request, require_attr, require_challenge.as_deref())
        }
        Command::Ledger(q) => ledger_query(&env, q),
        Command::Rescan => rescan(&env),
    }
}

/// Decimal u64 or 64 hex digits (optionally `0x`-prefixed).
pub fn parse_scalar(what: &str, s: &str) -> Result<Scalar, CliError> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(Scalar::from_u64(v));
    }
    Scalar::from_hex(s.strip_prefix("0x").unwrap_or(s)).map_err(|_| {
        CliError::validation(format!("bad-{what}"), format!("{what} must be a u64 or a 64-digit hex scalar"))
    })
}

fn parse_provider(s: &str) -> Result<SpPublic, CliError> {
    SpPublic::from_hex(s).map_err(|e| CliError::validation("bad-address", format!("provider address: {e}")))
}

/// Accepts a full address or just its 64-byte note key.
fn parse_recipient(s: &str) -> Result<PublicKey, CliError> {
    let bad = |e: String| CliError::validation("bad-address", format!("recipient address: {e}"));
    let bytes = hex::decode(s).map_err(|e| bad(e.to_string()))?;
    match bytes.len() {
        96 => SpPublic::from_bytes(&bytes).map(|p| p.note_pk).map_err(|e| bad(e.to_string())),
        _ => PublicKey::from_bytes(&bytes).map_err(|e| bad(e.to_string())),
    }
}

/// Ledger position of the single NFT minted by `built`.
fn nft_position(built: &BuiltTx, receipt: &Receipt) -> Option<u64> {
    built.mint_openings.iter().position(Option::is_none).and_then(|i| receipt.positions.get(i).copied())
}

fn keygen(env: &Env, force: bool) -> Result<Value, CliError> {
    let path = &env.config.wallet;
    if path.exists() && !force {
        return Err(CliError::usage("wallet-exists", format!("{} exists; pass --force to replace it", path.display())));
    }
    let passphrase = env.passphrase()?;
    let mut rng = env.rng(&[path.as_os_str().as_encoded_bytes()]);
    let state = WalletState::new(citadel_core::wallet::Wallet::generate(&mut rng));
    let address = state.wallet.public().to_hex();
    let wallet = OpenWallet::create(state, &passphrase, &mut rng)?;
    wallet.save(path, &mut rng)?;
    info!("wallet written to {}", path.display());
    Ok(json!({ "address": address, "wallet": path }))
}

fn address(env: &Env) -> Result<Value, CliError> {
    let wallet = OpenWallet::load(&env.config.wallet, &env.passphrase()?)?;
    let public = wallet.state.wallet.public();
    Ok(json!({ "address": public.to_hex(), "note_address": hex::encode(public.note_pk.to_bytes()) }))
}

fn faucet(env: &Env, amount: u64, obfuscated: bool) -> Result<Value, CliError> {
    let mut s = Session::open(env)?;
    let to = s.state().wallet.note_pk();
    let (record, _) = s.ledger.faucet(&to, amount, obfuscated, &mut s.rng)?;
    s.commit(env, true)?;
    Ok(json!({
        "pos": record.pos,
        "value": amount,
        "obfuscated": obfuscated,
        "height": s.ledger.height(),
        "balance": s.state().wallet.balance(),
    }))
}

fn send(env: &Env, to: &str, amount: u64) -> Result<Value, CliError> {
    let to = parse_recipient(to)?;
    let mut s = Session::open(env)?;
    let built = s.wallet.state.wallet.send(&s.ledger, &to, amount, &s.backend, &mut s.rng)?;
    let receipt = s.submit(&built)?;
    s.commit(env, true)?;
    Ok(json!({
        "tx_hash": receipt.tx_hash,
        "positions": receipt.positions,
        "amount": amount,
        "gas": built.tx.gas,
        "balance": s.state().wallet.balance(),
    }))
}

fn request_license(env: &Env, sp: &str, price: u64) -> Result<Value, CliError> {
    let sp = parse_provider(sp)?;
    let mut s = Session::open(env)?;
    let (built, request) = s.wallet.state.wallet.request_license(&s.ledger, &sp, price, &s.backend, &mut s.rng)?;
    let receipt = s.submit(&built)?;
    s.state().providers.push(ProviderLink { license_npk: request.npk_user, provider: sp });
    s.commit(env, true)?;
    Ok(json!({
        "tx_hash": receipt.tx_hash,
        "request_id": nft_position(&built, &receipt),
        "price": price,
        "gas": built.tx.gas,
        "balance": s.state().wallet.balance(),
    }))
}

fn issue_license(env: &Env, request_id: u64, attr: &str) -> Result<Value, CliError> {
    let attr = parse_scalar("attr", attr)?;
    let mut s = Session::open(env)?;
    let request = s.state().wallet.request(request_id)?;
    if let Some(pos) = request.license_pos {
        return Err(CliError::validation(
            "already-issued",
            format!("request {request_id} was answered by the license at {pos}"),
        ));
    }
    let paid = request.paid;
    let built = s.wallet.state.wallet.issue_license(&s.ledger, request_id, attr, &s.backend, &mut s.rng)?;
    let receipt = s.submit(&built)?;
    s.commit(env, true)?;
    Ok(json!({
        "tx_hash": receipt.tx_hash,
        "request_id": request_id,
        "license_pos": nft_position(&built, &receipt),
        "attr": attr,
        "paid": paid,
    }))
}

fn licenses(env: &Env) -> Result<Value, CliError> {
    let mut s = Session::open(env)?;
    s.commit(env, false)?;
    Ok(license_listing(s.state()))
}

fn license_listing(state: &WalletState) -> Value {
    let licenses: Vec<Value> = state
        .wallet
        .cache
        .licenses
        .iter()
        .map(|l| {
            json!({
                "pos": l.license.pos,
                "attr": l.license.payload.attr,
                "revoked": l.revoked,
                "provider": state.provider_for(&l.license.note.npk).map(|p| p.to_hex()),
            })
        })
        .collect();
    let requests: Vec<Value> = state
        .wallet
        .cache
        .requests
        .iter()
        .map(|r| json!({ "id": r.pos, "paid": r.paid, "license_pos": r.license_pos }))
        .collect();
    json!({ "licenses": licenses, "requests": requests })
}

fn use_license(
    env: &Env,
    id: u64,
    challenge: Option<&str>,
    provider: Option<&str>,
    out: &Path,
) -> Result<Value, CliError> {
    let challenge = challenge.map(|c| parse_scalar("challenge", c)).transpose()?;
    let provider = provider.map(parse_provider).transpose()?;
    let mut s = Session::open(env)?;
    let license = s.state().wallet.license(id)?.license.clone();
    let sp = match provider.or_else(|| s.state().provider_for(&license.note.npk)) {
        Some(sp) => sp,
        None => {
            return Err(CliError::usage(
                "unknown-provider",
                format!("no provider recorded for license {id}; pass --provider"),
            ))
        }
    };
    let c = challenge.unwrap_or_else(|| Scalar::random(&mut s.rng));
    let used = s.wallet.state.wallet.use_license(&s.ledger, id, &sp, c, &s.backend, &mut s.rng)?;
    let receipt = s.submit(&used.built)?;
    s.commit(env, true)?;
    let request = serde_json::to_vec_pretty(&used.service_request()).expect("request serializes");
    crate::store::write_atomic(out, &request)?;
    info!("service request written to {}", out.display());
    Ok(json!({
        "tx_hash": receipt.tx_hash,
        "license_pos": id,
        "challenge": c,
        "nullifier_lic": used.statement.nullifier_lic,
        "service_request": out,
    }))
}

fn grant_service(
    env: &Env,
    request: &Path,
    require_attr: &[String],
    require_challenge: Option<&str>,
) -> Result<Value, CliError> {
    let attrs = require_attr.iter().map(|a| parse_scalar("attr", a)).collect::<Result<Vec<_>, _>>()?;
    let challenge = require_challenge.map(|c| parse_scalar("challenge", c)).transpose()?;
    let text = fs::read(request).map_err(|e| CliError::io("io", format!("cannot read {}: {e}", request.display())))?;
    let req: ServiceRequest = serde_json::from_slice(&text)
        .map_err(|e| CliError::validation("bad-service-request", format!("{}: {e}", request.display())))?;
    let _lock = LedgerLock::acquire(&env.config.ledger, false)?;
    let ledger = load_ledger(&env.config.ledger, env.config.ledger_config())?;
    let wallet = OpenWallet::load(&env.config.wallet, &env.passphrase()?)?;
    let grant = wallet.state.wallet.grant_service(&req, &ledger, |attr, c| {
        (attrs.is_empty() || attrs.contains(&attr)) && challenge.is_none_or(|x| x == c)
    })?;
    Ok(json!({
        "granted": true,
        "tx_hash": grant.tx_hash,
        "nullifier_lic": grant.nullifier_lic,
        "attr": grant.attr,
        "challenge": grant.c,
    }))
}

fn ledger_query(env: &Env, query: &LedgerCommand) -> Result<Value, CliError> {
    let _lock = LedgerLock::acquire(&env.config.ledger, false)?;
    let ledger = load_ledger(&env.config.ledger, env.config.ledger_config())?;
    match query {
        LedgerCommand::Root => {
            let c = ledger.config();
            Ok(json!({
                "height": ledger.height(),
                "digest": ledger.digest(),
                "notes_root": ledger.notes_root(),
                "license_root": ledger.license_root(),
                "gas_fee": c.gas_fee,
                "arity": c.arity,
                "depth": c.depth,
            }))
        }
        LedgerCommand::Tx { hash } => {
            let hash = Scalar::from_hex(hash.strip_prefix("0x").unwrap_or(hash))
                .map_err(|_| CliError::validation("bad-hash", "tx hash must be 64 hex digits"))?;
            let record = ledger
                .transaction(&hash)
                .ok_or_else(|| CliError::validation("unknown-tx", format!("no transaction {}", hash.to_hex())))?;
            Ok(json!({
                "tx_hash": hash,
                "height": record.height,
                "positions": record.positions,
                "transaction": record.tx,
            }))
        }
        LedgerCommand::Nullifiers => Ok(json!({
            "spent": ledger.spent_nullifiers(),
            "license": ledger.license_nullifiers(),
        })),
    }
}

fn rescan(env: &Env) -> Result<Value, CliError> {
    let mut s = Session::open(env)?;
    s.wallet.state.wallet.rescan(&s.ledger);
    s.commit(env, false)?;
    let cache = &s.state().wallet.cache;
    Ok(json!({
        "scanned_height": cache.scanned_height,
        "notes": cache.notes.len(),
        "unspent": cache.notes.iter().filter(|n| !n.spent).count(),
        "licenses": cache.licenses.len(),
        "requests": cache.requests.len(),
        "balance": s.state().wallet.balance(),
    }))
}
