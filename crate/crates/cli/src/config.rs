use std::fs;
use std::path::{Path, PathBuf};

use citadel_core::ledger::{Ledger, LedgerConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    /// Witness-checking backend; proofs are sealed witnesses.
    #[default]
    Transparent,
}

/// TOML config. Relative paths resolve against the config file's directory.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub ledger: PathBuf,
    pub wallet: PathBuf,
    pub gas_fee: u64,
    pub arity: usize,
    pub depth: usize,
    pub backend: Backend,
}

impl Default for Config {
    fn default() -> Self {
        let ledger = LedgerConfig::default();
        Config {
            ledger: "citadel-ledger.bin".into(),
            wallet: "citadel-wallet.json".into(),
            gas_fee: ledger.gas_fee,
            arity: ledger.arity,
            depth: ledger.depth,
            backend: Backend::Transparent,
        }
    }
}

impl Config {
    pub fn parse(text: &str, base: &Path) -> Result<Self, CliError> {
        let mut config: Config = toml::from_str(text).map_err(|e| CliError::usage("bad-config", e.message()))?;
        for path in [&mut config.ledger, &mut config.wallet] {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
        Ok(config)
    }

    /// Reads `path` if given, otherwise starts from defaults.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Config::default());
        };
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::usage("bad-config", format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new("")))
    }

    pub fn ledger_config(&self) -> LedgerConfig {
        LedgerConfig { gas_fee: self.gas_fee, arity: self.arity, depth: self.depth }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        Ledger::new(self.ledger_config())
            .map(drop)
            .map_err(|_| CliError::usage("bad-config", format!("unsupported tree shape {}x{}", self.arity, self.depth)))
    }
}
