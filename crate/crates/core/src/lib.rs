//! Private note transactions, private NFTs and anonymous service licenses on
//! a simulated ledger.

pub mod backend;
pub mod citadel;
pub mod codec;
pub mod crypto;
pub mod ledger;
pub mod merkle;
pub mod phoenix;
pub mod wallet;
