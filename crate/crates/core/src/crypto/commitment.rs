use serde::{Deserialize, Serialize};

use super::field::{GroupElement, Scalar};
use super::hash::{generator_g, generator_g_prime};

/// Pedersen commitment key `(G, G')`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitKey {
    pub g: GroupElement,
    pub g_prime: GroupElement,
}

impl CommitKey {
    /// The fixed protocol-wide key.
    pub fn protocol() -> Self {
        CommitKey { g: generator_g(), g_prime: generator_g_prime() }
    }
}

impl Default for CommitKey {
    fn default() -> Self {
        Self::protocol()
    }
}

/// `m·G + r·G'`.
pub fn commit(ck: &CommitKey, m: Scalar, r: Scalar) -> GroupElement {
    ck.g * m + ck.g_prime * r
}

pub fn open(ck: &CommitKey, m: Scalar, r: Scalar, c: &GroupElement) -> bool {
    commit(ck, m, r) == *c
}
