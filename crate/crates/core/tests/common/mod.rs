#![allow(dead_code)]

pub mod vectors;

use citadel_core::backend::TransparentBackend;
use citadel_core::citadel::{Grant, LicenseUse, ServiceRequest, SpPublic};
use citadel_core::crypto::{domain_tag, hash_sponge, Element, GroupElement, Scalar};
use citadel_core::ledger::{Ledger, LedgerConfig, Receipt};
use citadel_core::merkle::MerkleProof;
use citadel_core::phoenix::{BuiltTx, Note, NotePayload, Transaction, TxRelation};
use citadel_core::wallet::Wallet;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub const PRICE: u64 = 5;

pub struct World {
    pub ledger: Ledger,
    pub backend: TransparentBackend,
    pub rng: ChaCha20Rng,
}

impl World {
    pub fn new(seed: u64) -> Self {
        Self::with_config(seed, LedgerConfig::default())
    }

    pub fn with_config(seed: u64, config: LedgerConfig) -> Self {
        World {
            ledger: Ledger::new(config).unwrap(),
            backend: TransparentBackend::default(),
            rng: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    pub fn wallet(&mut self, funds: &[u64]) -> Wallet {
        let mut w = Wallet::generate(&mut self.rng);
        // a fresh key owns nothing older than now
        w.cache.scanned_height = self.ledger.height();
        for &v in funds {
            let obfuscated = self.rng.random::<bool>();
            self.ledger.faucet(&w.note_pk(), v, obfuscated, &mut self.rng).unwrap();
        }
        w.sync(&self.ledger);
        w
    }

    pub fn submit(&mut self, built: &BuiltTx) -> Receipt {
        self.ledger.submit_tx(&built.tx, &self.backend)
    }

    pub fn accept(&mut self, built: &BuiltTx) -> Receipt {
        let r = self.submit(built);
        assert!(r.accepted, "rejected: {:?}", r.reject_reason);
        r
    }

    /// Request, issue and confirm a license; returns its position in the
    /// user's wallet.
    pub fn obtain_license(&mut self, user: &mut Wallet, sp: &mut Wallet, attr: Scalar) -> u64 {
        user.sync(&self.ledger);
        let (built, _) = user.request_license(&self.ledger, &sp.public(), PRICE, &self.backend, &mut self.rng).unwrap();
        self.accept(&built);

        sp.sync(&self.ledger);
        let req = sp.cache.requests.iter().rev().find(|r| r.license_pos.is_none()).unwrap().clone();
        assert!(req.paid >= PRICE);
        let built = sp.issue_license(&self.ledger, req.pos, attr, &self.backend, &mut self.rng).unwrap();
        let receipt = self.accept(&built);

        user.sync(&self.ledger);
        let pos = receipt.positions[0];
        user.license(pos).unwrap();
        pos
    }

    pub fn use_license(&mut self, user: &mut Wallet, license_pos: u64, sp: &SpPublic, c: Scalar) -> LicenseUse {
        user.sync(&self.ledger);
        user.use_license(&self.ledger, license_pos, sp, c, &self.backend, &mut self.rng).unwrap()
    }

    /// Full request, issue, use and grant cycle for a fresh license; returns the grant.
    pub fn lifecycle(&mut self, user: &mut Wallet, sp: &mut Wallet, attr: Scalar, c: Scalar) -> Grant {
        let pos = self.obtain_license(user, sp, attr);
        let used = self.use_license(user, pos, &sp.public(), c);
        let receipt = self.ledger.call_license_contract(&used.built.tx, &self.backend);
        assert!(receipt.accepted, "rejected: {:?}", receipt.reject_reason);
        let req: ServiceRequest = used.service_request();
        sp.grant_service(&req, &self.ledger, |a, cc| a == attr && cc == c).unwrap()
    }
}

/// Hand-assembled transaction spending the note at `pos` as if it were
/// worth 100, paying 97 back to the attacker plus gas.
pub fn forged_spend(world: &mut World, attacker: &Wallet, pos: u64) -> BuiltTx {
    use citadel_core::crypto::{recover_note_secret, sign_double};
    use citadel_core::phoenix::{
        compute_nullifier, mint_value_note, tx_hash_of, SpendWitness, TxStatement, TxWitness, ValueOpening,
    };

    let note = world.ledger.note(pos).unwrap().note.clone();
    let nsk = recover_note_secret(&attacker.keys.note_keys, &note.npk, &note.r).unwrap();
    let opening = if note.note_type.is_value() {
        note.value_opening(&attacker.keys.note_keys.view_key()).unwrap()
    } else {
        ValueOpening::new(100, Scalar::random(&mut world.rng))
    };
    let root = world.ledger.notes_root();
    let merkle_proof = world.ledger.prove(pos).unwrap();
    let nullifier = compute_nullifier(&nsk, pos);
    let (mint, mint_opening) = mint_value_note(&attacker.note_pk(), 97, true, &mut world.rng).unwrap();
    let tx_hash = tx_hash_of(&[nullifier], std::slice::from_ref(&mint), 3, None);
    let sig = sign_double(nsk.nsk, tx_hash, &mut world.rng);
    let statement = TxStatement {
        notes_root: root,
        nullifiers: vec![nullifier.0],
        spend_types: vec![note.note_type],
        mint_commitments: vec![mint.com.unwrap()],
        gas: Scalar::from(3u64),
        tx_hash,
    };
    let witness = TxWitness {
        spends: vec![SpendWitness { note, merkle_proof, npk_prime: nsk.npk_prime, opening, sig }],
        mints: vec![mint_opening],
    };
    let proof = world.backend.prove_unchecked::<TxRelation>(&statement, &witness);
    BuiltTx {
        tx: Transaction {
            spends: vec![nullifier],
            mints: vec![mint],
            gas: 3,
            contract_call: None,
            tx_hash,
            sig_tx: vec![sig],
            statement,
            proof,
        },
        mint_openings: vec![Some(mint_opening)],
        witness,
    }
}

/// Root recomputed from the leaf list alone: subtrees with no written leaf
/// hash to a precomputed empty value, everything else level by level.
pub fn naive_root(arity: usize, depth: usize, leaves: &[Scalar]) -> Scalar {
    let mut empty = hash_sponge(&[Element::Scalar(domain_tag("EMPTY"))]).unwrap();
    let mut level: Vec<Scalar> = leaves.to_vec();
    for _ in 0..depth {
        let parents = level.len().div_ceil(arity).max(1);
        let mut next = Vec::with_capacity(parents);
        for p in 0..parents {
            let children: Vec<Element> =
                (0..arity).map(|j| Element::Scalar(*level.get(p * arity + j).unwrap_or(&empty))).collect();
            next.push(hash_sponge(&children).unwrap());
        }
        empty = hash_sponge(&vec![Element::Scalar(empty); arity]).unwrap();
        level = next;
    }
    level[0]
}

pub fn oracle_tombstone() -> Scalar {
    hash_sponge(&[Element::Scalar(domain_tag("REVOKED"))]).unwrap()
}

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn random_point<R: rand::CryptoRng + ?Sized>(rng: &mut R) -> GroupElement {
    citadel_core::crypto::generator_g() * Scalar::random_nonzero(rng)
}

/// Element-wise fresh replacement guaranteed to differ from `old`.
pub fn other_scalar<R: rand::CryptoRng + ?Sized>(old: Scalar, rng: &mut R) -> Scalar {
    loop {
        let s = Scalar::random(rng);
        if s != old {
            return s;
        }
    }
}

pub fn other_point<R: rand::CryptoRng + ?Sized>(old: GroupElement, rng: &mut R) -> GroupElement {
    loop {
        let p = random_point(rng);
        if p != old {
            return p;
        }
    }
}

/// Perturbs one randomly chosen field of a note.
pub fn corrupt_note<R: rand::CryptoRng + ?Sized>(note: &mut Note, rng: &mut R) {
    match rng.random_range(0..5u8) {
        0 => note.nonce = other_scalar(note.nonce, rng),
        1 => note.npk = other_point(note.npk, rng),
        2 => note.r = other_point(note.r, rng),
        3 => note.pos = Some(note.pos.unwrap_or(0) + 1 + rng.random_range(0..100u64)),
        _ => match &mut note.enc {
            NotePayload::Plain(items) => {
                let i = rng.random_range(0..items.len());
                items[i] = match items[i] {
                    Element::Scalar(s) => Element::Scalar(other_scalar(s, rng)),
                    Element::Point(p) => Element::Point(other_point(p, rng)),
                };
            }
            NotePayload::Sealed(bytes) => {
                let i = rng.random_range(0..bytes.len());
                bytes[i] ^= 1 << rng.random_range(0..8u8);
            }
        },
    }
}

/// Perturbs one randomly chosen part of a Merkle proof.
pub fn corrupt_proof<R: rand::CryptoRng + ?Sized>(proof: &mut MerkleProof, rng: &mut R) {
    match rng.random_range(0..3u8) {
        0 => proof.leaf = other_scalar(proof.leaf, rng),
        1 => {
            let level = rng.random_range(0..proof.siblings.len());
            let i = rng.random_range(0..proof.siblings[level].len());
            proof.siblings[level][i] = other_scalar(proof.siblings[level][i], rng);
        }
        _ => {
            let level = rng.random_range(0..proof.child_indices.len());
            let arity = proof.siblings[level].len() as u8 + 1;
            proof.child_indices[level] = (proof.child_indices[level] + 1 + rng.random_range(0..arity - 1)) % arity;
        }
    }
}
