mod common;

use citadel_core::backend::TransparentBackend;
use citadel_core::citadel;
use citadel_core::crypto::Scalar;
use citadel_core::ledger::{parse_event_log, Event, Ledger, LedgerError, Reject};
use citadel_core::phoenix::{build_transaction, compute_nullifier, NonceLog, Note, Output, Transaction};
use citadel_core::wallet::Wallet;
use common::{other_scalar, World};

#[test]
fn accepted_tx_gets_consecutive_positions() {
    let mut world = World::new(40);
    let mut alice = world.wallet(&[10, 10]);
    let bob = world.wallet(&[]);
    let built = alice.send(&world.ledger, &bob.note_pk(), 12, &world.backend, &mut world.rng).unwrap();
    let r = world.accept(&built);
    assert_eq!(r.positions, vec![2, 3]);
    assert!(r.reject_reason.is_none());
    for n in &built.tx.spends {
        assert!(world.ledger.is_spent(&n.0));
    }
    let rec = world.ledger.transaction(&built.tx.tx_hash).unwrap();
    assert_eq!(rec.positions, &[2, 3]);
    assert_eq!(rec.height, 2);
}

#[test]
fn resubmission_is_a_seen_nullifier() {
    let mut world = World::new(41);
    let mut alice = world.wallet(&[10]);
    let bob = world.wallet(&[]);
    let built = alice.send(&world.ledger, &bob.note_pk(), 7, &world.backend, &mut world.rng).unwrap();
    world.accept(&built);
    let r = world.submit(&built);
    assert!(!r.accepted);
    assert!(r.positions.is_empty());
    assert_eq!(r.reject_reason, Some(Reject::NullifierSeen));
    assert_eq!(r.reject_reason.unwrap().code(), "nullifier-seen");
}

#[test]
fn unknown_root_is_rejected() {
    let mut world = World::new(42);
    let mut alice = world.wallet(&[10]);
    let bob = world.wallet(&[]);
    // A fork with one extra note has a root this ledger never had.
    let mut fork = world.ledger.clone();
    fork.faucet(&bob.note_pk(), 1, false, &mut world.rng).unwrap();
    alice.sync(&fork);
    let built = alice.send(&fork, &bob.note_pk(), 7, &world.backend, &mut world.rng).unwrap();
    let digest = world.ledger.digest();
    let r = world.submit(&built);
    assert_eq!(r.reject_reason.map(|e| e.code()), Some("unknown-root".to_string()));
    assert_eq!(world.ledger.digest(), digest);
}

#[test]
fn gas_must_equal_the_flat_fee() {
    let mut world = World::new(43);
    let alice = world.wallet(&[10]);
    let bob = world.wallet(&[]);
    let funding = alice.fund(&world.ledger, 10).unwrap();
    let outputs = [Output::Value { to: bob.note_pk(), value: 8, obfuscated: false }];
    let built = build_transaction(
        funding.spends,
        &outputs,
        2,
        funding.notes_root,
        &world.backend,
        &mut NonceLog::default(),
        &mut world.rng,
    )
    .unwrap();
    assert_eq!(world.submit(&built).reject_reason, Some(Reject::Gas { expected: 3, got: 2 }));
}

/// Two transactions spending the same note, submitted in both orders.
#[test]
fn conflicting_spends_accept_exactly_one() {
    for order in [[0usize, 1], [1, 0]] {
        let mut world = World::new(44);
        let mut alice = world.wallet(&[20]);
        let bob = world.wallet(&[]);
        let carol = world.wallet(&[]);
        let a = alice.send(&world.ledger, &bob.note_pk(), 5, &world.backend, &mut world.rng).unwrap();
        let b = alice.send(&world.ledger, &carol.note_pk(), 6, &world.backend, &mut world.rng).unwrap();
        assert_eq!(a.tx.spends, b.tx.spends);
        let txs = [a, b];
        let accepted: Vec<bool> = order.iter().map(|&i| world.submit(&txs[i]).accepted).collect();
        assert_eq!(accepted, vec![true, false]);
    }
}

#[test]
fn rejections_leave_state_untouched() {
    let mut world = World::new(45);
    let mut user = world.wallet(&[50, 30]);
    let mut sp = world.wallet(&[10]);
    let pos = world.obtain_license(&mut user, &mut sp, Scalar::ONE);
    let honest = world.use_license(&mut user, pos, &sp.public(), Scalar::ZERO);

    let mut attempts: Vec<Transaction> = Vec::new();

    // Valid license proof, fee part paying the wrong gas.
    user.sync(&world.ledger);
    let lic = user.license(pos).unwrap().license.clone();
    let membership = world.ledger.prove(pos).unwrap();
    let funding = user.fund(&world.ledger, 4).unwrap();
    let wrong_gas = citadel::use_license(
        &lic,
        membership,
        Scalar::from(9u64),
        &sp.public(),
        4,
        funding,
        &world.backend,
        &mut user.nonce_log,
        &mut world.rng,
    )
    .unwrap();
    attempts.push(wrong_gas.built.tx);

    let mut t = honest.built.tx.clone();
    t.proof.body[3] ^= 4;
    attempts.push(t);

    let mut t = honest.built.tx.clone();
    if let Some(citadel_core::phoenix::ContractCall::License(call)) = &mut t.contract_call {
        call.proof.commitment[0] ^= 1;
    }
    attempts.push(t);

    let mut t = honest.built.tx.clone();
    t.statement.nullifiers[0] = other_scalar(t.statement.nullifiers[0], &mut world.rng);
    attempts.push(t);

    let mut t = honest.built.tx.clone();
    t.sig_tx.pop();
    attempts.push(t);

    let mut t = honest.built.tx.clone();
    t.contract_call = None;
    attempts.push(t);

    let digest = world.ledger.digest();
    let (roots, lic_root, height) =
        (world.ledger.notes_tree().root_history().len(), world.ledger.license_root(), world.ledger.height());
    for tx in &attempts {
        let r = world.ledger.call_license_contract(tx, &world.backend);
        assert!(!r.accepted, "{:?}", r);
        assert_eq!(world.ledger.digest(), digest);
        assert_eq!(world.ledger.notes_tree().root_history().len(), roots);
        assert_eq!(world.ledger.license_root(), lic_root);
        assert_eq!(world.ledger.height(), height);
    }
    world.accept(&honest.built);
}

#[test]
fn incremental_scan_matches_full_scan() {
    let mut world = World::new(46);
    let mut alice = world.wallet(&[10, 20, 30]);
    let bob = world.wallet(&[4]);
    for v in [1, 2, 3] {
        alice.sync(&world.ledger);
        let built = alice.send(&world.ledger, &bob.note_pk(), v, &world.backend, &mut world.rng).unwrap();
        world.accept(&built);
    }
    let vk = bob.keys.note_keys.view_key();
    let full = world.ledger.scan(&vk, 0);
    assert_eq!(full.len(), 4);
    for h in 0..=world.ledger.height() {
        let expected: Vec<_> = full.iter().filter(|r| r.height >= h).cloned().collect();
        assert_eq!(world.ledger.scan(&vk, h), expected);
    }
}

#[test]
fn view_key_cannot_derive_nullifiers() {
    let mut world = World::new(47);
    let mut bob = world.wallet(&[5, 6, 7]);
    bob.sync(&world.ledger);
    let vk = bob.keys.note_keys.view_key();
    for rec in world.ledger.scan(&vk, 0) {
        let real = bob.cache.notes.iter().find(|n| n.pos == rec.pos).unwrap().nullifier;
        let guesses = [Scalar::ZERO, vk.a, citadel_core::crypto::hash_fast(&vk.shared_point(&rec.note.r).to_bytes())];
        for g in guesses {
            let nsk = citadel_core::crypto::NoteSecretKey::from_nsk(g);
            assert_ne!(compute_nullifier(&nsk, rec.pos), real);
        }
    }
}

fn busy_ledger(seed: u64) -> (World, Wallet) {
    let mut world = World::new(seed);
    let mut user = world.wallet(&[50, 30]);
    let mut sp = world.wallet(&[10]);
    world.lifecycle(&mut user, &mut sp, Scalar::from(3u64), Scalar::ZERO);
    sp.sync(&world.ledger);
    let (pos, proof) = sp.prove_issuance(&world.ledger, sp.cache.requests[0].pos, &mut world.rng).unwrap();
    world.ledger.revoke_license_note(pos, &proof).unwrap();
    let bob = world.wallet(&[]);
    user.sync(&world.ledger);
    let built = user.send(&world.ledger, &bob.note_pk(), 2, &world.backend, &mut world.rng).unwrap();
    world.accept(&built);
    user.sync(&world.ledger);
    (world, user)
}

#[test]
fn persist_restore_roundtrip() {
    let (world, _) = busy_ledger(48);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ledger.bin");
    world.ledger.persist(&path).unwrap();
    let restored = Ledger::restore(&path).unwrap();
    assert_eq!(restored.digest(), world.ledger.digest());
    assert_eq!(restored.notes_root(), world.ledger.notes_root());
    assert_eq!(restored.license_root(), world.ledger.license_root());
    assert_eq!(restored.spent_nullifiers(), world.ledger.spent_nullifiers());
    assert_eq!(restored.license_nullifiers(), world.ledger.license_nullifiers());
    assert_eq!(restored.events(), world.ledger.events());
    assert_eq!(restored.to_bytes(), world.ledger.to_bytes());
}

#[test]
fn restored_ledger_decides_like_the_original() {
    let (mut world, mut user) = busy_ledger(49);
    let mut restored = Ledger::from_bytes(&world.ledger.to_bytes()).unwrap();
    let bob = world.wallet(&[1]);
    restored.faucet_note(world.ledger.notes().last().unwrap().note.clone().without_pos()).unwrap();
    assert_eq!(restored.digest(), world.ledger.digest());

    let stale = world.ledger.events().iter().rev().find_map(|e| match e {
        Event::Transaction { tx } => Some(tx.clone()),
        _ => None,
    });
    let fresh = user.send(&world.ledger, &bob.note_pk(), 1, &world.backend, &mut world.rng).unwrap().tx;
    for tx in [stale.unwrap(), fresh] {
        let a = world.ledger.submit_tx(&tx, &world.backend);
        let b = restored.submit_tx(&tx, &world.backend);
        assert_eq!(a, b);
        assert_eq!(world.ledger.digest(), restored.digest());
    }
}

trait WithoutPos {
    fn without_pos(self) -> Self;
}

impl WithoutPos for Note {
    fn without_pos(mut self) -> Self {
        self.pos = None;
        self
    }
}

#[test]
fn truncated_or_flipped_file_is_refused() {
    let (world, _) = busy_ledger(50);
    let bytes = world.ledger.to_bytes();
    for cut in [0, 1, 8, bytes.len() / 2, bytes.len() - 1] {
        assert!(Ledger::from_bytes(&bytes[..cut]).is_err(), "cut at {cut}");
    }
    let mut flipped = bytes.clone();
    let mid = flipped.len() / 2;
    flipped[mid] ^= 0x10;
    assert!(matches!(Ledger::from_bytes(&flipped), Err(LedgerError::Codec(_))));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ledger.bin");
    std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
    assert!(Ledger::restore(&path).is_err());
}

#[test]
fn replay_is_deterministic() {
    let (world, _) = busy_ledger(51);
    let backend = TransparentBackend::default();
    let log = world.ledger.event_log();
    let events = parse_event_log(&log).unwrap();
    let a = Ledger::replay(*world.ledger.config(), events.clone(), &backend).unwrap();
    let b = Ledger::replay(*world.ledger.config(), events, &backend).unwrap();
    assert_eq!(a.digest(), world.ledger.digest());
    assert_eq!(a.digest(), b.digest());
    assert_eq!(a.notes_tree().root_history(), world.ledger.notes_tree().root_history());
    assert_eq!(a.event_log(), log);
}

#[test]
fn replay_refuses_a_tampered_log() {
    let (world, _) = busy_ledger(52);
    let mut events = world.ledger.events().to_vec();
    let last = events.len() - 1;
    events.swap(last, last - 1);
    let backend = TransparentBackend::default();
    assert!(matches!(Ledger::replay(*world.ledger.config(), events, &backend), Err(LedgerError::Replay { .. })));
    let bad_heights = world.ledger.event_log().replacen("\"height\":0", "\"height\":7", 1);
    assert!(parse_event_log(&bad_heights).is_err());
}

#[test]
fn reads_do_not_mutate() {
    let (world, _) = busy_ledger(53);
    let before = world.ledger.to_bytes();
    let _ = world.ledger.notes_root();
    let _ = world.ledger.transaction_hashes();
    let _ = world.ledger.spent_nullifiers();
    let _ = world.ledger.scan(&citadel_core::crypto::gen_static_keys(&mut common::rng(2)).view_key(), 0);
    assert_eq!(world.ledger.to_bytes(), before);
}
