mod common;

use std::collections::BTreeSet;

use citadel_core::codec::Canonical;
use citadel_core::crypto::{
    commit, decrypt, derive_symmetric_key, encrypt, gen_static_keys, open, sign_single, verify_single, CommitKey,
    Element, Scalar,
};
use citadel_core::merkle::{self, MerkleTree};
use citadel_core::phoenix::{build_transaction, check_tx_relation, mint_value_note, NonceLog, Note, Output};
use proptest::prelude::*;
use rand::RngExt;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn merkle_matches_oracle_and_proofs_verify(
        seed in any::<u64>(),
        arity in 2usize..=4,
        depth in 1usize..=3,
        ops in prop::collection::vec(any::<u8>(), 1..24),
    ) {
        let mut rng = common::rng(seed);
        let mut tree = MerkleTree::new(arity, depth).unwrap();
        let mut leaves = Vec::new();
        for op in ops {
            let before = tree.root_history().len();
            if op % 4 == 0 && !leaves.is_empty() {
                let pos = rng.random_range(0..leaves.len());
                let was = leaves[pos];
                tree.invalidate(pos as u64).unwrap();
                leaves[pos] = common::oracle_tombstone();
                let grew = usize::from(was != leaves[pos]);
                prop_assert_eq!(tree.root_history().len(), before + grew);
            } else if (leaves.len() as u64) < tree.capacity() {
                let leaf = Scalar::random(&mut rng);
                tree.append(leaf).unwrap();
                leaves.push(leaf);
                prop_assert_eq!(tree.root_history().len(), before + 1);
            } else {
                prop_assert!(tree.append(Scalar::ONE).is_err());
            }
            prop_assert_eq!(tree.root(), common::naive_root(arity, depth, &leaves));
        }
        for pos in 0..leaves.len() as u64 {
            let proof = tree.prove(pos).unwrap();
            prop_assert_eq!(proof.siblings.iter().map(Vec::len).sum::<usize>(), depth * (arity - 1));
            prop_assert_eq!(proof.child_indices.len(), depth);
            prop_assert!(merkle::verify(&tree.root(), &proof).unwrap());
        }
    }

    #[test]
    fn corrupted_merkle_proofs_reject(seed in any::<u64>(), n in 1u64..20) {
        let mut rng = common::rng(seed);
        let mut tree = MerkleTree::new(4, 3).unwrap();
        for _ in 0..n {
            tree.append(Scalar::random(&mut rng)).unwrap();
        }
        let mut proof = tree.prove(rng.random_range(0..n)).unwrap();
        common::corrupt_proof(&mut proof, &mut rng);
        prop_assert!(!merkle::verify(&tree.root(), &proof).unwrap_or(false));
    }

    #[test]
    fn commitments_bind_to_their_opening(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let ck = CommitKey::protocol();
        let (m, r) = (Scalar::random(&mut rng), Scalar::random(&mut rng));
        let c = commit(&ck, m, r);
        prop_assert!(open(&ck, m, r, &c));
        prop_assert!(!open(&ck, m, common::other_scalar(r, &mut rng), &c));
        prop_assert!(!open(&ck, common::other_scalar(m, &mut rng), r, &c));
    }

    #[test]
    fn signature_field_mutations_reject(seed in any::<u64>(), field in 0u8..4) {
        let mut rng = common::rng(seed);
        let sk = Scalar::random_nonzero(&mut rng);
        let mut pk = citadel_core::crypto::public_key(sk);
        let mut m = Scalar::random(&mut rng);
        let mut sig = sign_single(sk, m, &mut rng);
        prop_assert!(verify_single(&pk, m, &sig));
        match field {
            0 => m = common::other_scalar(m, &mut rng),
            1 => pk = common::other_point(pk, &mut rng),
            2 => sig.r = common::other_point(sig.r, &mut rng),
            _ => sig.u = common::other_scalar(sig.u, &mut rng),
        }
        prop_assert!(!verify_single(&pk, m, &sig));
    }

    #[test]
    fn payload_encryption_roundtrips_and_fails_closed(seed in any::<u64>(), len in 1usize..6, bit in any::<usize>()) {
        let mut rng = common::rng(seed);
        let key = derive_symmetric_key(&common::random_point(&mut rng));
        let nonce = Scalar::random(&mut rng);
        let items: Vec<Element> = (0..len)
            .map(|i| if i % 2 == 0 { Element::Scalar(Scalar::random(&mut rng)) } else { Element::Point(common::random_point(&mut rng)) })
            .collect();
        let mut ct = encrypt(&key, &items, &nonce);
        prop_assert_eq!(decrypt(&key, &ct, &nonce).unwrap(), items);
        let bit = bit % (ct.len() * 8);
        ct[bit / 8] ^= 1 << (bit % 8);
        prop_assert!(decrypt(&key, &ct, &nonce).is_err());
    }

    #[test]
    fn notes_roundtrip_canonically(seed in any::<u64>(), value in 0u64..1 << 40, obfuscated in any::<bool>(), pos in any::<u64>()) {
        let mut rng = common::rng(seed);
        let owner = gen_static_keys(&mut rng);
        let (note, opening) = mint_value_note(&owner.pk, value, obfuscated, &mut rng).unwrap();
        let note = note.with_pos(pos);
        let bytes = note.to_canonical_bytes();
        prop_assert_eq!(Note::from_canonical_bytes(&bytes).unwrap(), note.clone());
        prop_assert_eq!(note.value_opening(&owner.view_key()).unwrap(), opening);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// Any split of the inputs into outputs plus the fee builds a
    /// transaction that satisfies the relation, is accepted once, and keeps
    /// spent = minted + gas.
    #[test]
    fn balanced_transactions_conserve_value(
        seed in any::<u64>(),
        funds in prop::collection::vec(1u64..1000, 1..4),
        cuts in prop::collection::vec(any::<u16>(), 0..3),
    ) {
        let mut world = common::World::new(seed);
        let total: u64 = funds.iter().sum();
        let gas = world.ledger.config().gas_fee;
        prop_assume!(total > gas);
        let alice = world.wallet(&funds);
        let bob = world.wallet(&[]);
        let spends = alice.fund(&world.ledger, total).unwrap().spends;

        let budget = total - gas;
        let mut points: Vec<u64> = cuts.iter().map(|c| u64::from(*c) % (budget + 1)).collect();
        points.extend([0, budget]);
        points.sort_unstable();
        let outputs: Vec<Output> = points
            .windows(2)
            .map(|w| w[1] - w[0])
            .filter(|v| *v > 0)
            .enumerate()
            .map(|(i, value)| Output::Value { to: bob.note_pk(), value, obfuscated: i % 2 == 0 })
            .collect();
        let root = world.ledger.notes_root();
        let built = build_transaction(spends, &outputs, gas, root, &world.backend, &mut NonceLog::default(), &mut world.rng).unwrap();
        prop_assert_eq!(check_tx_relation(&built.tx.statement, &built.witness), Ok(()));
        let minted: u64 = built.mint_openings.iter().flatten().map(|o| o.value_u64().unwrap()).sum();
        prop_assert_eq!(minted + gas, total);

        let digest = world.ledger.digest();
        prop_assert!(world.submit(&built).accepted);
        prop_assert_ne!(world.ledger.digest(), digest);
        let digest = world.ledger.digest();
        prop_assert!(!world.submit(&built).accepted);
        prop_assert_eq!(world.ledger.digest(), digest);
        let nullifiers: BTreeSet<_> = built.tx.spends.iter().map(|n| n.0).collect();
        prop_assert!(nullifiers.is_subset(world.ledger.spent_nullifiers()));
    }
}
