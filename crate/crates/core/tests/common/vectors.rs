//! Fixture format under `vectors/` and its checker: the hex decodes,
//! re-encodes to the same bytes, matches its JSON form, and any frozen
//! derived value is recomputed.

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::fs;
use std::path::{Path, PathBuf};

use citadel_core::citadel::{IssuanceProof, LicenseCall};
use citadel_core::codec::Canonical;
use citadel_core::crypto::{DoubleSignature, Element, GroupElement, NoteSecretKey, Scalar, Signature};
use citadel_core::ledger::{Event, Ledger};
use citadel_core::merkle::{self, MerkleProof, MerkleTree};
use citadel_core::phoenix::{compute_nullifier, note_hash, Note, Transaction, TxStatement, ValueOpening};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Serialize, Deserialize)]
pub struct Vector {
    pub kind: String,
    pub description: String,
    pub hex: String,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub json: Value,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub derived: BTreeMap<String, String>,
}

pub fn vectors_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../vectors")
}

pub fn files(dir: &Path, out: &mut Vec<PathBuf>) {
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            files(&path, out);
        } else if path.extension().is_some_and(|e| e == "json") {
            out.push(path);
        }
    }
}

fn scalar(v: &Vector, key: &str) -> Scalar {
    Scalar::from_hex(&v.derived[key]).unwrap()
}

/// Canonical bytes and JSON must both reproduce exactly.
fn roundtrip<T>(v: &Vector) -> T
where
    T: Canonical + Serialize + DeserializeOwned + PartialEq + Debug,
{
    let bytes = hex::decode(&v.hex).unwrap();
    let item = T::from_canonical_bytes(&bytes).unwrap();
    assert_eq!(item.to_canonical_bytes(), bytes, "{}", v.description);
    assert_eq!(serde_json::from_value::<T>(v.json.clone()).unwrap(), item, "{}", v.description);
    assert_eq!(serde_json::to_value(&item).unwrap(), v.json, "{}", v.description);
    item
}

fn check(v: &Vector) {
    match v.kind.as_str() {
        "scalar" => drop(roundtrip::<Scalar>(v)),
        "point" => drop(roundtrip::<GroupElement>(v)),
        "element" => drop(roundtrip::<Element>(v)),
        "signature" => drop(roundtrip::<Signature>(v)),
        "double-signature" => drop(roundtrip::<DoubleSignature>(v)),
        "value-opening" => drop(roundtrip::<ValueOpening>(v)),
        "note" => {
            let note = roundtrip::<Note>(v);
            assert_eq!(note_hash(&note).unwrap(), scalar(v, "note_hash"));
            if v.derived.contains_key("nsk") {
                let nsk = NoteSecretKey::from_nsk(scalar(v, "nsk"));
                assert_eq!(nsk.npk(), note.npk);
                assert_eq!(compute_nullifier(&nsk, note.pos.unwrap()).0, scalar(v, "nullifier"));
            }
        }
        "merkle-proof" => {
            let proof = roundtrip::<MerkleProof>(v);
            assert!(merkle::verify(&scalar(v, "root"), &proof).unwrap());
        }
        "merkle-tree" => {
            let bytes = hex::decode(&v.hex).unwrap();
            let tree = MerkleTree::from_file_bytes(&bytes).unwrap();
            assert_eq!(tree.to_file_bytes(), bytes);
            assert_eq!(tree.root(), scalar(v, "root"));
        }
        "tx-statement" => drop(roundtrip::<TxStatement>(v)),
        "transaction" => {
            let bytes = hex::decode(&v.hex).unwrap();
            let tx = Transaction::from_bytes(&bytes).unwrap();
            assert_eq!(tx.to_bytes(), bytes);
            assert_eq!(serde_json::from_value::<Transaction>(v.json.clone()).unwrap(), tx);
            assert_eq!(serde_json::to_value(&tx).unwrap(), v.json);
            assert_eq!(tx.compute_hash(), scalar(v, "tx_hash"));
            assert_eq!(tx.tx_hash, scalar(v, "tx_hash"));
        }
        "license-call" => drop(roundtrip::<LicenseCall>(v)),
        "issuance-proof" => drop(roundtrip::<IssuanceProof>(v)),
        "event" => drop(roundtrip::<Event>(v)),
        "ledger-state" => {
            let bytes = hex::decode(&v.hex).unwrap();
            let ledger = Ledger::from_bytes(&bytes).unwrap();
            assert_eq!(ledger.to_bytes(), bytes);
            assert_eq!(ledger.digest(), scalar(v, "digest"));
            assert_eq!(ledger.notes_root(), scalar(v, "notes_root"));
            assert_eq!(ledger.license_root(), scalar(v, "license_root"));
        }
        other => panic!("unknown vector kind {other}"),
    }
}

/// Returns the number of vectors checked.
pub fn check_all() -> usize {
    let mut paths = Vec::new();
    files(&vectors_dir(), &mut paths);
    paths.sort();
    let mut n = 0;
    for path in paths {
        let list: Vec<Vector> = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        for v in &list {
            check(v);
            n += 1;
        }
    }
    n
}

pub fn vector<T: Canonical + Serialize>(kind: &str, description: &str, item: &T) -> Vector {
    Vector {
        kind: kind.into(),
        description: description.into(),
        hex: hex::encode(item.to_canonical_bytes()),
        json: serde_json::to_value(item).unwrap(),
        derived: BTreeMap::new(),
    }
}

pub fn with(mut v: Vector, derived: &[(&str, Scalar)]) -> Vector {
    v.derived = derived.iter().map(|(k, s)| (k.to_string(), s.to_hex())).collect();
    v
}

pub fn write(rel: &str, list: &[Vector]) {
    let path = vectors_dir().join(rel);
    fs::create_dir_all(path.parent().unwrap()).unwrap();
    fs::write(&path, serde_json::to_string_pretty(list).unwrap() + "\n").unwrap();
}
