use std::collections::HashSet;

use rand::CryptoRng;
use serde::{Deserialize, Serialize};

use crate::backend::hex_bytes;
use crate::codec::{Canonical, CodecError, Decoder, Encoder};
use crate::crypto::{
    bytes_to_elements, commit, decrypt, derive_symmetric_key, domain_tag, encrypt, gen_note_keypair, hash_fast, sponge,
    CommitKey, Element, GroupElement, NoteSecretKey, PublicKey, Scalar, SymKey, ViewKey,
};

use super::NoteError;

/// Exclusive upper bound on any note value, gas amount or balance term.
pub const MAX_VALUE: u64 = 1 << 62;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoteType {
    TransparentValue = 0,
    ObfuscatedValue = 1,
    TransparentNft = 2,
    ObfuscatedNft = 3,
}

impl NoteType {
    pub const ALL: [NoteType; 4] =
        [NoteType::TransparentValue, NoteType::ObfuscatedValue, NoteType::TransparentNft, NoteType::ObfuscatedNft];

    pub fn as_u8(self) -> u8 {
        self as u8
    }

    pub fn from_u8(v: u8) -> Option<Self> {
        NoteType::ALL.get(v as usize).copied()
    }

    pub fn is_value(self) -> bool {
        matches!(self, NoteType::TransparentValue | NoteType::ObfuscatedValue)
    }

    pub fn is_obfuscated(self) -> bool {
        matches!(self, NoteType::ObfuscatedValue | NoteType::ObfuscatedNft)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "kebab-case")]
pub enum NotePayload {
    Plain(Vec<Element>),
    Sealed(#[serde(with = "hex_bytes")] Vec<u8>),
}

impl NotePayload {
    fn hash_elements(&self) -> Vec<Element> {
        match self {
            NotePayload::Plain(items) => {
                let mut out = vec![Element::from(0u64), Element::from(items.len() as u64)];
                out.extend_from_slice(items);
                out
            }
            NotePayload::Sealed(bytes) => {
                let mut out = vec![Element::from(1u64)];
                out.extend(bytes_to_elements(bytes));
                out
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Note {
    pub note_type: NoteType,
    pub com: Option<GroupElement>,
    /// Assigned by the ledger on inclusion.
    pub pos: Option<u64>,
    pub nonce: Scalar,
    pub enc: NotePayload,
    pub npk: GroupElement,
    pub r: GroupElement,
}

/// Value and blinder of a value-note commitment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValueOpening {
    pub value: Scalar,
    pub blinder: Scalar,
}

impl ValueOpening {
    pub fn new(value: u64, blinder: Scalar) -> Self {
        ValueOpening { value: Scalar::from(value), blinder }
    }

    /// The value as an integer, if it lies in `[0, MAX_VALUE)`.
    pub fn value_u64(&self) -> Option<u64> {
        in_range(&self.value)
    }
}

pub(crate) fn in_range(v: &Scalar) -> Option<u64> {
    v.to_u64().filter(|v| *v < MAX_VALUE)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Nullifier(pub Scalar);

/// `H(npk' ‖ pos)`.
pub fn compute_nullifier(nsk: &NoteSecretKey, pos: u64) -> Nullifier {
    nullifier_from_key(&nsk.npk_prime, pos)
}

pub(crate) fn nullifier_from_key(npk_prime: &GroupElement, pos: u64) -> Nullifier {
    Nullifier(sponge(&[Element::Point(*npk_prime), Element::from(pos)]))
}

/// Mints a value note for `pk`. Transparent notes carry `v` in clear with a
/// zero blinder and zero nonce; obfuscated notes encrypt `(v, s)` under the
/// shared key.
pub fn mint_value_note<R: CryptoRng + ?Sized>(
    pk: &PublicKey,
    value: u64,
    obfuscated: bool,
    rng: &mut R,
) -> Result<(Note, ValueOpening), NoteError> {
    if value >= MAX_VALUE {
        return Err(NoteError::ValueOutOfRange);
    }
    let (keys, _) = gen_note_keypair(pk, rng)?;
    let ck = CommitKey::protocol();
    let (note_type, opening, nonce, enc) = if obfuscated {
        let opening = ValueOpening::new(value, Scalar::random(rng));
        let nonce = Scalar::random(rng);
        let ct = encrypt(
            &derive_symmetric_key(&keys.k_dh),
            &[Element::Scalar(opening.value), Element::Scalar(opening.blinder)],
            &nonce,
        );
        (NoteType::ObfuscatedValue, opening, nonce, NotePayload::Sealed(ct))
    } else {
        let opening = ValueOpening::new(value, Scalar::ZERO);
        (NoteType::TransparentValue, opening, Scalar::ZERO, NotePayload::Plain(vec![Element::from(value)]))
    };
    let note = Note {
        note_type,
        com: Some(commit(&ck, opening.value, opening.blinder)),
        pos: None,
        nonce,
        enc,
        npk: keys.npk,
        r: keys.r,
    };
    Ok((note, opening))
}

/// Nonces already used for obfuscated NFTs, per key. Keys are stored only as
/// fingerprints.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct NonceLog {
    used: HashSet<(Scalar, Scalar)>,
}

impl NonceLog {
    fn claim(&mut self, key: &SymKey, nonce: Scalar) -> Result<(), NoteError> {
        let mut tagged = b"citadel/nonce-log".to_vec();
        tagged.extend_from_slice(&key.0);
        if self.used.insert((hash_fast(&tagged), nonce)) {
            Ok(())
        } else {
            Err(NoteError::NonceReuse)
        }
    }
}

/// Mints an NFT note addressed to `(npk, R)`.
pub fn mint_nft<R: CryptoRng + ?Sized>(
    npk: GroupElement,
    r: GroupElement,
    payload: Vec<Element>,
    key: &SymKey,
    obfuscated: bool,
    log: &mut NonceLog,
    rng: &mut R,
) -> Result<Note, NoteError> {
    if obfuscated {
        mint_nft_with_nonce(npk, r, payload, key, Scalar::random(rng), log)
    } else {
        if payload.is_empty() {
            return Err(NoteError::EmptyPayload);
        }
        Ok(Note {
            note_type: NoteType::TransparentNft,
            com: None,
            pos: None,
            nonce: Scalar::ZERO,
            enc: NotePayload::Plain(payload),
            npk,
            r,
        })
    }
}

/// Obfuscated NFT with a caller-chosen nonce; rejects a nonce already used
/// under `key`.
pub fn mint_nft_with_nonce(
    npk: GroupElement,
    r: GroupElement,
    payload: Vec<Element>,
    key: &SymKey,
    nonce: Scalar,
    log: &mut NonceLog,
) -> Result<Note, NoteError> {
    if payload.is_empty() {
        return Err(NoteError::EmptyPayload);
    }
    log.claim(key, nonce)?;
    Ok(Note {
        note_type: NoteType::ObfuscatedNft,
        com: None,
        pos: None,
        nonce,
        enc: NotePayload::Sealed(encrypt(key, &payload, &nonce)),
        npk,
        r,
    })
}

fn no_commitment() -> Element {
    Element::Scalar(domain_tag("NO-COMMITMENT"))
}

/// Sponge hash over every note field, type included. Requires a position.
pub fn note_hash(note: &Note) -> Result<Scalar, NoteError> {
    let pos = note.pos.ok_or(NoteError::UnassignedPosition)?;
    let mut items = vec![Element::from(note.note_type.as_u8() as u64)];
    items.push(note.com.map_or_else(no_commitment, Element::Point));
    items.push(Element::from(pos));
    items.push(Element::Scalar(note.nonce));
    items.extend(note.enc.hash_elements());
    items.push(Element::Point(note.npk));
    items.push(Element::Point(note.r));
    Ok(sponge(&items))
}

impl Note {
    pub fn with_pos(mut self, pos: u64) -> Self {
        self.pos = Some(pos);
        self
    }

    /// Structural rules every note must satisfy before it enters the tree.
    /// For transparent value notes this includes the zero-blinder opening.
    pub fn validate(&self) -> Result<(), NoteError> {
        let bad = |why| Err(NoteError::Malformed(why));
        match (self.note_type, &self.enc) {
            (NoteType::TransparentValue, NotePayload::Plain(items)) => {
                if !self.nonce.is_zero() {
                    return bad("transparent note with non-zero nonce");
                }
                let [Element::Scalar(v)] = items.as_slice() else {
                    return bad("transparent value payload must be one scalar");
                };
                if in_range(v).is_none() {
                    return Err(NoteError::ValueOutOfRange);
                }
                if self.com != Some(commit(&CommitKey::protocol(), *v, Scalar::ZERO)) {
                    return bad("transparent value does not open the commitment");
                }
            }
            (NoteType::ObfuscatedValue, NotePayload::Sealed(_)) => {
                if self.com.is_none() {
                    return bad("obfuscated value note without commitment");
                }
            }
            (NoteType::TransparentNft, NotePayload::Plain(items)) => {
                if self.com.is_some() || !self.nonce.is_zero() {
                    return bad("transparent NFT with commitment or nonce");
                }
                if items.is_empty() {
                    return Err(NoteError::EmptyPayload);
                }
            }
            (NoteType::ObfuscatedNft, NotePayload::Sealed(_)) => {
                if self.com.is_some() {
                    return bad("NFT with commitment");
                }
            }
            _ => return bad("payload kind does not match note type"),
        }
        Ok(())
    }

    /// Recovers `(v, s)` for a value note addressed to `vk`'s owner.
    pub fn value_opening(&self, vk: &ViewKey) -> Result<ValueOpening, NoteError> {
        match (self.note_type, &self.enc) {
            (NoteType::TransparentValue, NotePayload::Plain(items)) => match items.as_slice() {
                [Element::Scalar(v)] => Ok(ValueOpening { value: *v, blinder: Scalar::ZERO }),
                _ => Err(NoteError::Malformed("transparent value payload must be one scalar")),
            },
            (NoteType::ObfuscatedValue, NotePayload::Sealed(ct)) => {
                let key = derive_symmetric_key(&vk.shared_point(&self.r));
                match decrypt(&key, ct, &self.nonce)?.as_slice() {
                    [Element::Scalar(value), Element::Scalar(blinder)] => {
                        Ok(ValueOpening { value: *value, blinder: *blinder })
                    }
                    _ => Err(NoteError::Malformed("value plaintext must be two scalars")),
                }
            }
            _ => Err(NoteError::WrongNoteType(self.note_type)),
        }
    }

    /// NFT payload: verbatim for transparent NFTs, decrypted under `key`
    /// otherwise.
    pub fn nft_payload(&self, key: &SymKey) -> Result<Vec<Element>, NoteError> {
        match (self.note_type, &self.enc) {
            (NoteType::TransparentNft, NotePayload::Plain(items)) => Ok(items.clone()),
            (NoteType::ObfuscatedNft, NotePayload::Sealed(ct)) => Ok(decrypt(key, ct, &self.nonce)?),
            _ => Err(NoteError::WrongNoteType(self.note_type)),
        }
    }

    /// Payload of an NFT sent to a static key, decrypted with the shared
    /// point the view key recovers.
    pub fn nft_payload_for(&self, vk: &ViewKey) -> Result<Vec<Element>, NoteError> {
        self.nft_payload(&derive_symmetric_key(&vk.shared_point(&self.r)))
    }
}

impl Canonical for NotePayload {
    fn encode(&self, enc: &mut Encoder) {
        match self {
            NotePayload::Plain(items) => {
                enc.u8(0);
                enc.seq(items, |e, x| e.item(x));
            }
            NotePayload::Sealed(bytes) => {
                enc.u8(1);
                enc.bytes(bytes);
            }
        }
    }

    fn decode(dec: &mut Decoder<'_>) -> Result<Self, CodecError> {
        match dec.u8()? {
            0 => Ok(NotePayload::Plain(dec.seq(|d| d.item())?)),
            1 => Ok(NotePayload::Sealed(dec.bytes()?)),
            t => Err(CodecError::BadTag(t)),
        }
    }
}

impl Canonical for Note {
    fn encode(&self, enc: &mut Encoder) {
        enc.u8(self.note_type.as_u8());
        enc.option(self.com.as_ref(), |e, c| e.point(c));
        enc.option(self.pos.as_ref(), |e, p| e.u64(*p));
        enc.scalar(&self.nonce);
        enc.item(&self.enc);
        enc.point(&self.npk);
        enc.point(&self.r);
    }

    fn decode(dec: &mut Decoder<'_>) -> Result<Self, CodecError> {
        let t = dec.u8()?;
        Ok(Note {
            note_type: NoteType::from_u8(t).ok_or(CodecError::BadTag(t))?,
            com: dec.option(|d| d.point())?,
            pos: dec.option(|d| d.u64())?,
            nonce: dec.scalar()?,
            enc: dec.item()?,
            npk: dec.point()?,
            r: dec.point()?,
        })
    }
}

impl Canonical for ValueOpening {
    fn encode(&self, enc: &mut Encoder) {
        enc.scalar(&self.value);
        enc.scalar(&self.blinder);
    }

    fn decode(dec: &mut Decoder<'_>) -> Result<Self, CodecError> {
        Ok(ValueOpening { value: dec.scalar()?, blinder: dec.scalar()? })
    }
}
