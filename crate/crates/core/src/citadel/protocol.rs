use rand::CryptoRng;
use serde::{Deserialize, Serialize};

use crate::backend::ProofBackend;
use crate::codec::{Canonical, CodecError, Decoder, Encoder};
use crate::crypto::{
    commit, gen_note_keypair, gen_static_keys, public_key, recover_note_secret, sign_single, sponge, verify_single,
    CommitKey, CryptoError, Element, GroupElement, NoteSecretKey, PublicKey, Scalar, Signature, StaticKeys, SymKey,
};
use crate::ledger::Ledger;
use crate::merkle::{self, MerkleProof};
use crate::phoenix::{
    note_hash, prepare_transaction, BuiltTx, Funding, NftRecipient, NonceLog, Note, NoteType, Output,
};

use super::relation::{
    license_message, license_nullifier, provider_commitment, LicenseCallBody, LicenseRelation, LicenseStatement,
    LicenseWitness,
};
use super::{CitadelError, Deny};

/// Provider keys: a note-addressing pair for payments and requests, and a
/// single Schnorr key for signing licenses.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpKeys {
    pub note_keys: StaticKeys,
    pub lic_sk: Scalar,
    pub lic_pk: GroupElement,
}

impl std::fmt::Debug for SpKeys {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpKeys").field("public", &self.public()).finish_non_exhaustive()
    }
}

impl SpKeys {
    pub fn generate<R: CryptoRng + ?Sized>(rng: &mut R) -> Self {
        let note_keys = gen_static_keys(rng);
        let lic_sk = Scalar::random_nonzero(rng);
        SpKeys { note_keys, lic_sk, lic_pk: public_key(lic_sk) }
    }

    pub fn public(&self) -> SpPublic {
        SpPublic { note_pk: self.note_keys.pk, lic_pk: self.lic_pk }
    }
}

/// What a provider publishes: `A ‖ B ‖ lic_pk`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpPublic {
    pub note_pk: PublicKey,
    pub lic_pk: GroupElement,
}

impl SpPublic {
    pub fn to_bytes(&self) -> [u8; 96] {
        let mut out = [0u8; 96];
        out[..64].copy_from_slice(&self.note_pk.to_bytes());
        out[64..].copy_from_slice(&self.lic_pk.to_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CryptoError> {
        if bytes.len() != 96 {
            return Err(CryptoError::BadLength { expected: 96, got: bytes.len() });
        }
        Ok(SpPublic { note_pk: PublicKey::from_bytes(&bytes[..64])?, lic_pk: GroupElement::from_slice(&bytes[64..])? })
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.to_bytes())
    }

    pub fn from_hex(s: &str) -> Result<Self, CryptoError> {
        Self::from_bytes(&hex::decode(s).map_err(|_| CryptoError::BadHex)?)
    }
}

/// `k_user = H(npk_user ‖ nsk_user)`, the key a license is encrypted under.
pub fn derive_k_user(nsk: &NoteSecretKey) -> Scalar {
    sponge(&[Element::Point(nsk.npk()), Element::Scalar(nsk.nsk)])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LicenseRequest {
    pub npk_user: GroupElement,
    pub r_user: GroupElement,
    pub k_user: Scalar,
}

impl LicenseRequest {
    pub fn to_payload(&self) -> Vec<Element> {
        vec![Element::Point(self.npk_user), Element::Point(self.r_user), Element::Scalar(self.k_user)]
    }

    pub fn from_payload(items: &[Element]) -> Option<Self> {
        match items {
            [Element::Point(npk_user), Element::Point(r_user), Element::Scalar(k_user)] => {
                Some(LicenseRequest { npk_user: *npk_user, r_user: *r_user, k_user: *k_user })
            }
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LicensePayload {
    pub sig_lic: Signature,
    pub attr: Scalar,
}

impl LicensePayload {
    pub fn to_payload(&self) -> Vec<Element> {
        vec![Element::Point(self.sig_lic.r), Element::Scalar(self.sig_lic.u), Element::Scalar(self.attr)]
    }

    pub fn from_payload(items: &[Element]) -> Option<Self> {
        match items {
            [Element::Point(r), Element::Scalar(u), Element::Scalar(attr)] => {
                Some(LicensePayload { sig_lic: Signature { r: *r, u: *u }, attr: *attr })
            }
            _ => None,
        }
    }

    pub fn verify(&self, lic_pk: &GroupElement, npk_user: &GroupElement) -> bool {
        verify_single(lic_pk, license_message(npk_user, self.attr), &self.sig_lic)
    }
}

/// Per-use blinders for the provider key, the attribute and the challenge.
#[derive(Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionCookie {
    pub s0: Scalar,
    pub s1: Scalar,
    pub s2: Scalar,
}

impl std::fmt::Debug for SessionCookie {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("SessionCookie(..)")
    }
}

impl SessionCookie {
    pub fn random<R: CryptoRng + ?Sized>(rng: &mut R) -> Self {
        SessionCookie { s0: Scalar::random(rng), s1: Scalar::random(rng), s2: Scalar::random(rng) }
    }

    pub fn to_payload(&self) -> Vec<Element> {
        vec![Element::Scalar(self.s0), Element::Scalar(self.s1), Element::Scalar(self.s2)]
    }

    pub fn from_payload(items: &[Element]) -> Option<Self> {
        match items {
            [Element::Scalar(s0), Element::Scalar(s1), Element::Scalar(s2)] => {
                Some(SessionCookie { s0: *s0, s1: *s1, s2: *s2 })
            }
            _ => None,
        }
    }
}

/// Message from user to provider over a private channel.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceRequest {
    pub tx_hash: Scalar,
    pub lic_pk: GroupElement,
    pub attr: Scalar,
    pub c: Scalar,
    pub sc: SessionCookie,
}

pub fn request_service(
    tx_hash: Scalar,
    lic_pk: GroupElement,
    attr: Scalar,
    c: Scalar,
    sc: SessionCookie,
) -> ServiceRequest {
    ServiceRequest { tx_hash, lic_pk, attr, c, sc }
}

/// A license the user can decrypt and use.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OwnedLicense {
    pub note: Note,
    pub pos: u64,
    pub payload: LicensePayload,
    pub nsk: NoteSecretKey,
}

/// Pays `price` to the provider and sends it an obfuscated request NFT
/// carrying a fresh one-time key of the user.
#[allow(clippy::too_many_arguments)]
pub fn send_license_request<B: ProofBackend, R: CryptoRng + ?Sized>(
    user: &StaticKeys,
    sp: &SpPublic,
    price: u64,
    gas: u64,
    funding: Funding,
    backend: &B,
    log: &mut NonceLog,
    rng: &mut R,
) -> Result<(BuiltTx, LicenseRequest), CitadelError> {
    let (nk, _) = gen_note_keypair(&user.pk, rng)?;
    let nsk = recover_note_secret(user, &nk.npk, &nk.r)?;
    let request = LicenseRequest { npk_user: nk.npk, r_user: nk.r, k_user: derive_k_user(&nsk) };
    let mut outputs = vec![
        Output::Value { to: sp.note_pk, value: price, obfuscated: true },
        Output::Nft { recipient: NftRecipient::Key(sp.note_pk), payload: request.to_payload(), obfuscated: true },
    ];
    funding.add_change(&mut outputs, gas)?;
    let built = prepare_transaction(funding.spends, &outputs, gas, None, funding.notes_root, log, rng)?
        .finalize(None, backend, rng)?;
    Ok((built, request))
}

/// Provider side: decrypts a request NFT addressed to `sp`.
pub fn read_license_request(sp: &SpKeys, note: &Note) -> Result<LicenseRequest, CitadelError> {
    let vk = sp.note_keys.view_key();
    if note.note_type != NoteType::ObfuscatedNft || !vk.owns(&note.npk, &note.r) {
        return Err(CitadelError::NotARequest);
    }
    let payload = note.nft_payload_for(&vk)?;
    LicenseRequest::from_payload(&payload).ok_or(CitadelError::NotARequest)
}

/// Signs `(npk_user, attr)` and mints the license to the user's one-time key,
/// encrypted under `k_user`.
#[allow(clippy::too_many_arguments)]
pub fn issue_license<B: ProofBackend, R: CryptoRng + ?Sized>(
    sp: &SpKeys,
    req: &LicenseRequest,
    attr: Scalar,
    gas: u64,
    funding: Funding,
    backend: &B,
    log: &mut NonceLog,
    rng: &mut R,
) -> Result<BuiltTx, CitadelError> {
    if req.npk_user.is_identity() || req.r_user.is_identity() {
        return Err(CitadelError::MalformedRequest);
    }
    let sig_lic = sign_single(sp.lic_sk, license_message(&req.npk_user, attr), rng);
    let payload = LicensePayload { sig_lic, attr };
    let recipient = NftRecipient::OneTime { npk: req.npk_user, r: req.r_user, key: SymKey::from_scalar(req.k_user) };
    let mut outputs = vec![Output::Nft { recipient, payload: payload.to_payload(), obfuscated: true }];
    funding.add_change(&mut outputs, gas)?;
    Ok(prepare_transaction(funding.spends, &outputs, gas, None, funding.notes_root, log, rng)?
        .finalize(None, backend, rng)?)
}

/// User side: opens a confirmed license note. Detection needs only the view
/// key; decryption needs the note secret.
pub fn open_license(user: &StaticKeys, note: &Note) -> Result<OwnedLicense, CitadelError> {
    let pos = note.pos.ok_or(CitadelError::Unconfirmed)?;
    if note.note_type != NoteType::ObfuscatedNft {
        return Err(CitadelError::NotALicense);
    }
    let nsk = recover_note_secret(user, &note.npk, &note.r)?;
    let key = SymKey::from_scalar(derive_k_user(&nsk));
    let items = note.nft_payload(&key).map_err(|_| CitadelError::NotALicense)?;
    let payload = LicensePayload::from_payload(&items).ok_or(CitadelError::NotALicense)?;
    Ok(OwnedLicense { note: note.clone(), pos, payload, nsk })
}

/// Every license among `notes` that opens under `user`'s keys.
pub fn fetch_licenses<'a>(user: &StaticKeys, notes: impl IntoIterator<Item = &'a Note>) -> Vec<OwnedLicense> {
    notes.into_iter().filter_map(|n| open_license(user, n).ok()).collect()
}

/// Everything a use of a license produces.
#[derive(Clone, Debug)]
pub struct LicenseUse {
    pub built: BuiltTx,
    pub cookie: SessionCookie,
    pub statement: LicenseStatement,
    pub witness: LicenseWitness,
}

impl LicenseUse {
    pub fn service_request(&self) -> ServiceRequest {
        request_service(self.built.tx.tx_hash, self.witness.lic_pk, self.witness.attr, self.witness.c, self.cookie)
    }
}

/// Builds the fee-paying transaction that calls the license contract and
/// sends the session cookie to the provider.
#[allow(clippy::too_many_arguments)]
pub fn use_license<B: ProofBackend, R: CryptoRng + ?Sized>(
    license: &OwnedLicense,
    membership: MerkleProof,
    c: Scalar,
    sp: &SpPublic,
    gas: u64,
    funding: Funding,
    backend: &B,
    log: &mut NonceLog,
    rng: &mut R,
) -> Result<LicenseUse, CitadelError> {
    let root = funding.notes_root;
    let leaf = note_hash(&license.note)?;
    if membership.leaf != leaf || membership.pos != license.pos || !merkle::verify(&root, &membership).unwrap_or(false)
    {
        return Err(CitadelError::LicenseUnavailable);
    }

    let ck = CommitKey::protocol();
    let cookie = SessionCookie::random(rng);
    let npk_user = license.note.npk;
    let body = LicenseCallBody {
        notes_root: root,
        nullifier_lic: license_nullifier(&license.nsk.npk_prime, c),
        com0: provider_commitment(&sp.lic_pk, cookie.s0),
        com1: commit(&ck, license.payload.attr, cookie.s1),
        com2: commit(&ck, c, cookie.s2),
    };

    let mut outputs =
        vec![Output::Nft { recipient: NftRecipient::Key(sp.note_pk), payload: cookie.to_payload(), obfuscated: true }];
    funding.add_change(&mut outputs, gas)?;
    let prepared = prepare_transaction(funding.spends, &outputs, gas, Some(body.clone()), root, log, rng)?;

    let tx_hash = prepared.tx_hash();
    let statement = body.statement(tx_hash);
    let witness = LicenseWitness {
        license_note: license.note.clone(),
        merkle_proof: membership,
        npk_user,
        npk_prime_user: license.nsk.npk_prime,
        sig_tx: crate::crypto::sign_double(license.nsk.nsk, tx_hash, rng),
        sig_lic: license.payload.sig_lic,
        attr: license.payload.attr,
        c,
        lic_pk: sp.lic_pk,
        s0: cookie.s0,
        s1: cookie.s1,
        s2: cookie.s2,
    };
    let proof = backend.prove::<LicenseRelation>(&statement, &witness)?;
    let built = prepared.finalize(Some(proof), backend, rng)?;
    Ok(LicenseUse { built, cookie, statement, witness })
}

/// A granted service session.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grant {
    pub tx_hash: Scalar,
    pub nullifier_lic: Scalar,
    pub attr: Scalar,
    pub c: Scalar,
}

/// Provider side of a service request against a confirmed ledger view. `policy`
/// decides whether `(attr, c)` entitles the user to the service.
pub fn grant_service(
    sp: &SpKeys,
    req: &ServiceRequest,
    ledger: &Ledger,
    policy: impl Fn(Scalar, Scalar) -> bool,
) -> Result<Grant, Deny> {
    let record = ledger.transaction(&req.tx_hash).ok_or(Deny::UnknownTx)?;
    let call = record.tx.contract_call.as_ref().and_then(|c| c.as_license()).ok_or(Deny::NotALicenseUse)?;
    if req.lic_pk != sp.lic_pk {
        return Err(Deny::ForeignProvider);
    }
    if !policy(req.attr, req.c) {
        return Err(Deny::Policy);
    }
    let ck = CommitKey::protocol();
    let body = &call.body;
    if provider_commitment(&req.lic_pk, req.sc.s0) != body.com0
        || commit(&ck, req.attr, req.sc.s1) != body.com1
        || commit(&ck, req.c, req.sc.s2) != body.com2
    {
        return Err(Deny::OpeningMismatch);
    }
    let vk = sp.note_keys.view_key();
    let expected = req.sc.to_payload();
    let delivered = record.tx.mints.iter().any(|n| {
        n.note_type == NoteType::ObfuscatedNft
            && vk.owns(&n.npk, &n.r)
            && n.nft_payload_for(&vk).is_ok_and(|p| p == expected)
    });
    if !delivered {
        return Err(Deny::MissingCookie);
    }
    Ok(Grant { tx_hash: req.tx_hash, nullifier_lic: body.nullifier_lic, attr: req.attr, c: req.c })
}

/// What a provider shows the network to revoke a license it issued: the
/// license contents, the key that decrypts the note, and a signature over
/// the position under the same license key.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IssuanceProof {
    pub lic_pk: GroupElement,
    pub npk_user: GroupElement,
    pub attr: Scalar,
    pub sig_lic: Signature,
    pub k_user: Scalar,
    pub auth: Signature,
}

pub fn revocation_message(pos: u64) -> Scalar {
    sponge(&[Element::Scalar(crate::crypto::domain_tag("citadel/revoke")), Element::from(pos)])
}

/// Provider side: proves issuance of the license note at `pos`, given the
/// request it answered.
pub fn prove_issuance<R: CryptoRng + ?Sized>(
    sp: &SpKeys,
    req: &LicenseRequest,
    note: &Note,
    rng: &mut R,
) -> Result<IssuanceProof, CitadelError> {
    let pos = note.pos.ok_or(CitadelError::Unconfirmed)?;
    let items = note.nft_payload(&SymKey::from_scalar(req.k_user)).map_err(|_| CitadelError::NotALicense)?;
    let payload = LicensePayload::from_payload(&items).ok_or(CitadelError::NotALicense)?;
    Ok(IssuanceProof {
        lic_pk: sp.lic_pk,
        npk_user: req.npk_user,
        attr: payload.attr,
        sig_lic: payload.sig_lic,
        k_user: req.k_user,
        auth: sign_single(sp.lic_sk, revocation_message(pos), rng),
    })
}

impl IssuanceProof {
    /// Checks the proof against the note at `pos`.
    pub fn verify(&self, note: &Note, pos: u64) -> Result<(), &'static str> {
        if note.note_type != NoteType::ObfuscatedNft {
            return Err("not an obfuscated NFT");
        }
        if note.npk != self.npk_user {
            return Err("note is not addressed to npk_user");
        }
        let payload = LicensePayload { sig_lic: self.sig_lic, attr: self.attr };
        if !payload.verify(&self.lic_pk, &self.npk_user) {
            return Err("license signature");
        }
        if !verify_single(&self.lic_pk, revocation_message(pos), &self.auth) {
            return Err("revocation authorization");
        }
        match note.nft_payload(&SymKey::from_scalar(self.k_user)) {
            Ok(items) if items == payload.to_payload() => Ok(()),
            _ => Err("note does not contain this license"),
        }
    }
}

impl Canonical for IssuanceProof {
    fn encode(&self, enc: &mut Encoder) {
        enc.point(&self.lic_pk);
        enc.point(&self.npk_user);
        enc.scalar(&self.attr);
        enc.item(&self.sig_lic);
        enc.scalar(&self.k_user);
        enc.item(&self.auth);
    }

    fn decode(dec: &mut Decoder<'_>) -> Result<Self, CodecError> {
        Ok(IssuanceProof {
            lic_pk: dec.point()?,
            npk_user: dec.point()?,
            attr: dec.scalar()?,
            sig_lic: dec.item()?,
            k_user: dec.scalar()?,
            auth: dec.item()?,
        })
    }
}
