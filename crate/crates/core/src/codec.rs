//! Canonical binary encoding.
//!
//! Integers are little-endian fixed width, byte strings and sequences carry a
//! `u32` length prefix, optional values a `0`/`1` presence byte. Decoding is
//! strict: trailing bytes and non-canonical field encodings are errors.

use thiserror::Error;

use crate::crypto::{CryptoError, DoubleSignature, Element, GroupElement, Scalar, Signature};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("unexpected end of input")]
    Truncated,
    #[error("{0} trailing bytes")]
    Trailing(usize),
    #[error("bad magic")]
    BadMagic,
    #[error("unsupported version {0}")]
    Version(u16),
    #[error("invalid tag {0}")]
    BadTag(u8),
    #[error("checksum mismatch")]
    Checksum,
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}

pub trait Canonical: Sized {
    fn encode(&self, enc: &mut Encoder);
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, CodecError>;

    fn to_canonical_bytes(&self) -> Vec<u8> {
        let mut enc = Encoder::default();
        self.encode(&mut enc);
        enc.finish()
    }

    fn from_canonical_bytes(bytes: &[u8]) -> Result<Self, CodecError> {
        let mut dec = Decoder::new(bytes);
        let v = Self::decode(&mut dec)?;
        dec.finish()?;
        Ok(v)
    }
}

#[derive(Default)]
pub struct Encoder {
    buf: Vec<u8>,
}

impl Encoder {
    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    pub fn u16(&mut self, v: u16) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    pub fn raw(&mut self, b: &[u8]) {
        self.buf.extend_from_slice(b);
    }
    pub fn bytes(&mut self, b: &[u8]) {
        self.u32(b.len() as u32);
        self.raw(b);
    }
    pub fn scalar(&mut self, s: &Scalar) {
        self.raw(&s.to_bytes());
    }
    pub fn point(&mut self, p: &GroupElement) {
        self.raw(&p.to_bytes());
    }
    pub fn seq<T>(&mut self, items: &[T], mut f: impl FnMut(&mut Self, &T)) {
        self.u32(items.len() as u32);
        for it in items {
            f(self, it);
        }
    }
    pub fn option<T>(&mut self, v: Option<&T>, f: impl FnOnce(&mut Self, &T)) {
        match v {
            None => self.u8(0),
            Some(v) => {
                self.u8(1);
                f(self, v);
            }
        }
    }
    pub fn item<T: Canonical>(&mut self, v: &T) {
        v.encode(self);
    }
    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

pub struct Decoder<'a> {
    buf: &'a [u8],
}

impl<'a> Decoder<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Decoder { buf }
    }
    pub fn take(&mut self, n: usize) -> Result<&'a [u8], CodecError> {
        if self.buf.len() < n {
            return Err(CodecError::Truncated);
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }
    pub fn u8(&mut self) -> Result<u8, CodecError> {
        Ok(self.take(1)?[0])
    }
    pub fn u16(&mut self) -> Result<u16, CodecError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
    pub fn u32(&mut self) -> Result<u32, CodecError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    pub fn u64(&mut self) -> Result<u64, CodecError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    pub fn bytes(&mut self) -> Result<Vec<u8>, CodecError> {
        let n = self.u32()? as usize;
        Ok(self.take(n)?.to_vec())
    }
    pub fn array32(&mut self) -> Result<[u8; 32], CodecError> {
        Ok(self.take(32)?.try_into().unwrap())
    }
    pub fn scalar(&mut self) -> Result<Scalar, CodecError> {
        Ok(Scalar::from_bytes(&self.array32()?)?)
    }
    pub fn point(&mut self) -> Result<GroupElement, CodecError> {
        Ok(GroupElement::from_bytes(&self.array32()?)?)
    }
    pub fn seq<T>(&mut self, mut f: impl FnMut(&mut Self) -> Result<T, CodecError>) -> Result<Vec<T>, CodecError> {
        let n = self.u32()? as usize;
        // every item takes at least one byte
        if n > self.buf.len() {
            return Err(CodecError::Truncated);
        }
        (0..n).map(|_| f(self)).collect()
    }
    pub fn option<T>(&mut self, f: impl FnOnce(&mut Self) -> Result<T, CodecError>) -> Result<Option<T>, CodecError> {
        match self.u8()? {
            0 => Ok(None),
            1 => f(self).map(Some),
            t => Err(CodecError::BadTag(t)),
        }
    }
    pub fn item<T: Canonical>(&mut self) -> Result<T, CodecError> {
        T::decode(self)
    }
    pub fn remaining(&self) -> usize {
        self.buf.len()
    }
    pub fn finish(self) -> Result<(), CodecError> {
        match self.buf.len() {
            0 => Ok(()),
            n => Err(CodecError::Trailing(n)),
        }
    }
}

impl Canonical for Scalar {
    fn encode(&self, enc: &mut Encoder) {
        enc.scalar(self)
    }
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, CodecError> {
        dec.scalar()
    }
}

impl Canonical for GroupElement {
    fn encode(&self, enc: &mut Encoder) {
        enc.point(self)
    }
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, CodecError> {
        dec.point()
    }
}

impl Canonical for Element {
    fn encode(&self, enc: &mut Encoder) {
        enc.u8(self.tag());
        enc.raw(&self.to_bytes());
    }
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, CodecError> {
        match dec.u8()? {
            0 => dec.scalar().map(Element::Scalar),
            1 => dec.point().map(Element::Point),
            t => Err(CodecError::BadTag(t)),
        }
    }
}

impl Canonical for Signature {
    fn encode(&self, enc: &mut Encoder) {
        enc.point(&self.r);
        enc.scalar(&self.u);
    }
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, CodecError> {
        Ok(Signature { r: dec.point()?, u: dec.scalar()? })
    }
}

impl Canonical for DoubleSignature {
    fn encode(&self, enc: &mut Encoder) {
        enc.point(&self.r);
        enc.point(&self.r_prime);
        enc.scalar(&self.u);
    }
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, CodecError> {
        Ok(DoubleSignature { r: dec.point()?, r_prime: dec.point()?, u: dec.scalar()? })
    }
}

/// Versioned, checksummed file envelope:
/// `magic(8) | version u16 | payload (length-prefixed) | blake2b-512(payload)[..32]`.
pub fn seal_envelope(magic: &[u8; 8], version: u16, payload: &[u8]) -> Vec<u8> {
    let mut enc = Encoder::default();
    enc.raw(magic);
    enc.u16(version);
    enc.u64(payload.len() as u64);
    enc.raw(payload);
    enc.raw(&checksum(payload));
    enc.finish()
}

pub fn open_envelope<'a>(magic: &[u8; 8], version: u16, bytes: &'a [u8]) -> Result<&'a [u8], CodecError> {
    let mut dec = Decoder::new(bytes);
    if dec.take(8).map_err(|_| CodecError::BadMagic)? != magic {
        return Err(CodecError::BadMagic);
    }
    let v = dec.u16()?;
    if v != version {
        return Err(CodecError::Version(v));
    }
    let len = usize::try_from(dec.u64()?).map_err(|_| CodecError::Truncated)?;
    let payload = dec.take(len)?;
    let sum = dec.take(32)?;
    dec.finish()?;
    if sum != checksum(payload) {
        return Err(CodecError::Checksum);
    }
    Ok(payload)
}

fn checksum(payload: &[u8]) -> [u8; 32] {
    let h = crate::crypto::hash_fast(payload);
    h.to_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_detects_damage() {
        let sealed = seal_envelope(b"TESTFILE", 1, b"hello world");
        assert_eq!(open_envelope(b"TESTFILE", 1, &sealed).unwrap(), b"hello world");
        assert_eq!(open_envelope(b"TESTFILE", 2, &sealed), Err(CodecError::Version(1)));
        assert_eq!(open_envelope(b"OTHERFIL", 1, &sealed), Err(CodecError::BadMagic));
        assert_eq!(open_envelope(b"TESTFILE", 1, &sealed[..sealed.len() - 1]), Err(CodecError::Truncated));
        let mut bad = sealed.clone();
        bad[20] ^= 1;
        assert_eq!(open_envelope(b"TESTFILE", 1, &bad), Err(CodecError::Checksum));
    }

    #[test]
    fn strict_decoding() {
        let mut enc = Encoder::default();
        enc.u32(1);
        enc.u8(9);
        let bytes = enc.finish();
        let mut dec = Decoder::new(&bytes);
        assert_eq!(dec.u32().unwrap(), 1);
        assert_eq!(dec.finish(), Err(CodecError::Trailing(1)));
        assert_eq!(
            Scalar::from_canonical_bytes(&[0xff; 32]).unwrap_err(),
            CodecError::Crypto(CryptoError::NonCanonicalScalar)
        );
    }
}
