//! Scalars of the prime-order subgroup and its elements.
//!
//! [`Scalar`] wraps the Jubjub scalar field `F_t` (t a 252-bit prime) and
//! [`GroupElement`] wraps points of the prime-order subgroup of Jubjub.
//! Both have a fixed 32-byte canonical encoding; decoding rejects anything
//! that would not re-encode to the same bytes.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use ff::Field;
use group::{Group, GroupEncoding};
use jubjub::{AffinePoint, ExtendedPoint, Fr, SubgroupPoint};
use rand::CryptoRng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::CryptoError;

/// Base field of the curve, i.e. the field point coordinates live in.
pub type Base = jubjub::Base;

/// Element of `F_t`.
#[derive(Clone, Copy, PartialEq, Eq, Default)]
pub struct Scalar(pub(crate) Fr);

impl Scalar {
    pub const ZERO: Scalar = Scalar(Fr::zero());
    pub const ONE: Scalar = Scalar(Fr::one());

    pub fn from_u64(v: u64) -> Self {
        Scalar(Fr::from(v))
    }

    /// Uniform sample from the whole field (zero included).
    pub fn random<R: CryptoRng + ?Sized>(rng: &mut R) -> Self {
        Scalar(Fr::random(rng))
    }

    /// Uniform sample from the non-zero elements.
    pub fn random_nonzero<R: CryptoRng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let s = Self::random(rng);
            if !s.is_zero() {
                return s;
            }
        }
    }

    /// Interprets up to 31 little-endian bytes as an integer below `t`.
    ///
    /// Used for ASCII domain tags and for packing byte strings into field
    /// elements; 248 bits always fit under the 252-bit modulus.
    pub fn from_le_bytes_short(bytes: &[u8]) -> Self {
        assert!(bytes.len() <= 31, "at most 31 bytes fit below the modulus");
        let mut buf = [0u8; 32];
        buf[..bytes.len()].copy_from_slice(bytes);
        Scalar(Fr::from_bytes(&buf).expect("248-bit value is canonical"))
    }

    /// Reduces 64 uniformly distributed bytes into the field.
    pub fn from_bytes_wide(bytes: &[u8; 64]) -> Self {
        Scalar(Fr::from_bytes_wide(bytes))
    }

    pub fn is_zero(&self) -> bool {
        bool::from(self.0.is_zero())
    }

    pub fn to_bytes(&self) -> [u8; 32] {
        self.0.to_bytes()
    }

    pub fn from_bytes(bytes: &[u8; 32]) -> Result<Self, CryptoError> {
        Option::from(Fr::from_bytes(bytes)).map(Scalar).ok_or(CryptoError::NonCanonicalScalar)
    }

    pub fn from_slice(bytes: &[u8]) -> Result<Self, CryptoError> {
        let arr: [u8; 32] = bytes.try_into().map_err(|_| CryptoError::BadLength { expected: 32, got: bytes.len() })?;
        Self::from_bytes(&arr)
    }

    /// The integer value if it fits in a `u64`.
    pub fn to_u64(&self) -> Option<u64> {
        let bytes = self.to_bytes();
        if bytes[8..].iter().any(|b| *b != 0) {
            return None;
        }
        Some(u64::from_le_bytes(bytes[..8].try_into().unwrap()))
    }

    pub fn invert(&self) -> Option<Scalar> {
        Option::from(self.0.invert()).map(Scalar)
    }

    /// Embeds this scalar into the base field. Injective because `t < p`.
    pub(crate) fn to_base(self) -> Base {
        Base::from_bytes(&self.to_bytes()).expect("t < p so every scalar is a canonical base element")
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.to_bytes())
    }

    pub fn from_hex(s: &str) -> Result<Self, CryptoError> {
        let raw = hex::decode(s).map_err(|_| CryptoError::BadHex)?;
        Self::from_slice(&raw)
    }
}

impl From<u64> for Scalar {
    fn from(v: u64) -> Self {
        Scalar::from_u64(v)
    }
}

impl Add for Scalar {
    type Output = Scalar;
    fn add(self, rhs: Scalar) -> Scalar {
        Scalar(self.0 + rhs.0)
    }
}

impl AddAssign for Scalar {
    fn add_assign(&mut self, rhs: Scalar) {
        self.0 += rhs.0;
    }
}

impl Sub for Scalar {
    type Output = Scalar;
    fn sub(self, rhs: Scalar) -> Scalar {
        Scalar(self.0 - rhs.0)
    }
}

impl Mul for Scalar {
    type Output = Scalar;
    fn mul(self, rhs: Scalar) -> Scalar {
        Scalar(self.0 * rhs.0)
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar(-self.0)
    }
}

impl std::iter::Sum for Scalar {
    fn sum<I: Iterator<Item = Scalar>>(iter: I) -> Scalar {
        iter.fold(Scalar::ZERO, |acc, s| acc + s)
    }
}

impl Hash for Scalar {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.to_bytes().hash(state);
    }
}

// Numeric order on the canonical integer representative.
impl Ord for Scalar {
    fn cmp(&self, other: &Self) -> Ordering {
        let mut a = self.to_bytes();
        let mut b = other.to_bytes();
        a.reverse();
        b.reverse();
        a.cmp(&b)
    }
}

impl PartialOrd for Scalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Scalar({})", self.to_hex())
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Scalar::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

/// Element of the prime-order subgroup `J`.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct GroupElement(pub(crate) SubgroupPoint);

impl GroupElement {
    pub fn identity() -> Self {
        GroupElement(SubgroupPoint::identity())
    }

    pub fn is_identity(&self) -> bool {
        bool::from(self.0.is_identity())
    }

    /// Compressed form: the v-coordinate, little-endian, with the parity of
    /// u in the top bit.
    pub fn to_bytes(&self) -> [u8; 32] {
        self.0.to_bytes()
    }

    /// Rejects off-curve points, points outside the prime-order subgroup and
    /// non-canonical encodings.
    pub fn from_bytes(bytes: &[u8; 32]) -> Result<Self, CryptoError> {
        let p: Option<SubgroupPoint> = SubgroupPoint::from_bytes(bytes).into();
        let p = p.ok_or(CryptoError::InvalidPoint)?;
        if p.to_bytes() != *bytes {
            return Err(CryptoError::InvalidPoint);
        }
        Ok(GroupElement(p))
    }

    pub fn from_slice(bytes: &[u8]) -> Result<Self, CryptoError> {
        let arr: [u8; 32] = bytes.try_into().map_err(|_| CryptoError::BadLength { expected: 32, got: bytes.len() })?;
        Self::from_bytes(&arr)
    }

    /// Affine `(u, v)` coordinates in the base field.
    pub(crate) fn coordinates(&self) -> (Base, Base) {
        let affine = AffinePoint::from(ExtendedPoint::from(self.0));
        (affine.get_u(), affine.get_v())
    }

    pub(crate) fn from_subgroup(p: SubgroupPoint) -> Self {
        GroupElement(p)
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.to_bytes())
    }

    pub fn from_hex(s: &str) -> Result<Self, CryptoError> {
        let raw = hex::decode(s).map_err(|_| CryptoError::BadHex)?;
        Self::from_slice(&raw)
    }
}

impl Default for GroupElement {
    fn default() -> Self {
        Self::identity()
    }
}

impl Add for GroupElement {
    type Output = GroupElement;
    fn add(self, rhs: GroupElement) -> GroupElement {
        GroupElement(self.0 + rhs.0)
    }
}

impl Sub for GroupElement {
    type Output = GroupElement;
    fn sub(self, rhs: GroupElement) -> GroupElement {
        GroupElement(self.0 - rhs.0)
    }
}

impl Neg for GroupElement {
    type Output = GroupElement;
    fn neg(self) -> GroupElement {
        GroupElement(-self.0)
    }
}

impl Mul<Scalar> for GroupElement {
    type Output = GroupElement;
    fn mul(self, rhs: Scalar) -> GroupElement {
        GroupElement(self.0 * rhs.0)
    }
}

impl Mul<GroupElement> for Scalar {
    type Output = GroupElement;
    fn mul(self, rhs: GroupElement) -> GroupElement {
        GroupElement(rhs.0 * self.0)
    }
}

impl Hash for GroupElement {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.to_bytes().hash(state);
    }
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GroupElement({})", self.to_hex())
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for GroupElement {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for GroupElement {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        GroupElement::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

/// One input to the sponge: a scalar, or a point absorbed as its two
/// coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Element {
    Scalar(Scalar),
    Point(GroupElement),
}

impl Element {
    pub fn as_scalar(&self) -> Option<Scalar> {
        match self {
            Element::Scalar(s) => Some(*s),
            Element::Point(_) => None,
        }
    }

    pub fn as_point(&self) -> Option<GroupElement> {
        match self {
            Element::Point(p) => Some(*p),
            Element::Scalar(_) => None,
        }
    }

    pub(crate) fn tag(&self) -> u8 {
        match self {
            Element::Scalar(_) => 0,
            Element::Point(_) => 1,
        }
    }

    pub fn to_bytes(&self) -> [u8; 32] {
        match self {
            Element::Scalar(s) => s.to_bytes(),
            Element::Point(p) => p.to_bytes(),
        }
    }
}

impl From<Scalar> for Element {
    fn from(s: Scalar) -> Self {
        Element::Scalar(s)
    }
}

impl From<GroupElement> for Element {
    fn from(p: GroupElement) -> Self {
        Element::Point(p)
    }
}

impl From<u64> for Element {
    fn from(v: u64) -> Self {
        Element::Scalar(Scalar::from_u64(v))
    }
}
