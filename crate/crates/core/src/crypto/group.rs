//! Prime-order group abstraction and the nonzero scalar type.

use std::fmt;

use num_bigint::BigUint;
use rand::{CryptoRng, RngCore};

use super::counters::{self, Op};
use super::CryptoError;

/// Width of the canonical scalar encoding (big-endian).
pub const SCALAR_WIDTH: usize = 32;

/// A cyclic group of prime order `p` with a fixed generator.
///
/// Scalars are handled through the raw `ScalarRepr` type; callers outside
/// this module use [`Scalar`], which refuses zero.
pub trait PrimeOrderGroup: Clone + Send + Sync + fmt::Debug {
    type Element: Clone + PartialEq + Eq + fmt::Debug + Send + Sync;
    type ScalarRepr: Copy + PartialEq + Eq + fmt::Debug + Send + Sync;

    /// The prime group order `p`.
    fn order(&self) -> BigUint;
    /// Bytes occupied by every encoded element.
    fn element_width(&self) -> usize;
    fn generator(&self) -> Self::Element;

    fn exp(&self, base: &Self::Element, e: &Self::ScalarRepr) -> Self::Element;
    /// `g^e`; backends may use precomputation for the fixed generator.
    fn exp_generator(&self, e: &Self::ScalarRepr) -> Self::Element {
        self.exp(&self.generator(), e)
    }

    /// `x mod p`, possibly zero.
    fn reduce(&self, x: &BigUint) -> Self::ScalarRepr;
    /// Reduces 64 uniformly random bytes modulo `p`.
    fn reduce_wide(&self, bytes: &[u8; 64]) -> Self::ScalarRepr {
        self.reduce(&BigUint::from_bytes_be(bytes))
    }
    fn is_zero(&self, s: &Self::ScalarRepr) -> bool;
    fn mul(&self, a: &Self::ScalarRepr, b: &Self::ScalarRepr) -> Self::ScalarRepr;
    /// Multiplicative inverse; `a` must be nonzero.
    fn invert(&self, a: &Self::ScalarRepr) -> Self::ScalarRepr;
    fn to_biguint(&self, s: &Self::ScalarRepr) -> BigUint;

    fn encode_element(&self, e: &Self::Element) -> Vec<u8>;
    fn decode_element(&self, bytes: &[u8]) -> Option<Self::Element>;
    fn random_element<R: RngCore + CryptoRng>(&self, rng: &mut R) -> Self::Element;

    /// Serialized group parameters, enough to rebuild an identical group.
    fn params_bytes(&self) -> Vec<u8>;
    fn from_params_bytes(bytes: &[u8]) -> Option<Self>
    where
        Self: Sized;
}

/// A nonzero residue modulo the group order.
pub struct Scalar<G: PrimeOrderGroup> {
    repr: G::ScalarRepr,
}

impl<G: PrimeOrderGroup> Clone for Scalar<G> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<G: PrimeOrderGroup> Copy for Scalar<G> {}

impl<G: PrimeOrderGroup> PartialEq for Scalar<G> {
    fn eq(&self, other: &Self) -> bool {
        self.repr == other.repr
    }
}

impl<G: PrimeOrderGroup> Eq for Scalar<G> {}

impl<G: PrimeOrderGroup> fmt::Debug for Scalar<G> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Scalar").field(&self.repr).finish()
    }
}

impl<G: PrimeOrderGroup> Scalar<G> {
    /// Wraps a raw residue, rejecting zero.
    pub fn new(group: &G, repr: G::ScalarRepr) -> Result<Self, CryptoError> {
        if group.is_zero(&repr) {
            return Err(CryptoError::ZeroScalar);
        }
        Ok(Scalar { repr })
    }

    /// Reduces `x` modulo `p`; zero residues are rejected.
    pub fn from_biguint(group: &G, x: &BigUint) -> Result<Self, CryptoError> {
        Self::new(group, group.reduce(x))
    }

    pub fn from_u64(group: &G, x: u64) -> Result<Self, CryptoError> {
        Self::from_biguint(group, &BigUint::from(x))
    }

    /// Uniform in `Z*_p`.
    pub fn random<R: RngCore + CryptoRng>(group: &G, rng: &mut R) -> Self {
        loop {
            let mut wide = [0u8; 64];
            rng.fill_bytes(&mut wide);
            if let Ok(s) = Self::new(group, group.reduce_wide(&wide)) {
                return s;
            }
        }
    }

    pub fn repr(&self) -> &G::ScalarRepr {
        &self.repr
    }

    pub fn to_biguint(&self, group: &G) -> BigUint {
        group.to_biguint(&self.repr)
    }

    /// 32-byte big-endian encoding.
    pub fn to_bytes(&self, group: &G) -> [u8; SCALAR_WIDTH] {
        let raw = self.to_biguint(group).to_bytes_be();
        let mut out = [0u8; SCALAR_WIDTH];
        out[SCALAR_WIDTH - raw.len()..].copy_from_slice(&raw);
        out
    }

    /// Parses the 32-byte big-endian encoding; the value must lie in `[1, p-1]`.
    pub fn from_bytes(group: &G, bytes: &[u8]) -> Result<Self, CryptoError> {
        if bytes.len() != SCALAR_WIDTH {
            return Err(CryptoError::Encoding("scalar must be 32 bytes"));
        }
        let x = BigUint::from_bytes_be(bytes);
        if x >= group.order() {
            return Err(CryptoError::Encoding("scalar not below the group order"));
        }
        Self::from_biguint(group, &x)
    }
}

/// `base^e`, counted as one exponentiation.
pub fn group_exp<G: PrimeOrderGroup>(group: &G, base: &G::Element, e: &Scalar<G>) -> G::Element {
    counters::bump(Op::Exp);
    group.exp(base, e.repr())
}

/// `g^e`, counted as one exponentiation.
pub fn generator_exp<G: PrimeOrderGroup>(group: &G, e: &Scalar<G>) -> G::Element {
    counters::bump(Op::Exp);
    group.exp_generator(e.repr())
}

pub fn scalar_mul<G: PrimeOrderGroup>(group: &G, a: &Scalar<G>, b: &Scalar<G>) -> Scalar<G> {
    // product of two units in a prime field is a unit
    Scalar {
        repr: group.mul(a.repr(), b.repr()),
    }
}

pub fn scalar_inv<G: PrimeOrderGroup>(group: &G, a: &Scalar<G>) -> Scalar<G> {
    Scalar {
        repr: group.invert(a.repr()),
    }
}
