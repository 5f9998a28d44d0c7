//! Production group backend: ristretto255 (prime order ~2^252).

use std::fmt;
use std::sync::{Arc, OnceLock};

use curve25519_dalek::constants::RISTRETTO_BASEPOINT_POINT;
use curve25519_dalek::ristretto::{CompressedRistretto, RistrettoBasepointTable, RistrettoPoint};
use curve25519_dalek::scalar::Scalar as DalekScalar;
use curve25519_dalek::traits::Identity;
use num_bigint::BigUint;
use rand::{CryptoRng, RngCore};

use super::group::PrimeOrderGroup;

pub const ELEMENT_WIDTH: usize = 32;

fn group_order() -> &'static BigUint {
    static ORDER: OnceLock<BigUint> = OnceLock::new();
    ORDER.get_or_init(|| {
        // l = 2^252 + 27742317777372353535851937790883648493
        let tail: BigUint = "27742317777372353535851937790883648493".parse().unwrap();
        (BigUint::from(1u8) << 252) + tail
    })
}

/// ristretto255 with a chosen generator and a precomputed table for it.
#[derive(Clone)]
pub struct Ristretto255 {
    generator: RistrettoPoint,
    table: Arc<RistrettoBasepointTable>,
}

impl fmt::Debug for Ristretto255 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Ristretto255")
            .field("generator", &self.generator.compress())
            .finish()
    }
}

impl PartialEq for Ristretto255 {
    fn eq(&self, other: &Self) -> bool {
        self.generator == other.generator
    }
}

impl Eq for Ristretto255 {}

impl Default for Ristretto255 {
    fn default() -> Self {
        Self::with_generator(RISTRETTO_BASEPOINT_POINT).expect("basepoint is not the identity")
    }
}

impl Ristretto255 {
    /// Any non-identity element generates the group; the identity is refused.
    pub fn with_generator(generator: RistrettoPoint) -> Option<Self> {
        if generator == RistrettoPoint::identity() {
            return None;
        }
        Some(Ristretto255 {
            generator,
            table: Arc::new(RistrettoBasepointTable::create(&generator)),
        })
    }

    /// Samples a uniformly random generator.
    pub fn random<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
        loop {
            if let Some(g) = Self::with_generator(RistrettoPoint::random(rng)) {
                return g;
            }
        }
    }

    pub fn from_generator_bytes(bytes: &[u8]) -> Option<Self> {
        let point = CompressedRistretto::from_slice(bytes).ok()?.decompress()?;
        Self::with_generator(point)
    }

    pub fn generator_bytes(&self) -> [u8; ELEMENT_WIDTH] {
        self.generator.compress().to_bytes()
    }
}

impl PrimeOrderGroup for Ristretto255 {
    type Element = RistrettoPoint;
    type ScalarRepr = DalekScalar;

    fn order(&self) -> BigUint {
        group_order().clone()
    }

    fn element_width(&self) -> usize {
        ELEMENT_WIDTH
    }

    fn generator(&self) -> RistrettoPoint {
        self.generator
    }

    fn exp(&self, base: &RistrettoPoint, e: &DalekScalar) -> RistrettoPoint {
        base * e
    }

    fn params_bytes(&self) -> Vec<u8> {
        self.generator_bytes().to_vec()
    }

    fn from_params_bytes(bytes: &[u8]) -> Option<Self> {
        Self::from_generator_bytes(bytes)
    }

    fn exp_generator(&self, e: &DalekScalar) -> RistrettoPoint {
        &*self.table * e
    }

    fn reduce(&self, x: &BigUint) -> DalekScalar {
        let r = x % group_order();
        let mut le = [0u8; 32];
        let raw = r.to_bytes_le();
        le[..raw.len()].copy_from_slice(&raw);
        Option::from(DalekScalar::from_canonical_bytes(le)).expect("value reduced below l")
    }

    fn reduce_wide(&self, bytes: &[u8; 64]) -> DalekScalar {
        DalekScalar::from_bytes_mod_order_wide(bytes)
    }

    fn is_zero(&self, s: &DalekScalar) -> bool {
        *s == DalekScalar::ZERO
    }

    fn mul(&self, a: &DalekScalar, b: &DalekScalar) -> DalekScalar {
        a * b
    }

    fn invert(&self, a: &DalekScalar) -> DalekScalar {
        a.invert()
    }

    fn to_biguint(&self, s: &DalekScalar) -> BigUint {
        BigUint::from_bytes_le(s.as_bytes())
    }

    fn encode_element(&self, e: &RistrettoPoint) -> Vec<u8> {
        e.compress().to_bytes().to_vec()
    }

    fn decode_element(&self, bytes: &[u8]) -> Option<RistrettoPoint> {
        CompressedRistretto::from_slice(bytes).ok()?.decompress()
    }

    fn random_element<R: RngCore + CryptoRng>(&self, rng: &mut R) -> RistrettoPoint {
        RistrettoPoint::random(rng)
    }
}
