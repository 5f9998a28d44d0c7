//! Small test backend: the order-`q` subgroup of quadratic residues in `Z*_P`
//! for a safe prime `P = 2q + 1`.
//!
//! Parameters are tiny on purpose so the algebra can be checked by brute
//! force. Never use this backend for real data.

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rand::{CryptoRng, Rng, RngCore};

use super::group::PrimeOrderGroup;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModPGroup {
    modulus: u64,
    order: u64,
    generator: u64,
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        e >>= 1;
    }
    acc
}

impl ModPGroup {
    /// `P = 23`, `q = 11`.
    pub fn tiny() -> Self {
        Self::new(23).unwrap()
    }

    /// `P = 2039`, `q = 1019`.
    pub fn small() -> Self {
        Self::new(2039).unwrap()
    }

    /// `P = 2147483579`, `q = 1073741789`.
    pub fn medium() -> Self {
        Self::new(2_147_483_579).unwrap()
    }

    /// Builds the group for safe prime `modulus` (below 2^32) with generator 4.
    pub fn new(modulus: u64) -> Option<Self> {
        if !(7..1 << 32).contains(&modulus) {
            return None;
        }
        let order = (modulus - 1) / 2;
        if !is_prime(modulus) || !is_prime(order) {
            return None;
        }
        Some(ModPGroup {
            modulus,
            order,
            generator: 4,
        })
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn order_u64(&self) -> u64 {
        self.order
    }

    /// Group multiplication.
    pub fn op(&self, a: u64, b: u64) -> u64 {
        mul_mod(a, b, self.modulus)
    }

    /// Every element of the subgroup, in the order `g^0, g^1, ...`.
    pub fn elements(&self) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.order as usize);
        let mut x = 1;
        for _ in 0..self.order {
            out.push(x);
            x = self.op(x, self.generator);
        }
        out
    }
}

impl PrimeOrderGroup for ModPGroup {
    type Element = u64;
    type ScalarRepr = u64;

    fn order(&self) -> BigUint {
        BigUint::from(self.order)
    }

    fn element_width(&self) -> usize {
        8
    }

    fn generator(&self) -> u64 {
        self.generator
    }

    fn params_bytes(&self) -> Vec<u8> {
        self.modulus.to_be_bytes().to_vec()
    }

    fn from_params_bytes(bytes: &[u8]) -> Option<Self> {
        Self::new(u64::from_be_bytes(bytes.try_into().ok()?))
    }

    fn exp(&self, base: &u64, e: &u64) -> u64 {
        pow_mod(*base, *e, self.modulus)
    }

    fn reduce(&self, x: &BigUint) -> u64 {
        (x % self.order).to_u64().expect("residue below q")
    }

    fn is_zero(&self, s: &u64) -> bool {
        *s == 0
    }

    fn mul(&self, a: &u64, b: &u64) -> u64 {
        mul_mod(*a, *b, self.order)
    }

    fn invert(&self, a: &u64) -> u64 {
        pow_mod(*a, self.order - 2, self.order)
    }

    fn to_biguint(&self, s: &u64) -> BigUint {
        BigUint::from(*s)
    }

    fn encode_element(&self, e: &u64) -> Vec<u8> {
        e.to_be_bytes().to_vec()
    }

    fn decode_element(&self, bytes: &[u8]) -> Option<u64> {
        let x = u64::from_be_bytes(bytes.try_into().ok()?);
        // subgroup membership: x^q == 1
        (x != 0 && x < self.modulus && pow_mod(x, self.order, self.modulus) == 1).then_some(x)
    }

    fn random_element<R: RngCore + CryptoRng>(&self, rng: &mut R) -> u64 {
        let k = rng.gen_range(0..self.order);
        pow_mod(self.generator, k, self.modulus)
    }
}
