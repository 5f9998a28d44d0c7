//! RSA trapdoor permutation over `Z_N`.
//!
//! `forward` is `x^e mod N` with the public key; `inverse` is `x^d mod N`
//! computed by CRT with the factorization. Keys come from the `rsa` crate;
//! all arithmetic here is plain `num-bigint`.

use std::fmt;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::{CryptoRng, RngCore};
use rsa::traits::{PrivateKeyParts, PublicKeyParts};

use super::counters::{self, Op};
use super::group::{PrimeOrderGroup, Scalar};
use super::CryptoError;

/// Modulus size used by the protocol.
pub const PERM_MODULUS_BITS: usize = 2048;
/// Encoded width of a domain value under the protocol modulus.
pub const PERM_DOMAIN_WIDTH: usize = PERM_MODULUS_BITS / 8;

/// An element of the permutation domain `[0, N)`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PermDomainValue(BigUint);

impl fmt::Debug for PermDomainValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let hex = format!("{:x}", self.0);
        let head = &hex[..hex.len().min(16)];
        write!(f, "PermDomainValue({head}..)")
    }
}

impl PermDomainValue {
    pub fn value(&self) -> &BigUint {
        &self.0
    }

    /// Fixed-width big-endian encoding.
    pub fn to_bytes(&self, width: usize) -> Vec<u8> {
        let raw = self.0.to_bytes_be();
        let mut out = vec![0u8; width];
        out[width - raw.len()..].copy_from_slice(&raw);
        out
    }

    /// Decodes without a range check; see [`PermPublicKey::check`].
    pub fn from_bytes(bytes: &[u8]) -> Self {
        PermDomainValue(BigUint::from_bytes_be(bytes))
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct PermPublicKey {
    modulus: BigUint,
    exponent: BigUint,
}

impl fmt::Debug for PermPublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PermPublicKey({} bits, e = {})", self.modulus.bits(), self.exponent)
    }
}

impl PermPublicKey {
    pub fn new(modulus: BigUint, exponent: BigUint) -> Result<Self, CryptoError> {
        if modulus.is_even() || modulus.bits() < 64 || exponent.is_even() || exponent <= BigUint::one() {
            return Err(CryptoError::InvalidKey("malformed permutation public key"));
        }
        Ok(PermPublicKey { modulus, exponent })
    }

    pub fn modulus(&self) -> &BigUint {
        &self.modulus
    }

    pub fn exponent(&self) -> &BigUint {
        &self.exponent
    }

    /// Bytes needed to encode any domain value.
    pub fn domain_width(&self) -> usize {
        self.modulus.bits().div_ceil(8) as usize
    }

    pub fn check(&self, x: &PermDomainValue) -> Result<(), CryptoError> {
        if x.0 >= self.modulus {
            return Err(CryptoError::OutOfDomain);
        }
        Ok(())
    }

    pub fn value(&self, x: BigUint) -> Result<PermDomainValue, CryptoError> {
        let v = PermDomainValue(x);
        self.check(&v)?;
        Ok(v)
    }

    /// Uniform over `[2, N)`: the fixed points 0 and 1 are excluded.
    pub fn sample_nontrivial<R: RngCore + CryptoRng>(&self, rng: &mut R) -> PermDomainValue {
        let width = self.domain_width();
        let mut buf = vec![0u8; width];
        let excess = (width * 8) as u64 - self.modulus.bits();
        loop {
            rng.fill_bytes(&mut buf);
            buf[0] &= 0xffu8 >> excess;
            let x = BigUint::from_bytes_be(&buf);
            if x >= BigUint::from(2u8) && x < self.modulus {
                return PermDomainValue(x);
            }
        }
    }

    fn raw_forward(&self, x: &BigUint) -> BigUint {
        if self.exponent == BigUint::from(65537u32) {
            // 16 squarings and one multiply beat the generic windowed modpow
            let mut acc = x.clone();
            for _ in 0..16 {
                acc = (&acc * &acc) % &self.modulus;
            }
            (acc * x) % &self.modulus
        } else {
            x.modpow(&self.exponent, &self.modulus)
        }
    }
}

/// `π_PK(x)`.
pub fn perm_forward(pk: &PermPublicKey, x: &PermDomainValue) -> Result<PermDomainValue, CryptoError> {
    pk.check(x)?;
    counters::bump(Op::PermForward);
    Ok(PermDomainValue(pk.raw_forward(&x.0)))
}

/// Secret half of the permutation, holding the CRT parameters.
#[derive(Clone, PartialEq, Eq)]
pub struct PermSecretKey {
    public: PermPublicKey,
    prime_p: BigUint,
    prime_q: BigUint,
    exp_p: BigUint,
    exp_q: BigUint,
    q_inv: BigUint,
}

impl fmt::Debug for PermSecretKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PermSecretKey({} bits)", self.public.modulus.bits())
    }
}

impl PermSecretKey {
    /// Builds the CRT key from the two primes and the public exponent.
    pub fn from_primes(prime_p: BigUint, prime_q: BigUint, exponent: BigUint) -> Result<Self, CryptoError> {
        let one = BigUint::one();
        if prime_p == prime_q || prime_p <= one || prime_q <= one {
            return Err(CryptoError::InvalidKey("degenerate primes"));
        }
        let public = PermPublicKey::new(&prime_p * &prime_q, exponent)?;
        let exp_p = mod_inverse(&public.exponent, &(&prime_p - 1u8))
            .ok_or(CryptoError::InvalidKey("e not invertible mod p-1"))?;
        let exp_q = mod_inverse(&public.exponent, &(&prime_q - 1u8))
            .ok_or(CryptoError::InvalidKey("e not invertible mod q-1"))?;
        let q_inv = mod_inverse(&prime_q, &prime_p).ok_or(CryptoError::InvalidKey("p and q not coprime"))?;
        Ok(PermSecretKey {
            public,
            prime_p,
            prime_q,
            exp_p,
            exp_q,
            q_inv,
        })
    }

    pub fn public(&self) -> &PermPublicKey {
        &self.public
    }

    pub fn primes(&self) -> (&BigUint, &BigUint) {
        (&self.prime_p, &self.prime_q)
    }

    fn crt(&self, x: &BigUint, exp_p: &BigUint, exp_q: &BigUint) -> BigUint {
        let mp = (x % &self.prime_p).modpow(exp_p, &self.prime_p);
        let mq = (x % &self.prime_q).modpow(exp_q, &self.prime_q);
        // Garner: m = mq + q * ((mp - mq) * q^-1 mod p)
        let diff = (&self.prime_p + &mp - (&mq % &self.prime_p)) % &self.prime_p;
        let h = (diff * &self.q_inv) % &self.prime_p;
        mq + h * &self.prime_q
    }

    /// `π^{-steps}(x)` in a single exponentiation, using `d^steps mod (p-1)`.
    fn raw_inverse_iterated(&self, x: &BigUint, steps: u64) -> BigUint {
        let pm1 = &self.prime_p - 1u8;
        let qm1 = &self.prime_q - 1u8;
        let ep = self.exp_p.modpow(&BigUint::from(steps), &pm1);
        let eq = self.exp_q.modpow(&BigUint::from(steps), &qm1);
        self.crt(x, &ep, &eq)
    }
}

/// `π_SK^{-1}(x)`.
pub fn perm_inverse(sk: &PermSecretKey, x: &PermDomainValue) -> Result<PermDomainValue, CryptoError> {
    sk.public.check(x)?;
    counters::bump(Op::PermInverse);
    Ok(PermDomainValue(sk.crt(&x.0, &sk.exp_p, &sk.exp_q)))
}

/// `π_SK^{-steps}(x)` as one secret-key evaluation.
pub fn perm_inverse_iterated(
    sk: &PermSecretKey,
    x: &PermDomainValue,
    steps: u64,
) -> Result<PermDomainValue, CryptoError> {
    sk.public.check(x)?;
    if steps == 0 {
        return Ok(x.clone());
    }
    counters::bump(Op::PermInverse);
    Ok(PermDomainValue(sk.raw_inverse_iterated(&x.0, steps)))
}

/// Generates a fresh key pair with public exponent 65537.
pub fn perm_keygen<R: RngCore + CryptoRng>(bits: usize, rng: &mut R) -> Result<PermSecretKey, CryptoError> {
    if bits < 256 {
        return Err(CryptoError::InvalidKey("permutation modulus below 256 bits"));
    }
    let key = rsa::RsaPrivateKey::new(rng, bits).map_err(|_| CryptoError::InvalidKey("RSA key generation failed"))?;
    let primes = key.primes();
    let to_big = |x: &rsa::BigUint| BigUint::from_bytes_be(&x.to_bytes_be());
    PermSecretKey::from_primes(to_big(&primes[0]), to_big(&primes[1]), to_big(key.e()))
}

fn mod_inverse(a: &BigUint, m: &BigUint) -> Option<BigUint> {
    use num_bigint::BigInt;
    let a = BigInt::from(a.clone());
    let m = BigInt::from(m.clone());
    let e = a.extended_gcd(&m);
    if !e.gcd.is_one() {
        return None;
    }
    let x = ((e.x % &m) + &m) % &m;
    x.to_biguint()
}

/// `x mod p` as a nonzero scalar. A zero residue is a fault, never skipped.
pub fn reduce_to_scalar<G: PrimeOrderGroup>(group: &G, x: &PermDomainValue) -> Result<Scalar<G>, CryptoError> {
    let r = group.reduce(&x.0);
    if group.is_zero(&r) {
        return Err(CryptoError::ZeroResidue);
    }
    Scalar::new(group, r)
}

/// Draws a uniform value below `bound` (used by tests and generators).
pub fn uniform_below<R: RngCore>(bound: &BigUint, rng: &mut R) -> BigUint {
    assert!(!bound.is_zero(), "empty range");
    let width = bound.bits().div_ceil(8) as usize;
    let excess = (width * 8) as u64 - bound.bits();
    let mut buf = vec![0u8; width];
    loop {
        rng.fill_bytes(&mut buf);
        if excess > 0 {
            buf[0] &= 0xffu8 >> excess;
        }
        let x = BigUint::from_bytes_be(&buf);
        if &x < bound {
            return x;
        }
    }
}
