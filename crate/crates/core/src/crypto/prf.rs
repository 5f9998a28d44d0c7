//! Keyed primitives: the byte PRF `F`, the scalar PRF `F_p` and the keyed hash `H`.

use std::fmt;

use aes::Aes128;
use cmac::Cmac;
use hmac::{Hmac, Mac};
use rand::{CryptoRng, RngCore};
use sha2::{Sha256, Sha512};

use super::counters::{self, Op};
use super::group::{PrimeOrderGroup, Scalar};

/// Output width of `F`.
pub const PRF_OUTPUT_LEN: usize = 16;
/// Output width of `H`.
pub const HASH_OUTPUT_LEN: usize = 32;

macro_rules! key_type {
    ($(#[$meta:meta])* $name:ident, $len:expr) => {
        $(#[$meta])*
        #[derive(Clone, PartialEq, Eq)]
        pub struct $name([u8; $len]);

        impl $name {
            pub const LEN: usize = $len;

            pub fn from_bytes(bytes: [u8; $len]) -> Self {
                $name(bytes)
            }

            pub fn from_slice(bytes: &[u8]) -> Option<Self> {
                Some($name(bytes.try_into().ok()?))
            }

            pub fn generate<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
                let mut k = [0u8; $len];
                rng.fill_bytes(&mut k);
                $name(k)
            }

            pub fn as_bytes(&self) -> &[u8; $len] {
                &self.0
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!(stringify!($name), "(..)"))
            }
        }
    };
}

key_type!(
    /// Key for `F` (AES-128-CMAC).
    PrfKey, 16
);
key_type!(
    /// Key for `F_p` (HMAC-SHA512).
    ScalarPrfKey, 32
);
key_type!(
    /// Key for `H` (HMAC-SHA256). Public in this scheme.
    HashKey, 32
);
key_type!(
    /// Key for the authenticated cipher (AES-128-GCM).
    CipherKey, 16
);

/// `F(key, input)`: AES-128-CMAC, 16 bytes.
pub fn prf_bytes(key: &PrfKey, input: &[u8]) -> [u8; PRF_OUTPUT_LEN] {
    counters::bump(Op::Prf);
    let mut mac = <Cmac<Aes128> as Mac>::new_from_slice(key.as_bytes()).expect("16-byte key");
    mac.update(input);
    mac.finalize().into_bytes().into()
}

/// `F_p(key, input)`: HMAC-SHA512 over `input || ctr` reduced mod `p`.
///
/// `ctr` starts at zero and is bumped until the residue is nonzero.
pub fn prf_scalar<G: PrimeOrderGroup>(group: &G, key: &ScalarPrfKey, input: &[u8]) -> Scalar<G> {
    counters::bump(Op::ScalarPrf);
    let mut ctr = 0u32;
    loop {
        let mut mac = <Hmac<Sha512> as Mac>::new_from_slice(key.as_bytes()).expect("any key length");
        mac.update(input);
        mac.update(&ctr.to_be_bytes());
        let wide: [u8; 64] = mac.finalize().into_bytes().into();
        if let Ok(s) = Scalar::new(group, group.reduce_wide(&wide)) {
            return s;
        }
        ctr += 1;
    }
}

/// `H(key, element)`: HMAC-SHA256 over the canonical element encoding.
pub fn keyed_hash<G: PrimeOrderGroup>(
    group: &G,
    key: &HashKey,
    element: &G::Element,
) -> [u8; HASH_OUTPUT_LEN] {
    counters::bump(Op::Hash);
    let mut mac = <Hmac<Sha256> as Mac>::new_from_slice(key.as_bytes()).expect("any key length");
    mac.update(&group.encode_element(element));
    mac.finalize().into_bytes().into()
}
