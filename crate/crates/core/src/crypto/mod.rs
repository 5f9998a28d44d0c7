//! Cryptographic primitives used by the three protocol roles.
//!
//! Everything the protocol layer needs goes through the counted wrappers in
//! this module so primitive costs can be measured with [`counters`].

pub mod cipher;
pub mod counters;
pub mod group;
pub mod modp;
pub mod perm;
pub mod prf;
pub mod ristretto;

use thiserror::Error;

pub use cipher::{se_decrypt, se_encrypt, CIPHERTEXT_OVERHEAD};
pub use counters::OpCounters;
pub use group::{generator_exp, group_exp, scalar_inv, scalar_mul, PrimeOrderGroup, Scalar, SCALAR_WIDTH};
pub use modp::ModPGroup;
pub use perm::{
    perm_forward, perm_inverse, perm_inverse_iterated, perm_keygen, reduce_to_scalar, PermDomainValue,
    PermPublicKey, PermSecretKey, PERM_DOMAIN_WIDTH, PERM_MODULUS_BITS,
};
pub use prf::{
    keyed_hash, prf_bytes, prf_scalar, CipherKey, HashKey, PrfKey, ScalarPrfKey, HASH_OUTPUT_LEN, PRF_OUTPUT_LEN,
};
pub use ristretto::Ristretto255;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CryptoError {
    #[error("scalar is zero")]
    ZeroScalar,
    #[error("permutation value reduces to zero modulo the group order")]
    ZeroResidue,
    #[error("value outside the permutation domain")]
    OutOfDomain,
    #[error("authenticated decryption failed")]
    Integrity,
    #[error("invalid key: {0}")]
    InvalidKey(&'static str),
    #[error("bad encoding: {0}")]
    Encoding(&'static str),
}
