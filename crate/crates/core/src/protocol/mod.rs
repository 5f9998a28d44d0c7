//! The three roles: [`Trustee`] (writer and revoker), [`Vetter`] (search
//! token issuer) and [`Server`] (encrypted index holder).

mod keys;
mod messages;
mod server;
mod state;
mod trustee;
mod vetter;

use rand::{CryptoRng, RngCore};
use thiserror::Error;

use crate::crypto::{CryptoError, PrimeOrderGroup, Ristretto255, PERM_MODULUS_BITS};
use crate::storage::StorageError;

pub use keys::{PublicParams, TrusteeKeys, VetterKeys};
pub use messages::{
    AddBatch, DeleteToken, DeletionReport, RSet, Record, SearchOutcome, SearchToken, MAX_ID_LEN, MAX_KEYWORD_LEN,
};
pub use server::Server;
pub use state::{KeywordState, WDelta, WMap};
pub use trustee::{ChainStrategy, Trustee};
pub use vetter::Vetter;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error(transparent)]
    Storage(#[from] StorageError),
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("index label already present (replayed batch or hash collision)")]
    DuplicateIndex,
    #[error("delta points at a missing index entry")]
    IndexMissing,
    #[error("malformed message: {0}")]
    Malformed(&'static str),
    #[error("stale keyword delta: expected sequence {expected}, got {got}")]
    Stale { expected: u64, got: u64 },
    #[error("keyword delta would move the counter of {keyword:?} backwards")]
    CounterRegression { keyword: String },
    #[error("result entry {index} failed authenticated decryption")]
    ResultIntegrity { index: usize },
    #[error("missing or invalid persisted state: {0}")]
    MissingState(&'static str),
}

/// Output of `setup`: the trustee, its vetter and the server parameters.
pub type Roles<G> = (Trustee<G>, Vetter<G>, PublicParams<G>);

/// Smallest permutation modulus `setup` accepts.
pub const MIN_PERM_BITS: usize = 512;

/// Generates fresh keys and returns the trustee, a vetter holding its
/// projection of them, and the public parameters for the server.
pub fn setup<G: PrimeOrderGroup, R: RngCore + CryptoRng>(
    group: G,
    perm_bits: usize,
    rng: &mut R,
) -> Result<Roles<G>, ProtocolError> {
    if perm_bits < MIN_PERM_BITS {
        return Err(CryptoError::InvalidKey("permutation modulus too small").into());
    }
    let keys = TrusteeKeys::generate(group, perm_bits, rng)?;
    let vetter = Vetter::new(keys.vetter_keys());
    let public = keys.public().clone();
    Ok((Trustee::new(keys), vetter, public))
}

/// Production setup: ristretto255 with a random generator and a 2048-bit
/// permutation.
pub fn setup_default<R: RngCore + CryptoRng>(
    rng: &mut R,
) -> Result<Roles<Ristretto255>, ProtocolError> {
    let group = Ristretto255::random(rng);
    setup(group, PERM_MODULUS_BITS, rng)
}

#[cfg(test)]
mod tests;
