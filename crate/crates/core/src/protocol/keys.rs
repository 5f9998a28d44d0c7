use num_bigint::BigUint;
use rand::{CryptoRng, RngCore};

use crate::crypto::{
    perm_keygen, CryptoError, HashKey, PermPublicKey, PermSecretKey, PrfKey, PrimeOrderGroup, ScalarPrfKey,
};
use crate::storage::{KvStore, Mutation, Namespace, Value};

use super::ProtocolError;

/// Values every role may see: the group, the permutation's public half and
/// the index hash key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PublicParams<G: PrimeOrderGroup> {
    pub group: G,
    pub pk: PermPublicKey,
    pub k_h: HashKey,
}

/// Full key material held by the trustee.
#[derive(Clone)]
pub struct TrusteeKeys<G: PrimeOrderGroup> {
    pub(crate) k_s: PrfKey,
    pub(crate) k_1: PrfKey,
    pub(crate) k_t: ScalarPrfKey,
    pub(crate) k_2: ScalarPrfKey,
    pub(crate) sk: PermSecretKey,
    pub(crate) public: PublicParams<G>,
}

/// The vetter's projection: only the keyword keys plus public values.
#[derive(Clone)]
pub struct VetterKeys<G: PrimeOrderGroup> {
    pub(crate) k_s: PrfKey,
    pub(crate) k_t: ScalarPrfKey,
    pub(crate) public: PublicParams<G>,
}

impl<G: PrimeOrderGroup> std::fmt::Debug for TrusteeKeys<G> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TrusteeKeys").field("public", &self.public).finish_non_exhaustive()
    }
}

impl<G: PrimeOrderGroup> std::fmt::Debug for VetterKeys<G> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VetterKeys").field("public", &self.public).finish_non_exhaustive()
    }
}

impl<G: PrimeOrderGroup> TrusteeKeys<G> {
    pub fn generate<R: RngCore + CryptoRng>(group: G, perm_bits: usize, rng: &mut R) -> Result<Self, ProtocolError> {
        let sk = perm_keygen(perm_bits, rng)?;
        Ok(TrusteeKeys {
            k_s: PrfKey::generate(rng),
            k_1: PrfKey::generate(rng),
            k_t: ScalarPrfKey::generate(rng),
            k_2: ScalarPrfKey::generate(rng),
            public: PublicParams { group, pk: sk.public().clone(), k_h: HashKey::generate(rng) },
            sk,
        })
    }

    pub fn public(&self) -> &PublicParams<G> {
        &self.public
    }

    pub fn vetter_keys(&self) -> VetterKeys<G> {
        VetterKeys { k_s: self.k_s.clone(), k_t: self.k_t.clone(), public: self.public.clone() }
    }

    pub fn secret_key(&self) -> &PermSecretKey {
        &self.sk
    }

    pub(crate) fn to_mutations(&self) -> Vec<Mutation> {
        let (p, q) = self.sk.primes();
        let mut out = self.public.to_mutations();
        out.extend([
            put_key(KEY_K_S, self.k_s.as_bytes().to_vec()),
            put_key(KEY_K_1, self.k_1.as_bytes().to_vec()),
            put_key(KEY_K_T, self.k_t.as_bytes().to_vec()),
            put_key(KEY_K_2, self.k_2.as_bytes().to_vec()),
            put_key(KEY_SK_P, p.to_bytes_be()),
            put_key(KEY_SK_Q, q.to_bytes_be()),
        ]);
        out
    }

    pub(crate) fn load(store: &impl KvStore) -> Result<Self, ProtocolError> {
        let public = PublicParams::load(store)?;
        let sk = PermSecretKey::from_primes(
            BigUint::from_bytes_be(read_key(store, KEY_SK_P)?),
            BigUint::from_bytes_be(read_key(store, KEY_SK_Q)?),
            public.pk.exponent().clone(),
        )?;
        if sk.public() != &public.pk {
            return Err(CryptoError::InvalidKey("secret key does not match public key").into());
        }
        Ok(TrusteeKeys {
            k_s: fixed(store, KEY_K_S, PrfKey::from_slice)?,
            k_1: fixed(store, KEY_K_1, PrfKey::from_slice)?,
            k_t: fixed(store, KEY_K_T, ScalarPrfKey::from_slice)?,
            k_2: fixed(store, KEY_K_2, ScalarPrfKey::from_slice)?,
            sk,
            public,
        })
    }
}

impl<G: PrimeOrderGroup> VetterKeys<G> {
    pub fn public(&self) -> &PublicParams<G> {
        &self.public
    }

    pub(crate) fn to_mutations(&self) -> Vec<Mutation> {
        let mut out = self.public.to_mutations();
        out.push(put_key(KEY_K_S, self.k_s.as_bytes().to_vec()));
        out.push(put_key(KEY_K_T, self.k_t.as_bytes().to_vec()));
        out
    }

    pub(crate) fn load(store: &impl KvStore) -> Result<Self, ProtocolError> {
        Ok(VetterKeys {
            k_s: fixed(store, KEY_K_S, PrfKey::from_slice)?,
            k_t: fixed(store, KEY_K_T, ScalarPrfKey::from_slice)?,
            public: PublicParams::load(store)?,
        })
    }
}

impl<G: PrimeOrderGroup> PublicParams<G> {
    pub(crate) fn to_mutations(&self) -> Vec<Mutation> {
        vec![
            put_key(KEY_GROUP, self.group.params_bytes()),
            put_key(KEY_PK_N, self.pk.modulus().to_bytes_be()),
            put_key(KEY_PK_E, self.pk.exponent().to_bytes_be()),
            put_key(KEY_K_H, self.k_h.as_bytes().to_vec()),
        ]
    }

    pub fn save(&self, store: &mut impl KvStore) -> Result<(), ProtocolError> {
        store.apply_atomic(&self.to_mutations())?;
        Ok(())
    }

    pub fn load(store: &impl KvStore) -> Result<Self, ProtocolError> {
        let group = G::from_params_bytes(read_key(store, KEY_GROUP)?)
            .ok_or(CryptoError::Encoding("group parameters"))?;
        let pk = PermPublicKey::new(
            BigUint::from_bytes_be(read_key(store, KEY_PK_N)?),
            BigUint::from_bytes_be(read_key(store, KEY_PK_E)?),
        )?;
        Ok(PublicParams { group, pk, k_h: fixed(store, KEY_K_H, HashKey::from_slice)? })
    }
}

const KEY_GROUP: &[u8] = b"group";
const KEY_PK_N: &[u8] = b"pk_n";
const KEY_PK_E: &[u8] = b"pk_e";
const KEY_K_H: &[u8] = b"k_h";
const KEY_K_S: &[u8] = b"k_s";
const KEY_K_1: &[u8] = b"k_1";
const KEY_K_T: &[u8] = b"k_t";
const KEY_K_2: &[u8] = b"k_2";
const KEY_SK_P: &[u8] = b"sk_p";
const KEY_SK_Q: &[u8] = b"sk_q";

pub(crate) fn put_key(name: &[u8], bytes: Vec<u8>) -> Mutation {
    Mutation::Put { ns: Namespace::Keys, key: name.to_vec(), value: Value::Bytes(bytes) }
}

pub(crate) fn read_key<'a>(store: &'a impl KvStore, name: &'static [u8]) -> Result<&'a [u8], ProtocolError> {
    store
        .get(Namespace::Keys, name)
        .and_then(Value::as_bytes)
        .ok_or(ProtocolError::MissingState(std::str::from_utf8(name).unwrap_or("key")))
}

fn fixed<T>(store: &impl KvStore, name: &'static [u8], parse: fn(&[u8]) -> Option<T>) -> Result<T, ProtocolError> {
    parse(read_key(store, name)?).ok_or_else(|| CryptoError::InvalidKey("stored key has the wrong length").into())
}
