//! Randomized authenticated encryption of identifiers (AES-128-GCM).
//!
//! Ciphertext layout: `nonce (12) || body || tag (16)`.

use aes_gcm::aead::{Aead, KeyInit};
use aes_gcm::{Aes128Gcm, Nonce};
use rand::{CryptoRng, RngCore};

use super::counters::{self, Op};
use super::prf::CipherKey;
use super::CryptoError;

pub const NONCE_LEN: usize = 12;
pub const TAG_LEN: usize = 16;
/// Bytes a ciphertext adds on top of its plaintext.
pub const CIPHERTEXT_OVERHEAD: usize = NONCE_LEN + TAG_LEN;

pub fn se_encrypt<R: RngCore + CryptoRng>(key: &CipherKey, plaintext: &[u8], rng: &mut R) -> Vec<u8> {
    counters::bump(Op::Encrypt);
    let cipher = Aes128Gcm::new_from_slice(key.as_bytes()).expect("16-byte key");
    let mut nonce = [0u8; NONCE_LEN];
    rng.fill_bytes(&mut nonce);
    let body = cipher
        .encrypt(Nonce::from_slice(&nonce), plaintext)
        .expect("AES-GCM encryption of a short message cannot fail");
    let mut out = Vec::with_capacity(NONCE_LEN + body.len());
    out.extend_from_slice(&nonce);
    out.extend_from_slice(&body);
    out
}

pub fn se_decrypt(key: &CipherKey, ciphertext: &[u8]) -> Result<Vec<u8>, CryptoError> {
    counters::bump(Op::Decrypt);
    if ciphertext.len() < CIPHERTEXT_OVERHEAD {
        return Err(CryptoError::Integrity);
    }
    let cipher = Aes128Gcm::new_from_slice(key.as_bytes()).expect("16-byte key");
    let (nonce, body) = ciphertext.split_at(NONCE_LEN);
    cipher
        .decrypt(Nonce::from_slice(nonce), body)
        .map_err(|_| CryptoError::Integrity)
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    use super::*;

    #[test]
    fn roundtrip_and_randomized() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let k = CipherKey::generate(&mut rng);
        let c1 = se_encrypt(&k, b"ID42", &mut rng);
        let c2 = se_encrypt(&k, b"ID42", &mut rng);
        assert_ne!(c1, c2);
        assert_eq!(c1.len(), 4 + CIPHERTEXT_OVERHEAD);
        assert_eq!(se_decrypt(&k, &c1).unwrap(), b"ID42");
        assert_eq!(se_decrypt(&k, &c2).unwrap(), b"ID42");
    }

    #[test]
    fn wrong_key_and_tampering_are_detected() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let k = CipherKey::generate(&mut rng);
        let other = CipherKey::generate(&mut rng);
        let c = se_encrypt(&k, b"ID42", &mut rng);
        assert_eq!(se_decrypt(&other, &c), Err(CryptoError::Integrity));
        for i in 0..c.len() {
            let mut bad = c.clone();
            bad[i] ^= 0x01;
            assert_eq!(se_decrypt(&k, &bad), Err(CryptoError::Integrity), "byte {i}");
        }
        assert_eq!(se_decrypt(&k, &c[..10]), Err(CryptoError::Integrity));
    }
}
