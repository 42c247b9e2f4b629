//! Symmetric kernels: ChaCha20, HMAC/PBKDF2 over SHA-256, and a seeded
//! keystream sampler used for every deterministic shuffle in the crate.

pub mod chacha20;
pub mod pbkdf2;

use sha2::{Digest, Sha256};

pub fn sha256(data: &[u8]) -> [u8; 32] {
    Sha256::digest(data).into()
}

/// Uniform integer sampler over the ChaCha20 keystream keyed by
/// SHA-256(seed) with an all-zero nonce, counter starting at 0.
///
/// Words are consumed as little-endian `u32`s in keystream order.
/// [`KeystreamSampler::below`] rejects draws in the biased tail so every
/// residue is equally likely.
pub struct KeystreamSampler {
    cipher: chacha20::ChaCha20,
    buf: [u8; chacha20::BLOCK_LEN],
    pos: usize,
}

impl KeystreamSampler {
    pub fn from_seed(seed: &[u8]) -> Self {
        Self::from_key(&sha256(seed))
    }

    pub fn from_key(key: &[u8; 32]) -> Self {
        Self {
            cipher: chacha20::ChaCha20::new(key, &[0u8; chacha20::NONCE_LEN], 0),
            buf: [0u8; chacha20::BLOCK_LEN],
            pos: chacha20::BLOCK_LEN,
        }
    }

    pub fn next_u32(&mut self) -> u32 {
        if self.pos == chacha20::BLOCK_LEN {
            self.cipher.fill(&mut self.buf);
            self.pos = 0;
        }
        let w = u32::from_le_bytes(self.buf[self.pos..self.pos + 4].try_into().unwrap());
        self.pos += 4;
        w
    }

    /// Uniform value in `0..bound`. `bound` must be non-zero.
    pub fn below(&mut self, bound: u32) -> u32 {
        assert!(bound > 0);
        // Largest multiple of `bound` that fits in 2^32.
        let zone = u32::MAX - (u32::MAX - bound + 1) % bound;
        loop {
            let r = self.next_u32();
            if r <= zone {
                return r % bound;
            }
        }
    }
}
