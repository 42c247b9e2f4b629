//! HMAC-SHA256 and PBKDF2-HMAC-SHA256.

use sha2::{Digest, Sha256};

const BLOCK: usize = 64;
pub const OUTPUT_LEN: usize = 32;

/// HMAC-SHA256 with the pad states absorbed once, so repeated MACs under the
/// same key cost two compressions each for short messages.
#[derive(Clone)]
pub struct HmacSha256 {
    inner: Sha256,
    outer: Sha256,
}

impl HmacSha256 {
    pub fn new(key: &[u8]) -> Self {
        let mut k = [0u8; BLOCK];
        if key.len() > BLOCK {
            k[..OUTPUT_LEN].copy_from_slice(&Sha256::digest(key));
        } else {
            k[..key.len()].copy_from_slice(key);
        }
        let mut ipad = [0x36u8; BLOCK];
        let mut opad = [0x5cu8; BLOCK];
        for i in 0..BLOCK {
            ipad[i] ^= k[i];
            opad[i] ^= k[i];
        }
        let mut inner = Sha256::new();
        inner.update(ipad);
        let mut outer = Sha256::new();
        outer.update(opad);
        Self { inner, outer }
    }

    pub fn mac(&self, parts: &[&[u8]]) -> [u8; OUTPUT_LEN] {
        let mut inner = self.inner.clone();
        for p in parts {
            inner.update(p);
        }
        let mut outer = self.outer.clone();
        outer.update(inner.finalize());
        outer.finalize().into()
    }
}

pub fn hmac_sha256(key: &[u8], message: &[u8]) -> [u8; OUTPUT_LEN] {
    HmacSha256::new(key).mac(&[message])
}

/// PBKDF2 with HMAC-SHA256 as the PRF. `iterations` must be at least 1.
pub fn pbkdf2_hmac_sha256(password: &[u8], salt: &[u8], iterations: u32, out: &mut [u8]) {
    assert!(iterations >= 1, "PBKDF2 needs at least one iteration");
    let prf = HmacSha256::new(password);
    for (block_index, chunk) in out.chunks_mut(OUTPUT_LEN).enumerate() {
        let counter = (block_index as u32 + 1).to_be_bytes();
        let mut u = prf.mac(&[salt, &counter]);
        let mut t = u;
        for _ in 1..iterations {
            u = prf.mac(&[&u]);
            for (a, b) in t.iter_mut().zip(u.iter()) {
                *a ^= b;
            }
        }
        chunk.copy_from_slice(&t[..chunk.len()]);
    }
}
