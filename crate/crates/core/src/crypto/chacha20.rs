//! ChaCha20 stream cipher with a 96-bit nonce and 32-bit block counter
//! (the IETF variant).
//!
//! The quarter-round schedule is data independent: no branch or memory
//! index depends on key, nonce or message bytes.

pub const KEY_LEN: usize = 32;
pub const NONCE_LEN: usize = 12;
pub const BLOCK_LEN: usize = 64;

const SIGMA: [u32; 4] = [0x6170_7865, 0x3320_646e, 0x7962_2d32, 0x6b20_6574];

#[inline(always)]
fn quarter_round(s: &mut [u32; 16], a: usize, b: usize, c: usize, d: usize) {
    s[a] = s[a].wrapping_add(s[b]);
    s[d] = (s[d] ^ s[a]).rotate_left(16);
    s[c] = s[c].wrapping_add(s[d]);
    s[b] = (s[b] ^ s[c]).rotate_left(12);
    s[a] = s[a].wrapping_add(s[b]);
    s[d] = (s[d] ^ s[a]).rotate_left(8);
    s[c] = s[c].wrapping_add(s[d]);
    s[b] = (s[b] ^ s[c]).rotate_left(7);
}

fn initial_state(key: &[u8; KEY_LEN], nonce: &[u8; NONCE_LEN], counter: u32) -> [u32; 16] {
    let mut s = [0u32; 16];
    s[..4].copy_from_slice(&SIGMA);
    for (i, chunk) in key.chunks_exact(4).enumerate() {
        s[4 + i] = u32::from_le_bytes(chunk.try_into().unwrap());
    }
    s[12] = counter;
    for (i, chunk) in nonce.chunks_exact(4).enumerate() {
        s[13 + i] = u32::from_le_bytes(chunk.try_into().unwrap());
    }
    s
}

#[inline]
fn permute(input: &[u32; 16]) -> [u32; 16] {
    let mut x = *input;
    for _ in 0..10 {
        quarter_round(&mut x, 0, 4, 8, 12);
        quarter_round(&mut x, 1, 5, 9, 13);
        quarter_round(&mut x, 2, 6, 10, 14);
        quarter_round(&mut x, 3, 7, 11, 15);
        quarter_round(&mut x, 0, 5, 10, 15);
        quarter_round(&mut x, 1, 6, 11, 12);
        quarter_round(&mut x, 2, 7, 8, 13);
        quarter_round(&mut x, 3, 4, 9, 14);
    }
    for (o, i) in x.iter_mut().zip(input.iter()) {
        *o = o.wrapping_add(*i);
    }
    x
}

/// The ChaCha20 block function: one 64-byte keystream block.
pub fn block(key: &[u8; KEY_LEN], nonce: &[u8; NONCE_LEN], counter: u32) -> [u8; BLOCK_LEN] {
    let words = permute(&initial_state(key, nonce, counter));
    let mut out = [0u8; BLOCK_LEN];
    for (chunk, w) in out.chunks_exact_mut(4).zip(words.iter()) {
        chunk.copy_from_slice(&w.to_le_bytes());
    }
    out
}

/// Stateful ChaCha20 keystream positioned at a block boundary.
#[derive(Clone)]
pub struct ChaCha20 {
    state: [u32; 16],
}

impl ChaCha20 {
    pub fn new(key: &[u8; KEY_LEN], nonce: &[u8; NONCE_LEN], counter: u32) -> Self {
        Self { state: initial_state(key, nonce, counter) }
    }

    fn next_block(&mut self) -> [u32; 16] {
        let out = permute(&self.state);
        // Counter overflow would repeat keystream; 2^32 blocks = 256 GiB per nonce.
        self.state[12] = self.state[12].checked_add(1).expect("ChaCha20 block counter exhausted");
        out
    }

    /// XORs the keystream into `data`, advancing by whole blocks.
    pub fn apply_keystream(&mut self, data: &mut [u8]) {
        let mut chunks = data.chunks_exact_mut(BLOCK_LEN);
        for chunk in &mut chunks {
            let ks = self.next_block();
            for (bytes, w) in chunk.chunks_exact_mut(4).zip(ks.iter()) {
                let v = u32::from_le_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]) ^ w;
                bytes.copy_from_slice(&v.to_le_bytes());
            }
        }
        let tail = chunks.into_remainder();
        if !tail.is_empty() {
            let ks = self.next_block();
            let mut buf = [0u8; BLOCK_LEN];
            for (c, w) in buf.chunks_exact_mut(4).zip(ks.iter()) {
                c.copy_from_slice(&w.to_le_bytes());
            }
            for (b, k) in tail.iter_mut().zip(buf.iter()) {
                *b ^= k;
            }
        }
    }

    /// Fills `out` with raw keystream bytes.
    pub fn fill(&mut self, out: &mut [u8]) {
        out.fill(0);
        self.apply_keystream(out);
    }
}

/// One-shot encryption/decryption.
pub fn xor_in_place(key: &[u8; KEY_LEN], nonce: &[u8; NONCE_LEN], counter: u32, data: &mut [u8]) {
    ChaCha20::new(key, nonce, counter).apply_keystream(data);
}
