//! Byte ↔ codon transcoding through a seeded 64-entry substitution box.
//!
//! Plaintext bits are read most-significant first in 6-bit chunks; each chunk
//! indexes the S-box and emits one codon (three bases). A trailing partial
//! chunk is zero-padded on the right, and the original bit length travels
//! with the sequence so decoding can drop the pad.

use std::fmt;
use std::str::FromStr;

use crate::crypto::{sha256, KeystreamSampler};
use crate::error::{Error, Result};

/// One RNA base. The discriminant is the canonical 2-bit ordinal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Nucleotide {
    A = 0,
    U = 1,
    C = 2,
    G = 3,
}

impl Nucleotide {
    pub const ALL: [Nucleotide; 4] = [Nucleotide::A, Nucleotide::U, Nucleotide::C, Nucleotide::G];

    #[inline]
    pub fn ordinal(self) -> u8 {
        self as u8
    }

    #[inline]
    pub fn from_ordinal(v: u8) -> Nucleotide {
        Self::ALL[(v & 3) as usize]
    }

    pub fn symbol(self) -> char {
        match self {
            Nucleotide::A => 'A',
            Nucleotide::U => 'U',
            Nucleotide::C => 'C',
            Nucleotide::G => 'G',
        }
    }

    pub fn from_symbol(c: char) -> Option<Nucleotide> {
        match c.to_ascii_uppercase() {
            'A' => Some(Nucleotide::A),
            'U' | 'T' => Some(Nucleotide::U),
            'C' => Some(Nucleotide::C),
            'G' => Some(Nucleotide::G),
            _ => None,
        }
    }
}

/// Three bases; `index()` is its rank in lexicographic order under A<U<C<G.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Codon(pub [Nucleotide; 3]);

impl Codon {
    pub fn from_index(i: u8) -> Codon {
        debug_assert!(i < 64);
        Codon([
            Nucleotide::from_ordinal(i >> 4),
            Nucleotide::from_ordinal(i >> 2),
            Nucleotide::from_ordinal(i),
        ])
    }

    #[inline]
    pub fn index(self) -> u8 {
        (self.0[0].ordinal() << 4) | (self.0[1].ordinal() << 2) | self.0[2].ordinal()
    }
}

impl fmt::Display for Codon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for n in self.0 {
            write!(f, "{}", n.symbol())?;
        }
        Ok(())
    }
}

/// Reserved seed selecting the canonical, unshuffled codon table.
pub const IDENTITY_SEED: [u8; 32] = [0u8; 32];

/// Seeded bijection between 6-bit values and codons.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodonSBox {
    forward: [Codon; 64],
    /// Indexed by `Codon::index()`, yields the 6-bit value.
    inverse: [u8; 64],
    seed_fingerprint: [u8; 32],
}

impl CodonSBox {
    /// Builds the table for `seed`: the canonical codon list permuted by a
    /// descending Fisher–Yates shuffle driven by [`KeystreamSampler`].
    pub fn build(seed: &[u8]) -> Result<Self> {
        if seed.is_empty() {
            return Err(Error::InvalidSeed("seed must be non-empty"));
        }
        let mut order: [u8; 64] = core::array::from_fn(|i| i as u8);
        if seed != IDENTITY_SEED {
            let mut rng = KeystreamSampler::from_seed(seed);
            for i in (1..64usize).rev() {
                let j = rng.below(i as u32 + 1) as usize;
                order.swap(i, j);
            }
        }
        let forward = order.map(Codon::from_index);
        let mut inverse = [0u8; 64];
        for (value, codon) in forward.iter().enumerate() {
            inverse[codon.index() as usize] = value as u8;
        }
        Ok(Self { forward, inverse, seed_fingerprint: sha256(seed) })
    }

    pub fn identity() -> Self {
        Self::build(&IDENTITY_SEED).expect("identity seed is non-empty")
    }

    #[inline]
    pub fn forward(&self, value: u8) -> Codon {
        self.forward[value as usize]
    }

    #[inline]
    pub fn inverse(&self, codon: Codon) -> u8 {
        self.inverse[codon.index() as usize]
    }

    pub fn table(&self) -> &[Codon; 64] {
        &self.forward
    }

    pub fn seed_fingerprint(&self) -> &[u8; 32] {
        &self.seed_fingerprint
    }
}

/// An ordered run of bases plus the number of plaintext bits it carries.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RnaSequence {
    pub bases: Vec<Nucleotide>,
    pub origin_bit_length: u64,
}

impl RnaSequence {
    /// A bare sequence whose payload is its own 2-bit base content.
    pub fn from_bases(bases: Vec<Nucleotide>) -> Self {
        let origin_bit_length = 2 * bases.len() as u64;
        Self { bases, origin_bit_length }
    }

    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }

    /// 2-bit packing, first base in the two high bits of the first byte.
    pub fn pack(&self) -> Vec<u8> {
        pack_bases(&self.bases)
    }
}

pub fn pack_bases(bases: &[Nucleotide]) -> Vec<u8> {
    let mut out = Vec::with_capacity(bases.len().div_ceil(4));
    let mut chunks = bases.chunks_exact(4);
    for c in &mut chunks {
        out.push((c[0].ordinal() << 6) | (c[1].ordinal() << 4) | (c[2].ordinal() << 2) | c[3].ordinal());
    }
    let rest = chunks.remainder();
    if !rest.is_empty() {
        let mut b = 0u8;
        for (i, n) in rest.iter().enumerate() {
            b |= n.ordinal() << (6 - 2 * i);
        }
        out.push(b);
    }
    out
}

pub fn unpack_bases(bytes: &[u8], count: usize) -> Vec<Nucleotide> {
    debug_assert!(bytes.len() * 4 >= count);
    let mut out = Vec::with_capacity(count);
    for &b in bytes {
        for shift in [6u8, 4, 2, 0] {
            if out.len() == count {
                return out;
            }
            out.push(Nucleotide::from_ordinal(b >> shift));
        }
    }
    out
}

impl fmt::Display for RnaSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.bases.iter().map(|n| n.symbol()).collect();
        f.write_str(&s)
    }
}

impl FromStr for RnaSequence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bases = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| {
                Nucleotide::from_symbol(c)
                    .ok_or_else(|| Error::MalformedSequence(format!("unknown base {c:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RnaSequence::from_bases(bases))
    }
}

/// Number of bases `encode` emits for `byte_len` bytes of plaintext.
pub fn encoded_len(byte_len: usize) -> usize {
    3 * (8 * byte_len).div_ceil(6)
}

pub fn encode(plaintext: &[u8], sbox: &CodonSBox) -> RnaSequence {
    let mut bases = Vec::with_capacity(encoded_len(plaintext.len()));
    let mut push = |v: u32| {
        bases.extend_from_slice(&sbox.forward((v & 0x3f) as u8).0);
    };
    let mut groups = plaintext.chunks_exact(3);
    for g in &mut groups {
        let w = (u32::from(g[0]) << 16) | (u32::from(g[1]) << 8) | u32::from(g[2]);
        push(w >> 18);
        push(w >> 12);
        push(w >> 6);
        push(w);
    }
    match *groups.remainder() {
        [a] => {
            let w = u32::from(a) << 16;
            push(w >> 18);
            push(w >> 12);
        }
        [a, b] => {
            let w = (u32::from(a) << 16) | (u32::from(b) << 8);
            push(w >> 18);
            push(w >> 12);
            push(w >> 6);
        }
        _ => {}
    }
    RnaSequence { bases, origin_bit_length: 8 * plaintext.len() as u64 }
}

pub fn decode(seq: &RnaSequence, sbox: &CodonSBox) -> Result<Vec<u8>> {
    if !seq.len().is_multiple_of(3) {
        return Err(Error::MalformedSequence(format!(
            "length {} is not a whole number of codons",
            seq.len()
        )));
    }
    let bits = seq.origin_bit_length;
    if !bits.is_multiple_of(8) || 3 * bits.div_ceil(6) != seq.len() as u64 {
        return Err(Error::MalformedSequence(format!(
            "origin bit length {bits} inconsistent with {} bases",
            seq.len()
        )));
    }
    let byte_len = (bits / 8) as usize;
    let mut out = Vec::with_capacity(byte_len + 3);
    let values = seq
        .bases
        .chunks_exact(3)
        .map(|c| u32::from(sbox.inverse(Codon([c[0], c[1], c[2]]))));
    let mut acc = 0u32;
    let mut nbits = 0u32;
    for v in values {
        acc = (acc << 6) | v;
        nbits += 6;
        if nbits >= 8 {
            nbits -= 8;
            out.push((acc >> nbits) as u8);
            acc &= (1 << nbits) - 1;
        }
    }
    out.truncate(byte_len);
    Ok(out)
}
