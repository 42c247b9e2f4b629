//! Structural permutation box.
//!
//! A structure's pair table splits positions into stems (paired) and loops
//! (unpaired). The permutation is the stable partition that lists every stem
//! position in ascending order, followed by every loop position.

use crate::codon::RnaSequence;
use crate::crypto::KeystreamSampler;
use crate::error::{Error, Result};
use crate::fold::SecondaryStructure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Stem,
    Loop,
}

impl Label {
    pub fn flipped(self) -> Label {
        match self {
            Label::Stem => Label::Loop,
            Label::Loop => Label::Stem,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuralLabels(pub Vec<Label>);

impl StructuralLabels {
    pub fn from_structure(s: &SecondaryStructure) -> Self {
        Self(s.pair_table.iter().map(|p| if p.is_some() { Label::Stem } else { Label::Loop }).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `map[k]` is the source index placed at output position `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    map: Vec<u32>,
}

impl Permutation {
    /// Validates that `map` is a bijection on `0..map.len()`.
    pub fn new(map: Vec<u32>) -> Result<Self> {
        let n = map.len();
        let mut seen = vec![false; n];
        for &m in &map {
            let m = m as usize;
            if m >= n || seen[m] {
                return Err(Error::MalformedPayload(format!("index {m} breaks the permutation of length {n}")));
            }
            seen[m] = true;
        }
        Ok(Self { map })
    }

    pub fn identity(n: usize) -> Self {
        Self { map: (0..n as u32).collect() }
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.map
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

pub fn permutation_from_labels(labels: &StructuralLabels) -> Permutation {
    let stems = labels.0.iter().enumerate().filter(|(_, l)| **l == Label::Stem);
    let loops = labels.0.iter().enumerate().filter(|(_, l)| **l == Label::Loop);
    Permutation { map: stems.chain(loops).map(|(i, _)| i as u32).collect() }
}

pub fn derive_permutation(structure: &SecondaryStructure) -> Permutation {
    permutation_from_labels(&StructuralLabels::from_structure(structure))
}

/// `output[k] = input[map[k]]`; the origin bit length is carried over.
pub fn apply(seq: &RnaSequence, p: &Permutation) -> Result<RnaSequence> {
    if seq.len() != p.len() {
        return Err(Error::LengthMismatch { expected: p.len(), actual: seq.len() });
    }
    Ok(RnaSequence {
        bases: p.map.iter().map(|&m| seq.bases[m as usize]).collect(),
        origin_bit_length: seq.origin_bit_length,
    })
}

pub fn invert(p: &Permutation) -> Permutation {
    let mut inv = vec![0u32; p.len()];
    for (k, &m) in p.map.iter().enumerate() {
        inv[m as usize] = k as u32;
    }
    Permutation { map: inv }
}

/// Flips exactly `k` distinct labels. Positions are the first `k` slots of a
/// partial Fisher–Yates shuffle of `0..n` driven by the keystream of
/// `noise_seed`.
pub fn perturb_labels(labels: &StructuralLabels, k: usize, noise_seed: &[u8]) -> Result<StructuralLabels> {
    let n = labels.len();
    if k > n {
        return Err(Error::InvalidPerturbation { k, n });
    }
    let mut idx: Vec<u32> = (0..n as u32).collect();
    let mut rng = KeystreamSampler::from_seed(noise_seed);
    for i in 0..k {
        let j = i + rng.below((n - i) as u32) as usize;
        idx.swap(i, j);
    }
    let mut out = labels.clone();
    for &i in &idx[..k] {
        out.0[i as usize] = out.0[i as usize].flipped();
    }
    Ok(out)
}

/// Fraction of output positions whose source index differs between `p` and `q`.
pub fn remap_fraction(p: &Permutation, q: &Permutation) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch { expected: p.len(), actual: q.len() });
    }
    if p.is_empty() {
        return Ok(0.0);
    }
    let moved = p.map.iter().zip(&q.map).filter(|(a, b)| a != b).count();
    Ok(moved as f64 / p.len() as f64)
}
