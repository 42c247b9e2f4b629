//! Throughput and avalanche measurements with CSV/JSON reporting.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::{Duration, Instant};

use aes::cipher::block_padding::Pkcs7;
use aes::cipher::{BlockDecryptMut, BlockEncryptMut, KeyIvInit};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rsa::{Oaep, RsaPrivateKey, RsaPublicKey};
use serde::{Deserialize, Serialize};
use sha2::Sha256;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::codon::{pack_bases, Nucleotide, RnaSequence};
use crate::envelope::{self, Envelope, NONCE_LEN};
use crate::error::{Error, Result};
use crate::fold::{fold, EnergyModel};
use crate::keyforge::SALT_LEN;
use crate::pbox::{apply, perturb_labels, permutation_from_labels, remap_fraction, StructuralLabels};
use crate::sts::shannon_entropy;

pub const MIN_AVALANCHE_SAMPLES: usize = 30;
pub const DEFAULT_SIZES: [usize; 5] = [50, 1_000, 10_000, 100_000, 1_048_576];
pub const RSA_BITS: usize = 2048;
/// OAEP-SHA256 plaintext limit for a 2048-bit modulus: 256 − 2·32 − 2.
pub const RSA_CHUNK: usize = RSA_BITS / 8 - 2 * 32 - 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "NCRNA")]
    Ncrna,
    #[serde(rename = "AES256_CBC")]
    Aes256Cbc,
    #[serde(rename = "RSA2048_OAEP")]
    Rsa2048Oaep,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Ncrna, Algorithm::Aes256Cbc, Algorithm::Rsa2048Oaep];
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Ncrna => "NCRNA",
            Algorithm::Aes256Cbc => "AES256_CBC",
            Algorithm::Rsa2048Oaep => "RSA2048_OAEP",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "NCRNA" => Ok(Algorithm::Ncrna),
            "AES" | "AES256_CBC" => Ok(Algorithm::Aes256Cbc),
            "RSA" | "RSA2048_OAEP" => Ok(Algorithm::Rsa2048Oaep),
            _ => Err(Error::InvalidArgument(format!("unknown algorithm {s}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Op {
    Encrypt,
    Decrypt,
}

/// Uniform interface over the cipher under test and the baselines.
pub trait Cipher {
    fn algorithm(&self) -> Algorithm;
    fn encrypt(&mut self, plaintext: &[u8]) -> Result<Vec<u8>>;
    fn decrypt(&mut self, ciphertext: &[u8]) -> Result<Vec<u8>>;
}

pub struct NcrnaCipher {
    secret: Vec<u8>,
    seed: Vec<u8>,
    rng: ChaCha20Rng,
}

impl NcrnaCipher {
    pub fn new(secret: &[u8], seed: &[u8], rng_seed: u64) -> Self {
        Self { secret: secret.to_vec(), seed: seed.to_vec(), rng: ChaCha20Rng::seed_from_u64(rng_seed) }
    }
}

impl Cipher for NcrnaCipher {
    fn algorithm(&self) -> Algorithm {
        Algorithm::Ncrna
    }

    fn encrypt(&mut self, plaintext: &[u8]) -> Result<Vec<u8>> {
        Ok(envelope::encrypt(plaintext, &self.secret, &self.seed, &mut self.rng)?.serialize())
    }

    fn decrypt(&mut self, ciphertext: &[u8]) -> Result<Vec<u8>> {
        envelope::decrypt(&Envelope::parse(ciphertext)?, &self.secret, &self.seed)
    }
}

/// AES-256-CBC with PKCS#7 padding; output is `iv ∥ ciphertext`.
pub struct AesCbcCipher {
    key: [u8; 32],
    rng: ChaCha20Rng,
}

impl AesCbcCipher {
    pub fn new(rng_seed: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(rng_seed);
        let key = rng.gen();
        Self { key, rng }
    }
}

type Aes256CbcEnc = cbc::Encryptor<aes::Aes256>;
type Aes256CbcDec = cbc::Decryptor<aes::Aes256>;

impl Cipher for AesCbcCipher {
    fn algorithm(&self) -> Algorithm {
        Algorithm::Aes256Cbc
    }

    fn encrypt(&mut self, plaintext: &[u8]) -> Result<Vec<u8>> {
        let iv: [u8; 16] = self.rng.gen();
        let mut out = iv.to_vec();
        out.extend(Aes256CbcEnc::new(&self.key.into(), &iv.into()).encrypt_padded_vec_mut::<Pkcs7>(plaintext));
        Ok(out)
    }

    fn decrypt(&mut self, ciphertext: &[u8]) -> Result<Vec<u8>> {
        if ciphertext.len() < 16 {
            return Err(Error::MalformedPayload("missing IV".into()));
        }
        let (iv, body) = ciphertext.split_at(16);
        let iv: [u8; 16] = iv.try_into().unwrap();
        Aes256CbcDec::new(&self.key.into(), &iv.into())
            .decrypt_padded_vec_mut::<Pkcs7>(body)
            .map_err(|_| Error::IntegrityFailure)
    }
}

/// RSA-2048 with OAEP-SHA256, applied to consecutive [`RSA_CHUNK`]-byte
/// chunks; the output is the concatenation of 256-byte blocks.
pub struct RsaOaepCipher {
    private: RsaPrivateKey,
    public: RsaPublicKey,
    rng: ChaCha20Rng,
}

impl RsaOaepCipher {
    pub fn new(rng_seed: u64) -> Result<Self> {
        let mut rng = ChaCha20Rng::seed_from_u64(rng_seed);
        let private = RsaPrivateKey::new(&mut rng, RSA_BITS).map_err(|e| Error::BaselineUnavailable(e.to_string()))?;
        let public = private.to_public_key();
        Ok(Self { private, public, rng })
    }
}

impl Cipher for RsaOaepCipher {
    fn algorithm(&self) -> Algorithm {
        Algorithm::Rsa2048Oaep
    }

    fn encrypt(&mut self, plaintext: &[u8]) -> Result<Vec<u8>> {
        let mut out = Vec::with_capacity(plaintext.len().div_ceil(RSA_CHUNK).max(1) * RSA_BITS / 8);
        // An empty message still produces one block.
        let chunks: Vec<&[u8]> = if plaintext.is_empty() { vec![&[]] } else { plaintext.chunks(RSA_CHUNK).collect() };
        for chunk in chunks {
            let block = self
                .public
                .encrypt(&mut self.rng, Oaep::new::<Sha256>(), chunk)
                .map_err(|e| Error::InvalidArgument(e.to_string()))?;
            out.extend(block);
        }
        Ok(out)
    }

    fn decrypt(&mut self, ciphertext: &[u8]) -> Result<Vec<u8>> {
        let block = RSA_BITS / 8;
        if ciphertext.is_empty() || !ciphertext.len().is_multiple_of(block) {
            return Err(Error::MalformedPayload("ciphertext is not a whole number of RSA blocks".into()));
        }
        let mut out = Vec::with_capacity(ciphertext.len() / block * RSA_CHUNK);
        for c in ciphertext.chunks(block) {
            out.extend(self.private.decrypt(Oaep::new::<Sha256>(), c).map_err(|_| Error::IntegrityFailure)?);
        }
        Ok(out)
    }
}

/// Builds the adapter for `algorithm`, seeding all its randomness from `seed`.
pub fn make_cipher(algorithm: Algorithm, seed: u64) -> Result<Box<dyn Cipher>> {
    Ok(match algorithm {
        Algorithm::Ncrna => Box::new(NcrnaCipher::new(b"benchmark secret", b"benchmark codon seed", seed)),
        Algorithm::Aes256Cbc => Box::new(AesCbcCipher::new(seed)),
        Algorithm::Rsa2048Oaep => Box::new(RsaOaepCipher::new(seed)?),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchMatrix {
    pub sizes: Vec<usize>,
    pub algorithms: Vec<Algorithm>,
    pub trials: usize,
    pub warmup: usize,
    pub seed: u64,
}

impl Default for BenchMatrix {
    fn default() -> Self {
        Self { sizes: DEFAULT_SIZES.to_vec(), algorithms: Algorithm::ALL.to_vec(), trials: 5, warmup: 1, seed: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub algorithm: Algorithm,
    pub size_bytes: usize,
    pub op: Op,
    pub mean_seconds: f64,
    pub throughput_kib_s: f64,
    pub trials: usize,
    /// Fraction of trials whose decryption reproduced the plaintext.
    pub success_rate: f64,
    /// Shannon entropy of the last ciphertext (encrypt rows only).
    pub entropy_bits_per_byte: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BenchOutcome {
    pub records: Vec<BenchRecord>,
    /// Baselines that could not be constructed, with the reason.
    pub unavailable: Vec<(Algorithm, String)>,
}

/// Deterministic plaintext for one size.
pub fn corpus(seed: u64, size: usize) -> Vec<u8> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed ^ (size as u64).rotate_left(32));
    let mut v = vec![0u8; size];
    rng.fill_bytes(&mut v);
    v
}

fn mean_secs(total: Duration, trials: usize) -> f64 {
    total.as_secs_f64() / trials as f64
}

fn throughput(size: usize, mean_seconds: f64) -> f64 {
    size as f64 / (1024.0 * mean_seconds)
}

/// Times one size on one cipher. Warm-up rounds are run but not timed.
pub fn bench_cell(cipher: &mut dyn Cipher, size: usize, trials: usize, warmup: usize, seed: u64) -> Result<[BenchRecord; 2]> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let plaintext = corpus(seed, size);
    for _ in 0..warmup {
        let ct = cipher.encrypt(&plaintext)?;
        cipher.decrypt(&ct)?;
    }
    let (mut enc, mut dec) = (Duration::ZERO, Duration::ZERO);
    let mut ok = 0;
    let mut last = Vec::new();
    for _ in 0..trials {
        let t = Instant::now();
        let ct = cipher.encrypt(&plaintext)?;
        enc += t.elapsed();
        let t = Instant::now();
        let back = cipher.decrypt(&ct);
        dec += t.elapsed();
        ok += usize::from(matches!(back, Ok(ref b) if *b == plaintext));
        last = ct;
    }
    let success_rate = ok as f64 / trials as f64;
    let record = |op, total| {
        let mean_seconds = mean_secs(total, trials);
        BenchRecord {
            algorithm: cipher.algorithm(),
            size_bytes: size,
            op,
            mean_seconds,
            throughput_kib_s: throughput(size, mean_seconds),
            trials,
            success_rate,
            entropy_bits_per_byte: None,
        }
    };
    let mut e = record(Op::Encrypt, enc);
    e.entropy_bits_per_byte = shannon_entropy(&last).ok();
    Ok([e, record(Op::Decrypt, dec)])
}

/// Runs every (algorithm, size) cell in order. A baseline that cannot be
/// built is reported in `unavailable` and the remaining cells still run.
pub fn bench(matrix: &BenchMatrix) -> Result<BenchOutcome> {
    let mut out = BenchOutcome::default();
    for &alg in &matrix.algorithms {
        let mut cipher = match make_cipher(alg, matrix.seed) {
            Ok(c) => c,
            Err(Error::BaselineUnavailable(why)) if alg != Algorithm::Ncrna => {
                out.unavailable.push((alg, why));
                continue;
            }
            Err(e) => return Err(e),
        };
        for &size in &matrix.sizes {
            out.records.extend(bench_cell(cipher.as_mut(), size, matrix.trials, matrix.warmup, matrix.seed)?);
        }
    }
    Ok(out)
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::SizeMismatch { expected: a.len().max(2), actual: b.len() });
    }
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            for &k in &idx[i..=j] {
                r[k] = (i + j) as f64 / 2.0 + 1.0;
            }
            i = j + 1;
        }
        r
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    Ok(cov / (va * vb).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum AvalancheMode {
    PlaintextBitFlip,
    SeedFlip,
    LabelPerturb(usize),
}

impl fmt::Display for AvalancheMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AvalancheMode::PlaintextBitFlip => f.write_str("PLAINTEXT_BIT_FLIP"),
            AvalancheMode::SeedFlip => f.write_str("SEED_FLIP"),
            AvalancheMode::LabelPerturb(k) => write!(f, "LABEL_PERTURB({k})"),
        }
    }
}

impl FromStr for AvalancheMode {
    type Err = Error;

    /// `PLAINTEXT_BIT_FLIP`, `SEED_FLIP`, `LABEL_PERTURB(k)`, or the
    /// lowercase forms `plaintext`, `seed`, `label:k`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("unknown avalanche mode {s}"));
        let u = s.trim().to_ascii_uppercase();
        match u.as_str() {
            "PLAINTEXT_BIT_FLIP" | "PLAINTEXT" => return Ok(AvalancheMode::PlaintextBitFlip),
            "SEED_FLIP" | "SEED" => return Ok(AvalancheMode::SeedFlip),
            _ => {}
        }
        let k = u
            .strip_prefix("LABEL_PERTURB(")
            .and_then(|r| r.strip_suffix(')'))
            .or_else(|| u.strip_prefix("LABEL:"))
            .ok_or_else(bad)?;
        k.parse().map(AvalancheMode::LabelPerturb).map_err(|_| bad())
    }
}

impl From<AvalancheMode> for String {
    fn from(m: AvalancheMode) -> String {
        m.to_string()
    }
}

impl TryFrom<String> for AvalancheMode {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AvalancheRecord {
    pub mode: AvalancheMode,
    pub samples: usize,
    pub sequence_length: usize,
    pub hamming_mean: f64,
    /// 99% normal-approximation half-width.
    pub hamming_half_width: f64,
    pub remap_mean: Option<f64>,
    pub remap_half_width: Option<f64>,
}

/// Mean and 99% half-width `z_{0.995}·s/√n`.
pub fn mean_ci99(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let z = Normal::standard().inverse_cdf(0.995);
    (mean, z * (var / n).sqrt())
}

pub fn hamming_ratio(a: &[u8], b: &[u8]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { expected: a.len(), actual: b.len() });
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    let d: u32 = a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones()).sum();
    Ok(f64::from(d) / (8 * a.len()) as f64)
}

const AVALANCHE_SECRET: &[u8] = b"avalanche secret";

fn random_vec(rng: &mut ChaCha20Rng, n: usize) -> Vec<u8> {
    let mut v = vec![0u8; n];
    rng.fill_bytes(&mut v);
    v
}

/// One sample of `mode`: (Hamming ratio, remap fraction for label mode).
fn avalanche_sample(mode: AvalancheMode, len: usize, rng: &mut ChaCha20Rng) -> Result<(f64, Option<f64>)> {
    match mode {
        AvalancheMode::PlaintextBitFlip | AvalancheMode::SeedFlip => {
            let mut plaintext = random_vec(rng, len);
            let mut seed = random_vec(rng, 32);
            let salt: [u8; SALT_LEN] = rng.gen();
            let nonce: [u8; NONCE_LEN] = rng.gen();
            let a = envelope::encrypt_with(&plaintext, AVALANCHE_SECRET, &seed, salt, nonce)?;
            let target = if mode == AvalancheMode::SeedFlip { &mut seed } else { &mut plaintext };
            if target.is_empty() {
                return Err(Error::InvalidArgument("nothing to flip in an empty input".into()));
            }
            let bit = rng.gen_range(0..target.len() * 8);
            target[bit / 8] ^= 0x80 >> (bit % 8);
            let b = envelope::encrypt_with(&plaintext, AVALANCHE_SECRET, &seed, salt, nonce)?;
            Ok((hamming_ratio(&a.ciphertext, &b.ciphertext)?, None))
        }
        AvalancheMode::LabelPerturb(k) => {
            let bases: Vec<Nucleotide> = (0..len).map(|_| Nucleotide::from_ordinal(rng.gen_range(0..4))).collect();
            let rna = RnaSequence::from_bases(bases);
            let labels = StructuralLabels::from_structure(&fold(&rna, &EnergyModel::default()));
            let noise: [u8; 16] = rng.gen();
            let perturbed = perturb_labels(&labels, k, &noise)?;
            let (p, q) = (permutation_from_labels(&labels), permutation_from_labels(&perturbed));
            let remap = remap_fraction(&p, &q)?;
            let h = hamming_ratio(&pack_bases(&apply(&rna, &p)?.bases), &pack_bases(&apply(&rna, &q)?.bases))?;
            Ok((h, Some(remap)))
        }
    }
}

/// Avalanche statistics over `samples` independent draws from `seed`.
///
/// `sequence_length` is the plaintext length in bytes for the flip modes
/// and the RNA length in bases for `LABEL_PERTURB`. The flip modes compare
/// ciphertext bodies produced under one fixed salt and nonce per sample.
pub fn avalanche(mode: AvalancheMode, samples: usize, sequence_length: usize, seed: u64) -> Result<AvalancheRecord> {
    if samples < MIN_AVALANCHE_SAMPLES {
        return Err(Error::InsufficientSamples { min: MIN_AVALANCHE_SAMPLES, actual: samples });
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut hamming = Vec::with_capacity(samples);
    let mut remap = Vec::new();
    for _ in 0..samples {
        let (h, r) = avalanche_sample(mode, sequence_length, &mut rng)?;
        hamming.push(h);
        remap.extend(r);
    }
    let (hamming_mean, hamming_half_width) = mean_ci99(&hamming);
    let remap_ci = (!remap.is_empty()).then(|| mean_ci99(&remap));
    Ok(AvalancheRecord {
        mode,
        samples,
        sequence_length,
        hamming_mean,
        hamming_half_width,
        remap_mean: remap_ci.map(|c| c.0),
        remap_half_width: remap_ci.map(|c| c.1),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::InvalidArgument(format!("unknown format {s}"))),
        }
    }
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Rounds to 6 significant digits.
pub fn sig6(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.5e}").parse().unwrap()
}

/// A row type with a fixed column order.
pub trait Row: Serialize {
    const COLUMNS: &'static [&'static str];
    /// A copy with every float at 6 significant digits.
    fn rounded(&self) -> Self;
}

impl Row for BenchRecord {
    const COLUMNS: &'static [&'static str] = &[
        "algorithm",
        "size_bytes",
        "op",
        "mean_seconds",
        "throughput_kib_s",
        "trials",
        "success_rate",
        "entropy_bits_per_byte",
    ];

    fn rounded(&self) -> Self {
        Self {
            mean_seconds: sig6(self.mean_seconds),
            throughput_kib_s: sig6(self.throughput_kib_s),
            success_rate: sig6(self.success_rate),
            entropy_bits_per_byte: self.entropy_bits_per_byte.map(sig6),
            ..self.clone()
        }
    }
}

impl Row for AvalancheRecord {
    const COLUMNS: &'static [&'static str] = &[
        "mode",
        "samples",
        "sequence_length",
        "hamming_mean",
        "hamming_half_width",
        "remap_mean",
        "remap_half_width",
    ];

    fn rounded(&self) -> Self {
        Self {
            hamming_mean: sig6(self.hamming_mean),
            hamming_half_width: sig6(self.hamming_half_width),
            remap_mean: self.remap_mean.map(sig6),
            remap_half_width: self.remap_half_width.map(sig6),
            ..self.clone()
        }
    }
}

pub fn write_rows<T: Row, W: Write>(records: &[T], format: Format, out: W) -> Result<()> {
    let rounded: Vec<T> = records.iter().map(Row::rounded).collect();
    match format {
        Format::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
            w.write_record(T::COLUMNS)?;
            for r in &rounded {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        Format::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, &rounded)?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

pub fn report<T: Row>(records: &[T], format: Format, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_rows(records, format, std::io::BufWriter::new(file))
}

pub fn to_string<T: Row>(records: &[T], format: Format) -> Result<String> {
    let mut buf = Vec::new();
    write_rows(records, format, &mut buf)?;
    Ok(String::from_utf8(buf).expect("reports are UTF-8"))
}

pub fn records_from_json<T: for<'de> Deserialize<'de>>(json: &str) -> Result<Vec<T>> {
    Ok(serde_json::from_str(json)?)
}

pub fn records_from_csv<T: for<'de> Deserialize<'de>>(csv_text: &str) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(csv_text.as_bytes());
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_bench() -> BenchRecord {
        BenchRecord {
            algorithm: Algorithm::Aes256Cbc,
            size_bytes: 1000,
            op: Op::Encrypt,
            mean_seconds: 1.234_567_89e-5,
            throughput_kib_s: 79_104.123_456,
            trials: 3,
            success_rate: 1.0,
            entropy_bits_per_byte: Some(7.812_345_67),
        }
    }

    #[test]
    fn significant_digits() {
        assert_eq!(sig6(1.234_567_89e-5), 1.23457e-5);
        assert_eq!(sig6(79_104.123_456), 79_104.1);
        assert_eq!(sig6(0.0), 0.0);
        assert_eq!(sig6(-2.0 / 3.0), -0.666667);
    }

    #[test]
    fn empty_csv_is_header_only() {
        let s = to_string::<BenchRecord>(&[], Format::Csv).unwrap();
        assert_eq!(s, format!("{}\n", BenchRecord::COLUMNS.join(",")));
        let s = to_string::<AvalancheRecord>(&[], Format::Csv).unwrap();
        assert_eq!(s.lines().count(), 1);
    }

    #[test]
    fn csv_rows_match_records() {
        let recs = vec![sample_bench(); 4];
        let s = to_string(&recs, Format::Csv).unwrap();
        assert_eq!(s.lines().count(), 5);
        assert_eq!(s.lines().nth(1).unwrap(), "AES256_CBC,1000,encrypt,0.0000123457,79104.1,3,1.0,7.81235");
        let back: Vec<BenchRecord> = records_from_csv(&s).unwrap();
        assert_eq!(back, recs.iter().map(Row::rounded).collect::<Vec<_>>());
    }

    #[test]
    fn json_round_trip_is_stable() {
        let av = AvalancheRecord {
            mode: AvalancheMode::LabelPerturb(4),
            samples: 1000,
            sequence_length: 100,
            hamming_mean: 0.123_456_789,
            hamming_half_width: 0.001_234_567,
            remap_mean: Some(0.5),
            remap_half_width: None,
        };
        let first = to_string(&[av], Format::Json).unwrap();
        assert!(first.contains("\"LABEL_PERTURB(4)\""));
        let parsed: Vec<AvalancheRecord> = records_from_json(&first).unwrap();
        assert_eq!(to_string(&parsed, Format::Json).unwrap(), first);
        let b = to_string(&[sample_bench()], Format::Json).unwrap();
        let parsed: Vec<BenchRecord> = records_from_json(&b).unwrap();
        assert_eq!(to_string(&parsed, Format::Json).unwrap(), b);
    }

    #[test]
    fn unwritable_path() {
        let r = report::<BenchRecord>(&[], Format::Csv, Path::new("/nonexistent-dir/x/report.csv"));
        assert!(matches!(r, Err(Error::Io(_))));
    }

    #[test]
    fn mode_names() {
        for m in [AvalancheMode::PlaintextBitFlip, AvalancheMode::SeedFlip, AvalancheMode::LabelPerturb(8)] {
            assert_eq!(m.to_string().parse::<AvalancheMode>().unwrap(), m);
        }
        assert_eq!("label:2".parse::<AvalancheMode>().unwrap(), AvalancheMode::LabelPerturb(2));
        assert!("LABEL_PERTURB(x)".parse::<AvalancheMode>().is_err());
    }

    #[test]
    fn ci_matches_hand_computation() {
        // Sample sd of [0,1,0,1] is 1/√3; half-width = z·sd/2.
        let (m, h) = mean_ci99(&[0.0, 1.0, 0.0, 1.0]);
        assert_eq!(m, 0.5);
        assert!((h - 2.575_829_303_548_9 / 3f64.sqrt() / 2.0).abs() < 1e-9);
    }

    #[test]
    fn too_few_samples() {
        assert!(matches!(
            avalanche(AvalancheMode::PlaintextBitFlip, 29, 16, 1),
            Err(Error::InsufficientSamples { min: 30, actual: 29 })
        ));
    }

    #[test]
    fn zero_perturbation_remaps_nothing() {
        let r = avalanche(AvalancheMode::LabelPerturb(0), 30, 100, 3).unwrap();
        assert_eq!(r.remap_mean, Some(0.0));
        assert_eq!(r.hamming_mean, 0.0);
    }

    #[test]
    fn spearman_examples() {
        assert!((spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-12);
        // Ranks [1, 2.5, 2.5] vs [1, 2, 3]: r = 0.866025.
        assert!((spearman(&[1.0, 5.0, 5.0], &[1.0, 2.0, 3.0]).unwrap() - 0.866_025_403_784).abs() < 1e-9);
    }

    #[test]
    fn baselines_round_trip() {
        for alg in Algorithm::ALL {
            let mut c = make_cipher(alg, 7).unwrap();
            for n in [0usize, 1, RSA_CHUNK, RSA_CHUNK + 1, 1000] {
                let msg = corpus(9, n);
                let ct = c.encrypt(&msg).unwrap();
                assert_eq!(c.decrypt(&ct).unwrap(), msg, "{alg} {n}");
            }
        }
    }

    #[test]
    fn rsa_chunking_layout() {
        let mut c = RsaOaepCipher::new(3).unwrap();
        assert_eq!(RSA_CHUNK, 190);
        assert_eq!(c.encrypt(&[0u8; 381]).unwrap().len(), 3 * 256);
    }
}
