//! NIST SP 800-22 statistical test battery and byte-level Shannon entropy.
//!
//! Each statistic is available as a plain function over a bit slice with
//! explicit parameters (useful for small worked examples), and through
//! [`run_all`], which applies the suite's recommended parameters and
//! minimum lengths and reports `NotApplicable` where a test cannot run.

use std::f64::consts::{LN_2, SQRT_2};

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::gamma_ur;

use crate::error::{Error, Result};

pub const ALPHA: f64 = 0.01;

/// A sequence of bits, one per byte (0 or 1).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BitStream {
    bits: Vec<u8>,
}

impl BitStream {
    /// Expands bytes most-significant bit first.
    pub fn from_bytes(bytes: &[u8]) -> Self {
        let bits = bytes.iter().flat_map(|&b| (0..8).rev().map(move |i| (b >> i) & 1)).collect();
        Self { bits }
    }

    pub fn from_bits(bits: impl IntoIterator<Item = bool>) -> Self {
        Self { bits: bits.into_iter().map(u8::from).collect() }
    }

    /// Reads a string of `0`/`1`, ignoring whitespace.
    pub fn parse(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                _ => Err(Error::InvalidArgument(format!("bit string contains {c:?}"))),
            })
            .collect::<Result<_>>()?;
        Ok(Self { bits })
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn truncated(&self, n: usize) -> Self {
        Self { bits: self.bits[..n.min(self.len())].to_vec() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub test: String,
    pub p_values: Vec<f64>,
    /// `None` when the test was not applicable.
    pub pass: Option<bool>,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl TestResult {
    /// Smallest p-value, the single figure reported per test.
    pub fn p_value(&self) -> Option<f64> {
        self.p_values.iter().copied().reduce(f64::min)
    }

    fn scored(test: &str, p_values: Vec<f64>, params: &TestParams) -> Self {
        let pass = params.rule.passes(&p_values, params.alpha);
        Self {
            test: test.to_string(),
            p_values,
            pass: Some(pass),
            status: if pass { Status::Pass } else { Status::Fail },
            note: None,
        }
    }

    fn not_applicable(test: &str, why: String) -> Self {
        Self { test: test.to_string(), p_values: Vec::new(), pass: None, status: Status::NotApplicable, note: Some(why) }
    }
}

/// How a test with several p-values is judged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PassRule {
    /// Every p-value must reach `alpha / m` for `m` p-values.
    #[default]
    Bonferroni,
    /// Every p-value must reach `alpha`.
    EveryPValue,
}

impl PassRule {
    pub fn passes(self, p_values: &[f64], alpha: f64) -> bool {
        let threshold = match self {
            PassRule::Bonferroni => alpha / p_values.len().max(1) as f64,
            PassRule::EveryPValue => alpha,
        };
        p_values.iter().all(|&p| p >= threshold)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TestParams {
    pub alpha: f64,
    pub rule: PassRule,
    pub block_frequency_m: usize,
    pub template_m: usize,
    pub overlapping_m: usize,
    pub linear_complexity_m: usize,
    pub serial_m: usize,
    pub apen_m: usize,
}

impl Default for TestParams {
    fn default() -> Self {
        Self {
            alpha: ALPHA,
            rule: PassRule::Bonferroni,
            block_frequency_m: 128,
            template_m: 9,
            overlapping_m: 9,
            linear_complexity_m: 500,
            serial_m: 16,
            apen_m: 10,
        }
    }
}

/// Upper regularized incomplete gamma function Q(a, x).
pub fn igamc(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x.is_infinite() {
        0.0
    } else {
        gamma_ur(a, x).clamp(0.0, 1.0)
    }
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

fn short(what: &str, need: usize, have: usize) -> Error {
    Error::InsufficientData(format!("{what} needs at least {need} bits, got {have}"))
}

fn require(what: &str, bits: &[u8], need: usize) -> Result<()> {
    if bits.len() < need {
        Err(short(what, need, bits.len()))
    } else {
        Ok(())
    }
}

fn ones(bits: &[u8]) -> usize {
    bits.iter().map(|&b| b as usize).sum()
}

fn chi_square(observed: &[u64], expected: &[f64], total: f64) -> f64 {
    observed.iter().zip(expected).map(|(&v, &p)| (v as f64 - total * p).powi(2) / (total * p)).sum()
}

pub fn frequency(bits: &[u8]) -> Result<f64> {
    require("frequency", bits, 1)?;
    let n = bits.len() as f64;
    let s = 2.0 * ones(bits) as f64 - n;
    Ok(erfc(s.abs() / n.sqrt() / SQRT_2))
}

pub fn block_frequency(bits: &[u8], m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidArgument("block length must be positive".into()));
    }
    require("block frequency", bits, m)?;
    let blocks = bits.len() / m;
    let chi: f64 = bits
        .chunks_exact(m)
        .map(|b| {
            let pi = ones(b) as f64 / m as f64;
            (pi - 0.5).powi(2)
        })
        .sum::<f64>()
        * 4.0
        * m as f64;
    Ok(igamc(blocks as f64 / 2.0, chi / 2.0))
}

/// Runs test. Returns 0 when the frequency prerequisite fails.
pub fn runs(bits: &[u8]) -> Result<f64> {
    require("runs", bits, 2)?;
    let n = bits.len() as f64;
    let pi = ones(bits) as f64 / n;
    if (pi - 0.5).abs() >= 2.0 / n.sqrt() {
        return Ok(0.0);
    }
    let v = 1 + bits.windows(2).filter(|w| w[0] != w[1]).count();
    let num = (v as f64 - 2.0 * n * pi * (1.0 - pi)).abs();
    Ok(erfc(num / (2.0 * (2.0 * n).sqrt() * pi * (1.0 - pi))))
}

/// Longest run of ones per block, block length chosen from `n`.
pub fn longest_run(bits: &[u8]) -> Result<f64> {
    require("longest run", bits, 128)?;
    let n = bits.len();
    let (m, lo, probs): (usize, usize, &[f64]) = if n < 6272 {
        (8, 1, &[0.2148, 0.3672, 0.2305, 0.1875])
    } else if n < 750_000 {
        (128, 4, &[0.1174, 0.2430, 0.2493, 0.1752, 0.1027, 0.1124])
    } else {
        (10_000, 10, &[0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727])
    };
    let k = probs.len() - 1;
    let mut v = vec![0u64; probs.len()];
    for block in bits.chunks_exact(m) {
        let mut run = 0usize;
        let mut longest = 0usize;
        for &b in block {
            run = if b == 1 { run + 1 } else { 0 };
            longest = longest.max(run);
        }
        v[longest.clamp(lo, lo + k) - lo] += 1;
    }
    let blocks = (n / m) as f64;
    Ok(igamc(k as f64 / 2.0, chi_square(&v, probs, blocks) / 2.0))
}

/// Rank of a binary matrix given as row bitmasks.
pub fn gf2_rank(rows: &mut [u64], cols: usize) -> usize {
    let mut rank = 0;
    for c in (0..cols).rev() {
        let bit = 1u64 << c;
        let Some(p) = (rank..rows.len()).find(|&r| rows[r] & bit != 0) else { continue };
        rows.swap(rank, p);
        let pivot = rows[rank];
        for (r, row) in rows.iter_mut().enumerate() {
            if r != rank && *row & bit != 0 {
                *row ^= pivot;
            }
        }
        rank += 1;
    }
    rank
}

/// Probability that a random `m`×`q` binary matrix has rank `r`.
fn rank_probability(r: usize, m: usize, q: usize) -> f64 {
    let mut p = 2f64.powi((r * (q + m - r)) as i32 - (m * q) as i32);
    for i in 0..r {
        let i = i as i32;
        p *= (1.0 - 2f64.powi(i - q as i32)) * (1.0 - 2f64.powi(i - m as i32)) / (1.0 - 2f64.powi(i - r as i32));
    }
    p
}

/// Binary matrix rank test over disjoint `m`×`q` matrices filled row-wise.
pub fn rank(bits: &[u8], m: usize, q: usize) -> Result<f64> {
    if m == 0 || q == 0 || q > 64 {
        return Err(Error::InvalidArgument(format!("unsupported matrix shape {m}x{q}")));
    }
    require("rank", bits, m * q)?;
    let full = m.min(q);
    let mut counts = [0u64; 3];
    let mut rows = vec![0u64; m];
    for block in bits.chunks_exact(m * q) {
        for (row, chunk) in rows.iter_mut().zip(block.chunks_exact(q)) {
            *row = chunk.iter().fold(0u64, |acc, &b| (acc << 1) | u64::from(b));
        }
        let r = gf2_rank(&mut rows, q);
        counts[if r == full { 0 } else if r + 1 == full { 1 } else { 2 }] += 1;
    }
    let pf = rank_probability(full, m, q);
    let pf1 = if full >= 1 { rank_probability(full - 1, m, q) } else { 0.0 };
    let probs = [pf, pf1, 1.0 - pf - pf1];
    let n = (bits.len() / (m * q)) as f64;
    Ok((-chi_square(&counts, &probs, n) / 2.0).exp())
}

/// Spectral test on the first `n/2` DFT magnitudes of the ±1 sequence.
pub fn dft(bits: &[u8]) -> Result<f64> {
    require("dft", bits, 2)?;
    let n = bits.len();
    let mut buf: Vec<Complex<f64>> = bits.iter().map(|&b| Complex::new(2.0 * b as f64 - 1.0, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let t = ((1.0f64 / 0.05).ln() * n as f64).sqrt();
    let n0 = 0.95 * n as f64 / 2.0;
    let n1 = buf[..n / 2].iter().filter(|c| c.norm() < t).count() as f64;
    let d = (n1 - n0) / (n as f64 * 0.95 * 0.05 / 4.0).sqrt();
    Ok(erfc(d.abs() / SQRT_2))
}

/// Templates of length `m` that cannot overlap a shifted copy of
/// themselves, in ascending numeric order.
pub fn aperiodic_templates(m: usize) -> Vec<u32> {
    assert!((2..=20).contains(&m));
    (1u32..(1 << m))
        .filter(|&t| {
            (1..m).all(|s| {
                let keep = m - s;
                // Top `keep` bits against bottom `keep` bits.
                (t >> s) != (t & ((1 << keep) - 1))
            })
        })
        .collect()
}

/// Rolling `m`-bit values, first bit most significant, with `wrap` extra
/// bits taken cyclically from the start.
fn windows(bits: &[u8], m: usize, wrap: bool) -> Vec<u32> {
    let n = bits.len();
    let count = if wrap { n } else { n + 1 - m };
    let mask = if m == 32 { u32::MAX } else { (1u32 << m) - 1 };
    let mut out = Vec::with_capacity(count);
    let mut v = 0u32;
    for i in 0..count + m - 1 {
        v = ((v << 1) | u32::from(bits[i % n])) & mask;
        if i + 1 >= m {
            out.push(v);
        }
    }
    out
}

/// Non-overlapping template test for one template over `blocks` blocks.
pub fn non_overlapping_template(bits: &[u8], template: u32, m: usize, blocks: usize) -> Result<f64> {
    non_overlapping_all(bits, &[template], m, blocks).map(|v| v[0])
}

fn non_overlapping_all(bits: &[u8], templates: &[u32], m: usize, blocks: usize) -> Result<Vec<f64>> {
    if blocks == 0 || m == 0 {
        return Err(Error::InvalidArgument("template test needs blocks and template length".into()));
    }
    let block_len = bits.len() / blocks;
    if block_len < m {
        return Err(short("non-overlapping template", m * blocks, bits.len()));
    }
    let mu = (block_len - m + 1) as f64 / 2f64.powi(m as i32);
    let var = block_len as f64 * (1.0 / 2f64.powi(m as i32) - (2 * m - 1) as f64 / 2f64.powi(2 * m as i32));
    let wins: Vec<Vec<u32>> = bits.chunks_exact(block_len).take(blocks).map(|b| windows(b, m, false)).collect();
    Ok(templates
        .iter()
        .map(|&t| {
            let chi: f64 = wins
                .iter()
                .map(|w| {
                    let mut hits = 0u64;
                    let mut i = 0;
                    while i < w.len() {
                        if w[i] == t {
                            hits += 1;
                            i += m;
                        } else {
                            i += 1;
                        }
                    }
                    (hits as f64 - mu).powi(2) / var
                })
                .sum();
            igamc(blocks as f64 / 2.0, chi / 2.0)
        })
        .collect())
}

/// Every aperiodic template of length `m` with 8 blocks.
pub fn non_overlapping_templates(bits: &[u8], m: usize) -> Result<Vec<f64>> {
    non_overlapping_all(bits, &aperiodic_templates(m), m, 8)
}

/// P(U = u) for the number of overlapping all-ones occurrences in a block.
fn overlapping_probability(u: usize, eta: f64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    if u == 0 {
        return (-eta).exp();
    }
    (1..=u)
        .map(|l| {
            let (u, l) = (u as f64, l as f64);
            (-eta - u * LN_2 + l * eta.ln() - ln_gamma(l + 1.0) + ln_gamma(u) - ln_gamma(l) - ln_gamma(u - l + 1.0)).exp()
        })
        .sum()
}

/// Overlapping all-ones template of length `m` in blocks of `block_len`,
/// counts bucketed into `0..k` and `≥ k`.
pub fn overlapping_template(bits: &[u8], m: usize, block_len: usize, k: usize) -> Result<f64> {
    if block_len < m || m == 0 || k == 0 {
        return Err(Error::InvalidArgument("overlapping template parameters".into()));
    }
    require("overlapping template", bits, block_len)?;
    let lambda = (block_len - m + 1) as f64 / 2f64.powi(m as i32);
    let mut probs: Vec<f64> = (0..k).map(|u| overlapping_probability(u, lambda / 2.0)).collect();
    probs.push(1.0 - probs.iter().sum::<f64>());
    let target = (1u32 << m) - 1;
    let mut v = vec![0u64; k + 1];
    for block in bits.chunks_exact(block_len) {
        let hits = windows(block, m, false).iter().filter(|&&w| w == target).count();
        v[hits.min(k)] += 1;
    }
    let n = (bits.len() / block_len) as f64;
    Ok(igamc(k as f64 / 2.0, chi_square(&v, &probs, n) / 2.0))
}

const UNIVERSAL_EXPECTED: [f64; 17] = [
    0.0, 0.7326495, 1.5374383, 2.4016068, 3.3112247, 4.2534266, 5.2177052, 6.1962507, 7.1836656, 8.1764248,
    9.1723243, 10.170032, 11.168765, 12.168070, 13.167693, 14.167488, 15.167379,
];
const UNIVERSAL_VARIANCE: [f64; 17] =
    [0.0, 0.690, 1.338, 1.901, 2.358, 2.705, 2.954, 3.125, 3.238, 3.311, 3.356, 3.384, 3.401, 3.410, 3.416, 3.419, 3.421];

/// Smallest `n` for each block length 6..=16.
const UNIVERSAL_MIN_N: [usize; 11] = [
    387_840,
    904_960,
    2_068_480,
    4_654_080,
    10_342_400,
    22_753_280,
    49_643_520,
    107_560_960,
    231_669_760,
    496_435_200,
    1_059_061_760,
];

/// Block length and initialization blocks for a stream of `n` bits.
pub fn universal_parameters(n: usize) -> Option<(usize, usize)> {
    let idx = UNIVERSAL_MIN_N.iter().rposition(|&min| n >= min)?;
    let l = 6 + idx;
    Some((l, 10 << l))
}

/// Mean log2 distance statistic `f_n` of the universal test.
pub fn universal_statistic(bits: &[u8], l: usize, q: usize) -> Result<f64> {
    if !(1..=16).contains(&l) {
        return Err(Error::InvalidArgument(format!("block length {l} outside 1..=16")));
    }
    let total = bits.len() / l;
    if total <= q {
        return Err(short("universal", (q + 1) * l, bits.len()));
    }
    let mut last = vec![0usize; 1 << l];
    let mut sum = 0.0;
    for (i, block) in bits.chunks_exact(l).take(total).enumerate() {
        let v = block.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
        if i >= q {
            sum += ((i + 1 - last[v]) as f64).log2();
        }
        last[v] = i + 1;
    }
    Ok(sum / (total - q) as f64)
}

pub fn universal(bits: &[u8], l: usize, q: usize) -> Result<f64> {
    let fn_ = universal_statistic(bits, l, q)?;
    let k = (bits.len() / l - q) as f64;
    let lf = l as f64;
    let c = 0.7 - 0.8 / lf + (4.0 + 32.0 / lf) * k.powf(-3.0 / lf) / 15.0;
    let sigma = c * (UNIVERSAL_VARIANCE[l] / k).sqrt();
    Ok(erfc((fn_ - UNIVERSAL_EXPECTED[l]).abs() / (SQRT_2 * sigma)))
}

/// Length of the shortest LFSR generating `bits` (Berlekamp–Massey).
pub fn linear_complexity_of(bits: &[u8]) -> usize {
    let n = bits.len();
    let mut c = vec![0u8; n + 1];
    let mut b = vec![0u8; n + 1];
    c[0] = 1;
    b[0] = 1;
    let mut l = 0usize;
    let mut m: isize = -1;
    for i in 0..n {
        let mut d = bits[i];
        for j in 1..=l {
            d ^= c[j] & bits[i - j];
        }
        if d == 1 {
            let t = c.clone();
            let shift = (i as isize - m) as usize;
            for j in 0..=n - shift {
                c[j + shift] ^= b[j];
            }
            if 2 * l <= i {
                l = i + 1 - l;
                m = i as isize;
                b = t;
            }
        }
    }
    l
}

pub fn linear_complexity(bits: &[u8], m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidArgument("block length must be positive".into()));
    }
    require("linear complexity", bits, m)?;
    // The published class probabilities, including the rounded first entry.
    const PROBS: [f64; 7] = [0.01047, 0.03125, 0.125, 0.5, 0.25, 0.0625, 0.020833];
    let mf = m as f64;
    let sign = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
    let mu = mf / 2.0 + (9.0 - sign) / 36.0 - (mf / 3.0 + 2.0 / 9.0) / 2f64.powf(mf);
    let mut v = [0u64; 7];
    for block in bits.chunks_exact(m) {
        let t = sign * (linear_complexity_of(block) as f64 - mu) + 2.0 / 9.0;
        let slot = if t <= -2.5 {
            0
        } else if t > 2.5 {
            6
        } else {
            // Buckets (-2.5,-1.5], ..., (1.5,2.5].
            ((t + 2.5).ceil() as usize).clamp(1, 5)
        };
        v[slot] += 1;
    }
    let n = (bits.len() / m) as f64;
    Ok(igamc(3.0, chi_square(&v, &PROBS, n) / 2.0))
}

/// ψ²_m over cyclic overlapping `m`-bit patterns.
fn psi_squared(bits: &[u8], m: usize) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let n = bits.len() as f64;
    let mut counts = vec![0u64; 1 << m];
    for w in windows(bits, m, true) {
        counts[w as usize] += 1;
    }
    let sum: f64 = counts.iter().map(|&c| (c as f64).powi(2)).sum();
    sum * 2f64.powi(m as i32) / n - n
}

/// Serial test; returns (p1, p2).
pub fn serial(bits: &[u8], m: usize) -> Result<[f64; 2]> {
    if !(2..=24).contains(&m) {
        return Err(Error::InvalidArgument(format!("serial pattern length {m} outside 2..=24")));
    }
    require("serial", bits, m)?;
    let (p0, p1, p2) = (psi_squared(bits, m), psi_squared(bits, m - 1), psi_squared(bits, m - 2));
    let d1 = p0 - p1;
    let d2 = p0 - 2.0 * p1 + p2;
    Ok([igamc(2f64.powi(m as i32 - 2), d1 / 2.0), igamc(2f64.powi(m as i32 - 3), d2 / 2.0)])
}

fn phi(bits: &[u8], m: usize) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let n = bits.len() as f64;
    let mut counts = vec![0u64; 1 << m];
    for w in windows(bits, m, true) {
        counts[w as usize] += 1;
    }
    counts.iter().filter(|&&c| c > 0).map(|&c| c as f64 / n * (c as f64 / n).ln()).sum()
}

pub fn approximate_entropy(bits: &[u8], m: usize) -> Result<f64> {
    if !(1..=24).contains(&m) {
        return Err(Error::InvalidArgument(format!("block length {m} outside 1..=24")));
    }
    require("approximate entropy", bits, m + 1)?;
    let apen = phi(bits, m) - phi(bits, m + 1);
    let chi = 2.0 * bits.len() as f64 * (LN_2 - apen);
    Ok(igamc(2f64.powi(m as i32 - 1), chi / 2.0))
}

pub fn cumulative_sums(bits: &[u8], reverse: bool) -> Result<f64> {
    require("cumulative sums", bits, 1)?;
    let step = |b: &u8| if *b == 1 { 1i64 } else { -1 };
    let mut s = 0i64;
    let mut z = 0i64;
    let mut visit = |b: &u8| {
        s += step(b);
        z = z.max(s.abs());
    };
    if reverse {
        bits.iter().rev().for_each(&mut visit);
    } else {
        bits.iter().for_each(&mut visit);
    }
    let n = bits.len() as i64;
    let (nf, zf) = (n as f64, z as f64);
    let sq = nf.sqrt();
    let mut sum1 = 0.0;
    for k in ((-n / z + 1) / 4)..=((n / z - 1) / 4) {
        let k = k as f64;
        sum1 += normal_cdf((4.0 * k + 1.0) * zf / sq) - normal_cdf((4.0 * k - 1.0) * zf / sq);
    }
    let mut sum2 = 0.0;
    for k in ((-n / z - 3) / 4)..=((n / z - 1) / 4) {
        let k = k as f64;
        sum2 += normal_cdf((4.0 * k + 3.0) * zf / sq) - normal_cdf((4.0 * k + 1.0) * zf / sq);
    }
    Ok((1.0 - sum1 + sum2).clamp(0.0, 1.0))
}

/// Cycles of the ±1 random walk (zero crossings of the padded partial
/// sums), each as the list of nonzero states it visits.
fn walk_cycles(bits: &[u8], mut on_cycle: impl FnMut(&[i64])) -> usize {
    let mut s = 0i64;
    let mut cycle = Vec::new();
    let mut j = 0;
    for &b in bits {
        s += if b == 1 { 1 } else { -1 };
        if s == 0 {
            on_cycle(&cycle);
            cycle.clear();
            j += 1;
        } else {
            cycle.push(s);
        }
    }
    if s != 0 {
        on_cycle(&cycle);
        j += 1;
    }
    j
}

/// Minimum cycle count for the excursion tests.
pub fn excursion_min_cycles(n: usize) -> f64 {
    (0.005 * (n as f64).sqrt()).max(500.0)
}

/// Random excursions: p-values for states −4..−1, 1..4, and the cycle count.
pub fn random_excursions(bits: &[u8]) -> Result<(Vec<f64>, usize)> {
    require("random excursions", bits, 1)?;
    const STATES: [i64; 8] = [-4, -3, -2, -1, 1, 2, 3, 4];
    // nu[state][k]: cycles with k visits (k = 5 means ≥ 5).
    let mut nu = [[0u64; 6]; 8];
    let j = walk_cycles(bits, |cycle| {
        let mut visits = [0usize; 8];
        for &s in cycle {
            if (-4..=4).contains(&s) {
                visits[if s < 0 { (s + 4) as usize } else { (s + 3) as usize }] += 1;
            }
        }
        for (x, &v) in visits.iter().enumerate() {
            nu[x][v.min(5)] += 1;
        }
    });
    let p = STATES
        .iter()
        .zip(&nu)
        .map(|(&x, counts)| {
            let a = 1.0 / (2.0 * x.abs() as f64);
            let mut probs = [0.0; 6];
            probs[0] = 1.0 - a;
            for (k, slot) in probs.iter_mut().enumerate().take(5).skip(1) {
                *slot = a * a * (1.0 - a).powi(k as i32 - 1);
            }
            probs[5] = a * (1.0 - a).powi(4);
            igamc(2.5, chi_square(counts, &probs, j as f64) / 2.0)
        })
        .collect();
    Ok((p, j))
}

/// Random excursions variant: p-values for states −9..−1, 1..9, and the
/// cycle count.
pub fn random_excursions_variant(bits: &[u8]) -> Result<(Vec<f64>, usize)> {
    require("random excursions variant", bits, 1)?;
    let mut xi = [0u64; 19];
    let j = walk_cycles(bits, |cycle| {
        for &s in cycle {
            if (-9..=9).contains(&s) {
                xi[(s + 9) as usize] += 1;
            }
        }
    });
    let jf = j as f64;
    let p = (-9i64..=9)
        .filter(|&x| x != 0)
        .map(|x| {
            let count = xi[(x + 9) as usize] as f64;
            erfc((count - jf).abs() / (2.0 * jf * (4.0 * x.abs() as f64 - 2.0)).sqrt())
        })
        .collect();
    Ok((p, j))
}

pub const TEST_NAMES: [&str; 15] = [
    "Monobit",
    "Frequency Within Block",
    "Runs",
    "Longest Run Ones in a Block",
    "Binary Matrix Rank",
    "DFT",
    "Non-overlapping Template Matching",
    "Overlapping Template Matching",
    "Maurer's Universal",
    "Linear Complexity",
    "Serial",
    "Approximate Entropy",
    "Cumulative Sums",
    "Random Excursion",
    "Random Excursion Variant",
];

/// Frequency test with the suite's recommended minimum of 100 bits.
pub fn monobit(stream: &BitStream) -> Result<TestResult> {
    require("monobit", stream.bits(), 100)?;
    Ok(TestResult::scored(TEST_NAMES[0], vec![frequency(stream.bits())?], &TestParams::default()))
}

/// Universal test with parameters from the length table; `NotApplicable`
/// below 387 840 bits.
pub fn maurer_universal(stream: &BitStream) -> TestResult {
    let name = TEST_NAMES[8];
    match universal_parameters(stream.len()) {
        None => TestResult::not_applicable(name, format!("needs at least {} bits", UNIVERSAL_MIN_N[0])),
        Some((l, q)) => match universal(stream.bits(), l, q) {
            Ok(p) => TestResult::scored(name, vec![p], &TestParams::default()),
            Err(e) => TestResult::not_applicable(name, e.to_string()),
        },
    }
}

/// Runs all 15 tests in a fixed order.
pub fn run_all(stream: &BitStream, params: &TestParams) -> Result<Vec<TestResult>> {
    let bits = stream.bits();
    let n = bits.len();
    let score = |i: usize, r: Result<Vec<f64>>| match r {
        Ok(p) => TestResult::scored(TEST_NAMES[i], p, params),
        Err(e) => TestResult::not_applicable(TEST_NAMES[i], e.to_string()),
    };
    let gate = |i: usize, min: usize, f: &dyn Fn() -> Result<Vec<f64>>| {
        if n < min {
            TestResult::not_applicable(TEST_NAMES[i], format!("needs at least {min} bits, got {n}"))
        } else {
            score(i, f())
        }
    };
    let log2n = (n.max(1) as f64).log2().floor() as usize;
    let mut out = vec![
        gate(0, 100, &|| Ok(vec![frequency(bits)?])),
        gate(1, 100.max(params.block_frequency_m), &|| Ok(vec![block_frequency(bits, params.block_frequency_m)?])),
        gate(2, 100, &|| Ok(vec![runs(bits)?])),
        gate(3, 128, &|| Ok(vec![longest_run(bits)?])),
        gate(4, 38 * 32 * 32, &|| Ok(vec![rank(bits, 32, 32)?])),
        gate(5, 1000, &|| Ok(vec![dft(bits)?])),
        gate(6, 8 * 100, &|| non_overlapping_templates(bits, params.template_m)),
        gate(7, 1_000_000, &|| Ok(vec![overlapping_template(bits, params.overlapping_m, 1032, 5)?])),
        maurer_universal(stream),
        gate(9, 1_000_000, &|| Ok(vec![linear_complexity(bits, params.linear_complexity_m)?])),
    ];
    out.push(if params.serial_m + 2 >= log2n {
        TestResult::not_applicable(TEST_NAMES[10], format!("m = {} needs m < log2(n) - 2", params.serial_m))
    } else {
        score(10, serial(bits, params.serial_m).map(Vec::from))
    });
    out.push(if params.apen_m + 5 >= log2n {
        TestResult::not_applicable(TEST_NAMES[11], format!("m = {} needs m < log2(n) - 5", params.apen_m))
    } else {
        score(11, approximate_entropy(bits, params.apen_m).map(|p| vec![p]))
    });
    out.push(gate(12, 100, &|| Ok(vec![cumulative_sums(bits, false)?, cumulative_sums(bits, true)?])));
    for (i, f) in [
        (13, random_excursions as fn(&[u8]) -> Result<(Vec<f64>, usize)>),
        (14, random_excursions_variant),
    ] {
        out.push(if n < 1_000_000 {
            TestResult::not_applicable(TEST_NAMES[i], format!("needs at least 1000000 bits, got {n}"))
        } else {
            match f(bits) {
                Ok((p, j)) if j as f64 >= excursion_min_cycles(n) => TestResult::scored(TEST_NAMES[i], p, params),
                Ok((_, j)) => TestResult::not_applicable(TEST_NAMES[i], format!("only {j} cycles")),
                Err(e) => TestResult::not_applicable(TEST_NAMES[i], e.to_string()),
            }
        });
    }
    if out.iter().all(|r| r.status == Status::NotApplicable) {
        return Err(Error::InsufficientData(format!("{n} bits is too short for every test")));
    }
    Ok(out)
}

/// Bits of entropy per byte of the byte histogram.
pub fn shannon_entropy(bytes: &[u8]) -> Result<f64> {
    if bytes.is_empty() {
        return Err(Error::InsufficientData("entropy of an empty buffer".into()));
    }
    let mut counts = [0u64; 256];
    for &b in bytes {
        counts[b as usize] += 1;
    }
    let n = bytes.len() as f64;
    Ok(counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum::<f64>()
        .max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    // First 100 bits of the binary expansion of π.
    const PI_100: &str = "1100100100001111110110101010001000100001011010001100001000110100110001001100011001100010100010111000";

    fn b(s: &str) -> Vec<u8> {
        BitStream::parse(s).unwrap().bits().to_vec()
    }

    fn close(actual: f64, expected: f64) {
        assert!((actual - expected).abs() < 1e-4, "{actual} vs {expected}");
    }

    #[test]
    fn frequency_examples() {
        close(frequency(&b("1011010101")).unwrap(), 0.527089);
        close(frequency(&b(PI_100)).unwrap(), 0.109599);
    }

    #[test]
    fn block_frequency_examples() {
        close(block_frequency(&b("0110011010"), 3).unwrap(), 0.801252);
        close(block_frequency(&b(PI_100), 10).unwrap(), 0.706438);
    }

    #[test]
    fn runs_examples() {
        close(runs(&b("1001101011")).unwrap(), 0.147232);
        close(runs(&b(PI_100)).unwrap(), 0.500798);
    }

    #[test]
    fn longest_run_example() {
        let s = "11001100000101010110110001001100111000000000001001001101010100010001001111010110100000001101011111001100111001101101100010110010";
        close(longest_run(&b(s)).unwrap(), 0.180609);
    }

    #[test]
    fn rank_example_matrices() {
        // 010/110/010 and 010/101/011 from "01011001001010101101".
        assert_eq!(gf2_rank(&mut [0b010, 0b110, 0b010], 3), 2);
        assert_eq!(gf2_rank(&mut [0b010, 0b101, 0b011], 3), 3);
        let p = rank(&b("01011001001010101101"), 3, 3).unwrap();
        assert!((0.0..=1.0).contains(&p));
    }

    #[test]
    fn rank_probabilities_for_32() {
        assert!((rank_probability(32, 32, 32) - 0.2888).abs() < 1e-4);
        assert!((rank_probability(31, 32, 32) - 0.5776).abs() < 1e-4);
    }

    #[test]
    fn gf2_rank_small() {
        assert_eq!(gf2_rank(&mut [0b100, 0b010, 0b001], 3), 3);
        assert_eq!(gf2_rank(&mut [0b110, 0b011, 0b101], 3), 2);
        assert_eq!(gf2_rank(&mut [0, 0], 2), 0);
    }

    #[test]
    fn dft_constant_sequence() {
        // All energy sits in the zero-frequency bin, above the threshold;
        // every other bin is zero.
        let n = 1000;
        let p = dft(&vec![1u8; n]).unwrap();
        let d = (499.0 - 0.95 * 500.0) / (n as f64 * 0.95 * 0.05 / 4.0).sqrt();
        assert!((p - erfc(d / SQRT_2)).abs() < 1e-12);
    }

    #[test]
    fn non_overlapping_example() {
        close(non_overlapping_template(&b("10100100101110010110"), 0b001, 3, 2).unwrap(), 0.344154);
    }

    #[test]
    fn template_counts() {
        assert_eq!(aperiodic_templates(2).len(), 2);
        assert_eq!(aperiodic_templates(3).len(), 4);
        assert_eq!(aperiodic_templates(9).len(), 148);
        assert_eq!(aperiodic_templates(9)[0], 1);
    }

    #[test]
    fn overlapping_probabilities() {
        // λ = 2.25, η = 1.125 for m = 2, M = 10.
        close(overlapping_probability(0, 1.125), 0.324652);
        close(overlapping_probability(1, 1.125), 0.182617);
        close(overlapping_probability(2, 1.125), 0.142670);
        // m = 9, M = 1032: η = 1.0.
        close(overlapping_probability(0, 1.0), 0.367879);
        close(overlapping_probability(1, 1.0), 0.183940);
    }

    #[test]
    fn universal_statistic_example() {
        close(universal_statistic(&b("01011010011101010111"), 2, 4).unwrap(), 1.1949875);
    }

    #[test]
    fn universal_table() {
        assert_eq!(universal_parameters(387_839), None);
        assert_eq!(universal_parameters(387_840), Some((6, 640)));
        assert_eq!(universal_parameters(1_000_000), Some((7, 1280)));
    }

    #[test]
    fn berlekamp_massey() {
        assert_eq!(linear_complexity_of(&b("1101011110001")), 4);
        assert_eq!(linear_complexity_of(&b("0000")), 0);
        assert_eq!(linear_complexity_of(&b("0001")), 4);
        assert_eq!(linear_complexity_of(&b("1111")), 1);
        assert_eq!(linear_complexity_of(&b("101010")), 2);
    }

    #[test]
    fn serial_example() {
        let [p1, p2] = serial(&b("0011011101"), 3).unwrap();
        close(p1, 0.808792);
        close(p2, 0.670320);
    }

    #[test]
    fn approximate_entropy_examples() {
        close(approximate_entropy(&b("0100110101"), 3).unwrap(), 0.261961);
        close(approximate_entropy(&b(PI_100), 2).unwrap(), 0.235301);
    }

    #[test]
    fn cumulative_sums_examples() {
        close(cumulative_sums(&b("1011010111"), false).unwrap(), 0.4116588);
        close(cumulative_sums(&b(PI_100), false).unwrap(), 0.219194);
        close(cumulative_sums(&b(PI_100), true).unwrap(), 0.114866);
    }

    #[test]
    fn excursion_examples() {
        let (p, j) = random_excursions(&b("0110110101")).unwrap();
        assert_eq!(j, 3);
        close(p[4], 0.502529);
        let (p, j) = random_excursions_variant(&b("0110110101")).unwrap();
        assert_eq!(j, 3);
        close(p[9], 0.683091);
    }

    #[test]
    fn degenerate_streams() {
        let alt: Vec<u8> = (0..200).map(|i| (i % 2) as u8).collect();
        assert_eq!(frequency(&alt).unwrap(), 1.0);
        assert!(frequency(&[1u8; 100]).unwrap() < 1e-15);
        let zeros = BitStream::from_bits(std::iter::repeat_n(false, 1000));
        let r = monobit(&zeros).unwrap();
        assert_eq!(r.pass, Some(false));
        assert!(r.p_value().unwrap() < 1e-100);
    }

    #[test]
    fn repeated_byte_fails_universal() {
        let s = BitStream::from_bytes(&vec![0xA7; 60_000]);
        let r = maurer_universal(&s);
        assert_eq!(r.status, Status::Fail);
    }

    #[test]
    fn short_streams() {
        assert!(matches!(monobit(&BitStream::parse("0101").unwrap()), Err(Error::InsufficientData(_))));
        assert_eq!(maurer_universal(&BitStream::from_bytes(&[0x5a; 1000])).status, Status::NotApplicable);
        assert!(matches!(run_all(&BitStream::parse("01").unwrap(), &TestParams::default()), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn bytes_expand_msb_first() {
        assert_eq!(BitStream::from_bytes(&[0b1000_0001, 0x40]).bits(), &[1, 0, 0, 0, 0, 0, 0, 1, 0, 1, 0, 0, 0, 0, 0, 0]);
        assert!(BitStream::parse("01x").is_err());
    }

    #[test]
    fn pass_rules() {
        let p = vec![0.5; 148].into_iter().chain([0.005]).collect::<Vec<_>>();
        assert!(PassRule::Bonferroni.passes(&p, 0.01));
        assert!(!PassRule::EveryPValue.passes(&p, 0.01));
        assert!(!PassRule::Bonferroni.passes(&[0.005], 0.01));
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(shannon_entropy(&[7u8; 100]).unwrap(), 0.0);
        let ramp: Vec<u8> = (0..=255u8).cycle().take(256 * 10).collect();
        assert!((shannon_entropy(&ramp).unwrap() - 8.0).abs() < 1e-12);
        assert!(shannon_entropy(&[]).is_err());
    }
}
