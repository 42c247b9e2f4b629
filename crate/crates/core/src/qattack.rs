//! QUBO instances, exact QAOA state-vector simulation and Grover cost
//! accounting.
//!
//! Basis state `z` assigns `x_i = (z >> i) & 1`. The cost layer applies
//! `exp(-iγ E(x))` with `E` the QUBO energy, which is the Ising operator
//! obtained from `x_i = (1 - z_i)/2` up to a global phase.

use std::f64::consts::{FRAC_PI_4, PI};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_QUBITS: usize = 24;
pub const GRID_POINTS: usize = 32;
pub const BAND_NEAR: f64 = 88.0;
pub const BAND_FAR: f64 = 44.0;
pub const LINEAR: f64 = -66.0;
/// Norm drift tolerated after each layer.
pub const NORM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Profile {
    BandedDense,
    BlockSparse,
    SparseDiagonal,
}

impl Profile {
    pub const ALL: [Profile; 3] = [Profile::BandedDense, Profile::BlockSparse, Profile::SparseDiagonal];
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Profile::BandedDense => "BANDED_DENSE",
            Profile::BlockSparse => "BLOCK_SPARSE",
            Profile::SparseDiagonal => "SPARSE_DIAGONAL",
        })
    }
}

impl FromStr for Profile {
    type Err = Error;

    /// Accepts the canonical names and the short forms `ncrna`, `block`, `diag`.
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ncrna" | "banded" | "banded_dense" => Ok(Profile::BandedDense),
            "block" | "rsa" | "block_sparse" => Ok(Profile::BlockSparse),
            "diag" | "aes" | "sparse_diagonal" => Ok(Profile::SparseDiagonal),
            _ => Err(Error::InvalidProfile(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuboMatrix {
    pub n: usize,
    /// Symmetric couplings with a zero diagonal; linear terms live in `diag`.
    pub q: Vec<Vec<f64>>,
    pub diag: Vec<f64>,
    pub profile: Profile,
}

impl QuboMatrix {
    fn empty(n: usize, profile: Profile) -> Self {
        Self { n, q: vec![vec![0.0; n]; n], diag: vec![LINEAR; n], profile }
    }

    fn couple(&mut self, i: usize, j: usize, v: f64) {
        self.q[i][j] = v;
        self.q[j][i] = v;
    }

    /// Nonzero couplings `(i, j, Q_ij)` with `i < j`.
    pub fn couplings(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                if self.q[i][j] != 0.0 {
                    out.push((i, j, self.q[i][j]));
                }
            }
        }
        out
    }

    /// Shape checks after deserialization: square, symmetric, zero diagonal.
    pub fn validate(&self) -> Result<()> {
        let bad = |why: &str| Err(Error::InvalidArgument(format!("QUBO matrix {why}")));
        if self.q.len() != self.n || self.diag.len() != self.n || self.q.iter().any(|r| r.len() != self.n) {
            return bad("has inconsistent dimensions");
        }
        for i in 0..self.n {
            if self.q[i][i] != 0.0 {
                return bad("keeps linear terms off the diagonal vector");
            }
            for j in 0..i {
                if self.q[i][j] != self.q[j][i] {
                    return bad("is not symmetric");
                }
            }
        }
        Ok(())
    }
}

/// Banded profile: `Q[i][i+1] = 88`, `Q[i][i+5] = 44`, linear −66.
pub fn build_ncrna_qubo(n: usize) -> Result<QuboMatrix> {
    if n < 6 {
        return Err(Error::TooSmall { n, min: 6 });
    }
    let mut m = QuboMatrix::empty(n, Profile::BandedDense);
    for i in 0..n - 1 {
        m.couple(i, i + 1, BAND_NEAR);
    }
    for i in 0..n - 5 {
        m.couple(i, i + 5, BAND_FAR);
    }
    Ok(m)
}

pub fn build_reference_qubo(profile: Profile, n: usize) -> Result<QuboMatrix> {
    if n < 4 {
        return Err(Error::TooSmall { n, min: 4 });
    }
    match profile {
        Profile::BandedDense => build_ncrna_qubo(n),
        Profile::BlockSparse => {
            let mut m = QuboMatrix::empty(n, profile);
            for i in (0..n - 1).step_by(2) {
                m.couple(i, i + 1, BAND_NEAR);
            }
            Ok(m)
        }
        Profile::SparseDiagonal => Ok(QuboMatrix::empty(n, profile)),
    }
}

/// Σ_{i<j} Q_ij x_i x_j + Σ_i diag_i x_i.
pub fn energy(q: &QuboMatrix, x: &[bool]) -> Result<f64> {
    if x.len() != q.n {
        return Err(Error::SizeMismatch { expected: q.n, actual: x.len() });
    }
    let mut e = 0.0;
    for i in 0..q.n {
        if !x[i] {
            continue;
        }
        e += q.diag[i];
        for j in i + 1..q.n {
            if x[j] {
                e += q.q[i][j];
            }
        }
    }
    Ok(e)
}

pub fn bits_of(index: usize, n: usize) -> Vec<bool> {
    (0..n).map(|i| (index >> i) & 1 == 1).collect()
}

fn check_size(n: usize) -> Result<()> {
    if n > MAX_QUBITS {
        Err(Error::StateTooLarge(n, MAX_QUBITS))
    } else {
        Ok(())
    }
}

/// Energy of every basis state, built incrementally from the lowest set bit.
pub fn energy_table(q: &QuboMatrix) -> Result<Vec<f64>> {
    check_size(q.n)?;
    let mut table = vec![0.0; 1 << q.n];
    for z in 1..table.len() {
        let i = z.trailing_zeros() as usize;
        let rest = z & (z - 1);
        let mut delta = q.diag[i];
        for j in i + 1..q.n {
            if (rest >> j) & 1 == 1 {
                delta += q.q[i][j];
            }
        }
        table[z] = table[rest] + delta;
    }
    Ok(table)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundStates {
    pub e_min: f64,
    /// Every minimizing basis index, ascending.
    pub indices: Vec<usize>,
}

impl GroundStates {
    /// The key bitstring: the lowest-index ground state.
    pub fn key(&self) -> usize {
        self.indices[0]
    }
}

pub fn ground_states(q: &QuboMatrix) -> Result<GroundStates> {
    let table = energy_table(q)?;
    let e_min = table.iter().copied().fold(f64::INFINITY, f64::min);
    let indices = (0..table.len()).filter(|&z| table[z] == e_min).collect();
    Ok(GroundStates { e_min, indices })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaoaOutcome {
    pub p: usize,
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub e_final: f64,
    pub e_min: f64,
    /// |⟨x_key|ψ⟩|².
    pub overlap: f64,
    /// Probability mass on every ground state.
    pub ground_probability: f64,
    /// exp(−(E_final − E_min)).
    pub proxy: f64,
    /// x_key as a bit string, qubit 0 first.
    pub x_key: String,
    pub ground_degeneracy: usize,
    /// Largest |‖ψ‖² − 1| seen after any layer.
    pub norm_drift: f64,
}

/// State after `p = gamma.len()` layers starting from |+⟩^⊗n, with the
/// largest per-layer norm drift.
pub fn evolve(energies: &[f64], n: usize, gamma: &[f64], beta: &[f64]) -> Result<(Vec<Complex64>, f64)> {
    let (mut psi, drift) = evolve_scaled(energies, n, gamma, beta)?;
    let scale = ((1usize << n) as f64).sqrt().recip();
    psi.iter_mut().for_each(|a| *a *= scale);
    Ok((psi, drift))
}

/// Evolution of `√(2^n)·|ψ⟩`. Starting from all-ones amplitudes and
/// dividing probabilities by 2^n keeps them exact for the identity circuit
/// (1/√(2^n) has no exact square for odd n).
fn evolve_scaled(energies: &[f64], n: usize, gamma: &[f64], beta: &[f64]) -> Result<(Vec<Complex64>, f64)> {
    check_size(n)?;
    if gamma.len() != beta.len() {
        return Err(Error::SizeMismatch { expected: gamma.len(), actual: beta.len() });
    }
    let dim = 1usize << n;
    let inv_dim = (dim as f64).recip();
    let mut psi = vec![Complex64::new(1.0, 0.0); dim];
    let mut drift = 0.0f64;
    for (&g, &b) in gamma.iter().zip(beta) {
        for (a, &e) in psi.iter_mut().zip(energies) {
            *a *= Complex64::from_polar(1.0, -g * e);
        }
        // exp(-iβX) on each qubit.
        let (c, s) = (b.cos(), b.sin());
        let mis = Complex64::new(0.0, -s);
        for qubit in 0..n {
            let bit = 1usize << qubit;
            for z in 0..dim {
                if z & bit == 0 {
                    let (a0, a1) = (psi[z], psi[z | bit]);
                    psi[z] = a0 * c + a1 * mis;
                    psi[z | bit] = a1 * c + a0 * mis;
                }
            }
        }
        let norm: f64 = psi.iter().map(|a| a.norm_sqr()).sum::<f64>() * inv_dim;
        drift = drift.max((norm - 1.0).abs());
        if drift > NORM_TOLERANCE {
            return Err(Error::InvalidArgument(format!("state norm drifted by {drift:e}")));
        }
    }
    Ok((psi, drift))
}

/// Precomputed energies and ground states for repeated simulation.
pub struct Simulator {
    n: usize,
    energies: Vec<f64>,
    ground: GroundStates,
}

impl Simulator {
    pub fn new(q: &QuboMatrix) -> Result<Self> {
        let energies = energy_table(q)?;
        let ground = ground_states(q)?;
        Ok(Self { n: q.n, energies, ground })
    }

    pub fn ground(&self) -> &GroundStates {
        &self.ground
    }

    pub fn run(&self, gamma: &[f64], beta: &[f64]) -> Result<QaoaOutcome> {
        if gamma.is_empty() {
            return Err(Error::InvalidArgument("at least one layer is required".into()));
        }
        let (psi, norm_drift) = evolve_scaled(&self.energies, self.n, gamma, beta)?;
        let inv_dim = ((1usize << self.n) as f64).recip();
        let prob = |z: usize| psi[z].norm_sqr() * inv_dim;
        let e_final = (0..psi.len()).map(|z| prob(z) * self.energies[z]).sum::<f64>();
        let key = self.ground.key();
        let gap = (e_final - self.ground.e_min).max(0.0);
        Ok(QaoaOutcome {
            p: gamma.len(),
            gamma: gamma.to_vec(),
            beta: beta.to_vec(),
            e_final,
            e_min: self.ground.e_min,
            overlap: prob(key),
            ground_probability: self.ground.indices.iter().map(|&z| prob(z)).sum(),
            proxy: (-gap).exp().max(f64::MIN_POSITIVE),
            x_key: bits_of(key, self.n).iter().map(|&b| if b { '1' } else { '0' }).collect(),
            ground_degeneracy: self.ground.indices.len(),
            norm_drift,
        })
    }
}

pub fn qaoa_simulate(q: &QuboMatrix, gamma: &[f64], beta: &[f64]) -> Result<QaoaOutcome> {
    Simulator::new(q)?.run(gamma, beta)
}

pub fn gamma_grid(i: usize) -> f64 {
    2.0 * PI * i as f64 / GRID_POINTS as f64
}

pub fn beta_grid(i: usize) -> f64 {
    PI * i as f64 / GRID_POINTS as f64
}

/// Grid search by block-coordinate descent: starting from all-zero angles,
/// each layer's `(γ_k, β_k)` pair is scanned over the full 32×32 grid in
/// turn (γ index outer, β inner) while the other layers stay fixed. Sweeps
/// repeat until one brings no improvement or `budget` simulations are spent.
/// The best point has the lowest `E_final`; ties keep the lexicographically
/// smallest `(γ_1, β_1, γ_2, β_2, …)`.
pub fn optimize_angles(q: &QuboMatrix, p: usize, budget: usize) -> Result<QaoaOutcome> {
    if p == 0 || budget == 0 {
        return Err(Error::InvalidArgument("layers and budget must be positive".into()));
    }
    let sim = Simulator::new(q)?;
    let angles = |idx: &[(usize, usize)]| -> (Vec<f64>, Vec<f64>) {
        idx.iter().map(|&(g, b)| (gamma_grid(g), beta_grid(b))).unzip()
    };
    let mut best_idx = vec![(0usize, 0usize); p];
    let (g, b) = angles(&best_idx);
    let mut best = sim.run(&g, &b)?;
    let mut spent = 1;
    'sweeps: loop {
        let mut improved = false;
        for layer in 0..p {
            for gi in 0..GRID_POINTS {
                for bi in 0..GRID_POINTS {
                    if spent == budget {
                        break 'sweeps;
                    }
                    let mut cand = best_idx.clone();
                    cand[layer] = (gi, bi);
                    if cand == best_idx {
                        continue;
                    }
                    let (g, b) = angles(&cand);
                    let out = sim.run(&g, &b)?;
                    spent += 1;
                    if out.e_final < best.e_final || (out.e_final == best.e_final && cand < best_idx) {
                        improved |= out.e_final < best.e_final;
                        best = out;
                        best_idx = cand;
                    }
                }
            }
        }
        if !improved {
            break;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuccessEstimate {
    pub overlap: f64,
    pub proxy: f64,
    /// The two figures differ by more than a factor of 10.
    pub disagree: bool,
}

pub fn success_probability(outcome: &QaoaOutcome) -> SuccessEstimate {
    let (a, b) = (outcome.overlap.max(f64::MIN_POSITIVE), outcome.proxy);
    SuccessEstimate { overlap: outcome.overlap, proxy: outcome.proxy, disagree: a / b > 10.0 || b / a > 10.0 }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkEstimate {
    pub key_bits: u32,
    pub fold_n: u64,
    pub cost_constant: f64,
    /// ⌈(π/4)·2^{k/2}⌉.
    pub iterations: f64,
    /// c·N³ per oracle query.
    pub per_query: f64,
    pub total: f64,
    /// 2^k·c·N³.
    pub classical_total: f64,
    pub speedup: f64,
}

pub fn grover_work(key_bits: u32, fold_n: u64, c: f64) -> Result<WorkEstimate> {
    if fold_n == 0 {
        return Err(Error::InvalidArgument("fold length must be at least 1".into()));
    }
    let iterations = (FRAC_PI_4 * 2f64.powf(f64::from(key_bits) / 2.0)).ceil();
    let per_query = c * (fold_n as f64).powi(3);
    let total = iterations * per_query;
    let classical_total = 2f64.powi(key_bits as i32) * per_query;
    Ok(WorkEstimate {
        key_bits,
        fold_n,
        cost_constant: c,
        iterations,
        per_query,
        total,
        classical_total,
        speedup: 2f64.powi(key_bits as i32) / iterations,
    })
}
