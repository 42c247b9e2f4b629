//! Dense-operator QAOA oracle built from the Ising form of the QUBO
//! (x_i = (1 - z_i)/2) with Pauli Kronecker products.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use ncrna::qattack::*;
use num_complex::Complex64;

type C = Complex64;

pub fn pauli_on(n: usize, qubit: usize, op: &DMatrix<f64>) -> DMatrix<f64> {
    // Qubit 0 is the least significant bit, so it is the last Kronecker factor.
    let id = DMatrix::<f64>::identity(2, 2);
    let mut m = DMatrix::<f64>::identity(1, 1);
    for k in (0..n).rev() {
        m = m.kronecker(if k == qubit { op } else { &id });
    }
    m
}

pub fn ising_hamiltonian(q: &QuboMatrix) -> DMatrix<f64> {
    let n = q.n;
    let z = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
    let dim = 1 << n;
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    let mut constant = 0.0;
    for i in 0..n {
        let zi = pauli_on(n, i, &z);
        let mut hi = -q.diag[i] / 2.0;
        constant += q.diag[i] / 2.0;
        for j in 0..n {
            if j != i {
                hi -= q.q[i][j] / 4.0;
            }
            if j > i {
                constant += q.q[i][j] / 4.0;
                h += (&zi * pauli_on(n, j, &z)) * (q.q[i][j] / 4.0);
            }
        }
        h += zi * hi;
    }
    h + DMatrix::<f64>::identity(dim, dim) * constant
}

pub fn mixer(n: usize) -> DMatrix<f64> {
    let x = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
    (0..n).map(|i| pauli_on(n, i, &x)).fold(DMatrix::zeros(1 << n, 1 << n), |a, b| a + b)
}

/// exp(-i t H) for real symmetric H.
pub fn expm(h: &DMatrix<f64>, t: f64) -> DMatrix<C> {
    let eig = h.clone().symmetric_eigen();
    let v = eig.eigenvectors.map(|x| C::new(x, 0.0));
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| C::from_polar(1.0, -t * l)));
    &v * d * v.adjoint()
}

pub fn dense_state(q: &QuboMatrix, gamma: &[f64], beta: &[f64]) -> (DVector<C>, f64) {
    let dim = 1 << q.n;
    let hc = ising_hamiltonian(q);
    let hm = mixer(q.n);
    let mut psi = DVector::from_element(dim, C::new((dim as f64).sqrt().recip(), 0.0));
    for (&g, &b) in gamma.iter().zip(beta) {
        psi = expm(&hm, b) * (expm(&hc, g) * psi);
    }
    let hc_c = hc.map(|x| C::new(x, 0.0));
    let e = (psi.adjoint() * hc_c * &psi)[(0, 0)].re;
    (psi, e)
}

pub fn random_qubo(n: usize, coeffs: &[i32]) -> QuboMatrix {
    let mut q = build_reference_qubo(Profile::SparseDiagonal, 4).unwrap();
    q.n = n;
    q.q = vec![vec![0.0; n]; n];
    q.diag = vec![0.0; n];
    let mut c = coeffs.iter().map(|&v| f64::from(v));
    for i in 0..n {
        q.diag[i] = c.next().unwrap();
        for j in i + 1..n {
            let v = c.next().unwrap();
            q.q[i][j] = v;
            q.q[j][i] = v;
        }
    }
    q
}

/// Largest disagreement between the simulator and the dense oracle: state
/// fidelity gap, per-basis probability, key overlap, and relative energy.
pub fn compare(q: &QuboMatrix, gamma: &[f64], beta: &[f64]) -> f64 {
    let out = qaoa_simulate(q, gamma, beta).unwrap();
    let (psi, e) = dense_state(q, gamma, beta);
    let energies = energy_table(q).unwrap();
    let (fast, _) = evolve(&energies, q.n, gamma, beta).unwrap();
    // Same state up to a global phase.
    let inner: C = fast.iter().zip(psi.iter()).map(|(a, b)| a.conj() * b).sum();
    let mut worst = (inner.norm() - 1.0).abs();
    for (a, b) in fast.iter().zip(psi.iter()) {
        worst = worst.max((a.norm_sqr() - b.norm_sqr()).abs());
    }
    let key = ground_states(q).unwrap().key();
    worst = worst.max((out.overlap - psi[key].norm_sqr()).abs());
    worst.max((out.e_final - e).abs() / e.abs().max(1.0))
}
