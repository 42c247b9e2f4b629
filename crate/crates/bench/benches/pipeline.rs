use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use ncrna::codon::{encode, CodonSBox, RnaSequence};
use ncrna::crypto::chacha20;
use ncrna::envelope::{decrypt, encrypt};
use ncrna::fold::{fold, EnergyModel};
use ncrna::harness::{make_cipher, Algorithm};
use ncrna::qattack::{build_reference_qubo, optimize_angles, qaoa_simulate, Profile};

fn data(n: usize) -> Vec<u8> {
    let mut v = vec![0u8; n];
    ChaCha20Rng::seed_from_u64(n as u64).fill_bytes(&mut v);
    v
}

fn folding(c: &mut Criterion) {
    let sbox = CodonSBox::build(b"bench").unwrap();
    let model = EnergyModel::default();
    let mut g = c.benchmark_group("fold");
    for bases in [60usize, 240, 960] {
        let rna: RnaSequence = encode(&data(bases / 4), &sbox);
        g.bench_with_input(BenchmarkId::from_parameter(rna.len()), &rna, |b, rna| b.iter(|| fold(black_box(rna), &model)));
    }
    g.finish();
}

fn keystream(c: &mut Criterion) {
    let mut g = c.benchmark_group("chacha20");
    let mut buf = data(1 << 20);
    g.throughput(Throughput::Bytes(buf.len() as u64));
    g.bench_function("1MiB", |b| b.iter(|| chacha20::xor_in_place(&[7; 32], &[1; 12], 0, black_box(&mut buf))));
    g.finish();
}

fn envelope(c: &mut Criterion) {
    let mut g = c.benchmark_group("envelope");
    g.sample_size(10);
    for size in [1_000usize, 100_000, 1 << 20] {
        let msg = data(size);
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        g.throughput(Throughput::Bytes(size as u64));
        g.bench_with_input(BenchmarkId::new("encrypt", size), &msg, |b, m| {
            b.iter(|| encrypt(m, b"secret", b"seed", &mut rng).unwrap())
        });
        let env = encrypt(&msg, b"secret", b"seed", &mut rng).unwrap();
        g.bench_with_input(BenchmarkId::new("decrypt", size), &env, |b, e| b.iter(|| decrypt(e, b"secret", b"seed").unwrap()));
    }
    g.finish();
}

fn baselines(c: &mut Criterion) {
    let mut g = c.benchmark_group("baseline_100KB");
    g.sample_size(10);
    let msg = data(100_000);
    for alg in [Algorithm::Ncrna, Algorithm::Aes256Cbc, Algorithm::Rsa2048Oaep] {
        let mut cipher = make_cipher(alg, 1).unwrap();
        g.bench_function(alg.to_string(), |b| {
            b.iter(|| {
                let ct = cipher.encrypt(&msg).unwrap();
                cipher.decrypt(&ct).unwrap()
            })
        });
    }
    g.finish();
}

fn qaoa(c: &mut Criterion) {
    let mut g = c.benchmark_group("qaoa");
    let q = build_reference_qubo(Profile::BandedDense, 12).unwrap();
    g.bench_function("simulate_n12_p4", |b| {
        b.iter(|| qaoa_simulate(&q, &[0.1, 0.2, 0.3, 0.4], &[0.4, 0.3, 0.2, 0.1]).unwrap())
    });
    let q6 = build_reference_qubo(Profile::BandedDense, 6).unwrap();
    g.sample_size(10);
    g.bench_function("optimize_n6_p2", |b| b.iter(|| optimize_angles(&q6, 2, 2048).unwrap()));
    g.finish();
}

criterion_group!(benches, folding, keystream, envelope, baselines, qaoa);
criterion_main!(benches);
