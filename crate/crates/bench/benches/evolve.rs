use std::hint::black_box;

use antiblockade::integrator::lindblad_rhs;
use antiblockade::model::{build_decay_channels, build_static_frame_hamiltonian};
use antiblockade::presets::{self, Case};
use antiblockade::{average_gate_fidelity, evolve, FidelityMode, NoiseRealization, QuantumState};
use criterion::{criterion_group, criterion_main, Criterion};

fn bench_rhs(c: &mut Criterion) {
    let p = presets::fast_gate_10mhz();
    let r = NoiseRealization::nominal(&p);
    let h = build_static_frame_hamiltonian(0.4, &p, &r).unwrap();
    let channels = build_decay_channels(p.gamma, &p.branching);
    let rho = *QuantumState::basis(1).matrix();
    c.bench_function("dense_lindblad_rhs", |b| {
        b.iter(|| lindblad_rhs(black_box(&rho), &h, &channels))
    });
}

fn bench_evolve(c: &mut Criterion) {
    let mut group = c.benchmark_group("evolve");
    group.sample_size(10);
    for (name, p) in [
        ("qubit_only", presets::optimised_gate(Case::Gaussian, true)),
        ("leaky", presets::fast_gate_10mhz()),
    ] {
        let r = NoiseRealization::nominal(&p);
        group.bench_function(name, |b| {
            b.iter(|| evolve(&QuantumState::basis(1), black_box(&p), &r, 4000).unwrap())
        });
    }
    group.finish();
}

fn bench_fidelity(c: &mut Criterion) {
    let p = presets::optimised_gate(Case::Gaussian, true);
    let r = NoiseRealization::nominal(&p);
    let mut group = c.benchmark_group("fidelity");
    group.sample_size(10);
    group.bench_function("average_gate_fidelity", |b| {
        b.iter(|| average_gate_fidelity(black_box(&p), &r, FidelityMode::Uhlmann, 4000).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_rhs, bench_evolve, bench_fidelity);
criterion_main!(benches);
