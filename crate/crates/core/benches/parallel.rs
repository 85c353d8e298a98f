use criterion::{criterion_group, criterion_main, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;
use vscreen_core::activation::Activation;
use vscreen_core::ecfp::{ecfp, EcfpConfig};
use vscreen_core::model::{nce_loss, ModelConfig, ModelParams};
use vscreen_core::molgraph::{MolGraph, MolKind};
use vscreen_core::neural::{neural_fingerprint, NeuralFpConfig, NeuralFpParams};
use vscreen_core::par;
use vscreen_core::synth::random_molecule;

fn library(n: usize, kind: MolKind, seed: u64) -> Vec<MolGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let atoms = rng.gen_range(12..30);
            random_molecule(&mut rng, format!("m{i}"), atoms, kind)
        })
        .collect()
}

fn fingerprints(c: &mut Criterion) {
    let mols = library(1000, MolKind::Compound, 1);
    let cfg = EcfpConfig::default();
    let mut group = c.benchmark_group("ecfp_1000");
    group.bench_function("sequential", |b| {
        b.iter(|| par::map_seq(black_box(&mols), |g| ecfp(g, &cfg)))
    });
    group.bench_function("parallel", |b| {
        b.iter(|| par::map(black_box(&mols), |g| ecfp(g, &cfg)))
    });
    group.finish();

    let params = NeuralFpParams::init(
        &NeuralFpConfig::default(),
        &mut ChaCha8Rng::seed_from_u64(2),
    );
    let forward = |g: &MolGraph| neural_fingerprint(g, &params).unwrap().0;
    let mut group = c.benchmark_group("neural_fp_200");
    group.sample_size(20);
    group.bench_function("sequential", |b| {
        b.iter(|| par::map_seq(black_box(&mols[..200]), forward))
    });
    group.bench_function("parallel", |b| {
        b.iter(|| par::map(black_box(&mols[..200]), forward))
    });
    group.finish();
}

fn batch_gradient(c: &mut Criterion) {
    let ligands = library(64, MolKind::Compound, 3);
    let pockets = library(8, MolKind::Pocket, 4);
    let params = ModelParams::init(
        &ModelConfig::tiny(Activation::Relu),
        &mut ChaCha8Rng::seed_from_u64(5),
    );
    let pos: Vec<_> = ligands
        .iter()
        .take(32)
        .enumerate()
        .map(|(i, l)| (l, &pockets[i % 8]))
        .collect();
    let neg: Vec<_> = ligands
        .iter()
        .skip(32)
        .enumerate()
        .map(|(i, l)| (l, &pockets[(i + 3) % 8]))
        .collect();
    let mut group = c.benchmark_group("nce_loss_batch_64");
    group.sample_size(20);
    group.bench_function("sequential", |b| {
        b.iter(|| par::with_threads(1, || nce_loss(&params, black_box(&pos), &neg, 1.0).unwrap()))
    });
    group.bench_function("parallel", |b| {
        b.iter(|| nce_loss(&params, black_box(&pos), &neg, 1.0).unwrap())
    });
    group.finish();
}

criterion_group!(benches, fingerprints, batch_gradient);
criterion_main!(benches);
