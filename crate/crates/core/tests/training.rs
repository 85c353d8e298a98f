use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vscreen_core::activation::Activation;
use vscreen_core::ecfp::{ecfp, EcfpConfig};
use vscreen_core::ingest::Dataset;
use vscreen_core::logreg::{train_logreg_compound_only, LogRegConfig};
use vscreen_core::metrics::auc;
use vscreen_core::model::{ModelConfig, ModelParams, ParamsFile};
use vscreen_core::molgraph::{MolGraph, MolKind};
use vscreen_core::negatives::sample_negatives;
use vscreen_core::optim::OptimizerConfig;
use vscreen_core::synth::{generate_synthetic, random_molecule, SynthSpec};
use vscreen_core::train::{train, TrainConfig};

fn graphs(n_compounds: usize, n_pockets: usize, seed: u64) -> Vec<MolGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for i in 0..n_compounds {
        let n = rng.gen_range(4..10);
        out.push(random_molecule(
            &mut rng,
            format!("c{i}"),
            n,
            MolKind::Compound,
        ));
    }
    for i in 0..n_pockets {
        let n = rng.gen_range(6..12);
        out.push(random_molecule(
            &mut rng,
            format!("p{i}"),
            n,
            MolKind::Pocket,
        ));
    }
    out
}

fn pair(l: &str, p: &str) -> (String, String) {
    (l.to_string(), p.to_string())
}

#[test]
fn single_positive_objective_halves_in_200_steps() {
    let ds = Dataset::new(graphs(6, 3, 1), &[pair("c0", "p0")], &[]).unwrap();
    let init = ModelParams::init(
        &ModelConfig::tiny(Activation::Tanh),
        &mut ChaCha8Rng::seed_from_u64(3),
    );
    let cfg = TrainConfig {
        epochs: 200,
        batch_size: 1,
        learning_rate: 1e-2,
        negative_ratio: 4,
        exclude_known_positives: true,
        heldout_fraction: 0.0,
        patience: 200,
        ..TrainConfig::default()
    };
    let out = train(&ds, &init, &cfg).unwrap();
    assert_eq!(out.step_objectives.len(), 200);
    let start = -out.step_objectives[0];
    let end = -out.step_objectives[190..].iter().sum::<f64>() / 10.0;
    println!("-L at step 0: {start:.4}; mean of last 10 steps: {end:.4}");
    assert!(end <= 0.5 * start, "-L went from {start} to {end}");
}

#[test]
fn adam_runs_are_byte_identical() {
    let spec = SynthSpec {
        n_targets: 3,
        n_compounds: 60,
        actives_per_target: 6,
        decoys_per_target: Some(10),
        compound_atoms: (5, 9),
        pocket_atoms: (6, 9),
        seed: 12,
        ..SynthSpec::default()
    };
    let synth = generate_synthetic(&spec).unwrap();
    let ds = Dataset::new(synth.graphs(), &synth.positives, &synth.eval_pairs).unwrap();
    let cfg = TrainConfig {
        epochs: 3,
        batch_size: 4,
        learning_rate: 5e-3,
        optimizer: OptimizerConfig::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        },
        seed: 21,
        ..TrainConfig::default()
    };
    let run = || {
        let init = ModelParams::init(
            &ModelConfig::tiny(Activation::Relu),
            &mut ChaCha8Rng::seed_from_u64(8),
        );
        ParamsFile::new(train(&ds, &init, &cfg).unwrap().params, 8).to_json()
    };
    let a = run();
    let b = vscreen_core::par::with_threads(1, run);
    assert_eq!(a, b);
}

#[test]
fn negative_pairs_are_uniform() {
    let ds = Dataset::new(graphs(10, 10, 2), &[pair("c0", "p0")], &[]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let draws = sample_negatives(&ds, 10_000, false, &mut rng).unwrap();
    let mut counts = [[0usize; 10]; 10];
    for d in &draws {
        counts[d.ligand][d.pocket] += 1;
    }
    let n = draws.len() as f64;
    let p = 0.01;
    let sigma = (n * p * (1.0 - p)).sqrt();
    for row in &counts {
        for &c in row {
            assert!((c as f64 - n * p).abs() <= 5.0 * sigma, "count {c}");
        }
    }
}

#[test]
fn logreg_on_permuted_labels_is_at_chance() {
    let cfg = EcfpConfig::default();
    let library = graphs(3000, 0, 5);
    let fps: Vec<_> = library.iter().map(|g| ecfp(g, &cfg)).collect();
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut labels: Vec<bool> = (0..fps.len()).map(|i| i % 2 == 0).collect();
        labels.shuffle(&mut rng);
        let (train_x, test_x) = fps.split_at(1000);
        let (train_y, test_y) = labels.split_at(1000);
        let fit = train_logreg_compound_only(
            train_x,
            train_y,
            &LogRegConfig {
                seed,
                ..LogRegConfig::default()
            },
        )
        .unwrap();
        let scores: Vec<(f64, bool)> = test_x
            .iter()
            .zip(test_y)
            .map(|(x, &y)| (fit.model.logit(x), y))
            .collect();
        let held_out = auc(&scores).unwrap();
        assert!((0.4..=0.6).contains(&held_out), "seed {seed}: {held_out}");
    }
}
