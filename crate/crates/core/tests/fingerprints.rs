use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;
use vscreen_core::activation::Activation;
use vscreen_core::ecfp::{ecfp, identifier_set, EcfpConfig};
use vscreen_core::ingest::parse_graph_jsonl;
use vscreen_core::model::{predict, ModelConfig, ModelParams};
use vscreen_core::molgraph::{encode_features, AtomRecord, Element, MolGraph, MolKind};
use vscreen_core::neural::{neural_fingerprint, NeuralFpConfig, NeuralFpParams};
use vscreen_core::synth::random_molecule;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

#[test]
fn ecfp_matches_golden_file() {
    let graphs = parse_graph_jsonl(&data("golden_mols.jsonl")).unwrap();
    let golden = std::fs::read_to_string(data("ecfp_golden.tsv")).unwrap();
    let mut rows = 0;
    for line in golden.lines() {
        let cols: Vec<&str> = line.split('\t').collect();
        let g = graphs.iter().find(|g| g.id() == cols[0]).unwrap();
        let radius: u32 = cols[1].parse().unwrap();
        let cfg = EcfpConfig::new(radius, cols[2].parse().unwrap()).unwrap();
        assert_eq!(
            ecfp(g, &cfg).to_hex(),
            cols[3],
            "{} r{} w{}",
            cols[0],
            cols[1],
            cols[2]
        );
        assert_eq!(
            identifier_set(g, radius).len(),
            cols[4].parse::<usize>().unwrap()
        );
        rows += 1;
    }
    assert_eq!(rows, graphs.len() * 5);
}

#[test]
fn anilinium_radius_two() {
    let graphs = parse_graph_jsonl(&data("golden_mols.jsonl")).unwrap();
    let g = graphs.iter().find(|g| g.id() == "anilinium").unwrap();
    let fp = ecfp(g, &EcfpConfig::new(2, 128).unwrap());
    assert_eq!(fp.to_hex(), "01001000000080818200800081000400");
    assert_eq!(identifier_set(g, 2).len(), 12);
}

fn random_graph(seed: u64, max_atoms: usize) -> MolGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=max_atoms);
    random_molecule(&mut rng, format!("r{seed}"), n, MolKind::Compound)
}

fn random_perm(n: usize, seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    perm
}

fn fp_params(activation: Activation, size: usize, seed: u64) -> NeuralFpParams {
    let cfg = NeuralFpConfig {
        layer_widths: vec![16, 12],
        fingerprint_size: size,
        activation,
        ..NeuralFpConfig::default()
    };
    NeuralFpParams::init(&cfg, &mut ChaCha8Rng::seed_from_u64(seed))
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn features_permute_with_atoms(seed in any::<u64>(), pseed in any::<u64>()) {
        let g = random_graph(seed, 30);
        let perm = random_perm(g.atom_count(), pseed);
        let (a, b) = (encode_features(&g), encode_features(&g.permuted(&perm)));
        for (old, &new) in perm.iter().enumerate() {
            prop_assert_eq!(a.row(old), b.row(new));
        }
    }

    #[test]
    fn ecfp_is_permutation_invariant(seed in any::<u64>(), pseed in any::<u64>(), radius in 0u32..4) {
        let g = random_graph(seed, 30);
        let h = g.permuted(&random_perm(g.atom_count(), pseed));
        let cfg = EcfpConfig::new(radius, 512).unwrap().counted(true);
        prop_assert_eq!(ecfp(&g, &cfg), ecfp(&h, &cfg));
    }

    #[test]
    fn identifiers_grow_with_radius(seed in any::<u64>(), radius in 0u32..5) {
        let g = random_graph(seed, 25);
        let small = identifier_set(&g, radius);
        let large = identifier_set(&g, radius + 1);
        prop_assert!(small.is_subset(&large));
    }

    #[test]
    fn neural_is_permutation_invariant(seed in any::<u64>(), pseed in any::<u64>(), tanh in any::<bool>()) {
        let g = random_graph(seed, 30);
        let h = g.permuted(&random_perm(g.atom_count(), pseed));
        let act = if tanh { Activation::Tanh } else { Activation::Relu };
        let params = fp_params(act, 24, seed ^ 0x5eed);
        let (a, _) = neural_fingerprint(&g, &params).unwrap();
        let (b, _) = neural_fingerprint(&h, &params).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
    }

    #[test]
    fn neural_length_and_mass_are_fixed(seed in any::<u64>(), n in 1usize..=50) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_molecule(&mut rng, "g", n, MolKind::Pocket);
        let params = fp_params(Activation::Sigmoid, 20, seed);
        let (fp, _) = neural_fingerprint(&g, &params).unwrap();
        prop_assert_eq!(fp.values.len(), 20);
        prop_assert_eq!(fp.atom_count, n);
        let total: f64 = fp.values.iter().sum();
        prop_assert!((total - n as f64).abs() <= 1e-9);
        prop_assert!(fp.values.iter().all(|&v| (0.0..=n as f64).contains(&v)));
    }

    #[test]
    fn predict_is_permutation_invariant(seed in any::<u64>(), pseed in any::<u64>()) {
        let l = random_graph(seed, 20);
        let p = random_graph(seed.wrapping_add(1), 20);
        let lp = l.permuted(&random_perm(l.atom_count(), pseed));
        let pp = p.permuted(&random_perm(p.atom_count(), pseed ^ 1));
        let params = ModelParams::init(&ModelConfig::tiny(Activation::Relu), &mut ChaCha8Rng::seed_from_u64(seed));
        let a = predict(&l, &p, &params).unwrap();
        let b = predict(&lp, &pp, &params).unwrap();
        prop_assert!((a.logit - b.logit).abs() <= 1e-9);
    }
}

/// Records how far ECFP moves under a single element swap. Printed only.
#[test]
fn element_swap_hamming_profile() {
    let cfg = EcfpConfig::new(2, 1024).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut distances = Vec::new();
    for i in 0..200 {
        let n = rng.gen_range(5..25);
        let g = random_molecule(&mut rng, format!("h{i}"), n, MolKind::Compound);
        let mut atoms = g.atoms().to_vec();
        let m = rng.gen_range(0..n);
        let choices: Vec<Element> = Element::ALL
            .iter()
            .copied()
            .filter(|e| *e != atoms[m].element)
            .collect();
        atoms[m] = AtomRecord {
            element: *choices.choose(&mut rng).unwrap(),
            ..atoms[m]
        };
        let h = MolGraph::new(g.id(), g.kind(), atoms, g.bonds().to_vec()).unwrap();
        distances.push(ecfp(&g, &cfg).hamming(&ecfp(&h, &cfg)).unwrap());
    }
    distances.sort_unstable();
    let q = |f: f64| distances[((distances.len() - 1) as f64 * f) as usize];
    println!(
        "single element swap, radius 2, 1024 bits: min {} median {} p90 {} max {}",
        q(0.0),
        q(0.5),
        q(0.9),
        q(1.0)
    );
}
