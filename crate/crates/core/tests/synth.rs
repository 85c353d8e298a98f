use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use vscreen_core::molgraph::{MolGraph, MolKind};
use vscreen_core::synth::{
    complement_motif, contains_motif, generate_synthetic, random_molecule, DecoySharing, SynthSpec,
};

fn assert_valid(g: &MolGraph) {
    let rebuilt = MolGraph::new(g.id(), g.kind(), g.atoms().to_vec(), g.bonds().to_vec())
        .expect("valid graph");
    assert_eq!(&rebuilt, g);
    assert!((0..g.atom_count()).all(|m| g.degree(m) <= 5));
}

#[test]
fn ten_thousand_random_graphs_are_valid() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for i in 0..10_000 {
        let n = rng.gen_range(1..40);
        let kind = if i % 2 == 0 {
            MolKind::Compound
        } else {
            MolKind::Pocket
        };
        let g = random_molecule(&mut rng, format!("g{i}"), n, kind);
        assert_eq!(g.atom_count(), n);
        assert_valid(&g);
    }
}

fn small_spec() -> impl Strategy<Value = SynthSpec> {
    (2usize..5, 1usize..3, any::<bool>(), any::<u64>()).prop_map(
        |(targets, motif_length, shared, seed)| SynthSpec {
            n_targets: targets,
            n_compounds: 40 * targets,
            actives_per_target: 5,
            decoys_per_target: Some(10),
            motif_length,
            decoy_sharing: if shared {
                DecoySharing::SharedPool
            } else {
                DecoySharing::PerTarget
            },
            compound_atoms: (4, 10),
            pocket_atoms: (6, 10),
            seed,
            ..SynthSpec::default()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 40, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn generated_datasets_follow_their_rule(spec in small_spec()) {
        let ds = generate_synthetic(&spec).unwrap();
        prop_assert_eq!(ds.pockets.len(), spec.n_targets);
        prop_assert_eq!(ds.compounds.len(), spec.n_compounds);
        prop_assert_eq!(ds.positives.len(), spec.n_targets * spec.actives_per_target);
        ds.compounds.iter().chain(&ds.pockets).for_each(assert_valid);
        let compounds: HashMap<&str, &MolGraph> = ds.compounds.iter().map(|g| (g.id(), g)).collect();
        let targets: HashMap<&str, usize> = ds.pockets.iter().enumerate().map(|(i, g)| (g.id(), i)).collect();
        for s in &ds.eval_pairs {
            let class = complement_motif(&ds.motifs[targets[s.pocket_id.as_str()]]);
            prop_assert_eq!(contains_motif(compounds[s.ligand_id.as_str()], &class), s.label == 1);
        }
    }
}
