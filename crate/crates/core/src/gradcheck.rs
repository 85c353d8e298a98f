//! Central finite-difference check of the full pair-loss gradient.

use crate::activation::Activation;
use crate::model::{nce_loss, nce_objective, GraphPair, ModelConfig, ModelError, ModelParams};
use crate::molgraph::{MolGraph, MolKind};
use crate::params::Parameters;
use crate::synth::random_molecule;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GradCheckConfig {
    pub instances: usize,
    pub min_atoms: usize,
    pub max_atoms: usize,
    pub step: f64,
    pub tolerance: f64,
    /// Denominator floor for the relative error.
    pub floor: f64,
    pub activation: Activation,
    pub seed: u64,
    /// Negates the analytic gradient of blocks whose name contains this.
    #[serde(skip)]
    pub sign_flip: Option<String>,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig {
            instances: 20,
            min_atoms: 3,
            max_atoms: 15,
            step: 1e-6,
            tolerance: 1e-4,
            floor: 1e-5,
            activation: Activation::Tanh,
            seed: 0,
            sign_flip: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockError {
    pub block: String,
    pub params: usize,
    pub max_rel_err: f64,
    pub max_abs_err: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckReport {
    pub instances: usize,
    pub blocks: Vec<BlockError>,
    pub max_rel_err: f64,
    pub passed: bool,
}

/// `|a − n| / max(|a|, |n|, floor)`.
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    let diff = (analytic - numeric).abs();
    if diff == 0.0 {
        return 0.0;
    }
    diff / analytic.abs().max(numeric.abs()).max(floor)
}

struct Instance {
    compounds: Vec<MolGraph>,
    pockets: Vec<MolGraph>,
    positives: Vec<(usize, usize)>,
    negatives: Vec<(usize, usize)>,
    neg_weight: f64,
    params: ModelParams,
}

fn instance(cfg: &GradCheckConfig, index: usize) -> Instance {
    let mut rng =
        ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_mul(1_000_003).wrapping_add(index as u64));
    let size =
        |rng: &mut ChaCha8Rng| rng.gen_range(cfg.min_atoms..=cfg.max_atoms.max(cfg.min_atoms));
    let compounds: Vec<MolGraph> = (0..3)
        .map(|i| {
            let n = size(&mut rng);
            random_molecule(&mut rng, format!("c{i}"), n, MolKind::Compound)
        })
        .collect();
    let pockets: Vec<MolGraph> = (0..2)
        .map(|i| {
            let n = size(&mut rng);
            random_molecule(&mut rng, format!("p{i}"), n, MolKind::Pocket)
        })
        .collect();
    let mut params = ModelParams::init(&ModelConfig::tiny(cfg.activation), &mut rng);
    // nonzero biases so their paths are exercised
    params.visit_blocks_mut("", &mut |_, b| {
        for v in b.iter_mut() {
            *v += rng.gen_range(-0.1..0.1);
        }
    });
    Instance {
        compounds,
        pockets,
        positives: vec![(0, 0), (1, 1)],
        negatives: vec![(2, 0), (0, 1), (1, 0)],
        neg_weight: rng.gen_range(0.5..1.5),
        params,
    }
}

fn pairs<'a>(inst: &'a Instance, idx: &[(usize, usize)]) -> Vec<GraphPair<'a>> {
    idx.iter()
        .map(|&(l, p)| (&inst.compounds[l], &inst.pockets[p]))
        .collect()
}

/// Compares analytic `∂(−L)/∂θ` against central differences on seeded
/// random instances. Block errors are maxima over all instances.
pub fn run_grad_check(cfg: &GradCheckConfig) -> Result<GradCheckReport, ModelError> {
    let mut blocks: Vec<BlockError> = Vec::new();
    for index in 0..cfg.instances {
        let inst = instance(cfg, index);
        let pos = pairs(&inst, &inst.positives);
        let neg = pairs(&inst, &inst.negatives);
        let mut analytic = nce_loss(&inst.params, &pos, &neg, inst.neg_weight)?.grads;
        if let Some(pattern) = &cfg.sign_flip {
            analytic.visit_blocks_mut("", &mut |name, b| {
                if name.contains(pattern.as_str()) {
                    b.iter_mut().for_each(|v| *v = -*v);
                }
            });
        }
        let analytic = analytic.flatten();
        let base = inst.params.flatten();
        let mut probe = inst.params.clone();
        let mut theta = base.clone();
        let mut eval = |theta: &[f64]| -> Result<f64, ModelError> {
            probe.assign_flat(theta);
            Ok(-nce_objective(&probe, &pos, &neg, inst.neg_weight)?)
        };
        let mut offset = 0;
        for (bi, (name, len)) in inst.params.block_names().into_iter().enumerate() {
            if blocks.len() <= bi {
                blocks.push(BlockError {
                    block: name.clone(),
                    params: len,
                    max_rel_err: 0.0,
                    max_abs_err: 0.0,
                });
            }
            for i in offset..offset + len {
                theta[i] = base[i] + cfg.step;
                let up = eval(&theta)?;
                theta[i] = base[i] - cfg.step;
                let down = eval(&theta)?;
                theta[i] = base[i];
                let numeric = (up - down) / (2.0 * cfg.step);
                let b = &mut blocks[bi];
                b.max_rel_err = b
                    .max_rel_err
                    .max(relative_error(analytic[i], numeric, cfg.floor));
                b.max_abs_err = b.max_abs_err.max((analytic[i] - numeric).abs());
            }
            offset += len;
        }
    }
    let max_rel_err = blocks.iter().map(|b| b.max_rel_err).fold(0.0, f64::max);
    Ok(GradCheckReport {
        instances: cfg.instances,
        passed: max_rel_err < cfg.tolerance,
        blocks,
        max_rel_err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_error_floor() {
        assert_eq!(relative_error(1.0, 1.0, 1e-6), 0.0);
        assert!((relative_error(2.0, 1.0, 1e-6) - 0.5).abs() < 1e-15);
        assert!((relative_error(1e-9, 0.0, 1e-6) - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn two_instances_pass() {
        let cfg = GradCheckConfig {
            instances: 2,
            ..GradCheckConfig::default()
        };
        let r = run_grad_check(&cfg).unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn sign_flip_fails() {
        let cfg = GradCheckConfig {
            instances: 1,
            sign_flip: Some("pocket_mlp".into()),
            ..GradCheckConfig::default()
        };
        let r = run_grad_check(&cfg).unwrap();
        assert!(!r.passed);
    }
}
