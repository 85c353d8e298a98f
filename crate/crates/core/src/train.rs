//! Minibatch training of the dual-tower model against random-pair negatives.

use crate::ingest::{Dataset, PairIdx};
use crate::model::{nce_loss, nce_objective, GraphPair, ModelError, ModelParams};
use crate::negatives::{sample_negatives, NegativeError};
use crate::optim::{Optimizer, OptimizerConfig};
use crate::params::Parameters;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Positive pairs per step.
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerConfig,
    pub seed: u64,
    /// Random negatives drawn per positive in a batch.
    pub negative_ratio: usize,
    /// Weight λ of the negative term.
    pub neg_weight: f64,
    /// Epochs without held-out improvement before stopping.
    pub patience: usize,
    /// Share of positives held out for the per-epoch objective.
    pub heldout_fraction: f64,
    /// Redraw negatives that happen to be known positives.
    pub exclude_known_positives: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 20,
            batch_size: 32,
            learning_rate: 1e-3,
            optimizer: OptimizerConfig::default(),
            seed: 0,
            negative_ratio: 1,
            neg_weight: 1.0,
            patience: 5,
            heldout_fraction: 0.1,
            exclude_known_positives: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::Config(m.to_string()));
        if self.epochs == 0
            || self.batch_size == 0
            || self.negative_ratio == 0
            || self.patience == 0
        {
            return bad("epochs, batch_size, negative_ratio and patience must be positive");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return bad("learning_rate must be finite and non-negative");
        }
        if !(self.neg_weight.is_finite() && self.neg_weight > 0.0) {
            return bad("neg_weight must be finite and positive");
        }
        if !(0.0..1.0).contains(&self.heldout_fraction) {
            return bad("heldout_fraction must lie in [0, 1)");
        }
        if let OptimizerConfig::Adam { beta1, beta2, eps } = self.optimizer {
            if !(0.0..1.0).contains(&beta1)
                || !(0.0..1.0).contains(&beta2)
                || eps.is_nan()
                || eps <= 0.0
            {
                return bad("adam needs beta1, beta2 in [0, 1) and eps > 0");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("dataset has no positive pairs")]
    NoPositives,
    #[error(
        "non-finite loss at step {step} (objective {objective}, gradients finite: {grads_finite})"
    )]
    NonFiniteLoss {
        step: u64,
        objective: f64,
        grads_finite: bool,
    },
    #[error(transparent)]
    Negatives(#[from] NegativeError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochLog {
    pub epoch: usize,
    /// Mean training objective `L` over the epoch's steps.
    pub objective: f64,
    /// Objective on the held-out split; `None` without one.
    pub heldout_objective: Option<f64>,
    pub wall_ms: u128,
}

#[derive(Debug, Clone)]
pub struct TrainResult {
    pub params: ModelParams,
    pub epochs: Vec<EpochLog>,
    /// Training objective of every step, before its update.
    pub step_objectives: Vec<f64>,
    pub stopped_early: bool,
}

fn graph_pairs<'a>(dataset: &'a Dataset, pairs: &[PairIdx]) -> Vec<GraphPair<'a>> {
    pairs.iter().map(|&p| dataset.pair(p)).collect()
}

/// Trains `init` on `dataset.positives`. Fully determined by `cfg`.
///
/// When a held-out split exists, the parameters from the epoch with the
/// best held-out objective are returned.
pub fn train(
    dataset: &Dataset,
    init: &ModelParams,
    cfg: &TrainConfig,
) -> Result<TrainResult, TrainError> {
    cfg.validate()?;
    init.validate()?;
    if dataset.positives.is_empty() {
        return Err(TrainError::NoPositives);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut positives = dataset.positives.clone();
    positives.shuffle(&mut rng);
    let n_heldout = ((positives.len() as f64) * cfg.heldout_fraction).floor() as usize;
    let n_heldout = n_heldout.min(positives.len() - 1);
    let heldout_pos: Vec<PairIdx> = positives.drain(..n_heldout).collect();
    let heldout_neg = if heldout_pos.is_empty() {
        Vec::new()
    } else {
        sample_negatives(
            dataset,
            heldout_pos.len() * cfg.negative_ratio,
            cfg.exclude_known_positives,
            &mut rng,
        )?
    };

    let mut params = init.clone();
    let mut opt = Optimizer::new(cfg.optimizer, cfg.learning_rate, params.num_params());
    let mut epochs = Vec::with_capacity(cfg.epochs);
    let mut step_objectives = Vec::new();
    let mut best: Option<(f64, ModelParams)> = None;
    let mut since_best = 0;
    let mut stopped_early = false;

    for epoch in 1..=cfg.epochs {
        let started = Instant::now();
        positives.shuffle(&mut rng);
        let mut sum = 0.0;
        let mut steps = 0usize;
        for batch in positives.chunks(cfg.batch_size) {
            let negatives = sample_negatives(
                dataset,
                batch.len() * cfg.negative_ratio,
                cfg.exclude_known_positives,
                &mut rng,
            )?;
            let out = nce_loss(
                &params,
                &graph_pairs(dataset, batch),
                &graph_pairs(dataset, &negatives),
                cfg.neg_weight,
            )?;
            let step = opt.steps_taken();
            let grads_finite = out.grads.all_finite();
            if !out.objective.is_finite() || !grads_finite {
                return Err(TrainError::NonFiniteLoss {
                    step,
                    objective: out.objective,
                    grads_finite,
                });
            }
            opt.step(&mut params, &out.grads);
            if !params.all_finite() {
                return Err(TrainError::NonFiniteLoss {
                    step,
                    objective: out.objective,
                    grads_finite,
                });
            }
            step_objectives.push(out.objective);
            sum += out.objective;
            steps += 1;
        }
        let heldout_objective = if heldout_pos.is_empty() {
            None
        } else {
            Some(nce_objective(
                &params,
                &graph_pairs(dataset, &heldout_pos),
                &graph_pairs(dataset, &heldout_neg),
                cfg.neg_weight,
            )?)
        };
        epochs.push(EpochLog {
            epoch,
            objective: sum / steps as f64,
            heldout_objective,
            wall_ms: started.elapsed().as_millis(),
        });
        if let Some(h) = heldout_objective {
            if !h.is_finite() {
                return Err(TrainError::NonFiniteLoss {
                    step: opt.steps_taken(),
                    objective: h,
                    grads_finite: true,
                });
            }
            if best.as_ref().is_none_or(|(b, _)| h > *b) {
                best = Some((h, params.clone()));
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= cfg.patience {
                    stopped_early = true;
                    break;
                }
            }
        }
    }
    let params = best.map(|(_, p)| p).unwrap_or(params);
    Ok(TrainResult {
        params,
        epochs,
        step_objectives,
        stopped_early,
    })
}

/// Writes `epoch,objective,heldout_objective,wall_ms` rows; a missing
/// held-out value is an empty field.
pub fn write_epoch_csv<W: Write>(mut out: W, epochs: &[EpochLog]) -> std::io::Result<()> {
    writeln!(out, "epoch,objective,heldout_objective,wall_ms")?;
    for e in epochs {
        let heldout = e
            .heldout_objective
            .map(|h| h.to_string())
            .unwrap_or_default();
        writeln!(out, "{},{},{},{}", e.epoch, e.objective, heldout, e.wall_ms)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::Activation;
    use crate::model::ModelConfig;
    use crate::synth::{generate_synthetic, DecoySharing, SynthSpec};

    fn tiny_dataset() -> Dataset {
        let spec = SynthSpec {
            n_targets: 2,
            n_compounds: 30,
            actives_per_target: 5,
            decoys_per_target: None,
            motif_length: 2,
            decoy_sharing: DecoySharing::PerTarget,
            heldout_targets: 0,
            motif_types: None,
            compound_atoms: (5, 9),
            pocket_atoms: (6, 8),
            seed: 5,
        };
        let ds = generate_synthetic(&spec).unwrap();
        Dataset::new(ds.graphs(), &ds.positives, &ds.eval_pairs).unwrap()
    }

    fn init() -> ModelParams {
        ModelParams::init(
            &ModelConfig::tiny(Activation::Relu),
            &mut ChaCha8Rng::seed_from_u64(1),
        )
    }

    #[test]
    fn zero_learning_rate_keeps_params() {
        let ds = tiny_dataset();
        let cfg = TrainConfig {
            learning_rate: 0.0,
            epochs: 2,
            batch_size: 4,
            ..TrainConfig::default()
        };
        let out = train(&ds, &init(), &cfg).unwrap();
        assert_eq!(out.params, init());
    }

    #[test]
    fn reruns_are_identical() {
        let ds = tiny_dataset();
        let cfg = TrainConfig {
            epochs: 3,
            batch_size: 4,
            learning_rate: 1e-2,
            ..TrainConfig::default()
        };
        let a = train(&ds, &init(), &cfg).unwrap();
        let b = train(&ds, &init(), &cfg).unwrap();
        assert_eq!(a.params.flatten(), b.params.flatten());
        assert_eq!(a.step_objectives, b.step_objectives);
        assert_eq!(a.epochs.len(), 3);
        assert!(a.epochs[0].heldout_objective.is_some());
    }

    #[test]
    fn bad_config_rejected() {
        let ds = tiny_dataset();
        let cfg = TrainConfig {
            batch_size: 0,
            ..TrainConfig::default()
        };
        assert!(matches!(
            train(&ds, &init(), &cfg),
            Err(TrainError::Config(_))
        ));
    }

    #[test]
    fn exploding_lr_reports_step() {
        let ds = tiny_dataset();
        let cfg = TrainConfig {
            optimizer: OptimizerConfig::Sgd,
            learning_rate: 1e300,
            epochs: 5,
            batch_size: 2,
            ..TrainConfig::default()
        };
        assert!(matches!(
            train(&ds, &init(), &cfg),
            Err(TrainError::NonFiniteLoss { .. })
        ));
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        let rows = [
            EpochLog {
                epoch: 1,
                objective: -1.5,
                heldout_objective: Some(-1.25),
                wall_ms: 3,
            },
            EpochLog {
                epoch: 2,
                objective: -1.0,
                heldout_objective: None,
                wall_ms: 4,
            },
        ];
        write_epoch_csv(&mut buf, &rows).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "epoch,objective,heldout_objective,wall_ms\n1,-1.5,-1.25,3\n2,-1,,4\n"
        );
    }
}
