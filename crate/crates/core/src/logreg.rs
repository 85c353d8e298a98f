//! Compound-only logistic regression on ECFP bits.
//!
//! Sees ligands only, never the target. Used to measure how much of a
//! benchmark can be solved without modelling the pair.

use crate::activation::{sigmoid, softplus};
use crate::ecfp::EcfpFingerprint;
use crate::metrics::{auc, MetricsError};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogRegConfig {
    pub l2: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        LogRegConfig {
            l2: 1e-4,
            learning_rate: 0.5,
            epochs: 30,
            batch_size: 64,
            seed: 0,
        }
    }
}

#[derive(Debug, Error)]
pub enum LogRegError {
    #[error("{0} fingerprints but {1} labels")]
    LengthMismatch(usize, usize),
    #[error("fingerprints must share one width")]
    WidthMismatch,
    #[error("invalid logistic regression config: {0}")]
    Config(String),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LogRegModel {
    pub fn logit_bits(&self, bits: &[usize]) -> f64 {
        self.bias + bits.iter().map(|&b| self.weights[b]).sum::<f64>()
    }

    pub fn logit(&self, fp: &EcfpFingerprint) -> f64 {
        self.logit_bits(&fp.set_bits().collect::<Vec<_>>())
    }

    pub fn probability(&self, fp: &EcfpFingerprint) -> f64 {
        sigmoid(self.logit(fp))
    }
}

#[derive(Debug, Clone)]
pub struct LogRegFit {
    pub model: LogRegModel,
    pub training_auc: f64,
    /// Mean regularized log-loss after the final epoch.
    pub training_loss: f64,
}

/// Fits L2-regularized logistic regression by minibatch gradient descent.
/// Presence bits are used, so counted fingerprints behave like binary ones.
pub fn train_logreg_compound_only(
    fingerprints: &[EcfpFingerprint],
    labels: &[bool],
    cfg: &LogRegConfig,
) -> Result<LogRegFit, LogRegError> {
    if fingerprints.len() != labels.len() {
        return Err(LogRegError::LengthMismatch(
            fingerprints.len(),
            labels.len(),
        ));
    }
    if cfg.epochs == 0
        || cfg.batch_size == 0
        || cfg.learning_rate.is_nan()
        || cfg.learning_rate <= 0.0
        || cfg.l2.is_nan()
        || cfg.l2 < 0.0
    {
        return Err(LogRegError::Config(
            "epochs, batch_size and learning_rate must be positive, l2 non-negative".into(),
        ));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    if n_pos == 0 || n_pos == labels.len() {
        return Err(MetricsError::DegenerateLabels {
            target: None,
            n_pos,
            n_neg: labels.len() - n_pos,
        }
        .into());
    }
    let width = fingerprints[0].width();
    if fingerprints.iter().any(|f| f.width() != width) {
        return Err(LogRegError::WidthMismatch);
    }
    let bits: Vec<Vec<usize>> = fingerprints
        .iter()
        .map(|f| f.set_bits().collect())
        .collect();
    let mut model = LogRegModel {
        weights: vec![0.0; width],
        bias: 0.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..bits.len()).collect();
    let mut grad = vec![0.0; width];
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let scale = 1.0 / batch.len() as f64;
            let mut grad_b = 0.0;
            grad.iter_mut().for_each(|g| *g = 0.0);
            for &i in batch {
                let y = if labels[i] { 1.0 } else { 0.0 };
                let dz = (sigmoid(model.logit_bits(&bits[i])) - y) * scale;
                grad_b += dz;
                for &b in &bits[i] {
                    grad[b] += dz;
                }
            }
            for (w, g) in model.weights.iter_mut().zip(&grad) {
                *w -= cfg.learning_rate * (g + cfg.l2 * *w);
            }
            model.bias -= cfg.learning_rate * grad_b;
        }
    }
    let logits: Vec<f64> = bits.iter().map(|b| model.logit_bits(b)).collect();
    let scored: Vec<(f64, bool)> = logits.iter().copied().zip(labels.iter().copied()).collect();
    let data_loss = logits
        .iter()
        .zip(labels)
        .map(|(&z, &l)| if l { softplus(-z) } else { softplus(z) })
        .sum::<f64>()
        / logits.len() as f64;
    let reg = 0.5 * cfg.l2 * model.weights.iter().map(|w| w * w).sum::<f64>();
    Ok(LogRegFit {
        training_auc: auc(&scored)?,
        training_loss: data_loss + reg,
        model,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ecfp::EcfpFingerprint;

    fn fp(bits: &[usize]) -> EcfpFingerprint {
        EcfpFingerprint::from_bits(16, bits)
    }

    #[test]
    fn separable_toy_set() {
        let fps = vec![
            fp(&[0, 3]),
            fp(&[0, 5]),
            fp(&[1, 3]),
            fp(&[1, 7]),
            fp(&[0]),
            fp(&[1]),
        ];
        let labels = vec![true, true, false, false, true, false];
        let fit = train_logreg_compound_only(&fps, &labels, &LogRegConfig::default()).unwrap();
        assert_eq!(fit.training_auc, 1.0);
        assert!(fit.model.probability(&fp(&[0])) > 0.5);
    }

    #[test]
    fn single_class_rejected() {
        let err =
            train_logreg_compound_only(&[fp(&[1])], &[true], &LogRegConfig::default()).unwrap_err();
        assert!(matches!(
            err,
            LogRegError::Metrics(MetricsError::DegenerateLabels { .. })
        ));
    }
}
