//! Target splits and the compound-only baseline evaluation.

use crate::ecfp::{ecfp, EcfpConfig};
use crate::ingest::Dataset;
use crate::logreg::{train_logreg_compound_only, LogRegConfig, LogRegError};
use crate::metrics::{
    group_eval_pairs, report_from_scores, EvalReport, MetricsError, TargetScores,
};
use crate::par;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("cannot hold out {holdout} of {total} targets")]
    BadSplit { holdout: usize, total: usize },
    #[error("no evaluation pairs for {0} targets")]
    NoEvalPairs(&'static str),
    #[error(transparent)]
    LogReg(#[from] LogRegError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Holds out the last `holdout` pockets in file order; returns
/// (train, held-out) indices.
pub fn split_targets(
    n_pockets: usize,
    holdout: usize,
) -> Result<(Vec<usize>, Vec<usize>), ExperimentError> {
    if holdout == 0 || holdout >= n_pockets {
        return Err(ExperimentError::BadSplit {
            holdout,
            total: n_pockets,
        });
    }
    let cut = n_pockets - holdout;
    Ok(((0..cut).collect(), (cut..n_pockets).collect()))
}

/// Fits compound-only LR on the evaluation pairs of `train` pockets and
/// reports per-target AUC on the pockets in `test`.
pub fn logreg_baseline(
    dataset: &Dataset,
    train: &[usize],
    test: &[usize],
    fp: &EcfpConfig,
    cfg: &LogRegConfig,
) -> Result<EvalReport, ExperimentError> {
    let fps = par::map(&dataset.compounds, |g| ecfp(g, fp));
    let groups = group_eval_pairs(dataset);
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (_, members) in groups.iter().filter(|(p, _)| train.contains(p)) {
        for &(l, label) in members {
            x.push(fps[l].clone());
            y.push(label);
        }
    }
    if x.is_empty() {
        return Err(ExperimentError::NoEvalPairs("training"));
    }
    let fit = train_logreg_compound_only(&x, &y, cfg)?;
    let scored: Vec<TargetScores> = groups
        .iter()
        .filter(|(p, _)| test.contains(p))
        .map(|(p, members)| TargetScores {
            target: dataset.pocket_id(*p).to_string(),
            scores: members
                .iter()
                .map(|&(l, label)| (fit.model.logit(&fps[l]), label))
                .collect(),
        })
        .collect();
    if scored.is_empty() {
        return Err(ExperimentError::NoEvalPairs("test"));
    }
    Ok(report_from_scores("cmpds ECFP + LR", &scored, false)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_takes_the_tail() {
        let (tr, ho) = split_targets(12, 4).unwrap();
        assert_eq!(tr, (0..8).collect::<Vec<_>>());
        assert_eq!(ho, vec![8, 9, 10, 11]);
        assert!(split_targets(3, 3).is_err());
        assert!(split_targets(3, 0).is_err());
    }
}
