//! Random-pair negatives.

use crate::ingest::{Dataset, PairIdx};
use rand::Rng;
use std::collections::HashSet;
use thiserror::Error;

/// Rejection attempts per draw before concluding the space is exhausted.
const MAX_REJECTIONS: usize = 10_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NegativeError {
    #[error("dataset has no compounds or no pockets")]
    EmptyDataset,
    #[error("every (ligand, pocket) pair is a known positive; no negatives can be drawn")]
    ExhaustedNegativeSpace,
}

/// Draws `count` pairs with the ligand and the pocket chosen uniformly and
/// independently. With `exclude_positives`, known positives are redrawn.
pub fn sample_negatives<R: Rng + ?Sized>(
    dataset: &Dataset,
    count: usize,
    exclude_positives: bool,
    rng: &mut R,
) -> Result<Vec<PairIdx>, NegativeError> {
    let (n_lig, n_poc) = (dataset.compounds.len(), dataset.pockets.len());
    if n_lig == 0 || n_poc == 0 {
        return Err(NegativeError::EmptyDataset);
    }
    let known: HashSet<PairIdx> = if exclude_positives {
        dataset.positives.iter().copied().collect()
    } else {
        HashSet::new()
    };
    if exclude_positives && known.len() >= n_lig * n_poc {
        return Err(NegativeError::ExhaustedNegativeSpace);
    }
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut tries = 0;
        loop {
            let pair = PairIdx {
                ligand: rng.gen_range(0..n_lig),
                pocket: rng.gen_range(0..n_poc),
            };
            if !known.contains(&pair) {
                out.push(pair);
                break;
            }
            tries += 1;
            if tries >= MAX_REJECTIONS {
                return Err(NegativeError::ExhaustedNegativeSpace);
            }
        }
    }
    Ok(out)
}
