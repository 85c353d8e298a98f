//! ROC AUC and per-target evaluation reports.

use crate::ingest::Dataset;
use crate::model::{pair_logits, GraphPair, ModelError, ModelParams};
use crate::par;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use thiserror::Error;

/// Thresholds reported in [`EvalReport::threshold_counts`].
pub const AUC_THRESHOLDS: [f64; 3] = [0.7, 0.8, 0.9];

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("AUC needs both classes{}: {n_pos} positives, {n_neg} negatives", target_suffix(.target))]
    DegenerateLabels {
        target: Option<String>,
        n_pos: usize,
        n_neg: usize,
    },
    #[error("score {0} is not finite")]
    NonFiniteScore(f64),
    #[error("no evaluation pairs")]
    NoPairs,
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn target_suffix(target: &Option<String>) -> String {
    target
        .as_ref()
        .map(|t| format!(" for target '{t}'"))
        .unwrap_or_default()
}

/// Mann–Whitney AUC with midranks for tied scores.
pub fn auc(scores: &[(f64, bool)]) -> Result<f64, MetricsError> {
    let n_pos = scores.iter().filter(|s| s.1).count();
    let n_neg = scores.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(MetricsError::DegenerateLabels {
            target: None,
            n_pos,
            n_neg,
        });
    }
    if let Some(&(s, _)) = scores.iter().find(|s| !s.0.is_finite()) {
        return Err(MetricsError::NonFiniteScore(s));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].0.total_cmp(&scores[b].0));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]].0 == scores[order[i]].0 {
            j += 1;
        }
        // ranks i+1 ..= j share their mean
        let midrank = (i + 1 + j) as f64 / 2.0;
        let positives = order[i..j].iter().filter(|&&k| scores[k].1).count();
        rank_sum += midrank * positives as f64;
        i = j;
    }
    let (p, n) = (n_pos as f64, n_neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetAuc {
    pub auc: f64,
    pub n_pos: usize,
    pub n_neg: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedTarget {
    pub target: String,
    pub n_pos: usize,
    pub n_neg: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: String,
    pub total_auc: f64,
    pub mean_auc: f64,
    /// Population standard deviation over `per_target`.
    pub std_auc: f64,
    pub per_target: BTreeMap<String, TargetAuc>,
    /// Keys are the thresholds printed with one decimal ("0.7").
    pub threshold_counts: BTreeMap<String, usize>,
    pub skipped: Vec<SkippedTarget>,
}

/// Scores for one target, in any order.
#[derive(Debug, Clone)]
pub struct TargetScores {
    pub target: String,
    pub scores: Vec<(f64, bool)>,
}

/// Builds a report from per-target scores.
///
/// Targets lacking a class are listed in `skipped`, or rejected when `strict`.
pub fn report_from_scores(
    method: &str,
    groups: &[TargetScores],
    strict: bool,
) -> Result<EvalReport, MetricsError> {
    let pooled: Vec<(f64, bool)> = groups
        .iter()
        .flat_map(|g| g.scores.iter().copied())
        .collect();
    if pooled.is_empty() {
        return Err(MetricsError::NoPairs);
    }
    let total_auc = auc(&pooled)?;
    let mut per_target = BTreeMap::new();
    let mut skipped = Vec::new();
    for g in groups {
        let n_pos = g.scores.iter().filter(|s| s.1).count();
        let n_neg = g.scores.len() - n_pos;
        match auc(&g.scores) {
            Ok(a) => {
                per_target.insert(
                    g.target.clone(),
                    TargetAuc {
                        auc: a,
                        n_pos,
                        n_neg,
                    },
                );
            }
            Err(MetricsError::DegenerateLabels { .. }) if !strict => skipped.push(SkippedTarget {
                target: g.target.clone(),
                n_pos,
                n_neg,
            }),
            Err(MetricsError::DegenerateLabels { .. }) => {
                return Err(MetricsError::DegenerateLabels {
                    target: Some(g.target.clone()),
                    n_pos,
                    n_neg,
                })
            }
            Err(e) => return Err(e),
        }
    }
    let values: Vec<f64> = per_target.values().map(|t| t.auc).collect();
    let (mean_auc, std_auc) = mean_std(&values);
    let threshold_counts = AUC_THRESHOLDS
        .iter()
        .map(|&a| {
            (
                format!("{a:.1}"),
                values.iter().filter(|&&v| v >= a).count(),
            )
        })
        .collect();
    Ok(EvalReport {
        method: method.to_string(),
        total_auc,
        mean_auc,
        std_auc,
        per_target,
        threshold_counts,
        skipped,
    })
}

/// Mean and population standard deviation; NaN for an empty slice.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Groups a dataset's evaluation pairs by pocket, in pocket order.
pub fn group_eval_pairs(dataset: &Dataset) -> Vec<(usize, Vec<(usize, bool)>)> {
    let mut groups: BTreeMap<usize, Vec<(usize, bool)>> = BTreeMap::new();
    for &(pair, label) in &dataset.eval_pairs {
        groups
            .entry(pair.pocket)
            .or_default()
            .push((pair.ligand, label));
    }
    groups.into_iter().collect()
}

/// Scores every evaluation pair with the model and reports per target.
/// Scores are logits, which rank exactly like probabilities without
/// saturating.
pub fn evaluate(
    params: &ModelParams,
    dataset: &Dataset,
    strict: bool,
) -> Result<EvalReport, MetricsError> {
    let groups = group_eval_pairs(dataset);
    let scored = par::map(
        &groups,
        |(pocket, members)| -> Result<TargetScores, MetricsError> {
            let p = &dataset.pockets[*pocket];
            let pairs: Vec<GraphPair<'_>> = members
                .iter()
                .map(|&(l, _)| (&dataset.compounds[l], p))
                .collect();
            let logits = pair_logits(params, &pairs)?;
            Ok(TargetScores {
                target: p.id().to_string(),
                scores: logits
                    .into_iter()
                    .zip(members.iter().map(|m| m.1))
                    .collect(),
            })
        },
    );
    let scored = scored.into_iter().collect::<Result<Vec<_>, _>>()?;
    let method = format!("dual-tower({})", params.ligand_fp.method_name());
    report_from_scores(&method, &scored, strict)
}

impl EvalReport {
    pub fn threshold_count(&self, alpha: f64) -> Option<usize> {
        self.threshold_counts.get(&format!("{alpha:.1}")).copied()
    }

    /// Summary row plus a per-target listing.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let n = self.per_target.len();
        let header = [
            "Method",
            "Total AUC",
            "Mean AUC (± std.)",
            "AUC ≥ 0.7",
            "AUC ≥ 0.8",
            "AUC ≥ 0.9",
        ];
        let counts: Vec<String> = AUC_THRESHOLDS
            .iter()
            .map(|&a| self.threshold_count(a).unwrap_or(0).to_string())
            .collect();
        let row = [
            self.method.clone(),
            format!("{:.3}", self.total_auc),
            format!("{:.3} ± {:.3}", self.mean_auc, self.std_auc),
            counts[0].clone(),
            counts[1].clone(),
            counts[2].clone(),
        ];
        let widths: Vec<usize> = header
            .iter()
            .zip(&row)
            .map(|(h, r)| h.chars().count().max(r.chars().count()))
            .collect();
        let line = |cells: &[String]| {
            cells
                .iter()
                .zip(&widths)
                .map(|(c, &w)| format!("{c:<w$}"))
                .collect::<Vec<_>>()
                .join(" | ")
                .trim_end()
                .to_string()
        };
        let header: Vec<String> = header.iter().map(|s| s.to_string()).collect();
        let _ = writeln!(out, "{}", line(&header));
        let _ = writeln!(
            out,
            "{}",
            widths
                .iter()
                .map(|&w| "-".repeat(w))
                .collect::<Vec<_>>()
                .join("-+-")
        );
        let _ = writeln!(out, "{}", line(&row));
        let _ = writeln!(out, "AUC ≥ α counts are out of {n} targets.");
        if !self.per_target.is_empty() {
            let _ = writeln!(out);
            let id_w = self
                .per_target
                .keys()
                .map(|k| k.len())
                .max()
                .unwrap_or(6)
                .max(6);
            let _ = writeln!(
                out,
                "{:<id_w$}  {:>6}  {:>6}  {:>6}",
                "target", "auc", "n_pos", "n_neg"
            );
            for (id, t) in &self.per_target {
                let _ = writeln!(
                    out,
                    "{id:<id_w$}  {:>6.3}  {:>6}  {:>6}",
                    t.auc, t.n_pos, t.n_neg
                );
            }
        }
        for s in &self.skipped {
            let _ = writeln!(
                out,
                "skipped {}: {} positives, {} negatives",
                s.target, s.n_pos, s.n_neg
            );
        }
        out
    }
}

/// JSON Schema for serialized [`EvalReport`]s.
pub const EVAL_REPORT_SCHEMA: &str = include_str!("../schema/eval_report.schema.json");
