use proptest::prelude::*;
use vscreen_core::metrics::{auc, report_from_scores, TargetScores, AUC_THRESHOLDS};

/// O(n²) pair counting with half credit for ties.
fn brute_force(scores: &[(f64, bool)]) -> f64 {
    let pos: Vec<f64> = scores.iter().filter(|s| s.1).map(|s| s.0).collect();
    let neg: Vec<f64> = scores.iter().filter(|s| !s.1).map(|s| s.0).collect();
    let mut credit = 0.0;
    for p in &pos {
        for n in &neg {
            credit += if p > n {
                1.0
            } else if p == n {
                0.5
            } else {
                0.0
            };
        }
    }
    credit / (pos.len() * neg.len()) as f64
}

/// Scores drawn from a few levels produce heavy ties.
fn score_set() -> impl Strategy<Value = Vec<(f64, bool)>> {
    let continuous = prop::collection::vec((-5.0f64..5.0, any::<bool>()), 2..200);
    let tied = prop::collection::vec(
        ((0u8..4).prop_map(|v| v as f64 * 0.25), any::<bool>()),
        2..200,
    );
    prop_oneof![continuous, tied].prop_filter("both classes", |s| {
        s.iter().any(|x| x.1) && s.iter().any(|x| !x.1)
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 500, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn auc_matches_pair_counting(scores in score_set()) {
        let got = auc(&scores).unwrap();
        prop_assert!((got - brute_force(&scores)).abs() <= 1e-12);
        prop_assert!((0.0..=1.0).contains(&got));
    }

    #[test]
    fn threshold_counts_never_increase(groups in prop::collection::vec(score_set(), 1..12)) {
        let groups: Vec<TargetScores> = groups
            .into_iter()
            .enumerate()
            .map(|(i, scores)| TargetScores { target: format!("t{i}"), scores })
            .collect();
        let report = report_from_scores("m", &groups, true).unwrap();
        let counts: Vec<usize> = AUC_THRESHOLDS.iter().map(|&a| report.threshold_count(a).unwrap()).collect();
        prop_assert!(counts.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(counts[0] <= groups.len());
        let mean = report.per_target.values().map(|t| t.auc).sum::<f64>() / groups.len() as f64;
        prop_assert!((report.mean_auc - mean).abs() <= 1e-12);
    }
}

#[test]
fn heavy_tie_example() {
    let scores = [(0.9, true), (0.8, false), (0.8, true), (0.1, false)];
    assert_eq!(auc(&scores).unwrap(), 0.875);
    assert_eq!(brute_force(&scores), 0.875);
}
