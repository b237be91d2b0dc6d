//! Accuracy, true positive / negative rates, ROC AUC and the
//! Kohavi–Wolpert variance of an ensemble.

use crate::data::Label;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fn_: usize,
    pub tn: usize,
    pub fp: usize,
}

impl ConfusionCounts {
    pub fn from_labels(truth: &[Label], predicted: &[Label]) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::invalid("truth and prediction lengths differ"));
        }
        let mut c = ConfusionCounts::default();
        for (&t, &p) in truth.iter().zip(predicted) {
            match (t, p) {
                (Label::Positive, Label::Positive) => c.tp += 1,
                (Label::Positive, Label::Negative) => c.fn_ += 1,
                (Label::Negative, Label::Negative) => c.tn += 1,
                (Label::Negative, Label::Positive) => c.fp += 1,
            }
        }
        Ok(c)
    }

    pub fn positives(&self) -> usize {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> usize {
        self.tn + self.fp
    }

    pub fn total(&self) -> usize {
        self.positives() + self.negatives()
    }

    /// `100 (TP + TN) / (P + N)`.
    pub fn accuracy(&self) -> Result<f64> {
        if self.total() == 0 {
            return Err(Error::UndefinedMetric {
                metric: "accuracy",
                reason: "no instances",
            });
        }
        Ok(100.0 * (self.tp + self.tn) as f64 / self.total() as f64)
    }
}

/// Per-instance outcome of one evaluated model.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoredPredictions {
    pub truth: Vec<Label>,
    pub predicted: Vec<Label>,
    /// Positive-class score used for ranking.
    pub scores: Vec<f64>,
    /// `member_correct[instance][member]`, present for ensembles.
    pub member_correct: Option<Vec<Vec<bool>>>,
}

/// Percentage of `predicted` equal to `truth`.
pub fn accuracy(truth: &[Label], predicted: &[Label]) -> Result<f64> {
    if truth.len() != predicted.len() {
        return Err(Error::invalid("truth and prediction lengths differ"));
    }
    if truth.is_empty() {
        return Err(Error::UndefinedMetric {
            metric: "accuracy",
            reason: "no instances",
        });
    }
    let correct = truth.iter().zip(predicted).filter(|(t, p)| t == p).count();
    Ok(100.0 * correct as f64 / truth.len() as f64)
}

/// True positive rate `TP / P`.
pub fn sensitivity(counts: &ConfusionCounts) -> Result<f64> {
    if counts.positives() == 0 {
        return Err(Error::UndefinedMetric {
            metric: "sensitivity",
            reason: "no positive instances",
        });
    }
    Ok(counts.tp as f64 / counts.positives() as f64)
}

/// True negative rate `TN / N`.
pub fn specificity(counts: &ConfusionCounts) -> Result<f64> {
    if counts.negatives() == 0 {
        return Err(Error::UndefinedMetric {
            metric: "specificity",
            reason: "no negative instances",
        });
    }
    Ok(counts.tn as f64 / counts.negatives() as f64)
}

/// Area under the ROC curve as the Mann–Whitney statistic: the chance that
/// a random positive outscores a random negative, ties counting one half.
pub fn roc_auc(truth: &[Label], scores: &[f64]) -> Result<f64> {
    if truth.len() != scores.len() {
        return Err(Error::invalid("truth and score lengths differ"));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::invalid("NaN score"));
    }
    let n_pos = truth.iter().filter(|&&l| l == Label::Positive).count();
    let n_neg = truth.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric {
            metric: "roc_auc",
            reason: "needs both classes",
        });
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Sum of average ranks (1-based) of the positives.
    let mut rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let avg_rank = (start + 1 + end) as f64 / 2.0;
        let pos_in_block = order[start..end].iter().filter(|&&i| truth[i] == Label::Positive).count();
        rank_sum += avg_rank * pos_in_block as f64;
        start = end;
    }
    let (p, n) = (n_pos as f64, n_neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

fn check_matrix(correct: &[Vec<bool>]) -> Result<usize> {
    let l = correct.first().map_or(0, Vec::len);
    if correct.iter().any(|row| row.len() != l) {
        return Err(Error::invalid("ragged member correctness matrix"));
    }
    Ok(l)
}

/// Kohavi–Wolpert variance (Kuncheva and Whitaker):
/// `1 / (N L^2) * sum_j l_j (L - l_j)` with `l_j` the number of members
/// that misclassify instance `j`. `correct[instance][member]`.
pub fn kw_variance(correct: &[Vec<bool>]) -> Result<f64> {
    let l = check_matrix(correct)?;
    if correct.is_empty() {
        return Err(Error::invalid("KW variance needs at least one instance"));
    }
    if l < 2 {
        return Err(Error::invalid("KW variance needs at least two members"));
    }
    let sum: usize = correct
        .iter()
        .map(|row| {
            let wrong = row.iter().filter(|&&c| !c).count();
            wrong * (l - wrong)
        })
        .sum();
    Ok(sum as f64 / (correct.len() * l * l) as f64)
}

/// Mean of the members' individual accuracies, in percent.
pub fn member_mean_accuracy(correct: &[Vec<bool>]) -> Result<f64> {
    let l = check_matrix(correct)?;
    if l == 0 || correct.is_empty() {
        return Err(Error::invalid("member accuracy needs members and instances"));
    }
    let total = (0..l)
        .map(|m| 100.0 * correct.iter().filter(|row| row[m]).count() as f64 / correct.len() as f64)
        .sum::<f64>();
    Ok(total / l as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use Label::{Negative as N, Positive as P};

    /// Pairwise enumeration of positive–negative score comparisons.
    fn auc_oracle(truth: &[Label], scores: &[f64]) -> f64 {
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for i in 0..truth.len() {
            for j in 0..truth.len() {
                if truth[i] == P && truth[j] == N {
                    pairs += 1.0;
                    if scores[i] > scores[j] {
                        wins += 1.0;
                    } else if scores[i] == scores[j] {
                        wins += 0.5;
                    }
                }
            }
        }
        wins / pairs
    }

    /// Trapezoids under the threshold-swept curve.
    fn auc_sweep(truth: &[Label], scores: &[f64]) -> f64 {
        let mut thresholds: Vec<f64> = scores.to_vec();
        thresholds.sort_by(|a, b| b.total_cmp(a));
        thresholds.dedup();
        let p = truth.iter().filter(|&&l| l == P).count() as f64;
        let n = truth.len() as f64 - p;
        let mut prev = (0.0, 0.0);
        let mut area = 0.0;
        for t in thresholds {
            let tp = (0..truth.len()).filter(|&i| truth[i] == P && scores[i] >= t).count() as f64 / p;
            let fp = (0..truth.len()).filter(|&i| truth[i] == N && scores[i] >= t).count() as f64 / n;
            area += (fp - prev.0) * (tp + prev.1) / 2.0;
            prev = (fp, tp);
        }
        area
    }

    #[test]
    fn accuracy_examples() {
        let truth = vec![P; 10];
        let mut pred = vec![P; 10];
        pred[0] = N;
        pred[1] = N;
        assert_eq!(accuracy(&truth, &pred).unwrap(), 80.0);
        assert_eq!(accuracy(&truth, &truth).unwrap(), 100.0);
        assert_eq!(accuracy(&truth, &[N; 10]).unwrap(), 0.0);
        assert!(accuracy(&[], &[]).is_err());
    }

    #[test]
    fn rates_and_undefined_denominators() {
        let c = ConfusionCounts { tp: 7, fn_: 3, tn: 0, fp: 0 };
        assert_eq!(sensitivity(&c).unwrap(), 0.7);
        assert!(matches!(specificity(&c), Err(Error::UndefinedMetric { .. })));
        let truth = [P, P, N, N, N];
        let always_neg = ConfusionCounts::from_labels(&truth, &[N; 5]).unwrap();
        assert_eq!(specificity(&always_neg).unwrap(), 1.0);
        assert_eq!(sensitivity(&always_neg).unwrap(), 0.0);
        let no_pos = ConfusionCounts { tp: 0, fn_: 0, tn: 2, fp: 1 };
        assert!(matches!(sensitivity(&no_pos), Err(Error::UndefinedMetric { .. })));
    }

    #[test]
    fn auc_examples() {
        assert_eq!(roc_auc(&[P, P, N, N], &[0.9, 0.8, 0.2, 0.1]).unwrap(), 1.0);
        assert_eq!(roc_auc(&[P, N, P, N], &[0.3; 4]).unwrap(), 0.5);
        assert_eq!(roc_auc(&[P, P, N, N], &[0.9, 0.4, 0.6, 0.1]).unwrap(), 0.75);
        assert!(matches!(roc_auc(&[P, P], &[0.1, 0.2]), Err(Error::UndefinedMetric { .. })));
    }

    #[test]
    fn kw_examples() {
        assert_eq!(kw_variance(&[vec![true, true], vec![false, false]]).unwrap(), 0.0);
        let one = vec![vec![true, false], vec![true, true], vec![true, true], vec![false, false]];
        assert_eq!(kw_variance(&one).unwrap(), 0.0625);
        let half = vec![vec![true, false, true, false]; 3];
        assert_eq!(kw_variance(&half).unwrap(), 0.25);
        assert!(kw_variance(&[vec![true]]).is_err());
    }

    #[test]
    fn member_accuracy_examples() {
        // Member 0 is right on 8 of 10, member 1 on 7 of 10.
        let m: Vec<Vec<bool>> = (0..10).map(|i| vec![i < 8, i < 7]).collect();
        assert_eq!(member_mean_accuracy(&m).unwrap(), 75.0);
        assert!(member_mean_accuracy(&[]).is_err());
    }

    fn labelled_scores() -> impl Strategy<Value = (Vec<Label>, Vec<f64>)> {
        prop::collection::vec((any::<bool>(), 0u8..20), 2..30).prop_filter_map("both classes", |v| {
            let truth: Vec<Label> = v.iter().map(|(p, _)| if *p { P } else { N }).collect();
            let both = truth.contains(&P) && truth.contains(&N);
            both.then(|| (truth, v.iter().map(|(_, s)| *s as f64 / 19.0).collect()))
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn auc_matches_pairwise_and_sweep((truth, scores) in labelled_scores()) {
            let auc = roc_auc(&truth, &scores).unwrap();
            prop_assert!((auc - auc_oracle(&truth, &scores)).abs() < 1e-12);
            prop_assert!((auc - auc_sweep(&truth, &scores)).abs() < 1e-12);
            let transformed: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp() - 7.0).collect();
            prop_assert!((roc_auc(&truth, &transformed).unwrap() - auc).abs() < 1e-12);
        }

        #[test]
        fn auc_complement((truth, _) in labelled_scores(), seed in any::<u64>()) {
            // Distinct scores by construction.
            let scores: Vec<f64> = (0..truth.len()).map(|i| ((i as u64 * 2654435761 ^ seed) % 1_000_003) as f64 + i as f64 / 1e7).collect();
            let flipped: Vec<Label> = truth.iter().map(|l| l.other()).collect();
            let negated: Vec<f64> = scores.iter().map(|s| 1.0 - s).collect();
            let auc = roc_auc(&truth, &scores).unwrap();
            prop_assert!((auc + roc_auc(&truth, &negated).unwrap() - 1.0).abs() < 1e-12);
            prop_assert!((auc + roc_auc(&flipped, &scores).unwrap() - 1.0).abs() < 1e-12);
            prop_assert!((roc_auc(&flipped, &negated).unwrap() - auc).abs() < 1e-12);
        }

        #[test]
        fn confusion_and_kw_match_oracles(
            rows in prop::collection::vec((any::<bool>(), any::<bool>(), prop::collection::vec(any::<bool>(), 4)), 1..40),
            l in 2usize..5,
        ) {
            let truth: Vec<Label> = rows.iter().map(|r| if r.0 { P } else { N }).collect();
            let pred: Vec<Label> = rows.iter().map(|r| if r.1 { P } else { N }).collect();
            let c = ConfusionCounts::from_labels(&truth, &pred).unwrap();
            prop_assert_eq!(accuracy(&truth, &pred).unwrap(), c.accuracy().unwrap());
            let m: Vec<Vec<bool>> = rows.iter().map(|r| r.2[..l].to_vec()).collect();
            // Disagreement-count oracle: l_j (L - l_j) = number of ordered
            // (wrong, right) member pairs.
            let mut pairs = 0usize;
            for row in &m {
                for a in 0..l {
                    for b in 0..l {
                        if !row[a] && row[b] {
                            pairs += 1;
                        }
                    }
                }
            }
            let kw = kw_variance(&m).unwrap();
            prop_assert!((kw - pairs as f64 / (m.len() * l * l) as f64).abs() < 1e-12);
            prop_assert!((0.0..=0.25).contains(&kw));
            let mut shuffled = m.clone();
            shuffled.reverse();
            for row in shuffled.iter_mut() {
                row.rotate_left(1);
            }
            prop_assert!((kw_variance(&shuffled).unwrap() - kw).abs() < 1e-15);
            let mean: f64 = (0..l).map(|j| accuracy(&truth, &m.iter().zip(&truth).map(|(r, &t)| if r[j] { t } else { t.other() }).collect::<Vec<_>>()).unwrap()).sum::<f64>() / l as f64;
            prop_assert!((member_mean_accuracy(&m).unwrap() - mean).abs() < 1e-12);
        }
    }
}
