//! Scalar metrics shared by the experiment drivers.
//!
//! Classification metrics treat malware (label 1) as the positive class.
//! AUC is rank-based with midranks for ties, which agrees with the
//! brute-force pairwise comparison probability on every input. The linear
//! fit is ordinary least squares and reports R² so a benchmark can assert
//! how well a straight line explains its measurements.

use crate::{Error, Result};

/// Outcome counts of a two-class verdict stream, malware positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub true_pos: u64,
    pub false_pos: u64,
    pub true_neg: u64,
    pub false_neg: u64,
}

impl ConfusionCounts {
    pub fn from_labels(truth: &[u8], predicted: &[u8]) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::Config(format!(
                "{} truth labels against {} predictions",
                truth.len(),
                predicted.len()
            )));
        }
        let mut c = Self::default();
        for (&t, &p) in truth.iter().zip(predicted) {
            if t > 1 || p > 1 {
                return Err(Error::Config(format!("labels must be 0 or 1, got {t}/{p}")));
            }
            match (t, p) {
                (1, 1) => c.true_pos += 1,
                (0, 1) => c.false_pos += 1,
                (0, 0) => c.true_neg += 1,
                _ => c.false_neg += 1,
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> u64 {
        self.true_pos + self.false_pos + self.true_neg + self.false_neg
    }

    pub fn accuracy(&self) -> f64 {
        (self.true_pos + self.true_neg) as f64 / self.total() as f64
    }

    /// fp / (fp + tn), or 0 when no negatives were seen.
    pub fn false_positive_rate(&self) -> f64 {
        let denom = self.false_pos + self.true_neg;
        if denom == 0 {
            return 0.0;
        }
        self.false_pos as f64 / denom as f64
    }

    pub fn precision(&self) -> f64 {
        let denom = self.true_pos + self.false_pos;
        if denom == 0 {
            return 0.0;
        }
        self.true_pos as f64 / denom as f64
    }

    pub fn recall(&self) -> f64 {
        let denom = self.true_pos + self.false_neg;
        if denom == 0 {
            return 0.0;
        }
        self.true_pos as f64 / denom as f64
    }

    pub fn f1(&self) -> f64 {
        let p = self.precision();
        let r = self.recall();
        if p + r == 0.0 {
            return 0.0;
        }
        2.0 * p * r / (p + r)
    }
}

/// Classification metrics of one verdict stream, plus the score-based AUC.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub counts: ConfusionCounts,
    pub accuracy: f64,
    pub fpr: f64,
    pub f1: f64,
    pub auc: f64,
}

impl MetricsReport {
    /// Builds the full report from parallel truth/prediction/score logs.
    pub fn from_logs(truth: &[u8], predicted: &[u8], scores: &[f64]) -> Result<Self> {
        let counts = ConfusionCounts::from_labels(truth, predicted)?;
        let auc = rank_auc(truth, scores)?;
        Ok(Self {
            counts,
            accuracy: counts.accuracy(),
            fpr: counts.false_positive_rate(),
            f1: counts.f1(),
            auc,
        })
    }
}

/// Probability that a random positive outscores a random negative, ties
/// counted half. Computed from midranks, so ties are exact rather than
/// broken arbitrarily.
pub fn rank_auc(truth: &[u8], scores: &[f64]) -> Result<f64> {
    if truth.len() != scores.len() {
        return Err(Error::Config(format!(
            "{} labels against {} scores",
            truth.len(),
            scores.len()
        )));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::UndefinedStatistic("non-finite score".into()));
    }
    let n_pos = truth.iter().filter(|&&t| t == 1).count();
    let n_neg = truth.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::InsufficientData(
            "AUC needs at least one positive and one negative".into(),
        ));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            if truth[idx] == 1 {
                rank_sum_pos += midrank;
            }
        }
        i = j + 1;
    }

    let n_pos = n_pos as f64;
    Ok((rank_sum_pos - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg as f64))
}

/// Ordinary least-squares line through (x, y) pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() {
        return Err(Error::Config(format!(
            "{} x values against {} y values",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::InsufficientData(
            "a line needs at least 2 points".into(),
        ));
    }
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::UndefinedStatistic(
            "x values have zero variance".into(),
        ));
    }
    let sxy: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (x - mean_x) * (y - mean_y))
        .sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;

    let ss_tot: f64 = ys.iter().map(|y| (y - mean_y).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 {
        1.0
    } else {
        let ss_res: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| (y - (intercept + slope * x)).powi(2))
            .sum();
        1.0 - ss_res / ss_tot
    };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}

/// Median of an unsorted slice; even counts average the middle pair.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        Some(sorted[mid])
    } else {
        Some((sorted[mid - 1] + sorted[mid]) / 2.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Pairwise definition: P(score_pos > score_neg) + P(tie) / 2.
    fn brute_force_auc(truth: &[u8], scores: &[f64]) -> f64 {
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for (i, &t) in truth.iter().enumerate() {
            if t != 1 {
                continue;
            }
            for (j, &u) in truth.iter().enumerate() {
                if u != 0 {
                    continue;
                }
                pairs += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
        wins / pairs
    }

    #[test]
    fn perfect_predictions_score_perfectly() {
        let truth = [0, 1, 0, 1, 1, 0];
        let scores = [0.1, 0.9, 0.2, 0.8, 0.7, 0.3];
        let report = MetricsReport::from_logs(&truth, &truth, &scores).unwrap();
        assert_eq!(report.accuracy, 1.0);
        assert_eq!(report.fpr, 0.0);
        assert_eq!(report.f1, 1.0);
        assert_eq!(report.auc, 1.0);
    }

    #[test]
    fn constant_scores_give_chance_auc() {
        let truth = [0, 1, 0, 1, 1];
        let scores = [0.5; 5];
        assert_eq!(rank_auc(&truth, &scores).unwrap(), 0.5);
    }

    #[test]
    fn reversed_ranking_gives_zero_auc() {
        let truth = [1, 1, 0, 0];
        let scores = [0.1, 0.2, 0.8, 0.9];
        assert_eq!(rank_auc(&truth, &scores).unwrap(), 0.0);
    }

    #[test]
    fn fpr_and_f1_match_hand_counts() {
        let truth = [0, 0, 0, 1];
        let predicted = [1, 0, 0, 1];
        let c = ConfusionCounts::from_labels(&truth, &predicted).unwrap();
        assert_eq!(
            (c.true_pos, c.false_pos, c.true_neg, c.false_neg),
            (1, 1, 2, 0)
        );
        assert_eq!(c.accuracy(), 0.75);
        assert!((c.false_positive_rate() - 1.0 / 3.0).abs() < 1e-15);
        assert!((c.f1() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        assert!(ConfusionCounts::from_labels(&[0, 1], &[0]).is_err());
        assert!(ConfusionCounts::from_labels(&[0, 2], &[0, 1]).is_err());
        assert!(rank_auc(&[1, 1], &[0.1, 0.2]).is_err());
        assert!(rank_auc(&[0, 1], &[0.1, f64::NAN]).is_err());
        assert!(linear_fit(&[1.0], &[2.0]).is_err());
        assert!(linear_fit(&[3.0, 3.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn linear_fit_recovers_an_exact_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x + 2.0).collect();
        let fit = linear_fit(&xs, &ys).unwrap();
        assert!((fit.slope - 3.0).abs() < 1e-12);
        assert!((fit.intercept - 2.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn linear_fit_reports_poor_fit_on_oscillating_data() {
        let fit = linear_fit(&[0.0, 1.0, 2.0, 3.0], &[0.0, 1.0, 0.0, 1.0]).unwrap();
        assert!((fit.slope - 0.2).abs() < 1e-12);
        assert!((fit.r_squared - 0.2).abs() < 1e-12);
    }

    #[test]
    fn flat_measurements_count_as_a_perfect_fit() {
        let fit = linear_fit(&[1.0, 2.0, 3.0], &[5.0, 5.0, 5.0]).unwrap();
        assert_eq!(fit.slope, 0.0);
        assert_eq!(fit.r_squared, 1.0);
    }

    #[test]
    fn median_handles_odd_even_and_empty() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }

    proptest! {
        #[test]
        fn rank_auc_equals_the_pairwise_probability(
            rows in proptest::collection::vec((0u8..=1, 0i32..6), 2..200)
        ) {
            let truth: Vec<u8> = rows.iter().map(|r| r.0).collect();
            let scores: Vec<f64> = rows.iter().map(|r| f64::from(r.1) / 4.0).collect();
            let n_pos = truth.iter().filter(|&&t| t == 1).count();
            prop_assume!(n_pos > 0 && n_pos < truth.len());
            let fast = rank_auc(&truth, &scores).unwrap();
            let slow = brute_force_auc(&truth, &scores);
            prop_assert!((fast - slow).abs() < 1e-12, "{fast} vs {slow}");
        }
    }
}
