//! Global importance of the six indicator scores to a decision model.
//!
//! The logistic head gets exact linear attributions: the signed credit of
//! score j on a row is `w_j * (x_j - mean_j)` against the background column
//! means, and the global importance is the mean absolute credit. The MLP
//! head gets seeded permutation importance: the mean absolute change in
//! attack probability when one score column is shuffled across the
//! background.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use super::decision::{DecisionModel, DecisionRow};
use super::indicators::IndicatorScores;
use crate::seeding::indexed_seed;
use crate::{Error, Result};

/// Rows consulted beyond this are ignored; importance estimates stabilize
/// long before and the cap bounds the cost on huge decision datasets.
const BACKGROUND_CAP: usize = 10_000;

/// Signed per-score attributions of one row under a linear head. The
/// attributions sum to `logit(row) - logit(column_means)`.
pub fn logistic_attribution(weights: &[f64], row: &[f64], column_means: &[f64]) -> Vec<f64> {
    weights
        .iter()
        .zip(row)
        .zip(column_means)
        .map(|((w, x), m)| w * (x - m))
        .collect()
}

/// Global nonnegative importance of each score, by the method matching the
/// model's head.
pub fn decision_feature_importance(
    model: &DecisionModel,
    background: &[DecisionRow],
    seed: u64,
) -> Result<[f64; 6]> {
    if background.is_empty() {
        return Err(Error::InsufficientData(
            "feature importance needs a nonempty background".into(),
        ));
    }
    let rows: Vec<[f64; 6]> = background
        .iter()
        .take(BACKGROUND_CAP)
        .map(|r| r.scores.as_array())
        .collect();

    if let Some((weights, _)) = model.coefficients() {
        let means = column_means(&rows);
        let mut importance = [0.0; 6];
        for row in &rows {
            for (j, v) in logistic_attribution(weights, row, &means).iter().enumerate() {
                importance[j] += v.abs();
            }
        }
        for v in &mut importance {
            *v /= rows.len() as f64;
        }
        return Ok(importance);
    }

    let base: Vec<f64> = rows
        .iter()
        .map(|r| model.attack_probability(&scores_from(r)))
        .collect();
    let mut importance = [0.0; 6];
    for (j, slot) in importance.iter_mut().enumerate() {
        let mut perm: Vec<usize> = (0..rows.len()).collect();
        let mut rng =
            ChaCha8Rng::seed_from_u64(indexed_seed(seed, "permutation-column", j as u64));
        perm.shuffle(&mut rng);
        let mut total = 0.0;
        for (i, row) in rows.iter().enumerate() {
            let mut shuffled = *row;
            shuffled[j] = rows[perm[i]][j];
            total += (model.attack_probability(&scores_from(&shuffled)) - base[i]).abs();
        }
        *slot = total / rows.len() as f64;
    }
    Ok(importance)
}

fn column_means(rows: &[[f64; 6]]) -> Vec<f64> {
    let mut means = vec![0.0; 6];
    for row in rows {
        for (m, v) in means.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut means {
        *m /= rows.len() as f64;
    }
    means
}

fn scores_from(x: &[f64; 6]) -> IndicatorScores {
    IndicatorScores {
        s1: x[0],
        s2: x[1],
        s3a: x[2],
        s3b: x[3],
        s4a: x[4],
        s4b: x[5],
    }
}
