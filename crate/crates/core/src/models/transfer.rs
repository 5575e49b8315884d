//! Transferability-based adversarial example generation.
//!
//! A substitute model stands in for the target. Each malware source vector
//! is relaxed to a real-valued copy, pushed toward the benign class by
//! signed-gradient steps, and after every step snapped back to a valid
//! binary vector (threshold at 0.5, then restore any change the feature
//! families forbid). The first snapped candidate the substitute labels
//! benign is kept; sources that never flip within the round budget are
//! discarded.

use serde::{Deserialize, Serialize};

use super::mlp::MlpModel;
use super::PredictionModel;
use crate::featurespace::{discretize, FeatureFamilyTable, FeatureVector};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TransferConfig {
    /// Per-round step size in the relaxed space.
    pub epsilon: f64,
    pub max_rounds: usize,
}

impl Default for TransferConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.05,
            max_rounds: 60,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TransferExample {
    /// Index into the source slice this example was derived from.
    pub source_index: usize,
    pub vector: FeatureVector,
}

const BENIGN_TARGET: [f64; 2] = [1.0, 0.0];

pub fn transferability_generate(
    substitute: &MlpModel,
    sources: &[&FeatureVector],
    table: &FeatureFamilyTable,
    cfg: &TransferConfig,
) -> Result<Vec<TransferExample>> {
    if cfg.epsilon <= 0.0 || cfg.max_rounds == 0 {
        return Err(Error::Config(
            "epsilon and max_rounds must be positive".into(),
        ));
    }
    let mut out = Vec::new();
    for (index, source) in sources.iter().enumerate() {
        if source.dim() != table.dim() {
            return Err(Error::DimensionMismatch {
                expected: table.dim(),
                got: source.dim(),
            });
        }
        // Sources the substitute already takes for benign are not
        // adversarial; skip them.
        if substitute.proba_dense(&source.to_dense()) < 0.5 {
            continue;
        }
        let mut x = source.to_dense();
        for _ in 0..cfg.max_rounds {
            descend_step(substitute, &mut x, cfg.epsilon);
            let candidate = discretize(&x, source, table)?;
            if substitute.predict_proba(&candidate) < 0.5 {
                out.push(TransferExample {
                    source_index: index,
                    vector: candidate,
                });
                break;
            }
        }
    }
    Ok(out)
}

/// Pure continuous evasion: signed-gradient descent toward benign with no
/// snapping, stopping as soon as the substitute flips on the relaxed vector.
/// Returns the relaxed vector, whether or not it ever flipped.
pub fn continuous_descent(
    substitute: &MlpModel,
    source: &FeatureVector,
    epsilon: f64,
    max_rounds: usize,
) -> Vec<f64> {
    let mut x = source.to_dense();
    for _ in 0..max_rounds {
        if substitute.proba_dense(&x) < 0.5 {
            break;
        }
        descend_step(substitute, &mut x, epsilon);
    }
    x
}

fn descend_step(substitute: &MlpModel, x: &mut [f64], epsilon: f64) {
    let grads = substitute.net.gradients(x, &BENIGN_TARGET);
    for (v, g) in x.iter_mut().zip(&grads.input) {
        *v = (*v - epsilon * g.signum()).clamp(0.0, 1.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::featurespace::{generate_synthetic_dataset, Split, SyntheticConfig};
    use crate::models::mlp::{train_mlp, MlpConfig};
    use crate::models::PredictionModel;

    fn trained_setup() -> (MlpModel, crate::featurespace::Dataset) {
        let ds = generate_synthetic_dataset(
            &SyntheticConfig {
                dim: 64,
                n_per_class: 150,
                ..SyntheticConfig::default()
            },
            17,
        )
        .unwrap();
        let (inputs, labels): (Vec<Vec<f64>>, Vec<u8>) = ds
            .split(Split::Train)
            .map(|s| (s.features.to_dense(), s.label))
            .unzip();
        let cfg = MlpConfig {
            hidden: vec![32, 16],
            epochs: 12,
            learning_rate: 0.02,
        };
        (train_mlp(&inputs, &labels, &cfg, 3).unwrap(), ds)
    }

    #[test]
    fn generated_examples_evade_substitute_and_respect_validity() {
        let (model, ds) = trained_setup();
        let sources: Vec<&FeatureVector> = ds
            .split_with_label(Split::Test, 1)
            .map(|s| &s.features)
            .take(40)
            .collect();
        let out =
            transferability_generate(&model, &sources, &ds.table, &TransferConfig::default())
                .unwrap();
        assert!(!out.is_empty(), "no transfer examples generated");
        for ex in &out {
            assert_eq!(model.predict_label(&ex.vector), 0);
            let original = sources[ex.source_index];
            for f in 0..ds.table.dim() as u32 {
                let was = original.contains(f);
                let now = ex.vector.contains(f);
                if now && !was {
                    assert!(ds.table.feature_addable(f));
                }
                if was && !now {
                    assert!(ds.table.feature_removable(f));
                }
            }
        }
    }

    #[test]
    fn exhausted_round_budget_discards_the_source() {
        let (model, ds) = trained_setup();
        let sources: Vec<&FeatureVector> = ds
            .split_with_label(Split::Test, 1)
            .map(|s| &s.features)
            .take(10)
            .collect();
        let starved = TransferConfig {
            epsilon: 1e-9,
            max_rounds: 1,
        };
        let out = transferability_generate(&model, &sources, &ds.table, &starved).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn continuous_descent_crosses_the_boundary_unconstrained() {
        let (model, ds) = trained_setup();
        let source = &ds
            .split_with_label(Split::Test, 1)
            .next()
            .unwrap()
            .features;
        let relaxed = continuous_descent(&model, source, 0.05, 200);
        assert!(model.proba_dense(&relaxed) < 0.5);
    }
}
