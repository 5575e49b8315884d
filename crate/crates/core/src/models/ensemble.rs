//! Label-voting ensembles of independently trained MLPs.
//!
//! Majority voting needs an odd member count of at least three so a vote can
//! never tie. Veto voting needs at least two members and flags malware as
//! soon as any single member does; its score is the largest member score, so
//! label and score stay consistent.

use serde::{Deserialize, Serialize};

use super::mlp::{train_mlp, MlpConfig, MlpModel};
use super::PredictionModel;
use crate::featurespace::FeatureVector;
use crate::seeding::indexed_seed;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnsembleMode {
    Majority,
    Veto,
}

#[derive(Debug, Clone)]
pub struct EnsembleModel {
    members: Vec<MlpModel>,
    mode: EnsembleMode,
}

impl EnsembleModel {
    pub fn new(members: Vec<MlpModel>, mode: EnsembleMode) -> Result<Self> {
        match mode {
            EnsembleMode::Majority => {
                if members.len() < 3 || members.len() % 2 == 0 {
                    return Err(Error::Config(format!(
                        "majority voting needs an odd member count of at least 3, got {}",
                        members.len()
                    )));
                }
            }
            EnsembleMode::Veto => {
                if members.len() < 2 {
                    return Err(Error::Config(format!(
                        "veto voting needs at least 2 members, got {}",
                        members.len()
                    )));
                }
            }
        }
        let dim = members[0].dim();
        if members.iter().any(|m| m.dim() != dim) {
            return Err(Error::Config("members disagree on input dimension".into()));
        }
        Ok(Self { members, mode })
    }

    pub fn members(&self) -> &[MlpModel] {
        &self.members
    }

    pub fn mode(&self) -> EnsembleMode {
        self.mode
    }
}

impl PredictionModel for EnsembleModel {
    fn dim(&self) -> usize {
        self.members[0].dim()
    }

    fn predict_proba(&self, q: &FeatureVector) -> f64 {
        let x = q.to_dense();
        match self.mode {
            EnsembleMode::Majority => {
                let votes = self
                    .members
                    .iter()
                    .filter(|m| m.proba_dense(&x) >= 0.5)
                    .count();
                votes as f64 / self.members.len() as f64
            }
            EnsembleMode::Veto => self
                .members
                .iter()
                .map(|m| m.proba_dense(&x))
                .fold(0.0, f64::max),
        }
    }
}

/// Trains one MLP per entry of `widths`, each with its own derived seed,
/// and wraps them in the requested voting mode.
pub fn train_ensemble(
    inputs: &[Vec<f64>],
    labels: &[u8],
    widths: &[Vec<usize>],
    base: &MlpConfig,
    mode: EnsembleMode,
    seed: u64,
) -> Result<EnsembleModel> {
    let members = widths
        .iter()
        .enumerate()
        .map(|(i, hidden)| {
            let cfg = MlpConfig {
                hidden: hidden.clone(),
                ..base.clone()
            };
            train_mlp(inputs, labels, &cfg, indexed_seed(seed, "ensemble-member", i as u64))
        })
        .collect::<Result<Vec<_>>>()?;
    EnsembleModel::new(members, mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::mlp::{Mlp, OutputKind, TrainingMeta};

    /// A stub model whose malware probability is constant.
    fn constant_model(p: f64) -> MlpModel {
        // Softmax over [0, logit] yields probability p for class 1.
        let logit = (p / (1.0 - p)).ln();
        let net = Mlp::from_parts(
            vec![2, 2],
            vec![vec![0.0; 4]],
            vec![vec![0.0, logit]],
            OutputKind::Softmax,
            1.0,
        )
        .unwrap();
        MlpModel {
            net,
            meta: TrainingMeta {
                epochs: 0,
                learning_rate: 0.0,
                seed: 0,
                temperature: 1.0,
                regime: String::new(),
            },
        }
    }

    #[test]
    fn majority_requires_odd_count_of_three_or_more() {
        let mk = |n: usize| {
            EnsembleModel::new(
                (0..n).map(|_| constant_model(0.6)).collect(),
                EnsembleMode::Majority,
            )
        };
        assert!(mk(1).is_err());
        assert!(mk(2).is_err());
        assert!(mk(4).is_err());
        assert!(mk(3).is_ok());
        assert!(mk(5).is_ok());
    }

    #[test]
    fn veto_requires_two_and_flags_on_any_malware_vote() {
        assert!(EnsembleModel::new(vec![constant_model(0.6)], EnsembleMode::Veto).is_err());
        let e = EnsembleModel::new(
            vec![constant_model(0.1), constant_model(0.9), constant_model(0.2)],
            EnsembleMode::Veto,
        )
        .unwrap();
        let q = FeatureVector::empty(2);
        assert_eq!(e.predict_label(&q), 1);
        assert!((e.predict_proba(&q) - 0.9).abs() < 1e-9);

        let calm = EnsembleModel::new(
            vec![constant_model(0.1), constant_model(0.2)],
            EnsembleMode::Veto,
        )
        .unwrap();
        assert_eq!(calm.predict_label(&q), 0);
    }

    #[test]
    fn majority_takes_the_modal_label_and_stays_consistent() {
        let q = FeatureVector::empty(2);
        let two_of_three = EnsembleModel::new(
            vec![constant_model(0.9), constant_model(0.8), constant_model(0.1)],
            EnsembleMode::Majority,
        )
        .unwrap();
        assert_eq!(two_of_three.predict_label(&q), 1);
        assert!((two_of_three.predict_proba(&q) - 2.0 / 3.0).abs() < 1e-12);

        let one_of_three = EnsembleModel::new(
            vec![constant_model(0.9), constant_model(0.2), constant_model(0.1)],
            EnsembleMode::Majority,
        )
        .unwrap();
        assert_eq!(one_of_three.predict_label(&q), 0);
        assert_eq!(
            one_of_three.predict_label(&q),
            u8::from(one_of_three.predict_proba(&q) >= 0.5)
        );
    }
}
