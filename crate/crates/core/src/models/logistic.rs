//! Logistic regression, trained by per-sample gradient descent on the
//! log-loss. Serves as the linear decision head and as the model whose
//! feature attributions can be computed exactly.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{PredictionModel, TrainingMeta};
use crate::featurespace::FeatureVector;
use crate::seeding::child_seed;
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub meta: TrainingMeta,
}

impl LogisticModel {
    /// Log-odds of the malware class.
    pub fn logit(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.weights.len());
        self.weights
            .iter()
            .zip(x)
            .map(|(w, v)| w * v)
            .sum::<f64>()
            + self.bias
    }

    pub fn proba_dense(&self, x: &[f64]) -> f64 {
        let z = self.logit(x);
        if z >= 0.0 {
            1.0 / (1.0 + (-z).exp())
        } else {
            let e = z.exp();
            e / (1.0 + e)
        }
    }
}

impl PredictionModel for LogisticModel {
    fn dim(&self) -> usize {
        self.weights.len()
    }

    fn predict_proba(&self, q: &FeatureVector) -> f64 {
        self.proba_dense(&q.to_dense())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticConfig {
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            learning_rate: 0.1,
        }
    }
}

pub fn train_logistic(
    inputs: &[Vec<f64>],
    labels: &[u8],
    cfg: &LogisticConfig,
    seed: u64,
) -> Result<LogisticModel> {
    if inputs.is_empty() {
        return Err(Error::InsufficientData("no training samples".into()));
    }
    if inputs.len() != labels.len() {
        return Err(Error::Config(format!(
            "{} inputs but {} labels",
            inputs.len(),
            labels.len()
        )));
    }
    if cfg.epochs == 0 || cfg.learning_rate <= 0.0 {
        return Err(Error::Config(
            "epochs and learning rate must be positive".into(),
        ));
    }
    let dim = inputs[0].len();
    if inputs.iter().any(|x| x.len() != dim) {
        return Err(Error::Config("ragged training inputs".into()));
    }

    let mut model = LogisticModel {
        weights: vec![0.0; dim],
        bias: 0.0,
        meta: TrainingMeta {
            epochs: cfg.epochs,
            learning_rate: cfg.learning_rate,
            seed,
            temperature: 1.0,
            regime: "logistic".into(),
        },
    };
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(child_seed(seed, "logistic-shuffle"));
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let err = model.proba_dense(&inputs[i]) - f64::from(labels[i]);
            let step = cfg.learning_rate * err;
            for (w, v) in model.weights.iter_mut().zip(&inputs[i]) {
                *w -= step * v;
            }
            model.bias -= step;
        }
    }
    Ok(model)
}
