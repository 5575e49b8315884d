//! Prediction models and training regimes.
//!
//! All models are written from scratch on plain `Vec<f64>` math: a small
//! multilayer perceptron (ReLU hidden layers, softmax output, cross-entropy
//! loss, per-sample SGD), a logistic regression head, an autoencoder used
//! for reconstruction-loss scoring, and label-voting ensembles. Hardened
//! variants wrap the same MLP trainer: adversarial training injects evading
//! examples into the train split, distillation trains a student on a
//! teacher's temperature-softened outputs.
//!
//! The malware class is index 1 everywhere; `predict_proba` returns the
//! probability-like score for that class and `predict_label` thresholds it
//! at 0.5, so the two can never disagree.

mod artifact;
mod autoencoder;
mod ensemble;
mod logistic;
mod mlp;
mod transfer;

pub use artifact::{
    load_autoencoder, load_model, save_autoencoder, save_model, ModelArtifact,
};
pub use autoencoder::{default_autoencoder_sizes, train_autoencoder, Autoencoder, AutoencoderConfig};
pub use ensemble::{train_ensemble, EnsembleMode, EnsembleModel};
pub use logistic::{train_logistic, LogisticConfig, LogisticModel};
pub use mlp::{
    adversarially_train, distill, finite_difference_check, train_mlp, train_mlp_soft,
    AdvTrainReport, Mlp, MlpConfig, MlpModel, OutputKind, TrainingMeta,
};
pub use transfer::{continuous_descent, transferability_generate, TransferConfig, TransferExample};

use crate::featurespace::FeatureVector;

/// Common interface of everything that can serve as the wrapped detector.
pub trait PredictionModel {
    fn dim(&self) -> usize;

    /// Probability-like score for the malware class.
    fn predict_proba(&self, q: &FeatureVector) -> f64;

    fn predict_label(&self, q: &FeatureVector) -> u8 {
        u8::from(self.predict_proba(q) >= 0.5)
    }
}

/// Owned model of any supported kind, as loaded from an artifact file.
#[derive(Debug, Clone)]
pub enum AnyModel {
    Mlp(MlpModel),
    Logistic(LogisticModel),
    Ensemble(EnsembleModel),
}

impl PredictionModel for AnyModel {
    fn dim(&self) -> usize {
        match self {
            AnyModel::Mlp(m) => m.dim(),
            AnyModel::Logistic(m) => m.dim(),
            AnyModel::Ensemble(m) => m.dim(),
        }
    }

    fn predict_proba(&self, q: &FeatureVector) -> f64 {
        match self {
            AnyModel::Mlp(m) => m.predict_proba(q),
            AnyModel::Logistic(m) => m.predict_proba(q),
            AnyModel::Ensemble(m) => m.predict_proba(q),
        }
    }
}
