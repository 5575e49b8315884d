//! Autoencoder for reconstruction-loss scoring.
//!
//! Trained to reproduce legitimate training vectors through a bottleneck;
//! sigmoid outputs, mean-squared-error loss. Queries far from the training
//! manifold reconstruct poorly, and that loss feeds two of the threat
//! indicators.

use serde::{Deserialize, Serialize};

use super::mlp::{Mlp, OutputKind, TrainingMeta};
use crate::featurespace::FeatureVector;
use crate::seeding::child_seed;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct Autoencoder {
    pub net: Mlp,
    pub meta: TrainingMeta,
}

impl Autoencoder {
    pub fn dim(&self) -> usize {
        self.net.input_dim()
    }

    /// Mean squared reconstruction error of a binary vector.
    pub fn reconstruction_loss(&self, v: &FeatureVector) -> f64 {
        self.reconstruction_loss_dense(&v.to_dense())
    }

    pub fn reconstruction_loss_dense(&self, x: &[f64]) -> f64 {
        let out = self.net.forward(x);
        out.iter()
            .zip(x)
            .map(|(r, v)| (r - v) * (r - v))
            .sum::<f64>()
            / x.len() as f64
    }
}

/// Bottleneck shape used when none is configured: the input dimension is
/// squeezed by 8x and then 32x (with floors of 16 and 8 units) and expanded
/// symmetrically.
pub fn default_autoencoder_sizes(dim: usize) -> Vec<usize> {
    let mid = (dim / 8).max(16);
    let bottleneck = (dim / 32).max(8);
    vec![dim, mid, bottleneck, mid, dim]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct AutoencoderConfig {
    /// Full layer shape including input and output; empty means derive from
    /// the data dimension.
    pub sizes: Vec<usize>,
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for AutoencoderConfig {
    fn default() -> Self {
        Self {
            sizes: Vec::new(),
            epochs: 15,
            learning_rate: 0.05,
        }
    }
}

pub fn train_autoencoder(
    vectors: &[&FeatureVector],
    cfg: &AutoencoderConfig,
    seed: u64,
) -> Result<Autoencoder> {
    if vectors.is_empty() {
        return Err(Error::InsufficientData("no training vectors".into()));
    }
    if cfg.epochs == 0 || cfg.learning_rate <= 0.0 {
        return Err(Error::Config(
            "epochs and learning rate must be positive".into(),
        ));
    }
    let dim = vectors[0].dim();
    if vectors.iter().any(|v| v.dim() != dim) {
        return Err(Error::Config("mixed dimensions in training vectors".into()));
    }
    let sizes = if cfg.sizes.is_empty() {
        default_autoencoder_sizes(dim)
    } else {
        if cfg.sizes.first() != Some(&dim) || cfg.sizes.last() != Some(&dim) {
            return Err(Error::Config(format!(
                "autoencoder shape must start and end at the data dimension {dim}"
            )));
        }
        cfg.sizes.clone()
    };

    let dense: Vec<Vec<f64>> = vectors.iter().map(|v| v.to_dense()).collect();
    let mut net = Mlp::init(&sizes, OutputKind::Sigmoid, child_seed(seed, "ae-init"))?;
    net.train_identity(&dense, cfg.epochs, cfg.learning_rate, child_seed(seed, "ae-shuffle"));
    Ok(Autoencoder {
        net,
        meta: TrainingMeta {
            epochs: cfg.epochs,
            learning_rate: cfg.learning_rate,
            seed,
            temperature: 1.0,
            regime: "autoencoder".into(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn default_shape_for_desk_scale_dimension() {
        assert_eq!(default_autoencoder_sizes(512), vec![512, 64, 16, 64, 512]);
        assert_eq!(default_autoencoder_sizes(64), vec![64, 16, 8, 16, 64]);
    }

    #[test]
    fn zero_weight_net_scores_quarter_loss_on_zero_vector() {
        let dim = 8;
        let net = Mlp::from_parts(
            vec![dim, 4, dim],
            vec![vec![0.0; dim * 4], vec![0.0; 4 * dim]],
            vec![vec![0.0; 4], vec![0.0; dim]],
            OutputKind::Sigmoid,
            1.0,
        )
        .unwrap();
        let ae = Autoencoder {
            net,
            meta: TrainingMeta {
                epochs: 0,
                learning_rate: 0.0,
                seed: 0,
                temperature: 1.0,
                regime: String::new(),
            },
        };
        let loss = ae.reconstruction_loss(&FeatureVector::empty(dim));
        assert!((loss - 0.25).abs() < 1e-12);
    }

    #[test]
    fn training_lowers_loss_on_seen_data_versus_noise() {
        let dim = 32;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let proto: Vec<bool> = (0..dim).map(|_| rng.random::<f64>() < 0.3).collect();
        let vectors: Vec<FeatureVector> = (0..120)
            .map(|_| {
                let enabled = (0..dim as u32)
                    .filter(|&i| proto[i as usize] ^ (rng.random::<f64>() < 0.03))
                    .collect();
                FeatureVector::new(dim, enabled).unwrap()
            })
            .collect();
        let refs: Vec<&FeatureVector> = vectors.iter().collect();
        let ae = train_autoencoder(&refs, &AutoencoderConfig::default(), 5).unwrap();

        let seen: f64 = refs
            .iter()
            .map(|v| ae.reconstruction_loss(v))
            .sum::<f64>()
            / refs.len() as f64;
        let inverted = FeatureVector::new(
            dim,
            (0..dim as u32).filter(|&i| !proto[i as usize]).collect(),
        )
        .unwrap();
        let odd = ae.reconstruction_loss(&inverted);
        assert!(seen < odd, "seen {seen} vs odd {odd}");
    }

    #[test]
    fn rejects_shapes_that_do_not_match_the_data() {
        let v = FeatureVector::empty(16);
        let cfg = AutoencoderConfig {
            sizes: vec![8, 4, 8],
            ..AutoencoderConfig::default()
        };
        assert!(train_autoencoder(&[&v], &cfg, 0).is_err());
    }
}
