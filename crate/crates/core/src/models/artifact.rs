//! Model artifacts on disk.
//!
//! One JSON schema covers every model kind: a `kind` discriminator, the
//! layer shape, per-layer row-major weight arrays with matching bias arrays,
//! and the training provenance. Ensembles nest their members. Artifacts are
//! validated structurally on load so a corrupt file fails here and not in
//! the middle of an experiment.

use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::autoencoder::Autoencoder;
use super::ensemble::{EnsembleMode, EnsembleModel};
use super::logistic::LogisticModel;
use super::mlp::{Mlp, MlpModel, OutputKind, TrainingMeta};
use super::AnyModel;
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub kind: String,
    pub layer_sizes: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    pub training_meta: TrainingMeta,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub members: Vec<ModelArtifact>,
}

impl ModelArtifact {
    fn from_mlp(model: &MlpModel) -> Self {
        Self {
            kind: "mlp".into(),
            layer_sizes: model.net.sizes().to_vec(),
            weights: model.net.weights().to_vec(),
            biases: model.net.biases().to_vec(),
            training_meta: model.meta.clone(),
            members: Vec::new(),
        }
    }

    fn into_mlp(self) -> Result<MlpModel> {
        let net = Mlp::from_parts(
            self.layer_sizes,
            self.weights,
            self.biases,
            OutputKind::Softmax,
            1.0,
        )?;
        if net.output_dim() != 2 {
            return Err(Error::Format("classifier must have two outputs".into()));
        }
        Ok(MlpModel {
            net,
            meta: self.training_meta,
        })
    }
}

fn artifact_for(model: &AnyModel) -> ModelArtifact {
    match model {
        AnyModel::Mlp(m) => ModelArtifact::from_mlp(m),
        AnyModel::Logistic(m) => ModelArtifact {
            kind: "logistic".into(),
            layer_sizes: vec![m.weights.len(), 1],
            weights: vec![m.weights.clone()],
            biases: vec![vec![m.bias]],
            training_meta: m.meta.clone(),
            members: Vec::new(),
        },
        AnyModel::Ensemble(e) => ModelArtifact {
            kind: match e.mode() {
                EnsembleMode::Majority => "ensemble-majority".into(),
                EnsembleMode::Veto => "ensemble-veto".into(),
            },
            layer_sizes: vec![e.members()[0].net.input_dim(), 2],
            weights: Vec::new(),
            biases: Vec::new(),
            training_meta: e.members()[0].meta.clone(),
            members: e.members().iter().map(ModelArtifact::from_mlp).collect(),
        },
    }
}

pub fn save_model(model: &AnyModel, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(BufWriter::new(file), &artifact_for(model))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<AnyModel> {
    let artifact = read_artifact(path)?;
    match artifact.kind.as_str() {
        "mlp" => Ok(AnyModel::Mlp(artifact.into_mlp()?)),
        "logistic" => {
            if artifact.weights.len() != 1
                || artifact.biases.len() != 1
                || artifact.biases[0].len() != 1
                || artifact.layer_sizes != vec![artifact.weights[0].len(), 1]
            {
                return Err(Error::Format("malformed logistic artifact".into()));
            }
            Ok(AnyModel::Logistic(LogisticModel {
                weights: artifact.weights.into_iter().next().unwrap(),
                bias: artifact.biases[0][0],
                meta: artifact.training_meta,
            }))
        }
        "ensemble-majority" | "ensemble-veto" => {
            let mode = if artifact.kind == "ensemble-majority" {
                EnsembleMode::Majority
            } else {
                EnsembleMode::Veto
            };
            let members = artifact
                .members
                .into_iter()
                .map(ModelArtifact::into_mlp)
                .collect::<Result<Vec<_>>>()?;
            Ok(AnyModel::Ensemble(EnsembleModel::new(members, mode)?))
        }
        other => Err(Error::Format(format!("unknown model kind '{other}'"))),
    }
}

pub fn save_autoencoder(ae: &Autoencoder, path: &Path) -> Result<()> {
    let artifact = ModelArtifact {
        kind: "autoencoder".into(),
        layer_sizes: ae.net.sizes().to_vec(),
        weights: ae.net.weights().to_vec(),
        biases: ae.net.biases().to_vec(),
        training_meta: ae.meta.clone(),
        members: Vec::new(),
    };
    let file = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(BufWriter::new(file), &artifact)?;
    Ok(())
}

pub fn load_autoencoder(path: &Path) -> Result<Autoencoder> {
    let artifact = read_artifact(path)?;
    if artifact.kind != "autoencoder" {
        return Err(Error::Format(format!(
            "expected an autoencoder artifact, found '{}'",
            artifact.kind
        )));
    }
    if artifact.layer_sizes.first() != artifact.layer_sizes.last() {
        return Err(Error::Format(
            "autoencoder shape must start and end at the same width".into(),
        ));
    }
    let net = Mlp::from_parts(
        artifact.layer_sizes,
        artifact.weights,
        artifact.biases,
        OutputKind::Sigmoid,
        1.0,
    )?;
    Ok(Autoencoder {
        net,
        meta: artifact.training_meta,
    })
}

fn read_artifact(path: &Path) -> Result<ModelArtifact> {
    let file = std::fs::File::open(path)
        .map_err(|_| Error::MissingArtifact(path.display().to_string()))?;
    serde_json::from_reader(std::io::BufReader::new(file))
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::featurespace::FeatureVector;
    use crate::models::mlp::{train_mlp, MlpConfig};
    use crate::models::{train_ensemble, train_logistic, LogisticConfig, PredictionModel};

    fn toy_data() -> (Vec<Vec<f64>>, Vec<u8>) {
        let inputs: Vec<Vec<f64>> = (0..30)
            .map(|i| vec![f64::from(i % 2), f64::from(i % 3 == 0), 0.5])
            .collect();
        let labels: Vec<u8> = (0..30).map(|i| u8::from(i % 2 == 0)).collect();
        (inputs, labels)
    }

    fn probe_vectors() -> Vec<FeatureVector> {
        (0..8)
            .map(|i| {
                FeatureVector::new(3, (0..3u32).filter(|&b| i & (1 << b) != 0).collect()).unwrap()
            })
            .collect()
    }

    #[test]
    fn mlp_artifact_roundtrip_preserves_predictions() {
        let (x, y) = toy_data();
        let cfg = MlpConfig {
            hidden: vec![4],
            epochs: 3,
            learning_rate: 0.1,
        };
        let model = AnyModel::Mlp(train_mlp(&x, &y, &cfg, 7).unwrap());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&model, &path).unwrap();
        let loaded = load_model(&path).unwrap();
        for q in probe_vectors() {
            assert_eq!(model.predict_proba(&q), loaded.predict_proba(&q));
        }
    }

    #[test]
    fn logistic_and_ensemble_roundtrip() {
        let (x, y) = toy_data();
        let dir = tempfile::tempdir().unwrap();

        let logistic =
            AnyModel::Logistic(train_logistic(&x, &y, &LogisticConfig::default(), 1).unwrap());
        let lp = dir.path().join("logistic.json");
        save_model(&logistic, &lp).unwrap();
        let loaded = load_model(&lp).unwrap();
        for q in probe_vectors() {
            assert_eq!(logistic.predict_proba(&q), loaded.predict_proba(&q));
        }

        let cfg = MlpConfig {
            hidden: vec![4],
            epochs: 2,
            learning_rate: 0.1,
        };
        let ensemble = AnyModel::Ensemble(
            train_ensemble(
                &x,
                &y,
                &[vec![4], vec![6], vec![8]],
                &cfg,
                super::EnsembleMode::Majority,
                3,
            )
            .unwrap(),
        );
        let ep = dir.path().join("ensemble.json");
        save_model(&ensemble, &ep).unwrap();
        let loaded = load_model(&ep).unwrap();
        for q in probe_vectors() {
            assert_eq!(ensemble.predict_proba(&q), loaded.predict_proba(&q));
        }
    }

    #[test]
    fn autoencoder_roundtrip() {
        use crate::models::{train_autoencoder, AutoencoderConfig};
        let vectors = probe_vectors();
        let refs: Vec<&FeatureVector> = vectors.iter().collect();
        let cfg = AutoencoderConfig {
            sizes: vec![3, 2, 3],
            epochs: 2,
            learning_rate: 0.1,
        };
        let ae = train_autoencoder(&refs, &cfg, 0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ae.json");
        save_autoencoder(&ae, &path).unwrap();
        let loaded = load_autoencoder(&path).unwrap();
        for v in &vectors {
            assert_eq!(ae.reconstruction_loss(v), loaded.reconstruction_loss(v));
        }
    }

    #[test]
    fn load_rejects_missing_unknown_and_mismatched_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("nope.json");
        assert!(matches!(
            load_model(&missing),
            Err(Error::MissingArtifact(_))
        ));

        let bad_kind = dir.path().join("bad_kind.json");
        std::fs::write(
            &bad_kind,
            r#"{"kind":"svm","layer_sizes":[2,2],"weights":[],"biases":[],
               "training_meta":{"epochs":0,"learning_rate":0.0,"seed":0,"temperature":1.0}}"#,
        )
        .unwrap();
        assert!(matches!(load_model(&bad_kind), Err(Error::Format(_))));

        // layer_sizes say 2x2 but only 3 weights are present.
        let mismatched = dir.path().join("mismatched.json");
        std::fs::write(
            &mismatched,
            r#"{"kind":"mlp","layer_sizes":[2,2],"weights":[[0.0,0.0,0.0]],"biases":[[0.0,0.0]],
               "training_meta":{"epochs":0,"learning_rate":0.0,"seed":0,"temperature":1.0}}"#,
        )
        .unwrap();
        assert!(matches!(load_model(&mismatched), Err(Error::Format(_))));

        let garbage = dir.path().join("garbage.json");
        std::fs::write(&garbage, "not json").unwrap();
        assert!(matches!(load_model(&garbage), Err(Error::Format(_))));
    }
}
