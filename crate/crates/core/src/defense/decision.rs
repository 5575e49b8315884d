//! The decision model that turns score vectors into attack verdicts, and
//! the simulated traffic that trains it.
//!
//! Training data comes from replayed sessions. Legitimate sessions stream
//! random training samples through the scoring pipeline and label every row
//! 0. Attack sessions unleash a query attack against a recorder that scores
//! each query but always answers malware, so the attacker exhausts its full
//! budget and the recorder captures the complete score trajectory; every
//! row of an attack session is labeled 1. Rows are shuffled and split 80:20
//! into train and validation.

use std::io::Write as _;
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::history::{HistoryEntry, QueryHistory};
use super::indicators::{compute_scores, Calibration, IndicatorScores};
use super::{Oracle, OracleVerdict};
use crate::attacks::{build_pool, run_attack, AttackConfig, AttackStrategy, PoolMode};
use crate::featurespace::{Dataset, FeatureVector, Split, LABEL_MALWARE};
use crate::models::{
    load_model, save_model, train_logistic, train_mlp, AnyModel, Autoencoder, LogisticConfig,
    MlpConfig,
};
use crate::seeding::{child_seed, indexed_seed};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecisionKind {
    Logistic,
    Mlp,
}

/// A trained attack/no-attack classifier over the six indicator scores.
#[derive(Debug, Clone)]
pub struct DecisionModel {
    model: AnyModel,
}

impl DecisionModel {
    /// Wraps a model, insisting on a six-input logistic or MLP head.
    pub fn from_any(model: AnyModel) -> Result<Self> {
        use crate::models::PredictionModel as _;
        if matches!(model, AnyModel::Ensemble(_)) {
            return Err(Error::Config(
                "decision model must be logistic or mlp, not an ensemble".into(),
            ));
        }
        if model.dim() != 6 {
            return Err(Error::Config(format!(
                "decision model must take exactly 6 score inputs, got {}",
                model.dim()
            )));
        }
        Ok(Self { model })
    }

    pub fn kind(&self) -> DecisionKind {
        match self.model {
            AnyModel::Logistic(_) => DecisionKind::Logistic,
            _ => DecisionKind::Mlp,
        }
    }

    /// Probability that the query stream is under attack.
    pub fn attack_probability(&self, scores: &IndicatorScores) -> f64 {
        let x = scores.as_array();
        match &self.model {
            AnyModel::Logistic(m) => m.proba_dense(&x),
            AnyModel::Mlp(m) => m.proba_dense(&x),
            AnyModel::Ensemble(_) => unreachable!("rejected at construction"),
        }
    }

    pub fn flags_attack(&self, scores: &IndicatorScores) -> bool {
        self.attack_probability(scores) >= 0.5
    }

    /// Weight vector and bias when the head is logistic.
    pub fn coefficients(&self) -> Option<(&[f64], f64)> {
        match &self.model {
            AnyModel::Logistic(m) => Some((&m.weights, m.bias)),
            _ => None,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        save_model(&self.model, path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_any(load_model(path)?)
    }
}

/// One scored query and whether it came from an attack session.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionRow {
    pub scores: IndicatorScores,
    pub label: u8,
}

const CSV_HEADER: &str = "s1,s2,s3a,s3b,s4a,s4b,label";

/// Score rows in storage order; the first 80% are the training split.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionDataset {
    rows: Vec<DecisionRow>,
    train_len: usize,
}

impl DecisionDataset {
    pub fn new(rows: Vec<DecisionRow>) -> Self {
        let train_len = rows.len() * 4 / 5;
        Self { rows, train_len }
    }

    pub fn rows(&self) -> &[DecisionRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn train_rows(&self) -> &[DecisionRow] {
        &self.rows[..self.train_len]
    }

    pub fn validation_rows(&self) -> &[DecisionRow] {
        &self.rows[self.train_len..]
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "{CSV_HEADER}")?;
        for row in &self.rows {
            let s = row.scores;
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                s.s1, s.s2, s.s3a, s.s3b, s.s4a, s.s4b, row.label
            )?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|_| Error::MissingArtifact(path.display().to_string()))?;
        let mut lines = text.lines();
        if lines.next() != Some(CSV_HEADER) {
            return Err(Error::Format(format!(
                "decision dataset must start with '{CSV_HEADER}'"
            )));
        }
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 7 {
                return Err(Error::Format(format!(
                    "row {}: expected 7 fields, got {}",
                    i + 1,
                    fields.len()
                )));
            }
            let num = |k: usize| -> Result<f64> {
                fields[k]
                    .parse::<f64>()
                    .map_err(|_| Error::Format(format!("row {}: bad number '{}'", i + 1, fields[k])))
            };
            let label: u8 = fields[6]
                .parse()
                .map_err(|_| Error::Format(format!("row {}: bad label '{}'", i + 1, fields[6])))?;
            if label > 1 {
                return Err(Error::Format(format!("row {}: label must be 0 or 1", i + 1)));
            }
            rows.push(DecisionRow {
                scores: IndicatorScores {
                    s1: num(0)?,
                    s2: num(1)?,
                    s3a: num(2)?,
                    s3b: num(3)?,
                    s4a: num(4)?,
                    s4b: num(5)?,
                },
                label,
            });
        }
        Ok(Self::new(rows))
    }
}

/// Shape of the simulated traffic behind a decision dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct DecisionSimConfig {
    pub n_legit_sessions: usize,
    pub legit_queries_per_session: usize,
    pub n_attack_sessions: usize,
    /// Query budget of each attack session; sessions run to exhaustion.
    pub attack_n_max: usize,
    /// Strategies cycled across attack sessions.
    pub attack_mix: Vec<AttackStrategy>,
    /// Training samples preloaded into each session's history.
    pub history_init: usize,
    pub history_capacity: usize,
}

impl Default for DecisionSimConfig {
    fn default() -> Self {
        Self {
            n_legit_sessions: 3,
            legit_queries_per_session: 150,
            n_attack_sessions: 3,
            attack_n_max: 200,
            attack_mix: vec![
                AttackStrategy::Blackbox,
                AttackStrategy::Graybox,
                AttackStrategy::Adaptive { m: 8, p: 0.3 },
            ],
            history_init: 200,
            history_capacity: 10_000,
        }
    }
}

/// Scores every query it sees but always answers malware, so attack
/// sessions burn their whole budget and leave a full score trajectory.
struct ScoreRecorder<'a> {
    autoencoder: &'a Autoencoder,
    calibration: &'a Calibration,
    history: QueryHistory,
    recorded: Vec<IndicatorScores>,
}

impl<'a> ScoreRecorder<'a> {
    fn new(
        autoencoder: &'a Autoencoder,
        calibration: &'a Calibration,
        capacity: usize,
    ) -> Result<Self> {
        Ok(Self {
            autoencoder,
            calibration,
            history: QueryHistory::new(autoencoder.dim(), capacity)?,
            recorded: Vec::new(),
        })
    }
}

impl Oracle for ScoreRecorder<'_> {
    fn dim(&self) -> usize {
        self.history.dim()
    }

    fn predict(&mut self, q: &FeatureVector) -> Result<OracleVerdict> {
        let rec_loss = self.autoencoder.reconstruction_loss(q);
        let scores = compute_scores(q, rec_loss, &self.history, self.calibration)?;
        self.history.push(HistoryEntry::new(q, rec_loss));
        self.recorded.push(scores);
        Ok(OracleVerdict {
            label: LABEL_MALWARE,
            attack_detected: false,
            scores: Some(scores),
            internal_score: 1.0,
        })
    }

    fn seed_history(&mut self, entries: Vec<HistoryEntry>) {
        for e in entries {
            self.history.push(e);
        }
    }

    fn history_len(&self) -> usize {
        self.history.len()
    }

    fn serialized_history_bytes(&self) -> u64 {
        self.history.serialized_bytes()
    }
}

fn seeded_history(
    dataset: &Dataset,
    autoencoder: &Autoencoder,
    n: usize,
    seed: u64,
) -> Vec<HistoryEntry> {
    let train: Vec<&FeatureVector> = dataset.vectors(Split::Train);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let v = train[rng.random_range(0..train.len())];
            HistoryEntry::new(v, autoencoder.reconstruction_loss(v))
        })
        .collect()
}

/// Simulates traffic and returns the labeled, shuffled, split score rows.
/// Both session kinds run against independent recorders whose histories are
/// preloaded with random training samples.
pub fn generate_decision_dataset(
    dataset: &Dataset,
    autoencoder: &Autoencoder,
    calibration: &Calibration,
    sim: &DecisionSimConfig,
    seed: u64,
) -> Result<DecisionDataset> {
    let mut rows: Vec<DecisionRow> = Vec::new();

    let train: Vec<&FeatureVector> = dataset.vectors(Split::Train);
    if train.is_empty() {
        return Err(Error::InsufficientData("empty training split".into()));
    }

    for i in 0..sim.n_legit_sessions {
        let session_seed = indexed_seed(seed, "legit-session", i as u64);
        let mut recorder = ScoreRecorder::new(autoencoder, calibration, sim.history_capacity)?;
        recorder.seed_history(seeded_history(
            dataset,
            autoencoder,
            sim.history_init,
            child_seed(session_seed, "history-init"),
        ));
        let mut rng = ChaCha8Rng::seed_from_u64(child_seed(session_seed, "queries"));
        for _ in 0..sim.legit_queries_per_session {
            let q = train[rng.random_range(0..train.len())];
            recorder.predict(q)?;
        }
        rows.extend(
            recorder
                .recorded
                .into_iter()
                .map(|scores| DecisionRow { scores, label: 0 }),
        );
    }

    let malware: Vec<&FeatureVector> = dataset
        .split_with_label(Split::Train, LABEL_MALWARE)
        .map(|s| &s.features)
        .collect();
    if sim.n_attack_sessions > 0 && (malware.is_empty() || sim.attack_mix.is_empty()) {
        return Err(Error::InsufficientData(
            "attack sessions need malware training samples and a nonempty attack mix".into(),
        ));
    }
    for i in 0..sim.n_attack_sessions {
        let session_seed = indexed_seed(seed, "attack-session", i as u64);
        let strategy = sim.attack_mix[i % sim.attack_mix.len()];
        let mode = match strategy {
            AttackStrategy::Blackbox => PoolMode::Random,
            _ => PoolMode::Frequency,
        };
        let pool = build_pool(dataset, mode, child_seed(session_seed, "pool"))?;
        let mut rng = ChaCha8Rng::seed_from_u64(child_seed(session_seed, "sample-pick"));
        let x = malware[rng.random_range(0..malware.len())];

        let mut recorder = ScoreRecorder::new(autoencoder, calibration, sim.history_capacity)?;
        recorder.seed_history(seeded_history(
            dataset,
            autoencoder,
            sim.history_init,
            child_seed(session_seed, "history-init"),
        ));
        let config = AttackConfig {
            n_max: sim.attack_n_max,
            strategy,
            seed: child_seed(session_seed, "attack"),
        };
        run_attack(&mut recorder, x, &pool, &dataset.table, &config)?;
        rows.extend(
            recorder
                .recorded
                .into_iter()
                .map(|scores| DecisionRow { scores, label: 1 }),
        );
    }

    if rows.len() < 1000 {
        return Err(Error::InsufficientData(format!(
            "decision dataset needs at least 1000 rows, config produced {}",
            rows.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(child_seed(seed, "row-shuffle"));
    rows.shuffle(&mut rng);
    Ok(DecisionDataset::new(rows))
}

/// Epoch and shape knobs for both decision heads.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct DecisionTrainConfig {
    pub logistic: LogisticConfig,
    pub mlp: MlpConfig,
}

/// Trains the requested head on the train split and reports validation
/// accuracy (train accuracy when the validation split is empty).
pub fn train_decision_model(
    data: &DecisionDataset,
    kind: DecisionKind,
    cfg: &DecisionTrainConfig,
    seed: u64,
) -> Result<(DecisionModel, f64)> {
    let train = data.train_rows();
    if !train.iter().any(|r| r.label == 0) || !train.iter().any(|r| r.label == 1) {
        return Err(Error::InsufficientData(
            "decision training needs both attack and no-attack rows".into(),
        ));
    }
    let inputs: Vec<Vec<f64>> = train.iter().map(|r| r.scores.as_array().to_vec()).collect();
    let labels: Vec<u8> = train.iter().map(|r| r.label).collect();

    let model = match kind {
        DecisionKind::Logistic => AnyModel::Logistic(train_logistic(
            &inputs,
            &labels,
            &cfg.logistic,
            child_seed(seed, "decision-logistic"),
        )?),
        DecisionKind::Mlp => AnyModel::Mlp(train_mlp(
            &inputs,
            &labels,
            &cfg.mlp,
            child_seed(seed, "decision-mlp"),
        )?),
    };
    let model = DecisionModel::from_any(model)?;

    let eval = if data.validation_rows().is_empty() {
        train
    } else {
        data.validation_rows()
    };
    let correct = eval
        .iter()
        .filter(|r| u8::from(model.flags_attack(&r.scores)) == r.label)
        .count();
    let accuracy = correct as f64 / eval.len() as f64;
    Ok((model, accuracy))
}
