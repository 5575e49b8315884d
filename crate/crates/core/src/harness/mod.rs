//! Experiment orchestration: one config type, a trained-artifact bundle,
//! and drivers for the three experiment families.
//!
//! The drivers share a layout: every run derives all randomness from the
//! root seed through labeled child seeds, builds a fresh oracle per
//! session, and seeds its history from a shared pool of training vectors
//! with precomputed reconstruction losses. Results come back as plain row
//! structs plus a fixed-header CSV rendering, so the binary and the tests
//! consume the same code path.

mod bench;
mod manifest;
mod metrics;
mod mix;
mod sweep;

pub use bench::{bench_costs, bench_csv, BenchRow, TimingReport};
pub use manifest::{sha256_hex, RunManifest};
pub use metrics::{
    linear_fit, median, rank_auc, ConfusionCounts, LinearFit, MetricsReport,
};
pub use mix::{mix_csv, run_traffic_mix, MixRow};
pub use sweep::{run_evasion_sweep, summarize_sweep, sweep_csv, SweepRow, SweepSummary};

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::attacks::AttackStrategy;
use crate::baselines::{
    L0Defense, PradaDefense, SdCalibration, SdDefense, DEFAULT_L0_THRESHOLD, DEFAULT_PRADA_DELTA,
    DEFAULT_SD_K, DEFAULT_SD_PERCENTILE,
};
use crate::defense::{
    generate_decision_dataset, train_decision_model, Calibration, DecisionDataset, DecisionKind,
    DecisionModel, DecisionSimConfig, DecisionTrainConfig, HistoryEntry, MalProtectOracle, Oracle,
    UndefendedOracle,
};
use crate::featurespace::{
    compute_dataset_stats, generate_synthetic_dataset, Dataset, FeatureVector, Split,
    SyntheticConfig, LABEL_MALWARE,
};
use crate::models::{
    adversarially_train, distill, train_autoencoder, train_ensemble, train_mlp,
    transferability_generate, AnyModel, Autoencoder, AutoencoderConfig, EnsembleMode, MlpConfig,
    MlpModel, TransferConfig,
};
use crate::seeding::child_seed;
use crate::{Error, Result};

/// History warm-up before the empirical-ceiling indicators switch on.
const MIN_HISTORY_FOR_EMPIRICAL: usize = 30;

/// Stateful defense wrapped around the prediction model, if any.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DefenseKind {
    None,
    MalprotectLr,
    MalprotectNn,
    L0,
    Prada,
    Sd,
}

impl DefenseKind {
    pub const ALL: [DefenseKind; 6] = [
        DefenseKind::None,
        DefenseKind::MalprotectLr,
        DefenseKind::MalprotectNn,
        DefenseKind::L0,
        DefenseKind::Prada,
        DefenseKind::Sd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DefenseKind::None => "none",
            DefenseKind::MalprotectLr => "malprotect-lr",
            DefenseKind::MalprotectNn => "malprotect-nn",
            DefenseKind::L0 => "l0",
            DefenseKind::Prada => "prada",
            DefenseKind::Sd => "sd",
        }
    }
}

impl fmt::Display for DefenseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Training regime of the wrapped prediction model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Mlp,
    NnAt,
    NnDd,
    Majority,
    Veto,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Mlp,
        ModelKind::NnAt,
        ModelKind::NnDd,
        ModelKind::Majority,
        ModelKind::Veto,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Mlp => "mlp",
            ModelKind::NnAt => "nn-at",
            ModelKind::NnDd => "nn-dd",
            ModelKind::Majority => "majority",
            ModelKind::Veto => "veto",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One oracle under test: a defense wrapped around a prediction model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct OracleSpec {
    pub defense: DefenseKind,
    pub model: ModelKind,
}

impl fmt::Display for OracleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.defense, self.model)
    }
}

/// Everything one experiment run can vary, with working defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub dataset: SyntheticConfig,
    pub history_capacity: usize,
    /// Training vectors seeded into each fresh oracle's history.
    pub n_init: usize,
    /// Malware test samples attacked per (oracle, seed) sweep run.
    pub samples_per_run: usize,
    pub n_max_grid: Vec<usize>,
    pub k_grid: Vec<f64>,
    pub q_size_grid: Vec<usize>,
    /// Stream length of each traffic-mix run.
    pub mix_queries: usize,
    pub seeds: Vec<u64>,
    pub defenses: Vec<DefenseKind>,
    pub models: Vec<ModelKind>,
    /// Attack the evasion sweep runs.
    pub attack: AttackStrategy,
    pub mlp: MlpConfig,
    pub autoencoder: AutoencoderConfig,
    pub decision_sim: DecisionSimConfig,
    pub decision_train: DecisionTrainConfig,
    pub transfer: TransferConfig,
    /// Sampled pairs for the dataset distance statistics.
    pub stats_pair_budget: usize,
    /// Share of the train split injected as adversarial examples.
    pub adv_fraction: f64,
    pub distill_temperature: f64,
    /// Hidden-layer shapes of the ensemble members.
    pub ensemble_widths: Vec<Vec<usize>>,
    pub sd_k: usize,
    pub sd_percentile: f64,
    pub l0_threshold: u32,
    pub prada_delta: f64,
    /// Timed predictions per benchmark batch.
    pub bench_batch: usize,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: SyntheticConfig::default(),
            history_capacity: 10_000,
            n_init: 1000,
            samples_per_run: 200,
            n_max_grid: vec![100, 200, 300, 400, 500],
            k_grid: vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9],
            q_size_grid: vec![10_000, 20_000, 30_000, 40_000, 50_000],
            mix_queries: 1000,
            seeds: vec![0, 1, 2, 3, 4],
            defenses: DefenseKind::ALL.to_vec(),
            models: ModelKind::ALL.to_vec(),
            attack: AttackStrategy::Graybox,
            mlp: MlpConfig::default(),
            autoencoder: AutoencoderConfig::default(),
            decision_sim: DecisionSimConfig::default(),
            decision_train: DecisionTrainConfig::default(),
            transfer: TransferConfig::default(),
            stats_pair_budget: 200_000,
            adv_fraction: 0.25,
            distill_temperature: 10.0,
            ensemble_widths: vec![vec![128, 64, 32], vec![96, 48], vec![64, 64, 32]],
            sd_k: DEFAULT_SD_K,
            sd_percentile: DEFAULT_SD_PERCENTILE,
            l0_threshold: DEFAULT_L0_THRESHOLD,
            prada_delta: DEFAULT_PRADA_DELTA,
            bench_batch: 100,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, grid_empty) in [
            ("n_max_grid", self.n_max_grid.is_empty()),
            ("k_grid", self.k_grid.is_empty()),
            ("q_size_grid", self.q_size_grid.is_empty()),
            ("seeds", self.seeds.is_empty()),
            ("defenses", self.defenses.is_empty()),
            ("models", self.models.is_empty()),
        ] {
            if grid_empty {
                return Err(Error::Config(format!("{name} must not be empty")));
            }
        }
        if self.n_max_grid.iter().any(|&n| n == 0) {
            return Err(Error::Config("n_max grid entries must be positive".into()));
        }
        if self.k_grid.iter().any(|&k| !(k > 0.0 && k < 1.0)) {
            return Err(Error::Config(
                "k grid entries must lie strictly between 0 and 1".into(),
            ));
        }
        if !self.q_size_grid.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Config(
                "q_size grid must be strictly ascending".into(),
            ));
        }
        if self.n_init > self.history_capacity {
            return Err(Error::Config(format!(
                "n_init {} exceeds history capacity {}",
                self.n_init, self.history_capacity
            )));
        }
        if self.samples_per_run == 0 {
            return Err(Error::Config("samples_per_run must be positive".into()));
        }
        if self.mix_queries < 1000 {
            return Err(Error::Config(format!(
                "traffic-mix streams need at least 1000 queries, got {}",
                self.mix_queries
            )));
        }
        if self.bench_batch < 100 {
            return Err(Error::Config(format!(
                "benchmark batches need at least 100 predictions, got {}",
                self.bench_batch
            )));
        }
        if !(0.0..=1.0).contains(&self.adv_fraction) {
            return Err(Error::Config(format!(
                "adv_fraction must lie in [0, 1], got {}",
                self.adv_fraction
            )));
        }
        if self.distill_temperature <= 0.0 {
            return Err(Error::Config(
                "distillation temperature must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("config {}: {e}", path.display())))?;
        let config: Self = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("config {}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    /// Cross product of the configured defenses and models, in config order.
    pub fn oracle_specs(&self) -> Vec<OracleSpec> {
        self.defenses
            .iter()
            .flat_map(|&defense| {
                self.models
                    .iter()
                    .map(move |&model| OracleSpec { defense, model })
            })
            .collect()
    }
}

/// Everything trained or calibrated once and shared by all runs.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub dataset: Dataset,
    pub autoencoder: Autoencoder,
    pub calibration: Calibration,
    pub models: BTreeMap<ModelKind, AnyModel>,
    pub decision_data: DecisionDataset,
    pub decision_lr: DecisionModel,
    pub decision_nn: DecisionModel,
    pub sd: SdCalibration,
    pub l0_threshold: u32,
    pub prada_delta: f64,
    /// Transfer attack outputs used as the adversarial share of mix streams.
    pub adversarial_pool: Vec<FeatureVector>,
    /// Train vectors with cached reconstruction losses, for history seeding.
    pub history_pool: Vec<HistoryEntry>,
}

/// The synthetic dataset a run at this root seed works on.
pub fn generate_dataset(config: &ExperimentConfig, seed: u64) -> Result<Dataset> {
    config.validate()?;
    generate_synthetic_dataset(&config.dataset, child_seed(seed, "dataset"))
}

/// Indicator calibration constants and the SD threshold, from the train
/// split of an existing dataset and a trained autoencoder.
pub fn calibrate_artifacts(
    dataset: &Dataset,
    autoencoder: &Autoencoder,
    config: &ExperimentConfig,
    seed: u64,
) -> Result<(Calibration, SdCalibration)> {
    let train_refs = dataset.vectors(Split::Train);
    let stats = compute_dataset_stats(
        &train_refs,
        config.stats_pair_budget,
        child_seed(seed, "stats"),
    )?;
    let max_rec_loss = train_refs
        .iter()
        .map(|v| autoencoder.reconstruction_loss(v))
        .fold(0.0, f64::max);
    let calibration = Calibration::new(
        stats,
        max_rec_loss,
        MIN_HISTORY_FOR_EMPIRICAL,
        "autoencoder.json".into(),
    )?;
    let sd = SdCalibration::from_training(&train_refs, config.sd_k, config.sd_percentile)?;
    Ok((calibration, sd))
}

impl Artifacts {
    /// Trains the full bundle for `config.models` from one root seed.
    pub fn build(config: &ExperimentConfig, seed: u64) -> Result<Self> {
        let dataset = generate_dataset(config, seed)?;
        Self::build_from_dataset(config, seed, dataset)
    }

    /// Trains the bundle on an already generated (or loaded) dataset.
    pub fn build_from_dataset(
        config: &ExperimentConfig,
        seed: u64,
        dataset: Dataset,
    ) -> Result<Self> {
        config.validate()?;
        let train_inputs: Vec<Vec<f64>> = dataset
            .split(Split::Train)
            .map(|s| s.features.to_dense())
            .collect();
        let train_labels: Vec<u8> = dataset.split(Split::Train).map(|s| s.label).collect();

        let train_refs = dataset.vectors(Split::Train);
        let autoencoder =
            train_autoencoder(&train_refs, &config.autoencoder, child_seed(seed, "autoencoder"))?;
        let (calibration, sd) = calibrate_artifacts(&dataset, &autoencoder, config, seed)?;

        let vanilla = train_mlp(
            &train_inputs,
            &train_labels,
            &config.mlp,
            child_seed(seed, "model-mlp"),
        )?;

        let mut models = BTreeMap::new();
        for &kind in &config.models {
            let model = match kind {
                ModelKind::Mlp => AnyModel::Mlp(vanilla.clone()),
                ModelKind::NnAt => {
                    let pool = Self::self_attack_pool(&dataset, &vanilla, &config.transfer)?;
                    let (model, _) = adversarially_train(
                        &dataset.samples,
                        &pool,
                        config.adv_fraction,
                        &config.mlp,
                        child_seed(seed, "model-nn-at"),
                    )?;
                    AnyModel::Mlp(model)
                }
                ModelKind::NnDd => AnyModel::Mlp(distill(
                    &vanilla,
                    &train_inputs,
                    config.distill_temperature,
                    &config.mlp,
                    child_seed(seed, "model-nn-dd"),
                )?),
                ModelKind::Majority => AnyModel::Ensemble(train_ensemble(
                    &train_inputs,
                    &train_labels,
                    &config.ensemble_widths,
                    &config.mlp,
                    EnsembleMode::Majority,
                    child_seed(seed, "model-majority"),
                )?),
                ModelKind::Veto => AnyModel::Ensemble(train_ensemble(
                    &train_inputs,
                    &train_labels,
                    &config.ensemble_widths,
                    &config.mlp,
                    EnsembleMode::Veto,
                    child_seed(seed, "model-veto"),
                )?),
            };
            models.insert(kind, model);
        }

        let substitute = train_mlp(
            &train_inputs,
            &train_labels,
            &config.mlp,
            child_seed(seed, "substitute"),
        )?;
        let test_malware: Vec<&FeatureVector> = dataset
            .split_with_label(Split::Test, LABEL_MALWARE)
            .map(|s| &s.features)
            .collect();
        let adversarial_pool = transferability_generate(
            &substitute,
            &test_malware,
            &dataset.table,
            &config.transfer,
        )?
        .into_iter()
        .map(|ex| ex.vector)
        .collect();

        let decision_data = generate_decision_dataset(
            &dataset,
            &autoencoder,
            &calibration,
            &config.decision_sim,
            child_seed(seed, "decision-data"),
        )?;
        let (decision_lr, _) = train_decision_model(
            &decision_data,
            DecisionKind::Logistic,
            &config.decision_train,
            child_seed(seed, "decision-lr"),
        )?;
        let (decision_nn, _) = train_decision_model(
            &decision_data,
            DecisionKind::Mlp,
            &config.decision_train,
            child_seed(seed, "decision-nn"),
        )?;

        let history_pool = history_pool(&dataset, &autoencoder);

        Ok(Self {
            dataset,
            autoencoder,
            calibration,
            models,
            decision_data,
            decision_lr,
            decision_nn,
            sd,
            l0_threshold: config.l0_threshold,
            prada_delta: config.prada_delta,
            adversarial_pool,
            history_pool,
        })
    }

    /// Evading variants of the train-split malware against the model's own
    /// gradient, the augmentation source for adversarial training.
    fn self_attack_pool(
        dataset: &Dataset,
        model: &MlpModel,
        transfer: &TransferConfig,
    ) -> Result<Vec<FeatureVector>> {
        let sources: Vec<&FeatureVector> = dataset
            .split_with_label(Split::Train, LABEL_MALWARE)
            .map(|s| &s.features)
            .collect();
        let examples = transferability_generate(model, &sources, &dataset.table, transfer)?;
        Ok(examples.into_iter().map(|ex| ex.vector).collect())
    }

    /// Builds the oracle described by `spec` from the trained pieces.
    pub fn oracle(&self, spec: OracleSpec, history_capacity: usize) -> Result<Box<dyn Oracle>> {
        let model = self
            .models
            .get(&spec.model)
            .cloned()
            .ok_or_else(|| Error::Config(format!("model {} was not trained", spec.model)))?;
        Ok(match spec.defense {
            DefenseKind::None => Box::new(UndefendedOracle::new(model, history_capacity)?),
            DefenseKind::MalprotectLr => Box::new(MalProtectOracle::new(
                model,
                self.autoencoder.clone(),
                self.calibration.clone(),
                self.decision_lr.clone(),
                history_capacity,
            )?),
            DefenseKind::MalprotectNn => Box::new(MalProtectOracle::new(
                model,
                self.autoencoder.clone(),
                self.calibration.clone(),
                self.decision_nn.clone(),
                history_capacity,
            )?),
            DefenseKind::L0 => {
                Box::new(L0Defense::new(model, self.l0_threshold, history_capacity)?)
            }
            DefenseKind::Prada => {
                Box::new(PradaDefense::new(model, self.prada_delta, history_capacity)?)
            }
            DefenseKind::Sd => Box::new(SdDefense::new(
                model,
                self.sd.k,
                self.sd.threshold,
                history_capacity,
            )?),
        })
    }
}

/// History entries for every train vector, reconstruction losses included,
/// so seeding an oracle never retouches the autoencoder.
pub fn history_pool(dataset: &Dataset, autoencoder: &Autoencoder) -> Vec<HistoryEntry> {
    dataset
        .split(Split::Train)
        .map(|s| HistoryEntry::new(&s.features, autoencoder.reconstruction_loss(&s.features)))
        .collect()
}

/// Seeds a fresh oracle's history with `n_init` pool entries: a seeded
/// subset in drawn order while the pool suffices, seeded draws with
/// replacement beyond that. Call it on a fresh oracle; it fails if the
/// history cannot take all `n_init` entries.
pub fn init_history(
    oracle: &mut dyn Oracle,
    pool: &[HistoryEntry],
    n_init: usize,
    seed: u64,
) -> Result<()> {
    if n_init == 0 {
        return Ok(());
    }
    if pool.is_empty() {
        return Err(Error::InsufficientData(
            "history seeding needs a nonempty pool".into(),
        ));
    }
    let before = oracle.history_len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entries: Vec<HistoryEntry> = if n_init <= pool.len() {
        rand::seq::index::sample(&mut rng, pool.len(), n_init)
            .iter()
            .map(|i| pool[i].clone())
            .collect()
    } else {
        (0..n_init)
            .map(|_| pool.choose(&mut rng).expect("pool is nonempty").clone())
            .collect()
    };
    oracle.seed_history(entries);
    if oracle.history_len() != before + n_init {
        return Err(Error::Config(format!(
            "history capacity cannot hold {n_init} seeded entries"
        )));
    }
    Ok(())
}


#[cfg(test)]
mod tests {
    use super::test_fixture::{tiny_config, TINY};
    use super::*;

    #[test]
    fn default_config_validates_and_covers_the_full_grid() {
        let config = ExperimentConfig::default();
        config.validate().unwrap();
        assert_eq!(config.oracle_specs().len(), 30);
    }

    #[test]
    fn bad_configs_are_rejected() {
        let mut config = ExperimentConfig::default();
        config.seeds.clear();
        assert!(config.validate().is_err());

        let mut config = ExperimentConfig::default();
        config.k_grid = vec![0.5, 1.0];
        assert!(config.validate().is_err());

        let mut config = ExperimentConfig::default();
        config.q_size_grid = vec![20_000, 10_000];
        assert!(config.validate().is_err());

        let mut config = ExperimentConfig::default();
        config.n_init = config.history_capacity + 1;
        assert!(config.validate().is_err());

        let mut config = ExperimentConfig::default();
        config.mix_queries = 999;
        assert!(config.validate().is_err());
    }

    #[test]
    fn spec_names_match_the_csv_vocabulary() {
        let names: Vec<&str> = DefenseKind::ALL.iter().map(|d| d.name()).collect();
        assert_eq!(
            names,
            ["none", "malprotect-lr", "malprotect-nn", "l0", "prada", "sd"]
        );
        let names: Vec<&str> = ModelKind::ALL.iter().map(|m| m.name()).collect();
        assert_eq!(names, ["mlp", "nn-at", "nn-dd", "majority", "veto"]);
        let spec = OracleSpec {
            defense: DefenseKind::MalprotectNn,
            model: ModelKind::NnAt,
        };
        assert_eq!(spec.to_string(), "malprotect-nn/nn-at");
    }

    #[test]
    fn config_round_trips_through_json() {
        let config = tiny_config();
        let text = serde_json::to_string(&config).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back.n_max_grid, config.n_max_grid);
        assert_eq!(back.defenses, config.defenses);
        assert_eq!(back.models, config.models);

        let sparse: ExperimentConfig = serde_json::from_str(r#"{"n_init": 7}"#).unwrap();
        assert_eq!(sparse.n_init, 7);
        assert_eq!(sparse.history_capacity, 10_000);
    }

    #[test]
    fn init_history_seeds_exactly_n_init_entries() {
        let artifacts = &*TINY;
        let spec = OracleSpec {
            defense: DefenseKind::None,
            model: ModelKind::Mlp,
        };

        let mut oracle = artifacts.oracle(spec, 400).unwrap();
        init_history(oracle.as_mut(), &artifacts.history_pool, 0, 3).unwrap();
        assert_eq!(oracle.history_len(), 0);

        init_history(oracle.as_mut(), &artifacts.history_pool, 60, 3).unwrap();
        assert_eq!(oracle.history_len(), 60);
    }

    #[test]
    fn init_history_is_reproducible_per_seed() {
        let artifacts = &*TINY;
        let spec = OracleSpec {
            defense: DefenseKind::None,
            model: ModelKind::Mlp,
        };
        let bytes_for = |seed: u64| {
            let mut oracle = artifacts.oracle(spec, 400).unwrap();
            init_history(oracle.as_mut(), &artifacts.history_pool, 50, seed).unwrap();
            oracle.serialized_history_bytes()
        };
        assert_eq!(bytes_for(21), bytes_for(21));

        let mut a = UndefendedOracle::new(
            artifacts.models[&ModelKind::Mlp].clone(),
            400,
        )
        .unwrap();
        let mut b = UndefendedOracle::new(
            artifacts.models[&ModelKind::Mlp].clone(),
            400,
        )
        .unwrap();
        init_history(&mut a, &artifacts.history_pool, 50, 21).unwrap();
        init_history(&mut b, &artifacts.history_pool, 50, 21).unwrap();
        let left: Vec<_> = a.history().iter().map(|e| e.bits.clone()).collect();
        let right: Vec<_> = b.history().iter().map(|e| e.bits.clone()).collect();
        assert_eq!(left, right);
    }

    #[test]
    fn init_history_draws_with_replacement_beyond_the_pool() {
        let artifacts = &*TINY;
        let pool = &artifacts.history_pool[..10];
        let mut oracle = artifacts
            .oracle(
                OracleSpec {
                    defense: DefenseKind::L0,
                    model: ModelKind::Mlp,
                },
                400,
            )
            .unwrap();
        init_history(oracle.as_mut(), pool, 35, 4).unwrap();
        assert_eq!(oracle.history_len(), 35);
    }

    #[test]
    fn init_history_rejects_overflow_and_empty_pools() {
        let artifacts = &*TINY;
        let spec = OracleSpec {
            defense: DefenseKind::None,
            model: ModelKind::Mlp,
        };
        let mut oracle = artifacts.oracle(spec, 40).unwrap();
        assert!(init_history(oracle.as_mut(), &artifacts.history_pool, 41, 0).is_err());

        let mut oracle = artifacts.oracle(spec, 40).unwrap();
        assert!(init_history(oracle.as_mut(), &[], 5, 0).is_err());
    }

    #[test]
    fn every_configured_oracle_builds_and_answers() {
        let artifacts = &*TINY;
        let config = tiny_config();
        let query = artifacts
            .dataset
            .split(Split::Test)
            .next()
            .unwrap()
            .features
            .clone();
        for spec in config.oracle_specs() {
            let mut oracle = artifacts.oracle(spec, config.history_capacity).unwrap();
            assert_eq!(oracle.dim(), 48, "{spec}");
            let verdict = oracle.predict(&query).unwrap();
            assert!(verdict.label <= 1, "{spec}");
            assert_eq!(oracle.history_len(), 1, "{spec}");
        }
    }

    #[test]
    fn artifacts_require_the_model_they_are_asked_for() {
        let artifacts = &*TINY;
        let result = artifacts.oracle(
            OracleSpec {
                defense: DefenseKind::None,
                model: ModelKind::Veto,
            },
            100,
        );
        assert!(matches!(result, Err(Error::Config(_))));
    }

    #[test]
    fn artifact_builds_are_deterministic_per_seed() {
        let config = ExperimentConfig {
            dataset: SyntheticConfig {
                dim: 24,
                n_per_class: 60,
                ..SyntheticConfig::default()
            },
            history_capacity: 200,
            n_init: 20,
            mlp: MlpConfig {
                hidden: vec![10],
                epochs: 4,
                ..MlpConfig::default()
            },
            autoencoder: AutoencoderConfig {
                epochs: 3,
                ..AutoencoderConfig::default()
            },
            decision_sim: DecisionSimConfig {
                n_legit_sessions: 8,
                legit_queries_per_session: 120,
                n_attack_sessions: 3,
                attack_n_max: 40,
                history_init: 20,
                ..DecisionSimConfig::default()
            },
            transfer: TransferConfig {
                max_rounds: 25,
                ..TransferConfig::default()
            },
            stats_pair_budget: 1500,
            models: vec![ModelKind::Mlp],
            sd_k: 5,
            ..ExperimentConfig::default()
        };
        let a = Artifacts::build(&config, 17).unwrap();
        let b = Artifacts::build(&config, 17).unwrap();
        let probe = &a.dataset.split(Split::Test).next().unwrap().features;
        let pa = crate::models::PredictionModel::predict_proba(&a.models[&ModelKind::Mlp], probe);
        let pb = crate::models::PredictionModel::predict_proba(&b.models[&ModelKind::Mlp], probe);
        assert_eq!(pa, pb);
        assert_eq!(a.sd, b.sd);
        assert_eq!(a.adversarial_pool, b.adversarial_pool);
        assert_eq!(a.history_pool.len(), b.history_pool.len());
    }
}
