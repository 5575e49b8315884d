//! Query attacks that evade a detector by transplanting benign features.
//!
//! All three strategies share one loop: probe the original sample, then
//! repeatedly graft features drawn from a pool of benign "donor" features
//! onto the working copy, validate the perturbations against the family
//! table, and query the oracle, until the oracle answers benign, the query
//! budget runs out, or the pool is exhausted. They differ in how the pool
//! is ordered (seeded shuffle for the black-box attacker, benign-frequency
//! order for the gray-box one) and in whether the adaptive variant caps the
//! per-query bulk additions and strips removable features to stay closer to
//! the legitimate query distribution.
//!
//! Attack code sees only the oracle's returned label. Detection flags are
//! recorded into the result's trace for the experiment harness; the attack
//! logic never branches on them.

use rand::prelude::*;
use rand::seq::index::sample;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::defense::Oracle;
use crate::featurespace::{
    validate_perturbations, Dataset, FeatureFamilyTable, FeatureVector, Split, LABEL_BENIGN,
};
use crate::{Error, Result};

/// How the donor feature pool is ordered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoolMode {
    /// Seeded uniform shuffle of every feature index.
    Random,
    /// Nonincreasing frequency in benign training samples, ties broken by
    /// ascending index; features absent from benign data come last.
    Frequency,
}

/// Donor features available for transplantation, in attack order.
#[derive(Debug, Clone)]
pub struct BenignFeaturePool {
    mode: PoolMode,
    ordering: Vec<u32>,
    frequencies: Vec<u32>,
}

impl BenignFeaturePool {
    pub fn mode(&self) -> PoolMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.ordering.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ordering.is_empty()
    }

    pub fn ordering(&self) -> &[u32] {
        &self.ordering
    }

    /// How many benign training samples enable the feature.
    pub fn frequency(&self, feature: u32) -> u32 {
        self.frequencies[feature as usize]
    }
}

/// Builds the donor pool from the benign half of the training split.
pub fn build_pool(dataset: &Dataset, mode: PoolMode, seed: u64) -> Result<BenignFeaturePool> {
    let dim = dataset.dim();
    let mut frequencies = vec![0u32; dim];
    let mut n_benign = 0usize;
    for sample in dataset.split_with_label(Split::Train, LABEL_BENIGN) {
        n_benign += 1;
        for &f in sample.features.enabled() {
            frequencies[f as usize] += 1;
        }
    }
    if n_benign == 0 {
        return Err(Error::InsufficientData(
            "no benign training samples to build a donor pool from".into(),
        ));
    }

    let mut ordering: Vec<u32> = (0..dim as u32).collect();
    match mode {
        PoolMode::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            ordering.shuffle(&mut rng);
        }
        PoolMode::Frequency => {
            ordering.sort_by_key(|&f| (std::cmp::Reverse(frequencies[f as usize]), f));
        }
    }
    Ok(BenignFeaturePool {
        mode,
        ordering,
        frequencies,
    })
}

/// Attack strategy, with the adaptive knobs where they apply.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AttackStrategy {
    Blackbox,
    Graybox,
    /// Gray-box ordering with at most `m` bulk additions per query and a
    /// fraction `p` of the working copy's removable enabled features
    /// stripped before each query.
    Adaptive { m: usize, p: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackConfig {
    pub n_max: usize,
    pub strategy: AttackStrategy,
    pub seed: u64,
}

impl AttackConfig {
    fn validate(&self) -> Result<()> {
        if self.n_max == 0 {
            return Err(Error::Config("n_max must be at least 1".into()));
        }
        if let AttackStrategy::Adaptive { m, p } = self.strategy {
            if m == 0 {
                return Err(Error::Config("adaptive bulk cap m must be at least 1".into()));
            }
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!(
                    "adaptive removal fraction must lie in [0, 1], got {p}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttackOutcome {
    /// The oracle answered benign for a perturbed variant.
    Success,
    /// Budget or pool ran out first.
    Failure,
    /// The oracle already answered benign for the unperturbed sample; the
    /// sample never enters evasion-rate denominators.
    Excluded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackResult {
    pub outcome: AttackOutcome,
    /// Perturbed queries issued, except for `Excluded` where it counts the
    /// single probe.
    pub queries_used: usize,
    pub final_vector: FeatureVector,
    /// Per-query defense flags in issue order, probe first. Recorded for
    /// the harness; the attack itself never reads them.
    pub detection_trace: Vec<bool>,
}

/// Runs the configured strategy. The pool's ordering must match: the
/// black-box attack requires a random pool, the others a frequency pool.
pub fn run_attack(
    oracle: &mut dyn Oracle,
    x: &FeatureVector,
    pool: &BenignFeaturePool,
    table: &FeatureFamilyTable,
    config: &AttackConfig,
) -> Result<AttackResult> {
    config.validate()?;
    let (expected_mode, bulk_limit, removal) = match config.strategy {
        AttackStrategy::Blackbox => (PoolMode::Random, pool.len(), None),
        AttackStrategy::Graybox => (PoolMode::Frequency, pool.len(), None),
        AttackStrategy::Adaptive { m, p } => (PoolMode::Frequency, m.min(pool.len()), Some(p)),
    };
    if pool.mode() != expected_mode {
        return Err(Error::Config(format!(
            "{:?} strategy requires a {:?} pool, got {:?}",
            config.strategy,
            expected_mode,
            pool.mode()
        )));
    }
    drive(oracle, x, pool, table, config.n_max, bulk_limit, removal, config.seed)
}

pub fn run_blackbox(
    oracle: &mut dyn Oracle,
    x: &FeatureVector,
    pool: &BenignFeaturePool,
    n_max: usize,
    table: &FeatureFamilyTable,
    seed: u64,
) -> Result<AttackResult> {
    run_attack(
        oracle,
        x,
        pool,
        table,
        &AttackConfig {
            n_max,
            strategy: AttackStrategy::Blackbox,
            seed,
        },
    )
}

pub fn run_graybox(
    oracle: &mut dyn Oracle,
    x: &FeatureVector,
    pool: &BenignFeaturePool,
    n_max: usize,
    table: &FeatureFamilyTable,
    seed: u64,
) -> Result<AttackResult> {
    run_attack(
        oracle,
        x,
        pool,
        table,
        &AttackConfig {
            n_max,
            strategy: AttackStrategy::Graybox,
            seed,
        },
    )
}

pub fn run_adaptive(
    oracle: &mut dyn Oracle,
    x: &FeatureVector,
    pool: &BenignFeaturePool,
    n_max: usize,
    m: usize,
    p: f64,
    table: &FeatureFamilyTable,
    seed: u64,
) -> Result<AttackResult> {
    run_attack(
        oracle,
        x,
        pool,
        table,
        &AttackConfig {
            n_max,
            strategy: AttackStrategy::Adaptive { m, p },
            seed,
        },
    )
}

#[allow(clippy::too_many_arguments)]
fn drive(
    oracle: &mut dyn Oracle,
    x: &FeatureVector,
    pool: &BenignFeaturePool,
    table: &FeatureFamilyTable,
    n_max: usize,
    bulk_limit: usize,
    removal: Option<f64>,
    seed: u64,
) -> Result<AttackResult> {
    let mut trace = Vec::new();

    let probe = oracle.predict(x)?;
    trace.push(probe.attack_detected);
    if probe.label == LABEL_BENIGN {
        return Ok(AttackResult {
            outcome: AttackOutcome::Excluded,
            queries_used: 1,
            final_vector: x.clone(),
            detection_trace: trace,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut current = x.clone();
    let mut label = probe.label;
    let mut n = 0usize;
    while label != LABEL_BENIGN && n < n_max && n < pool.len() {
        current.insert(pool.ordering[n]);
        let r = rng.random_range(0..=bulk_limit);
        if r > 0 {
            for pos in sample(&mut rng, pool.len(), r) {
                current.insert(pool.ordering[pos]);
            }
        }
        if let Some(p) = removal {
            strip_removable(&mut current, p, table, &mut rng);
        }
        current = validate_perturbations(x, &current, table)?;
        n += 1;
        let verdict = oracle.predict(&current)?;
        trace.push(verdict.attack_detected);
        label = verdict.label;
    }

    let outcome = if label == LABEL_BENIGN {
        AttackOutcome::Success
    } else {
        AttackOutcome::Failure
    };
    Ok(AttackResult {
        outcome,
        queries_used: n,
        final_vector: current,
        detection_trace: trace,
    })
}

/// Removes `floor(p * k)` of the `k` currently enabled removable features,
/// chosen uniformly. Non-removable families are never touched.
fn strip_removable(
    current: &mut FeatureVector,
    p: f64,
    table: &FeatureFamilyTable,
    rng: &mut ChaCha8Rng,
) {
    let removable: Vec<u32> = current
        .enabled()
        .iter()
        .copied()
        .filter(|&f| table.feature_removable(f))
        .collect();
    let count = (p * removable.len() as f64).floor() as usize;
    if count == 0 {
        return;
    }
    for pos in sample(rng, removable.len(), count) {
        current.remove(removable[pos]);
    }
}
