//! Traffic-mix metric sweeps over the adversarial-fraction grid.
//!
//! A mix stream interleaves three query sources: transfer-attack outputs
//! (true label malware), benign test samples, and non-adversarial malware
//! test samples. The fraction k goes to the adversarial source and the rest
//! is split evenly. Each source is drawn without replacement in a seeded
//! order, cycling once exhausted, and the interleaving is a seeded shuffle
//! that depends only on (k, seed), so every oracle faces the same stream.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use super::metrics::MetricsReport;
use super::{init_history, Artifacts, DefenseKind, ExperimentConfig, ModelKind};
use crate::featurespace::{FeatureVector, Split, LABEL_BENIGN, LABEL_MALWARE};
use crate::seeding::{child_seed, indexed_seed};
use crate::{Error, Result};

/// One mix measurement: an oracle, an adversarial fraction, a seed.
#[derive(Debug, Clone, PartialEq)]
pub struct MixRow {
    pub defense: DefenseKind,
    pub model: ModelKind,
    pub k: f64,
    pub seed: u64,
    pub accuracy: f64,
    pub fpr: f64,
    pub f1: f64,
    pub auc: f64,
}

/// Source counts for a stream of `total` queries at adversarial fraction
/// `k`: adversarial, benign, non-adversarial malware.
fn mix_counts(k: f64, total: usize) -> (usize, usize, usize) {
    let n_adv = (k * total as f64).round() as usize;
    let rest = total - n_adv;
    let n_benign = rest / 2;
    (n_adv, n_benign, rest - n_benign)
}

/// `count` items in a seeded draw-without-replacement order, restarting the
/// same order when the source runs out.
fn cycled<'a, T>(items: &[&'a T], count: usize, seed: u64) -> Vec<&'a T> {
    let mut order: Vec<&T> = items.to_vec();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    (0..count).map(|i| order[i % order.len()]).collect()
}

/// The interleaved stream as (query, true label) pairs.
fn build_stream<'a>(
    artifacts: &'a Artifacts,
    k: f64,
    total: usize,
    seed: u64,
) -> Result<Vec<(&'a FeatureVector, u8)>> {
    if artifacts.adversarial_pool.is_empty() {
        return Err(Error::InsufficientData(
            "the adversarial pool is empty".into(),
        ));
    }
    let adversarial: Vec<&FeatureVector> = artifacts.adversarial_pool.iter().collect();
    let benign: Vec<&FeatureVector> = artifacts
        .dataset
        .split_with_label(Split::Test, LABEL_BENIGN)
        .map(|s| &s.features)
        .collect();
    let malware: Vec<&FeatureVector> = artifacts
        .dataset
        .split_with_label(Split::Test, LABEL_MALWARE)
        .map(|s| &s.features)
        .collect();
    if benign.is_empty() || malware.is_empty() {
        return Err(Error::InsufficientData(
            "the test split must hold both classes".into(),
        ));
    }

    let (n_adv, n_benign, n_malware) = mix_counts(k, total);
    let mut stream: Vec<(&FeatureVector, u8)> = Vec::with_capacity(total);
    for q in cycled(&adversarial, n_adv, child_seed(seed, "mix-adversarial")) {
        stream.push((q, LABEL_MALWARE));
    }
    for q in cycled(&benign, n_benign, child_seed(seed, "mix-benign")) {
        stream.push((q, LABEL_BENIGN));
    }
    for q in cycled(&malware, n_malware, child_seed(seed, "mix-malware")) {
        stream.push((q, LABEL_MALWARE));
    }
    stream.shuffle(&mut ChaCha8Rng::seed_from_u64(child_seed(seed, "mix-shuffle")));
    Ok(stream)
}

pub fn run_traffic_mix(config: &ExperimentConfig, artifacts: &Artifacts) -> Result<Vec<MixRow>> {
    config.validate()?;
    let mut rows = Vec::new();
    for spec in config.oracle_specs() {
        for (ki, &k) in config.k_grid.iter().enumerate() {
            for &seed in &config.seeds {
                let stream_seed = indexed_seed(seed, "mix-stream", ki as u64);
                let stream = build_stream(artifacts, k, config.mix_queries, stream_seed)?;

                let mut oracle = artifacts.oracle(spec, config.history_capacity)?;
                init_history(
                    oracle.as_mut(),
                    &artifacts.history_pool,
                    config.n_init,
                    child_seed(seed, "mix-init"),
                )?;

                let mut truth = Vec::with_capacity(stream.len());
                let mut predicted = Vec::with_capacity(stream.len());
                let mut scores = Vec::with_capacity(stream.len());
                for (query, label) in stream {
                    let verdict = oracle.predict(query)?;
                    truth.push(label);
                    predicted.push(verdict.label);
                    scores.push(verdict.internal_score);
                }
                let report = MetricsReport::from_logs(&truth, &predicted, &scores)?;
                rows.push(MixRow {
                    defense: spec.defense,
                    model: spec.model,
                    k,
                    seed,
                    accuracy: report.accuracy,
                    fpr: report.fpr,
                    f1: report.f1,
                    auc: report.auc,
                });
            }
        }
    }
    Ok(rows)
}

pub fn mix_csv(rows: &[MixRow]) -> String {
    let mut out = String::from("defense,model,k,seed,accuracy,fpr,f1,auc\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.defense, r.model, r.k, r.seed, r.accuracy, r.fpr, r.f1, r.auc
        ));
    }
    out
}
