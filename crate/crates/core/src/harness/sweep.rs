//! Evasion-rate sweeps over the query-budget grid.
//!
//! Each attack sample gets a fresh oracle with freshly seeded history, so
//! one attacker's footprint never taints another's run. The attack executes
//! once per sample at the largest budget in the grid; because a query
//! sequence does not depend on the budget that caps it, every smaller
//! budget's outcome is the prefix of that one run. Sample choice and attack
//! seeds depend only on the root seed, so different oracles face identical
//! attack sequences and rows are pairwise comparable across defenses.

use rand_chacha::ChaCha8Rng;

use rand::SeedableRng;

use super::metrics::median;
use super::{init_history, Artifacts, DefenseKind, ExperimentConfig, ModelKind};
use crate::attacks::{build_pool, run_attack, AttackConfig, AttackOutcome, AttackStrategy, PoolMode};
use crate::featurespace::{FeatureVector, Split, LABEL_MALWARE};
use crate::seeding::{child_seed, indexed_seed};
use crate::{Error, Result};

/// One sweep measurement: an oracle, a budget, a seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub defense: DefenseKind,
    pub model: ModelKind,
    pub n_max: usize,
    pub seed: u64,
    pub evasion_rate: f64,
    /// Median queries issued up to the first flagged query, over samples
    /// that were flagged at all; `None` when nothing was flagged.
    pub median_detection_queries: Option<f64>,
}

pub fn run_evasion_sweep(
    config: &ExperimentConfig,
    artifacts: &Artifacts,
) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let malware: Vec<&FeatureVector> = artifacts
        .dataset
        .split_with_label(Split::Test, LABEL_MALWARE)
        .map(|s| &s.features)
        .collect();
    if malware.is_empty() {
        return Err(Error::InsufficientData(
            "no malware samples in the test split".into(),
        ));
    }
    let budget_max = *config.n_max_grid.iter().max().expect("grid is nonempty");
    let pool_mode = match config.attack {
        AttackStrategy::Blackbox => PoolMode::Random,
        _ => PoolMode::Frequency,
    };

    let mut rows = Vec::new();
    for spec in config.oracle_specs() {
        for &seed in &config.seeds {
            let pool = build_pool(&artifacts.dataset, pool_mode, child_seed(seed, "attack-pool"))?;
            let n_samples = config.samples_per_run.min(malware.len());
            let mut rng = ChaCha8Rng::seed_from_u64(child_seed(seed, "sweep-samples"));
            let picks = rand::seq::index::sample(&mut rng, malware.len(), n_samples);

            let mut excluded = 0usize;
            let mut successes = vec![0usize; config.n_max_grid.len()];
            let mut latencies: Vec<Vec<f64>> = vec![Vec::new(); config.n_max_grid.len()];
            for (j, idx) in picks.iter().enumerate() {
                let mut oracle = artifacts.oracle(spec, config.history_capacity)?;
                init_history(
                    oracle.as_mut(),
                    &artifacts.history_pool,
                    config.n_init,
                    indexed_seed(seed, "sweep-init", j as u64),
                )?;
                let attack_config = AttackConfig {
                    n_max: budget_max,
                    strategy: config.attack,
                    seed: indexed_seed(seed, "sweep-attack", j as u64),
                };
                let result = run_attack(
                    oracle.as_mut(),
                    malware[idx],
                    &pool,
                    &artifacts.dataset.table,
                    &attack_config,
                )?;
                if result.outcome == AttackOutcome::Excluded {
                    excluded += 1;
                    continue;
                }
                for (bi, &budget) in config.n_max_grid.iter().enumerate() {
                    if result.outcome == AttackOutcome::Success && result.queries_used <= budget {
                        successes[bi] += 1;
                    }
                    let within_budget = &result.detection_trace
                        [..result.detection_trace.len().min(budget + 1)];
                    if let Some(pos) = within_budget.iter().position(|&flagged| flagged) {
                        latencies[bi].push((pos + 1) as f64);
                    }
                }
            }

            let denom = n_samples - excluded;
            if denom == 0 {
                return Err(Error::InsufficientData(format!(
                    "all {n_samples} samples were excluded for {spec} at seed {seed}"
                )));
            }
            for (bi, &budget) in config.n_max_grid.iter().enumerate() {
                rows.push(SweepRow {
                    defense: spec.defense,
                    model: spec.model,
                    n_max: budget,
                    seed,
                    evasion_rate: successes[bi] as f64 / denom as f64,
                    median_detection_queries: median(&latencies[bi]),
                });
            }
        }
    }
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("defense,model,n_max,seed,evasion_rate,median_detection_queries\n");
    for r in rows {
        let latency = match r.median_detection_queries {
            Some(m) => m.to_string(),
            None => "nan".into(),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.defense, r.model, r.n_max, r.seed, r.evasion_rate, latency
        ));
    }
    out
}

/// Per-(oracle, budget) evasion aggregated across seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub defense: DefenseKind,
    pub model: ModelKind,
    pub n_max: usize,
    pub mean_evasion: f64,
    pub stdev_evasion: f64,
    pub seeds: usize,
}

pub fn summarize_sweep(rows: &[SweepRow]) -> Vec<SweepSummary> {
    let mut groups: std::collections::BTreeMap<(DefenseKind, ModelKind, usize), Vec<f64>> =
        std::collections::BTreeMap::new();
    for r in rows {
        groups
            .entry((r.defense, r.model, r.n_max))
            .or_default()
            .push(r.evasion_rate);
    }
    groups
        .into_iter()
        .map(|((defense, model, n_max), rates)| {
            let n = rates.len() as f64;
            let mean = rates.iter().sum::<f64>() / n;
            let stdev = if rates.len() < 2 {
                0.0
            } else {
                (rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            };
            SweepSummary {
                defense,
                model,
                n_max,
                mean_evasion: mean,
                stdev_evasion: stdev,
                seeds: rates.len(),
            }
        })
        .collect()
}
