//! Prediction-cost benchmarks against history size.
//!
//! For each history size in the grid the oracle is rebuilt with exactly
//! that capacity, filled from the seeding pool, warmed up with one unmeasured
//! batch, and then timed over three measured batches. The per-size figure is
//! the smallest of the three per-batch maxima, which keeps one scheduler
//! hiccup from inflating a worst-case estimate. Storage is the serialized
//! size of the history after the fill.

use std::time::Instant;

use super::metrics::{linear_fit, LinearFit};
use super::{init_history, Artifacts, DefenseKind, ExperimentConfig, ModelKind, OracleSpec};
use crate::featurespace::{FeatureVector, Split};
use crate::seeding::child_seed;
use crate::{Error, Result};

/// Beyond this estimated history footprint the run refuses to start.
const MEMORY_BUDGET_BYTES: u128 = 2 << 30;

/// One benchmark measurement at a fixed history size.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub q_size: usize,
    pub worst_case_seconds: f64,
    pub bytes: u64,
}

/// Cost curve of one oracle over the history-size grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingReport {
    pub defense: DefenseKind,
    pub model: ModelKind,
    pub rows: Vec<BenchRow>,
    /// Least-squares line through (history size, worst-case seconds).
    pub fit: LinearFit,
}

pub fn bench_costs(
    config: &ExperimentConfig,
    artifacts: &Artifacts,
    spec: OracleSpec,
) -> Result<TimingReport> {
    config.validate()?;
    let largest = *config.q_size_grid.last().expect("grid is nonempty");
    let entry_bytes = artifacts.dataset.dim().div_ceil(8) + 64;
    if largest as u128 * entry_bytes as u128 > MEMORY_BUDGET_BYTES {
        return Err(Error::Resource(format!(
            "a history of {largest} entries would exceed the {MEMORY_BUDGET_BYTES}-byte budget"
        )));
    }

    let seed = config.seeds[0];
    let test_vectors: Vec<&FeatureVector> = artifacts.dataset.vectors(Split::Test);
    if test_vectors.is_empty() {
        return Err(Error::InsufficientData("empty test split".into()));
    }
    let queries: Vec<&FeatureVector> = (0..config.bench_batch)
        .map(|i| test_vectors[i % test_vectors.len()])
        .collect();

    let mut rows = Vec::with_capacity(config.q_size_grid.len());
    for &q_size in &config.q_size_grid {
        let mut oracle = artifacts.oracle(spec, q_size.max(1))?;
        init_history(
            oracle.as_mut(),
            &artifacts.history_pool,
            q_size,
            child_seed(seed, "bench-fill"),
        )?;

        for q in &queries {
            oracle.predict(q)?;
        }
        let mut worst = f64::INFINITY;
        for _ in 0..3 {
            let mut batch_worst = 0.0f64;
            for q in &queries {
                let started = Instant::now();
                oracle.predict(q)?;
                batch_worst = batch_worst.max(started.elapsed().as_secs_f64());
            }
            worst = worst.min(batch_worst);
        }
        rows.push(BenchRow {
            q_size,
            worst_case_seconds: worst,
            bytes: oracle.serialized_history_bytes(),
        });
    }

    let xs: Vec<f64> = rows.iter().map(|r| r.q_size as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.worst_case_seconds).collect();
    let fit = linear_fit(&xs, &ys)?;
    Ok(TimingReport {
        defense: spec.defense,
        model: spec.model,
        rows,
        fit,
    })
}

pub fn bench_csv(reports: &[TimingReport]) -> String {
    let mut out = String::from("defense,q_size,worst_case_seconds,bytes\n");
    for report in reports {
        for r in &report.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                report.defense, r.q_size, r.worst_case_seconds, r.bytes
            ));
        }
    }
    out
}
