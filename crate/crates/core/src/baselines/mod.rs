//! Prior stateful defenses used for comparison: L0 similarity, PRADA-style
//! distribution monitoring, and Stateful Detection (SD) over k-nearest
//! query distances.
//!
//! All three watch the same query history the main pipeline uses, measure
//! similarity with L0 distance (the natural metric on binary feature
//! vectors), and share its defensive action: a flagged query is answered
//! with the malware label at full confidence. Thresholds at decision
//! boundaries are strict throughout, so a distance exactly at a threshold
//! does not flag.

mod prada;
mod shapiro;

pub use prada::{prada_update, PradaState};
pub use shapiro::shapiro_wilk;

use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::defense::{
    HistoryEntry, Oracle, OracleVerdict, QueryHistory, DETECTED_VERDICT,
};
use crate::featurespace::FeatureVector;
use crate::models::{AnyModel, PredictionModel};
use crate::{Error, Result};

pub const DEFAULT_L0_THRESHOLD: u32 = 10;
pub const DEFAULT_SD_K: usize = 50;
pub const DEFAULT_SD_PERCENTILE: f64 = 0.1;
pub const DEFAULT_PRADA_DELTA: f64 = 0.9;

/// True iff some history entry lies strictly within `threshold` of `q`.
pub fn l0_check(q: &FeatureVector, history: &QueryHistory, threshold: u32) -> Result<bool> {
    let bits = q.to_packed();
    for entry in history.iter() {
        if entry.bits.l0(&bits)? < threshold {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Mean L0 distance from each training vector to its k nearest peers (self
/// excluded), reduced to the requested percentile of those means with
/// linear interpolation between order statistics.
pub fn sd_calibrate(training: &[&FeatureVector], k: usize, percentile: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::Config("SD neighbor count k must be positive".into()));
    }
    if !(0.0..=100.0).contains(&percentile) {
        return Err(Error::Config(format!(
            "percentile must lie in [0, 100], got {percentile}"
        )));
    }
    if training.len() <= k {
        return Err(Error::InsufficientData(format!(
            "SD calibration needs more than k = {k} training vectors, got {}",
            training.len()
        )));
    }

    let packed: Vec<_> = training.iter().map(|v| v.to_packed()).collect();
    let mut means = Vec::with_capacity(packed.len());
    let mut dists = Vec::with_capacity(packed.len() - 1);
    for (i, a) in packed.iter().enumerate() {
        dists.clear();
        for (j, b) in packed.iter().enumerate() {
            if i != j {
                dists.push(a.l0(b)?);
            }
        }
        dists.select_nth_unstable(k - 1);
        let sum: u64 = dists[..k].iter().map(|&d| u64::from(d)).sum();
        means.push(sum as f64 / k as f64);
    }
    means.sort_by(|a, b| a.partial_cmp(b).expect("means are finite"));
    Ok(interpolated_quantile(&means, percentile / 100.0))
}

/// True iff the history holds at least k entries and the mean L0 distance
/// from `q` to its k nearest of them falls strictly below `threshold`.
pub fn sd_check(
    q: &FeatureVector,
    history: &QueryHistory,
    k: usize,
    threshold: f64,
) -> Result<bool> {
    if k == 0 {
        return Err(Error::Config("SD neighbor count k must be positive".into()));
    }
    if history.len() < k {
        return Ok(false);
    }
    let bits = q.to_packed();
    let mut dists = Vec::with_capacity(history.len());
    for entry in history.iter() {
        dists.push(entry.bits.l0(&bits)?);
    }
    dists.select_nth_unstable(k - 1);
    let sum: u64 = dists[..k].iter().map(|&d| u64::from(d)).sum();
    let mean = sum as f64 / k as f64;
    Ok(mean < threshold)
}

/// Value at quantile `q` in [0, 1] of an ascending-sorted slice, linearly
/// interpolated at rank q * (n - 1).
fn interpolated_quantile(sorted: &[f64], q: f64) -> f64 {
    let rank = q * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Persisted SD calibration artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdCalibration {
    pub k: usize,
    pub percentile: f64,
    pub threshold: f64,
}

impl SdCalibration {
    pub fn new(k: usize, percentile: f64, threshold: f64) -> Result<Self> {
        let c = Self {
            k,
            percentile,
            threshold,
        };
        c.validate()?;
        Ok(c)
    }

    /// Runs `sd_calibrate` and records the settings alongside the result.
    pub fn from_training(training: &[&FeatureVector], k: usize, percentile: f64) -> Result<Self> {
        let threshold = sd_calibrate(training, k, percentile)?;
        Self::new(k, percentile, threshold)
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("SD neighbor count k must be positive".into()));
        }
        if !(0.0..=100.0).contains(&self.percentile) {
            return Err(Error::Config(format!(
                "percentile must lie in [0, 100], got {}",
                self.percentile
            )));
        }
        if !(self.threshold.is_finite() && self.threshold >= 0.0) {
            return Err(Error::Config(format!(
                "SD threshold must be finite and nonnegative, got {}",
                self.threshold
            )));
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)
            .map_err(|_| Error::MissingArtifact(path.display().to_string()))?;
        let c: Self = serde_json::from_reader(std::io::BufReader::new(file))
            .map_err(|e| Error::Format(format!("SD calibration: {e}")))?;
        c.validate()?;
        Ok(c)
    }
}

fn model_verdict(model: &AnyModel, q: &FeatureVector) -> OracleVerdict {
    let proba = model.predict_proba(q);
    OracleVerdict {
        label: u8::from(proba >= 0.5),
        attack_detected: false,
        scores: None,
        internal_score: proba,
    }
}

/// Flags any query within a fixed L0 radius of a past query.
#[derive(Debug)]
pub struct L0Defense {
    model: AnyModel,
    history: QueryHistory,
    threshold: u32,
}

impl L0Defense {
    pub fn new(model: AnyModel, threshold: u32, history_capacity: usize) -> Result<Self> {
        if threshold == 0 {
            return Err(Error::Config("L0 threshold must be positive".into()));
        }
        let history = QueryHistory::new(model.dim(), history_capacity)?;
        Ok(Self {
            model,
            history,
            threshold,
        })
    }
}

impl Oracle for L0Defense {
    fn dim(&self) -> usize {
        self.history.dim()
    }

    fn predict(&mut self, q: &FeatureVector) -> Result<OracleVerdict> {
        if q.dim() != self.history.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.history.dim(),
                got: q.dim(),
            });
        }
        let flagged = l0_check(q, &self.history, self.threshold)?;
        self.history.push(HistoryEntry::new(q, 0.0));
        if flagged {
            return Ok(DETECTED_VERDICT);
        }
        Ok(model_verdict(&self.model, q))
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

/// Flags a query when the mean distance to its k nearest past queries
/// falls below a threshold calibrated on training data.
#[derive(Debug)]
pub struct SdDefense {
    model: AnyModel,
    history: QueryHistory,
    k: usize,
    threshold: f64,
}

impl SdDefense {
    pub fn new(model: AnyModel, k: usize, threshold: f64, history_capacity: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("SD neighbor count k must be positive".into()));
        }
        if !(threshold.is_finite() && threshold >= 0.0) {
            return Err(Error::Config(format!(
                "SD threshold must be finite and nonnegative, got {threshold}"
            )));
        }
        let history = QueryHistory::new(model.dim(), history_capacity)?;
        Ok(Self {
            model,
            history,
            k,
            threshold,
        })
    }
}

impl Oracle for SdDefense {
    fn dim(&self) -> usize {
        self.history.dim()
    }

    fn predict(&mut self, q: &FeatureVector) -> Result<OracleVerdict> {
        if q.dim() != self.history.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.history.dim(),
                got: q.dim(),
            });
        }
        let flagged = sd_check(q, &self.history, self.k, self.threshold)?;
        self.history.push(HistoryEntry::new(q, 0.0));
        if flagged {
            return Ok(DETECTED_VERDICT);
        }
        Ok(model_verdict(&self.model, q))
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

/// Flags a session once the distribution of its query minima stops
/// looking normal.
#[derive(Debug)]
pub struct PradaDefense {
    model: AnyModel,
    history: QueryHistory,
    state: PradaState,
}

impl PradaDefense {
    pub fn new(model: AnyModel, delta: f64, history_capacity: usize) -> Result<Self> {
        let state = PradaState::new(delta)?;
        let history = QueryHistory::new(model.dim(), history_capacity)?;
        Ok(Self {
            model,
            history,
            state,
        })
    }

    pub fn state(&self) -> &PradaState {
        &self.state
    }
}

impl Oracle for PradaDefense {
    fn dim(&self) -> usize {
        self.history.dim()
    }

    fn predict(&mut self, q: &FeatureVector) -> Result<OracleVerdict> {
        if q.dim() != self.history.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.history.dim(),
                got: q.dim(),
            });
        }
        let flagged = prada_update(&mut self.state, q, &self.history)?;
        self.history.push(HistoryEntry::new(q, 0.0));
        if flagged {
            return Ok(DETECTED_VERDICT);
        }
        Ok(model_verdict(&self.model, q))
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
