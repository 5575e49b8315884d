//! The six threat indicator scores.
//!
//! Each score contrasts a property of the incoming query with either the
//! training distribution (calibration constants) or the live query history,
//! and is clamped to [0, 1]:
//!
//! * s1 — proximity: `-(minDistQ - avgDistD) / avgDistD`, where `minDistQ`
//!   is the query's minimum L0 distance to the history. Duplicate-like
//!   queries saturate at 1.
//! * s2 — feature sharing: `(maxSharedQ - avgSharedD) / avgSharedD`, where
//!   `maxSharedQ` is the largest co-enabled feature count against any
//!   history entry.
//! * s3a — feature count vs the training average:
//!   `(|q| - avgFeaturesD) / avgFeaturesD`.
//! * s3b — feature count vs the history's empirical ceiling
//!   `C = mean + 3 * std` of past counts: `(|q| - C) / C`.
//! * s4a — reconstruction loss vs the worst training loss:
//!   `(loss - maxRecLossD) / maxRecLossD`.
//! * s4b — reconstruction loss vs the history ceiling, as s3b but over
//!   losses.
//!
//! Scores are computed before the query is appended to the history. With an
//! empty history s1 and s2 are 0; until the history reaches the warm-up
//! length the two empirical-ceiling scores are 0.

use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::history::QueryHistory;
use crate::featurespace::{DatasetStats, FeatureVector};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndicatorScores {
    pub s1: f64,
    pub s2: f64,
    pub s3a: f64,
    pub s3b: f64,
    pub s4a: f64,
    pub s4b: f64,
}

impl IndicatorScores {
    pub fn as_array(&self) -> [f64; 6] {
        [self.s1, self.s2, self.s3a, self.s3b, self.s4a, self.s4b]
    }
}

/// Calibration constants shared by every indicator. All divisors must be
/// strictly positive; a calibration that would divide by zero is rejected
/// when it is built or loaded, never at query time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Calibration {
    #[serde(flatten)]
    pub stats: DatasetStats,
    #[serde(rename = "maxRecLossD")]
    pub max_rec_loss: f64,
    pub min_history_for_empirical: usize,
    /// Artifact path of the autoencoder these constants were computed with.
    #[serde(default)]
    pub autoencoder_path: String,
}

impl Calibration {
    pub fn new(
        stats: DatasetStats,
        max_rec_loss: f64,
        min_history_for_empirical: usize,
        autoencoder_path: String,
    ) -> Result<Self> {
        let c = Self {
            stats,
            max_rec_loss,
            min_history_for_empirical,
            autoencoder_path,
        };
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("avgDistD", self.stats.avg_dist),
            ("avgSharedD", self.stats.avg_shared),
            ("avgFeaturesD", self.stats.avg_features),
            ("maxRecLossD", self.max_rec_loss),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Calibration(format!(
                    "{name} must be a positive finite divisor, got {v}"
                )));
            }
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
            .map_err(|e| Error::Format(format!("calibration: {e}")))?;
        c.validate()?;
        Ok(c)
    }
}

fn clamp01(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

/// Proximity score. `min_dist` is `None` when the history is empty.
pub fn score_s1(min_dist: Option<f64>, avg_dist_d: f64) -> f64 {
    match min_dist {
        None => 0.0,
        Some(d) => clamp01(-(d - avg_dist_d) / avg_dist_d),
    }
}

/// Feature-sharing score. `max_shared` is `None` when the history is empty.
pub fn score_s2(max_shared: Option<f64>, avg_shared_d: f64) -> f64 {
    match max_shared {
        None => 0.0,
        Some(s) => clamp01((s - avg_shared_d) / avg_shared_d),
    }
}

/// Feature count against the training average.
pub fn score_s3a(enabled_count: usize, avg_features_d: f64) -> f64 {
    clamp01((enabled_count as f64 - avg_features_d) / avg_features_d)
}

/// Feature count against the empirical ceiling of the history.
pub fn score_s3b(
    enabled_count: usize,
    history_mean: f64,
    history_std: f64,
    history_len: usize,
    min_history: usize,
) -> f64 {
    empirical_ceiling_score(enabled_count as f64, history_mean, history_std, history_len, min_history)
}

/// Reconstruction loss against the worst loss seen on training data.
pub fn score_s4a(rec_loss: f64, max_rec_loss_d: f64) -> f64 {
    clamp01((rec_loss - max_rec_loss_d) / max_rec_loss_d)
}

/// Reconstruction loss against the empirical ceiling of the history.
pub fn score_s4b(
    rec_loss: f64,
    history_mean: f64,
    history_std: f64,
    history_len: usize,
    min_history: usize,
) -> f64 {
    empirical_ceiling_score(rec_loss, history_mean, history_std, history_len, min_history)
}

fn empirical_ceiling_score(
    value: f64,
    mean: f64,
    std: f64,
    history_len: usize,
    min_history: usize,
) -> f64 {
    if history_len < min_history {
        return 0.0;
    }
    let ceiling = mean + 3.0 * std;
    if ceiling <= 0.0 {
        return 0.0;
    }
    clamp01((value - ceiling) / ceiling)
}

/// All six scores for a query against the current history. The caller is
/// responsible for appending the query to the history afterwards; scoring
/// never sees the query itself as history.
pub fn compute_scores(
    q: &FeatureVector,
    rec_loss_q: f64,
    history: &QueryHistory,
    calibration: &Calibration,
) -> Result<IndicatorScores> {
    if q.dim() != history.dim() {
        return Err(Error::DimensionMismatch {
            expected: history.dim(),
            got: q.dim(),
        });
    }
    let scan = history.min_dist_max_shared(&q.to_packed())?;
    let min_dist = scan.map(|(d, _)| f64::from(d));
    let max_shared = scan.map(|(_, s)| f64::from(s));
    let warm = calibration.min_history_for_empirical;
    Ok(IndicatorScores {
        s1: score_s1(min_dist, calibration.stats.avg_dist),
        s2: score_s2(max_shared, calibration.stats.avg_shared),
        s3a: score_s3a(q.count_enabled(), calibration.stats.avg_features),
        s3b: score_s3b(
            q.count_enabled(),
            history.count_mean(),
            history.count_std(),
            history.len(),
            warm,
        ),
        s4a: score_s4a(rec_loss_q, calibration.max_rec_loss),
        s4b: score_s4b(
            rec_loss_q,
            history.loss_mean(),
            history.loss_std(),
            history.len(),
            warm,
        ),
    })
}
