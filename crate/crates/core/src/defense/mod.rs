//! The stateful detection pipeline and the oracle contract every defense
//! implements.
//!
//! An oracle answers one query at a time and owns whatever state it keeps
//! between queries. The verdict always carries the returned label, whether
//! the defense believes an attack is in progress, and a probability-like
//! internal score. When a defense fires, the defensive action is uniform
//! across this crate: the query is answered with the malware label and an
//! internal score of 1, regardless of what the wrapped model thinks.

mod decision;
mod history;
mod importance;
mod indicators;
mod oracle;

pub use decision::{
    generate_decision_dataset, train_decision_model, DecisionDataset, DecisionKind, DecisionModel,
    DecisionRow, DecisionSimConfig, DecisionTrainConfig,
};
pub use history::{HistoryEntry, QueryHistory};
pub use importance::{decision_feature_importance, logistic_attribution};
pub use indicators::{
    compute_scores, score_s1, score_s2, score_s3a, score_s3b, score_s4a, score_s4b, Calibration,
    IndicatorScores,
};
pub use oracle::{MalProtectOracle, UndefendedOracle};

use crate::featurespace::FeatureVector;
use crate::Result;

/// Answer to a single query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleVerdict {
    /// Label returned to the querier: 0 benign, 1 malware.
    pub label: u8,
    /// Whether the defense flagged the query as part of an attack. Attack
    /// code must never read this; experiment drivers record it.
    pub attack_detected: bool,
    /// Indicator scores the defense computed for this query, when it
    /// computes any.
    pub scores: Option<IndicatorScores>,
    /// Probability-like malware score backing the label.
    pub internal_score: f64,
}

/// A deployed detector: a prediction model plus whatever stateful defense
/// wraps it. One oracle instance serves one sequential query stream.
pub trait Oracle {
    fn dim(&self) -> usize;

    /// Answers a query and updates the oracle's state.
    fn predict(&mut self, q: &FeatureVector) -> Result<OracleVerdict>;

    /// Pre-populates the query history to simulate past legitimate traffic.
    /// Entries are accepted as past queries without being scored.
    fn seed_history(&mut self, entries: Vec<HistoryEntry>);

    fn history_len(&self) -> usize;

    /// Bytes needed to persist the current query history.
    fn serialized_history_bytes(&self) -> u64;
}

/// The uniform defensive action: answer malware with full confidence.
pub(crate) const DETECTED_VERDICT: OracleVerdict = OracleVerdict {
    label: 1,
    attack_detected: true,
    scores: None,
    internal_score: 1.0,
};
