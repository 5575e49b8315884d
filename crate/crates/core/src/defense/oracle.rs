//! The deployed oracles: the full stateful pipeline and an undefended
//! passthrough for baselining.

use super::decision::DecisionModel;
use super::history::{HistoryEntry, QueryHistory};
use super::indicators::{compute_scores, Calibration};
use super::{Oracle, OracleVerdict, DETECTED_VERDICT};
use crate::featurespace::FeatureVector;
use crate::models::{AnyModel, Autoencoder, PredictionModel};
use crate::{Error, Result};

/// The full pipeline: score the query against the history, record it,
/// consult the decision model, and either trigger the defensive action or
/// pass the wrapped model's answer through.
#[derive(Debug)]
pub struct MalProtectOracle {
    model: AnyModel,
    autoencoder: Autoencoder,
    calibration: Calibration,
    decision: DecisionModel,
    history: QueryHistory,
}

impl MalProtectOracle {
    pub fn new(
        model: AnyModel,
        autoencoder: Autoencoder,
        calibration: Calibration,
        decision: DecisionModel,
        history_capacity: usize,
    ) -> Result<Self> {
        if autoencoder.dim() != model.dim() {
            return Err(Error::DimensionMismatch {
                expected: model.dim(),
                got: autoencoder.dim(),
            });
        }
        let history = QueryHistory::new(model.dim(), history_capacity)?;
        Ok(Self {
            model,
            autoencoder,
            calibration,
            decision,
            history,
        })
    }

    pub fn history(&self) -> &QueryHistory {
        &self.history
    }
}

impl Oracle for MalProtectOracle {
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
        let rec_loss = self.autoencoder.reconstruction_loss(q);
        let scores = compute_scores(q, rec_loss, &self.history, &self.calibration)?;
        self.history.push(HistoryEntry::new(q, rec_loss));
        if self.decision.flags_attack(&scores) {
            return Ok(OracleVerdict {
                scores: Some(scores),
                ..DETECTED_VERDICT
            });
        }
        let proba = self.model.predict_proba(q);
        Ok(OracleVerdict {
            label: u8::from(proba >= 0.5),
            attack_detected: false,
            scores: Some(scores),
            internal_score: proba,
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

/// A bare prediction model with no stateful defense. It still records the
/// query stream so storage accounting is comparable across oracles.
#[derive(Debug)]
pub struct UndefendedOracle {
    model: AnyModel,
    history: QueryHistory,
}

impl UndefendedOracle {
    pub fn new(model: AnyModel, history_capacity: usize) -> Result<Self> {
        let history = QueryHistory::new(model.dim(), history_capacity)?;
        Ok(Self { model, history })
    }

    pub fn history(&self) -> &QueryHistory {
        &self.history
    }
}

impl Oracle for UndefendedOracle {
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
        self.history.push(HistoryEntry::new(q, 0.0));
        let proba = self.model.predict_proba(q);
        Ok(OracleVerdict {
            label: u8::from(proba >= 0.5),
            attack_detected: false,
            scores: None,
            internal_score: proba,
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
