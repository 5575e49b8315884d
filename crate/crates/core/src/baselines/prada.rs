//! Distribution monitoring over query distances, in the style of PRADA.
//!
//! The monitor keeps a growing set of queries judged to expand the stream's
//! coverage of the feature space. Each incoming query records its minimum
//! L0 distance to that set; a benign stream produces minima that look
//! roughly normal, while a query attack reuses near-identical vectors and
//! drags the distribution into a spike near zero. Once enough minima have
//! accumulated, the stream is flagged when their Shapiro-Wilk W statistic
//! falls below a fixed threshold delta. The flag is sticky: a session stays
//! flagged, and a new session starts from a fresh state.

use super::shapiro::shapiro_wilk;
use crate::defense::QueryHistory;
use crate::featurespace::{FeatureVector, PackedBits};
use crate::{Error, Result};

/// Minima required before the normality test is consulted.
const WARM_UP_MINIMA: usize = 30;
/// The W statistic is computed over at most this many recent minima.
const NORMALITY_WINDOW: usize = 5000;

/// Per-session monitor state.
#[derive(Debug, Clone)]
pub struct PradaState {
    delta: f64,
    growing_set: Vec<PackedBits>,
    dmin_values: Vec<f64>,
    w_values: Vec<Option<f64>>,
    attack_flagged: bool,
    bootstrapped: bool,
}

impl PradaState {
    /// `delta` is the W threshold in (0, 1); streams scoring below it are
    /// flagged.
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Config(format!(
                "PRADA delta must lie strictly between 0 and 1, got {delta}"
            )));
        }
        Ok(Self {
            delta,
            growing_set: Vec::new(),
            dmin_values: Vec::new(),
            w_values: Vec::new(),
            attack_flagged: false,
            bootstrapped: false,
        })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// One minimum distance per processed query, in arrival order.
    pub fn dmin_values(&self) -> &[f64] {
        &self.dmin_values
    }

    pub fn growing_set_len(&self) -> usize {
        self.growing_set.len()
    }

    pub fn attack_flagged(&self) -> bool {
        self.attack_flagged
    }

    /// JSON lines pairing each query's minimum distance with the W
    /// statistic evaluated after it (null during warm-up and when the
    /// minima have collapsed to a constant).
    pub fn session_log(&self) -> String {
        let mut out = String::new();
        for (i, (dmin, w)) in self.dmin_values.iter().zip(&self.w_values).enumerate() {
            let line = serde_json::json!({
                "query": i,
                "dmin": dmin,
                "w": w,
            });
            out.push_str(&line.to_string());
            out.push('\n');
        }
        out
    }
}

/// Feeds one query through the monitor and reports whether the session is
/// flagged. On the first call the growing set is bootstrapped from the
/// current query history, standing in for past legitimate traffic; the
/// history is not consulted afterwards.
pub fn prada_update(
    state: &mut PradaState,
    q: &FeatureVector,
    history: &QueryHistory,
) -> Result<bool> {
    if !state.bootstrapped {
        state.growing_set = history.iter().map(|e| e.bits.clone()).collect();
        state.bootstrapped = true;
    }

    let bits = q.to_packed();
    let mut nearest = None;
    for member in &state.growing_set {
        let d = member.l0(&bits)?;
        nearest = Some(nearest.map_or(d, |best: u32| best.min(d)));
    }

    match nearest {
        None => {
            // Nothing to measure against yet: the query defines the set.
            state.growing_set.push(bits);
            state.dmin_values.push(0.0);
        }
        Some(d) => {
            let dmin = f64::from(d);
            if dmin > admission_threshold(&state.dmin_values) {
                state.growing_set.push(bits);
            }
            state.dmin_values.push(dmin);
        }
    }

    let w = if state.dmin_values.len() >= WARM_UP_MINIMA {
        let start = state.dmin_values.len().saturating_sub(NORMALITY_WINDOW);
        match shapiro_wilk(&state.dmin_values[start..]) {
            Ok(w) => {
                if w < state.delta {
                    state.attack_flagged = true;
                }
                Some(w)
            }
            // Constant minima: a stream this degenerate is never benign.
            Err(Error::UndefinedStatistic(_)) => {
                state.attack_flagged = true;
                None
            }
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    state.w_values.push(w);

    Ok(state.attack_flagged)
}

/// A query expands the growing set when its minimum distance exceeds
/// mean - stdev of the minima seen so far, floored at zero so exact
/// duplicates are never admitted.
fn admission_threshold(past: &[f64]) -> f64 {
    if past.is_empty() {
        return 0.0;
    }
    let n = past.len() as f64;
    let mean = past.iter().sum::<f64>() / n;
    let var = past.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n;
    (mean - var.sqrt()).max(0.0)
}
