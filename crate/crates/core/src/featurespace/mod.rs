//! Binary feature vectors and the distances the defenses are built on.
//!
//! A sample is a fixed-dimension binary vector; we store the sorted indices
//! of its enabled features. Distance scans over large query histories use a
//! packed bitset mirror of the same vector, so the two representations are
//! kept deliberately independent and cross-checked in tests: the merge-scan
//! routines on sorted indices and the popcount routines on packed words must
//! always agree.

mod dataset;
mod family;
mod stats;

pub use dataset::{
    generate_synthetic_dataset, Dataset, LabeledSample, Split, SyntheticConfig, LABEL_BENIGN,
    LABEL_MALWARE,
};
pub use family::{discretize, validate_perturbations, FeatureFamilyTable, FamilyPermission};
pub use stats::{compute_dataset_stats, DatasetStats};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Binary feature vector stored as strictly increasing enabled indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "FeatureVectorRepr", try_from = "FeatureVectorRepr")]
pub struct FeatureVector {
    dim: usize,
    enabled: Vec<u32>,
}

/// Wire form of a feature vector; deserialization re-checks the invariants.
#[derive(Serialize, Deserialize)]
struct FeatureVectorRepr {
    dim: usize,
    enabled: Vec<u32>,
}

impl From<FeatureVector> for FeatureVectorRepr {
    fn from(v: FeatureVector) -> Self {
        Self {
            dim: v.dim,
            enabled: v.enabled,
        }
    }
}

impl TryFrom<FeatureVectorRepr> for FeatureVector {
    type Error = Error;

    fn try_from(r: FeatureVectorRepr) -> Result<Self> {
        FeatureVector::new(r.dim, r.enabled)
    }
}

impl FeatureVector {
    /// Builds a vector from enabled indices. Indices may arrive in any order
    /// but duplicates and out-of-range values are rejected.
    pub fn new(dim: usize, mut enabled: Vec<u32>) -> Result<Self> {
        enabled.sort_unstable();
        for pair in enabled.windows(2) {
            if pair[0] == pair[1] {
                return Err(Error::Config(format!(
                    "duplicate feature index {}",
                    pair[0]
                )));
            }
        }
        if let Some(&last) = enabled.last() {
            if last as usize >= dim {
                return Err(Error::Config(format!(
                    "feature index {last} out of range for dimension {dim}"
                )));
            }
        }
        Ok(Self { dim, enabled })
    }

    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            enabled: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Enabled indices, sorted strictly increasing.
    pub fn enabled(&self) -> &[u32] {
        &self.enabled
    }

    pub fn count_enabled(&self) -> usize {
        self.enabled.len()
    }

    pub fn contains(&self, index: u32) -> bool {
        self.enabled.binary_search(&index).is_ok()
    }

    /// Enables a feature; enabling an already-enabled feature is a no-op.
    pub fn insert(&mut self, index: u32) {
        debug_assert!((index as usize) < self.dim);
        if let Err(pos) = self.enabled.binary_search(&index) {
            self.enabled.insert(pos, index);
        }
    }

    /// Disables a feature; disabling an absent feature is a no-op.
    pub fn remove(&mut self, index: u32) {
        if let Ok(pos) = self.enabled.binary_search(&index) {
            self.enabled.remove(pos);
        }
    }

    /// Dense 0.0/1.0 expansion, the input format of the prediction models.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.dim];
        for &i in &self.enabled {
            dense[i as usize] = 1.0;
        }
        dense
    }

    pub fn to_packed(&self) -> PackedBits {
        let mut words = vec![0u64; self.dim.div_ceil(64)];
        for &i in &self.enabled {
            words[i as usize / 64] |= 1u64 << (i % 64);
        }
        PackedBits {
            dim: self.dim,
            words,
        }
    }
}

/// Word-packed mirror of a [`FeatureVector`], used for popcount distance
/// scans over query histories.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackedBits {
    dim: usize,
    words: Vec<u64>,
}

impl PackedBits {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count_enabled(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    /// L0 distance via XOR + popcount.
    pub fn l0(&self, other: &PackedBits) -> Result<u32> {
        check_dims(self.dim, other.dim)?;
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones())
            .sum())
    }

    /// Count of features enabled in both vectors, via AND + popcount.
    pub fn shared(&self, other: &PackedBits) -> Result<u32> {
        check_dims(self.dim, other.dim)?;
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones())
            .sum())
    }

    pub fn to_vector(&self) -> FeatureVector {
        let mut enabled = Vec::with_capacity(self.count_enabled() as usize);
        for (w, &word) in self.words.iter().enumerate() {
            let mut bits = word;
            while bits != 0 {
                let tz = bits.trailing_zeros();
                enabled.push(w as u32 * 64 + tz);
                bits &= bits - 1;
            }
        }
        FeatureVector {
            dim: self.dim,
            enabled,
        }
    }
}

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch {
            expected: a,
            got: b,
        });
    }
    Ok(())
}

/// L0 distance (count of differing positions) by merge scan over the sorted
/// index lists.
pub fn l0_distance(a: &FeatureVector, b: &FeatureVector) -> Result<u32> {
    check_dims(a.dim, b.dim)?;
    let (mut i, mut j, mut diff) = (0usize, 0usize, 0u32);
    let (xs, ys) = (&a.enabled, &b.enabled);
    while i < xs.len() && j < ys.len() {
        match xs[i].cmp(&ys[j]) {
            std::cmp::Ordering::Less => {
                diff += 1;
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                diff += 1;
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    diff += (xs.len() - i) as u32 + (ys.len() - j) as u32;
    Ok(diff)
}

/// Count of features enabled in both vectors, by merge scan.
pub fn shared_enabled(a: &FeatureVector, b: &FeatureVector) -> Result<u32> {
    check_dims(a.dim, b.dim)?;
    let (mut i, mut j, mut shared) = (0usize, 0usize, 0u32);
    let (xs, ys) = (&a.enabled, &b.enabled);
    while i < xs.len() && j < ys.len() {
        match xs[i].cmp(&ys[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                shared += 1;
                i += 1;
                j += 1;
            }
        }
    }
    Ok(shared)
}
