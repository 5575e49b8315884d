//! Pairwise reference statistics of a training corpus.
//!
//! Three constants calibrate the threat indicators: the average L0 distance
//! between training samples, the average number of co-enabled features, and
//! the average enabled-feature count. Distances and shared counts are
//! averaged over unordered sample pairs; when the pair count exceeds the
//! budget a seeded uniform subsample of pairs is used instead.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::FeatureVector;
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetStats {
    #[serde(rename = "avgDistD")]
    pub avg_dist: f64,
    #[serde(rename = "avgSharedD")]
    pub avg_shared: f64,
    #[serde(rename = "avgFeaturesD")]
    pub avg_features: f64,
    pub pairs_sampled: u64,
}

pub fn compute_dataset_stats(
    vectors: &[&FeatureVector],
    pair_budget: usize,
    seed: u64,
) -> Result<DatasetStats> {
    if vectors.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "pairwise statistics need at least 2 vectors, got {}",
            vectors.len()
        )));
    }
    if pair_budget == 0 {
        return Err(Error::Config("pair budget must be positive".into()));
    }
    let n = vectors.len();
    let packed: Vec<_> = vectors.iter().map(|v| v.to_packed()).collect();
    let total_pairs = n as u64 * (n as u64 - 1) / 2;

    let mut dist_sum = 0u64;
    let mut shared_sum = 0u64;
    let pairs = if total_pairs <= pair_budget as u64 {
        for i in 0..n {
            for j in (i + 1)..n {
                dist_sum += packed[i].l0(&packed[j])? as u64;
                shared_sum += packed[i].shared(&packed[j])? as u64;
            }
        }
        total_pairs
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..pair_budget {
            let i = rng.random_range(0..n);
            let j = loop {
                let j = rng.random_range(0..n);
                if j != i {
                    break j;
                }
            };
            dist_sum += packed[i].l0(&packed[j])? as u64;
            shared_sum += packed[i].shared(&packed[j])? as u64;
        }
        pair_budget as u64
    };

    let feature_sum: u64 = vectors.iter().map(|v| v.count_enabled() as u64).sum();
    Ok(DatasetStats {
        avg_dist: dist_sum as f64 / pairs as f64,
        avg_shared: shared_sum as f64 / pairs as f64,
        avg_features: feature_sum as f64 / n as f64,
        pairs_sampled: pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(idx: &[u32]) -> FeatureVector {
        FeatureVector::new(8, idx.to_vec()).unwrap()
    }

    #[test]
    fn hand_enumerated_three_vector_corpus() {
        let vs = [fv(&[1, 2]), fv(&[2, 3]), fv(&[3, 4])];
        let refs: Vec<&FeatureVector> = vs.iter().collect();
        let stats = compute_dataset_stats(&refs, 1000, 0).unwrap();
        assert!((stats.avg_dist - 8.0 / 3.0).abs() < 1e-12);
        assert!((stats.avg_shared - 2.0 / 3.0).abs() < 1e-12);
        assert!((stats.avg_features - 2.0).abs() < 1e-12);
        assert_eq!(stats.pairs_sampled, 3);
    }

    #[test]
    fn sampling_kicks_in_above_budget_and_is_deterministic() {
        let vs: Vec<FeatureVector> = (0..40).map(|i| fv(&[i % 8])).collect();
        let refs: Vec<&FeatureVector> = vs.iter().collect();
        let a = compute_dataset_stats(&refs, 100, 7).unwrap();
        let b = compute_dataset_stats(&refs, 100, 7).unwrap();
        assert_eq!(a.pairs_sampled, 100);
        assert_eq!(a.avg_dist, b.avg_dist);
        assert_eq!(a.avg_shared, b.avg_shared);
        let exact = compute_dataset_stats(&refs, 10_000, 7).unwrap();
        assert_eq!(exact.pairs_sampled, 780);
        assert!((a.avg_dist - exact.avg_dist).abs() < 1.0);
    }

    #[test]
    fn too_few_vectors_is_an_error() {
        let v = fv(&[1]);
        assert!(compute_dataset_stats(&[&v], 10, 0).is_err());
        assert!(compute_dataset_stats(&[], 10, 0).is_err());
    }

    #[test]
    fn duplicate_only_corpus_has_zero_distance_stats() {
        let vs = [fv(&[1, 2]), fv(&[1, 2])];
        let refs: Vec<&FeatureVector> = vs.iter().collect();
        let stats = compute_dataset_stats(&refs, 10, 0).unwrap();
        assert_eq!(stats.avg_dist, 0.0);
        assert_eq!(stats.avg_shared, 2.0);
    }
}
