//! Labeled datasets, synthetic generation, and the on-disk format.
//!
//! Datasets live in two files: a JSON-lines sample file where each line is
//! `{"label": 0|1, "features": [sorted indices], "split": "..."}` and a
//! header JSON carrying the dimension, the feature-to-family map and the
//! per-family permissions.

use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{FamilyPermission, FeatureFamilyTable, FeatureVector};
use crate::seeding::child_seed;
use crate::{Error, Result};

pub const LABEL_BENIGN: u8 = 0;
pub const LABEL_MALWARE: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

#[derive(Debug, Clone)]
pub struct LabeledSample {
    pub features: FeatureVector,
    pub label: u8,
    pub split: Split,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub table: FeatureFamilyTable,
    pub samples: Vec<LabeledSample>,
}

impl Dataset {
    pub fn dim(&self) -> usize {
        self.table.dim()
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &LabeledSample> {
        self.samples.iter().filter(move |s| s.split == split)
    }

    pub fn split_with_label(
        &self,
        split: Split,
        label: u8,
    ) -> impl Iterator<Item = &LabeledSample> {
        self.samples
            .iter()
            .filter(move |s| s.split == split && s.label == label)
    }

    pub fn vectors(&self, split: Split) -> Vec<&FeatureVector> {
        self.split(split).map(|s| &s.features).collect()
    }

    /// Writes the sample file and the header file.
    pub fn save(&self, samples_path: &Path, header_path: &Path) -> Result<()> {
        let mut out = BufWriter::new(std::fs::File::create(samples_path)?);
        for s in &self.samples {
            let line = SampleLine {
                label: s.label,
                features: s.features.enabled().to_vec(),
                split: s.split,
            };
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;

        let header = DatasetHeader {
            dim: self.table.dim(),
            families: self.table.families().to_vec(),
            addable: self.table.permissions().iter().map(|p| p.addable).collect(),
            removable: self
                .table
                .permissions()
                .iter()
                .map(|p| p.removable)
                .collect(),
        };
        let file = std::fs::File::create(header_path)?;
        serde_json::to_writer_pretty(BufWriter::new(file), &header)?;
        Ok(())
    }

    pub fn load(samples_path: &Path, header_path: &Path) -> Result<Self> {
        let header_file = std::fs::File::open(header_path)
            .map_err(|_| Error::MissingArtifact(header_path.display().to_string()))?;
        let header: DatasetHeader = serde_json::from_reader(std::io::BufReader::new(header_file))
            .map_err(|e| Error::Format(format!("dataset header: {e}")))?;
        let permissions = header
            .addable
            .iter()
            .zip(&header.removable)
            .map(|(&addable, &removable)| FamilyPermission { addable, removable })
            .collect();
        let table = FeatureFamilyTable::new(header.dim, header.families, permissions)?;

        let file = std::fs::File::open(samples_path)
            .map_err(|_| Error::MissingArtifact(samples_path.display().to_string()))?;
        let mut samples = Vec::new();
        for (n, line) in std::io::BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: SampleLine = serde_json::from_str(&line)
                .map_err(|e| Error::Format(format!("sample line {}: {e}", n + 1)))?;
            if parsed.label > 1 {
                return Err(Error::Format(format!(
                    "sample line {}: label {} is not binary",
                    n + 1,
                    parsed.label
                )));
            }
            samples.push(LabeledSample {
                features: FeatureVector::new(header.dim, parsed.features)?,
                label: parsed.label,
                split: parsed.split,
            });
        }
        Ok(Self { table, samples })
    }
}

#[derive(Serialize, Deserialize)]
struct SampleLine {
    label: u8,
    features: Vec<u32>,
    split: Split,
}

#[derive(Serialize, Deserialize)]
struct DatasetHeader {
    dim: usize,
    families: Vec<u16>,
    addable: Vec<bool>,
    removable: Vec<bool>,
}

/// Parameters of the synthetic corpus.
///
/// Each class is a fixed random prototype; samples flip each prototype bit
/// independently with `flip_noise`. Benign software is modelled as
/// feature-rich and malware as sparse, which is what makes benign-feature
/// transplantation a meaningful evasion strategy in this space.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub dim: usize,
    pub n_per_class: usize,
    pub benign_density: f64,
    pub malware_density: f64,
    pub flip_noise: f64,
    pub n_families: usize,
    /// When set, every family becomes add-only.
    pub add_only: bool,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            dim: 512,
            n_per_class: 2000,
            benign_density: 0.30,
            malware_density: 0.10,
            flip_noise: 0.05,
            n_families: 8,
            add_only: false,
        }
    }
}

impl SyntheticConfig {
    fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.n_per_class == 0 || self.n_families == 0 {
            return Err(Error::Config(
                "dim, n_per_class and n_families must be positive".into(),
            ));
        }
        for (name, v) in [
            ("benign_density", self.benign_density),
            ("malware_density", self.malware_density),
            ("flip_noise", self.flip_noise),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        Ok(())
    }
}

/// Generates a balanced two-class corpus with 64:16:20 train/validation/test
/// split tags, stratified per class.
pub fn generate_synthetic_dataset(config: &SyntheticConfig, seed: u64) -> Result<Dataset> {
    config.validate()?;
    let table = if config.add_only {
        FeatureFamilyTable::add_only(config.dim, config.n_families)?
    } else {
        FeatureFamilyTable::android_style(config.dim, config.n_families)?
    };

    let mut proto_rng = ChaCha8Rng::seed_from_u64(child_seed(seed, "prototypes"));
    let benign_proto: Vec<bool> = (0..config.dim)
        .map(|_| proto_rng.random::<f64>() < config.benign_density)
        .collect();
    let malware_proto: Vec<bool> = (0..config.dim)
        .map(|_| proto_rng.random::<f64>() < config.malware_density)
        .collect();

    let mut samples = Vec::with_capacity(config.n_per_class * 2);
    for (label, proto) in [
        (LABEL_BENIGN, &benign_proto),
        (LABEL_MALWARE, &malware_proto),
    ] {
        let mut rng = ChaCha8Rng::seed_from_u64(child_seed(seed, &format!("class-{label}")));
        let splits = split_tags(config.n_per_class, child_seed(seed, &format!("split-{label}")));
        for split in splits {
            let enabled: Vec<u32> = (0..config.dim)
                .filter(|&i| proto[i] ^ (rng.random::<f64>() < config.flip_noise))
                .map(|i| i as u32)
                .collect();
            samples.push(LabeledSample {
                features: FeatureVector::new(config.dim, enabled)?,
                label,
                split,
            });
        }
    }
    Ok(Dataset { table, samples })
}

/// 64:16:20 split assignment for `n` samples, randomly permuted.
fn split_tags(n: usize, seed: u64) -> Vec<Split> {
    let n_train = (n as f64 * 0.64).round() as usize;
    let n_val = (n as f64 * 0.16).round() as usize;
    let mut tags: Vec<Split> = Vec::with_capacity(n);
    tags.extend(std::iter::repeat_n(Split::Train, n_train.min(n)));
    tags.extend(std::iter::repeat_n(Split::Validation, n_val.min(n - tags.len())));
    tags.extend(std::iter::repeat_n(Split::Test, n - tags.len()));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    tags.shuffle(&mut rng);
    tags
}
