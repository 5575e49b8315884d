//! Laboratory for stateful defenses against query attacks on malware
//! detectors that consume binary feature vectors.
//!
//! The crate is organised around a handful of moving parts:
//!
//! * [`featurespace`] — sparse binary feature vectors, L0 distances,
//!   feature-family perturbation constraints, synthetic dataset generation.
//! * [`models`] — small from-scratch prediction models (MLP, logistic
//!   regression, autoencoder, ensembles) plus hardened training regimes.
//! * [`defense`] — the stateful detection pipeline: a sliding query history,
//!   six threat indicator scores, and a learned decision model that turns
//!   scores into an attack verdict.
//! * [`baselines`] — three prior stateful detectors (pairwise-distance
//!   thresholding, minimum-distance normality testing, k-neighbor distance)
//!   wrapped behind the same oracle interface.
//! * [`attacks`] — black-box, gray-box and adaptive query attacks that add
//!   benign features to a malware vector until the oracle flips its label.
//! * [`harness`] — experiment drivers: evasion sweeps, traffic mixes,
//!   cost benchmarks, and the artifact plumbing shared with the CLI.
//!
//! Everything randomized takes an explicit seed and is deterministic for a
//! given seed. Oracles are single-session objects: one attack or traffic
//! stream drives one oracle instance sequentially, and nothing in this crate
//! shares mutable state across threads.

pub mod attacks;
pub mod baselines;
pub mod defense;
mod error;
pub mod featurespace;
pub mod harness;
pub mod models;
pub(crate) mod seeding;

pub use error::{Error, Result};
