//! The multilayer perceptron, its trainer, and the hardened training
//! regimes built on top of it.
//!
//! Evaluation order is fixed: layers run front to back, each output unit
//! accumulates its row of the row-major weight matrix left to right, bias
//! last. Gradients follow the same order in reverse, which keeps training
//! bit-reproducible for a given seed.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::PredictionModel;
use crate::featurespace::{FeatureVector, LabeledSample, Split};
use crate::seeding::child_seed;
use crate::{Error, Result};

/// Final layer activation; it also fixes the training loss. Softmax pairs
/// with cross-entropy, sigmoid with mean squared error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputKind {
    Softmax,
    Sigmoid,
}

/// Fully connected network on `f64` vectors. Hidden layers are ReLU.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Mlp {
    sizes: Vec<usize>,
    /// Per layer, row-major `sizes[l + 1] x sizes[l]`.
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
    output: OutputKind,
    /// Softmax temperature applied at prediction time.
    temperature: f64,
}

impl Mlp {
    /// Glorot-uniform initialisation.
    pub fn init(sizes: &[usize], output: OutputKind, seed: u64) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(Error::Config(
                "a network needs an input and an output layer".into(),
            ));
        }
        if sizes.iter().any(|&s| s == 0) {
            return Err(Error::Config("zero-width layer".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::with_capacity(sizes.len() - 1);
        let mut biases = Vec::with_capacity(sizes.len() - 1);
        for l in 0..sizes.len() - 1 {
            let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            weights.push(
                (0..fan_in * fan_out)
                    .map(|_| rng.random_range(-bound..bound))
                    .collect(),
            );
            biases.push(vec![0.0; fan_out]);
        }
        Ok(Self {
            sizes: sizes.to_vec(),
            weights,
            biases,
            output,
            temperature: 1.0,
        })
    }

    pub fn from_parts(
        sizes: Vec<usize>,
        weights: Vec<Vec<f64>>,
        biases: Vec<Vec<f64>>,
        output: OutputKind,
        temperature: f64,
    ) -> Result<Self> {
        if sizes.len() < 2 || weights.len() != sizes.len() - 1 || biases.len() != sizes.len() - 1 {
            return Err(Error::Format("layer count mismatch".into()));
        }
        for l in 0..weights.len() {
            if weights[l].len() != sizes[l] * sizes[l + 1] {
                return Err(Error::Format(format!(
                    "layer {l}: expected {} weights, got {}",
                    sizes[l] * sizes[l + 1],
                    weights[l].len()
                )));
            }
            if biases[l].len() != sizes[l + 1] {
                return Err(Error::Format(format!(
                    "layer {l}: expected {} biases, got {}",
                    sizes[l + 1],
                    biases[l].len()
                )));
            }
        }
        if !(temperature.is_finite() && temperature > 0.0) {
            return Err(Error::Format(format!("bad temperature {temperature}")));
        }
        Ok(Self {
            sizes,
            weights,
            biases,
            output,
            temperature,
        })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn output_kind(&self) -> OutputKind {
        self.output
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn set_temperature(&mut self, temperature: f64) {
        self.temperature = temperature;
    }

    /// Pre-activation values of the final layer.
    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        self.forward_trace(x).1
    }

    /// Output activations (softmax probabilities or sigmoid values).
    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let (_, logits) = self.forward_trace(x);
        self.activate_output(&logits)
    }

    /// Activations of every layer plus the final pre-activations.
    fn forward_trace(&self, x: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
        assert_eq!(x.len(), self.input_dim(), "input width mismatch");
        let mut activations = Vec::with_capacity(self.sizes.len());
        activations.push(x.to_vec());
        let mut current = x.to_vec();
        for l in 0..self.weights.len() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let mut z = vec![0.0; n_out];
            for (o, zo) in z.iter_mut().enumerate() {
                let row = &self.weights[l][o * n_in..(o + 1) * n_in];
                let mut acc = 0.0;
                for (w, a) in row.iter().zip(&current) {
                    acc += w * a;
                }
                *zo = acc + self.biases[l][o];
            }
            if l + 1 == self.weights.len() {
                return (activations, z);
            }
            for v in z.iter_mut() {
                *v = v.max(0.0);
            }
            activations.push(z.clone());
            current = z;
        }
        unreachable!("network has at least one layer");
    }

    fn activate_output(&self, logits: &[f64]) -> Vec<f64> {
        match self.output {
            OutputKind::Softmax => softmax(logits, self.temperature),
            OutputKind::Sigmoid => logits.iter().map(|&z| sigmoid(z)).collect(),
        }
    }

    /// Training loss against a target vector: cross-entropy for softmax
    /// outputs, mean squared error for sigmoid outputs.
    pub fn loss(&self, x: &[f64], target: &[f64]) -> f64 {
        let out = self.forward(x);
        match self.output {
            OutputKind::Softmax => -target
                .iter()
                .zip(&out)
                .map(|(t, p)| t * p.max(1e-300).ln())
                .sum::<f64>(),
            OutputKind::Sigmoid => {
                out.iter()
                    .zip(target)
                    .map(|(p, t)| (p - t) * (p - t))
                    .sum::<f64>()
                    / out.len() as f64
            }
        }
    }

    /// Backpropagated gradients of [`Mlp::loss`] for one sample, in the same
    /// layout as `weights` / `biases`, plus the gradient w.r.t. the input.
    pub fn gradients(&self, x: &[f64], target: &[f64]) -> Gradients {
        let (activations, logits) = self.forward_trace(x);
        let out = self.activate_output(&logits);
        let k = out.len() as f64;

        // Delta of the final pre-activations.
        let mut delta: Vec<f64> = match self.output {
            OutputKind::Softmax => out
                .iter()
                .zip(target)
                .map(|(p, t)| (p - t) / self.temperature)
                .collect(),
            OutputKind::Sigmoid => out
                .iter()
                .zip(target)
                .map(|(p, t)| 2.0 / k * (p - t) * p * (1.0 - p))
                .collect(),
        };

        let n_layers = self.weights.len();
        let mut w_grads = vec![Vec::new(); n_layers];
        let mut b_grads = vec![Vec::new(); n_layers];
        for l in (0..n_layers).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let input = &activations[l];
            let mut wg = vec![0.0; n_in * n_out];
            for o in 0..n_out {
                let row = &mut wg[o * n_in..(o + 1) * n_in];
                for (g, a) in row.iter_mut().zip(input) {
                    *g = delta[o] * a;
                }
            }
            w_grads[l] = wg;
            b_grads[l] = delta.clone();

            // Delta for the layer below (or the input gradient at l == 0).
            let mut prev = vec![0.0; n_in];
            for o in 0..n_out {
                let row = &self.weights[l][o * n_in..(o + 1) * n_in];
                for (p, w) in prev.iter_mut().zip(row) {
                    *p += delta[o] * w;
                }
            }
            if l > 0 {
                for (p, a) in prev.iter_mut().zip(&activations[l]) {
                    if *a <= 0.0 {
                        *p = 0.0;
                    }
                }
            }
            delta = prev;
        }
        Gradients {
            weights: w_grads,
            biases: b_grads,
            input: delta,
        }
    }

    /// SGD against the identity target (reconstruction training).
    pub(crate) fn train_identity(&mut self, inputs: &[Vec<f64>], epochs: usize, lr: f64, seed: u64) {
        let mut order: Vec<usize> = (0..inputs.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                self.sgd_step(&inputs[i], &inputs[i], lr);
            }
        }
    }

    fn sgd_step(&mut self, x: &[f64], target: &[f64], lr: f64) {
        let grads = self.gradients(x, target);
        for l in 0..self.weights.len() {
            for (w, g) in self.weights[l].iter_mut().zip(&grads.weights[l]) {
                *w -= lr * g;
            }
            for (b, g) in self.biases[l].iter_mut().zip(&grads.biases[l]) {
                *b -= lr * g;
            }
        }
    }
}

pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    pub input: Vec<f64>,
}

fn softmax(logits: &[f64], temperature: f64) -> Vec<f64> {
    let max = logits
        .iter()
        .map(|z| z / temperature)
        .fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits
        .iter()
        .map(|z| (z / temperature - max).exp())
        .collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Training parameters for the classifier MLP.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpConfig {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden: vec![128, 64, 32],
            epochs: 20,
            learning_rate: 0.01,
        }
    }
}

/// Provenance of a trained model, stored in its artifact.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub temperature: f64,
    #[serde(default)]
    pub regime: String,
}

/// A trained softmax classifier over binary feature vectors.
#[derive(Debug, Clone)]
pub struct MlpModel {
    pub net: Mlp,
    pub meta: TrainingMeta,
}

impl MlpModel {
    /// Malware probability on an already-dense input.
    pub fn proba_dense(&self, x: &[f64]) -> f64 {
        self.net.forward(x)[1]
    }
}

impl PredictionModel for MlpModel {
    fn dim(&self) -> usize {
        self.net.input_dim()
    }

    fn predict_proba(&self, q: &FeatureVector) -> f64 {
        self.proba_dense(&q.to_dense())
    }
}

fn one_hot(label: u8) -> [f64; 2] {
    match label {
        0 => [1.0, 0.0],
        _ => [0.0, 1.0],
    }
}

fn check_training_inputs(inputs: &[Vec<f64>], n_targets: usize, cfg: &MlpConfig) -> Result<()> {
    if inputs.is_empty() {
        return Err(Error::InsufficientData("no training samples".into()));
    }
    if inputs.len() != n_targets {
        return Err(Error::Config(format!(
            "{} inputs but {} targets",
            inputs.len(),
            n_targets
        )));
    }
    if cfg.epochs == 0 || cfg.learning_rate <= 0.0 {
        return Err(Error::Config(
            "epochs and learning rate must be positive".into(),
        ));
    }
    let dim = inputs[0].len();
    if inputs.iter().any(|x| x.len() != dim) {
        return Err(Error::Config("ragged training inputs".into()));
    }
    Ok(())
}

/// Trains a softmax classifier with plain per-sample SGD, constant learning
/// rate, and a seeded shuffle each epoch.
pub fn train_mlp(
    inputs: &[Vec<f64>],
    labels: &[u8],
    cfg: &MlpConfig,
    seed: u64,
) -> Result<MlpModel> {
    let targets: Vec<[f64; 2]> = labels.iter().map(|&l| one_hot(l)).collect();
    let soft: Vec<Vec<f64>> = targets.iter().map(|t| t.to_vec()).collect();
    let mut model = train_mlp_soft(inputs, &soft, cfg, 1.0, seed)?;
    model.meta.regime = "vanilla".into();
    Ok(model)
}

/// Trains against arbitrary target distributions at the given softmax
/// temperature. This is the shared core of vanilla training and
/// distillation.
pub fn train_mlp_soft(
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
    cfg: &MlpConfig,
    temperature: f64,
    seed: u64,
) -> Result<MlpModel> {
    check_training_inputs(inputs, targets.len(), cfg)?;
    if temperature <= 0.0 {
        return Err(Error::Config("temperature must be positive".into()));
    }
    let dim = inputs[0].len();
    let mut sizes = vec![dim];
    sizes.extend_from_slice(&cfg.hidden);
    sizes.push(2);

    let mut net = Mlp::init(&sizes, OutputKind::Softmax, child_seed(seed, "mlp-init"))?;
    net.set_temperature(temperature);
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(child_seed(seed, "mlp-shuffle"));
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            net.sgd_step(&inputs[i], &targets[i], cfg.learning_rate);
        }
    }
    net.set_temperature(1.0);
    Ok(MlpModel {
        net,
        meta: TrainingMeta {
            epochs: cfg.epochs,
            learning_rate: cfg.learning_rate,
            seed,
            temperature,
            regime: "soft-target".into(),
        },
    })
}

/// Compares backpropagated gradients against central finite differences for
/// every weight and bias, returning the worst relative error.
pub fn finite_difference_check(net: &Mlp, x: &[f64], target: &[f64], epsilon: f64) -> f64 {
    let analytic = net.gradients(x, target);
    let mut probe = net.clone();
    let mut worst: f64 = 0.0;
    for l in 0..net.weights.len() {
        for i in 0..net.weights[l].len() {
            let orig = probe.weights[l][i];
            probe.weights[l][i] = orig + epsilon;
            let plus = probe.loss(x, target);
            probe.weights[l][i] = orig - epsilon;
            let minus = probe.loss(x, target);
            probe.weights[l][i] = orig;
            worst = worst.max(relative_gap(
                analytic.weights[l][i],
                (plus - minus) / (2.0 * epsilon),
            ));
        }
        for i in 0..net.biases[l].len() {
            let orig = probe.biases[l][i];
            probe.biases[l][i] = orig + epsilon;
            let plus = probe.loss(x, target);
            probe.biases[l][i] = orig - epsilon;
            let minus = probe.loss(x, target);
            probe.biases[l][i] = orig;
            worst = worst.max(relative_gap(
                analytic.biases[l][i],
                (plus - minus) / (2.0 * epsilon),
            ));
        }
    }
    worst
}

fn relative_gap(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-6)
}

/// What adversarial training actually did.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdvTrainReport {
    pub injected: usize,
    pub fell_back: bool,
}

/// Retrains on the train split augmented with adversarial examples, all
/// labeled malware. At most `fraction` of the original train size is
/// injected; a seeded subset is drawn when the pool is larger. An empty
/// pool falls back to vanilla training.
pub fn adversarially_train(
    samples: &[LabeledSample],
    adversarial_pool: &[FeatureVector],
    fraction: f64,
    cfg: &MlpConfig,
    seed: u64,
) -> Result<(MlpModel, AdvTrainReport)> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::Config(format!(
            "adversarial fraction must lie in [0, 1], got {fraction}"
        )));
    }
    let train: Vec<&LabeledSample> = samples.iter().filter(|s| s.split == Split::Train).collect();
    if train.is_empty() {
        return Err(Error::InsufficientData("empty train split".into()));
    }
    let quota = ((train.len() as f64 * fraction).floor() as usize).min(adversarial_pool.len());

    let mut inputs: Vec<Vec<f64>> = train.iter().map(|s| s.features.to_dense()).collect();
    let mut labels: Vec<u8> = train.iter().map(|s| s.label).collect();
    if quota > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(child_seed(seed, "adv-subset"));
        let picks = rand::seq::index::sample(&mut rng, adversarial_pool.len(), quota);
        for idx in picks {
            inputs.push(adversarial_pool[idx].to_dense());
            labels.push(1);
        }
    }
    let mut model = train_mlp(&inputs, &labels, cfg, seed)?;
    model.meta.regime = if quota == 0 {
        "adversarial-fallback-vanilla".into()
    } else {
        "adversarial".into()
    };
    Ok((
        model,
        AdvTrainReport {
            injected: quota,
            fell_back: quota == 0,
        },
    ))
}

/// Defensive distillation: the student learns the teacher's softened output
/// distribution at `temperature`, then deploys at temperature 1.
pub fn distill(
    teacher: &MlpModel,
    inputs: &[Vec<f64>],
    temperature: f64,
    cfg: &MlpConfig,
    seed: u64,
) -> Result<MlpModel> {
    if temperature <= 0.0 {
        return Err(Error::Config("temperature must be positive".into()));
    }
    let soft_targets: Vec<Vec<f64>> = inputs
        .iter()
        .map(|x| softmax(&teacher.net.logits(x), temperature))
        .collect();
    let mut student = train_mlp_soft(inputs, &soft_targets, cfg, temperature, seed)?;
    student.meta.regime = "distilled".into();
    Ok(student)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::featurespace::{generate_synthetic_dataset, SyntheticConfig};

    fn toy_net(seed: u64, output: OutputKind) -> Mlp {
        Mlp::init(&[6, 5, 4, 2], output, seed).unwrap()
    }

    #[test]
    fn softmax_sums_to_one_even_for_extreme_logits() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..2000 {
            let logits: Vec<f64> = (0..2).map(|_| rng.random_range(-600.0..600.0)).collect();
            let p = softmax(&logits, 1.0);
            let sum: f64 = p.iter().sum();
            assert!((sum - 1.0).abs() < 1e-6, "sum {sum} for {logits:?}");
            assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn backprop_matches_finite_differences_for_softmax() {
        let net = toy_net(7, OutputKind::Softmax);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..5 {
            let x: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
            let worst = finite_difference_check(&net, &x, &[0.0, 1.0], 1e-5);
            assert!(worst < 1e-3, "relative error {worst}");
        }
    }

    #[test]
    fn backprop_matches_finite_differences_for_sigmoid_mse() {
        let net = toy_net(9, OutputKind::Sigmoid);
        let x = vec![0.3, -0.2, 0.9, 0.1, -0.7, 0.5];
        let worst = finite_difference_check(&net, &x, &[1.0, 0.0], 1e-5);
        assert!(worst < 1e-3, "relative error {worst}");
    }

    #[test]
    fn input_gradient_matches_finite_differences() {
        let net = toy_net(10, OutputKind::Softmax);
        let x = vec![0.2, 0.8, -0.4, 0.0, 0.6, -0.9];
        let target = [1.0, 0.0];
        let grads = net.gradients(&x, &target);
        for i in 0..x.len() {
            let mut plus = x.clone();
            plus[i] += 1e-5;
            let mut minus = x.clone();
            minus[i] -= 1e-5;
            let numeric = (net.loss(&plus, &target) - net.loss(&minus, &target)) / 2e-5;
            assert!(
                relative_gap(grads.input[i], numeric) < 1e-3,
                "input grad {i}: {} vs {numeric}",
                grads.input[i]
            );
        }
    }

    fn dataset_to_dense(cfg: &SyntheticConfig, seed: u64) -> (Vec<Vec<f64>>, Vec<u8>, Vec<Vec<f64>>, Vec<u8>) {
        let ds = generate_synthetic_dataset(cfg, seed).unwrap();
        let mut train_x = Vec::new();
        let mut train_y = Vec::new();
        let mut val_x = Vec::new();
        let mut val_y = Vec::new();
        for s in &ds.samples {
            match s.split {
                Split::Train => {
                    train_x.push(s.features.to_dense());
                    train_y.push(s.label);
                }
                Split::Validation => {
                    val_x.push(s.features.to_dense());
                    val_y.push(s.label);
                }
                Split::Test => {}
            }
        }
        (train_x, train_y, val_x, val_y)
    }

    fn small_data() -> (Vec<Vec<f64>>, Vec<u8>, Vec<Vec<f64>>, Vec<u8>) {
        dataset_to_dense(
            &SyntheticConfig {
                dim: 100,
                n_per_class: 200,
                ..SyntheticConfig::default()
            },
            21,
        )
    }

    fn accuracy(model: &MlpModel, xs: &[Vec<f64>], ys: &[u8]) -> f64 {
        let hits = xs
            .iter()
            .zip(ys)
            .filter(|(x, &y)| u8::from(model.proba_dense(x) >= 0.5) == y)
            .count();
        hits as f64 / xs.len() as f64
    }

    #[test]
    fn default_config_reaches_ninety_percent_validation_accuracy() {
        let (tx, ty, vx, vy) = small_data();
        let cfg = MlpConfig {
            epochs: 10,
            ..MlpConfig::default()
        };
        let model = train_mlp(&tx, &ty, &cfg, 3).unwrap();
        let acc = accuracy(&model, &vx, &vy);
        assert!(acc >= 0.9, "validation accuracy {acc}");
    }

    #[test]
    fn training_is_bit_reproducible_per_seed() {
        let (tx, ty, _, _) = small_data();
        let cfg = MlpConfig {
            hidden: vec![16],
            epochs: 3,
            learning_rate: 0.05,
        };
        let a = train_mlp(&tx, &ty, &cfg, 5).unwrap();
        let b = train_mlp(&tx, &ty, &cfg, 5).unwrap();
        let c = train_mlp(&tx, &ty, &cfg, 6).unwrap();
        assert_eq!(a.net.weights, b.net.weights);
        assert_eq!(a.net.biases, b.net.biases);
        assert_ne!(a.net.weights, c.net.weights);
    }

    #[test]
    fn label_and_proba_never_disagree() {
        let (tx, ty, vx, _) = small_data();
        let cfg = MlpConfig {
            hidden: vec![8],
            epochs: 2,
            learning_rate: 0.05,
        };
        let model = train_mlp(&tx, &ty, &cfg, 1).unwrap();
        for x in vx.iter().take(100) {
            let v = FeatureVector::new(
                100,
                x.iter()
                    .enumerate()
                    .filter(|(_, &b)| b > 0.5)
                    .map(|(i, _)| i as u32)
                    .collect(),
            )
            .unwrap();
            assert_eq!(
                model.predict_label(&v),
                u8::from(model.predict_proba(&v) >= 0.5)
            );
        }
    }

    #[test]
    fn adversarial_quota_is_min_of_pool_and_fraction() {
        let dim = 20;
        let mut samples = Vec::new();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for i in 0..1000 {
            let enabled: Vec<u32> = (0..dim as u32)
                .filter(|_| rng.random::<f64>() < 0.2)
                .collect();
            samples.push(LabeledSample {
                features: FeatureVector::new(dim, enabled).unwrap(),
                label: (i % 2) as u8,
                split: Split::Train,
            });
        }
        let pool: Vec<FeatureVector> = (0..400)
            .map(|i| FeatureVector::new(dim, vec![(i % dim) as u32]).unwrap())
            .collect();
        let cfg = MlpConfig {
            hidden: vec![4],
            epochs: 1,
            learning_rate: 0.05,
        };
        let (_, report) = adversarially_train(&samples, &pool, 0.25, &cfg, 0).unwrap();
        assert_eq!(report.injected, 250);
        assert!(!report.fell_back);

        let (_, report) = adversarially_train(&samples, &pool[..100], 0.25, &cfg, 0).unwrap();
        assert_eq!(report.injected, 100);

        let (model, report) = adversarially_train(&samples, &[], 0.25, &cfg, 0).unwrap();
        assert!(report.fell_back);
        assert_eq!(report.injected, 0);
        assert_eq!(model.meta.regime, "adversarial-fallback-vanilla");
    }

    #[test]
    fn distilled_student_agrees_with_teacher_at_unit_temperature() {
        let (tx, ty, vx, _) = small_data();
        let cfg = MlpConfig {
            hidden: vec![32],
            epochs: 12,
            learning_rate: 0.02,
        };
        let teacher = train_mlp(&tx, &ty, &cfg, 11).unwrap();
        let student = distill(&teacher, &tx, 1.0, &cfg, 12).unwrap();
        let agree = vx
            .iter()
            .filter(|x| {
                u8::from(teacher.proba_dense(x) >= 0.5) == u8::from(student.proba_dense(x) >= 0.5)
            })
            .count();
        let rate = agree as f64 / vx.len() as f64;
        assert!(rate >= 0.95, "agreement {rate}");
    }

    #[test]
    fn high_temperature_softens_student_confidence() {
        let (tx, ty, vx, _) = small_data();
        let cfg = MlpConfig {
            hidden: vec![16],
            epochs : 6,
            learning_rate: 0.02,
        };
        let teacher = train_mlp(&tx, &ty, &cfg, 31).unwrap();
        let crisp = distill(&teacher, &tx, 1.0, &cfg, 32).unwrap();
        let soft = distill(&teacher, &tx, 20.0, &cfg, 32).unwrap();
        let mean_conf = |m: &MlpModel| {
            vx.iter()
                .map(|x| {
                    let p = m.proba_dense(x);
                    p.max(1.0 - p)
                })
                .sum::<f64>()
                / vx.len() as f64
        };
        assert!(
            mean_conf(&soft) < mean_conf(&crisp),
            "soft {} crisp {}",
            mean_conf(&soft),
            mean_conf(&crisp)
        );
    }

    #[test]
    fn trainer_rejects_bad_inputs() {
        let cfg = MlpConfig::default();
        assert!(train_mlp(&[], &[], &cfg, 0).is_err());
        let ragged = vec![vec![0.0, 1.0], vec![0.0]];
        assert!(train_mlp(&ragged, &[0, 1], &cfg, 0).is_err());
        let bad_cfg = MlpConfig {
            epochs: 0,
            ..MlpConfig::default()
        };
        assert!(train_mlp(&[vec![0.0], vec![1.0]], &[0, 1], &bad_cfg, 0).is_err());
    }
}
