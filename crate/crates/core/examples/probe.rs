//! Scratch diagnostic: how does a vanilla MLP trained on the synthetic
//! corpus respond to additive perturbations of malware test samples?

use malprotect::attacks::{build_pool, run_graybox, PoolMode};
use malprotect::defense::UndefendedOracle;
use malprotect::featurespace::{
    generate_synthetic_dataset, validate_perturbations, FeatureVector, Split, SyntheticConfig,
    LABEL_MALWARE,
};
use malprotect::models::{train_mlp, AnyModel, MlpConfig, PredictionModel};

fn probe(benign_density: f64, malware_density: f64, flip_noise: f64) {
    let config = SyntheticConfig {
        benign_density,
        malware_density,
        flip_noise,
        ..SyntheticConfig::default()
    };
    let ds = generate_synthetic_dataset(&config, 0).unwrap();
    let (inputs, labels): (Vec<Vec<f64>>, Vec<u8>) = ds
        .split(Split::Train)
        .map(|s| (s.features.to_dense(), s.label))
        .unzip();
    let model = train_mlp(&inputs, &labels, &MlpConfig::default(), 1).unwrap();

    let val_acc = {
        let val: Vec<_> = ds.split(Split::Validation).collect();
        let ok = val
            .iter()
            .filter(|s| model.predict_label(&s.features) == s.label)
            .count();
        ok as f64 / val.len() as f64
    };

    let malware: Vec<&FeatureVector> = ds
        .split_with_label(Split::Test, LABEL_MALWARE)
        .map(|s| &s.features)
        .take(100)
        .collect();
    let still_malware: Vec<&FeatureVector> = malware
        .iter()
        .copied()
        .filter(|x| model.predict_label(x) == LABEL_MALWARE)
        .collect();

    let pool = build_pool(&ds, PoolMode::Frequency, 0).unwrap();

    let saturated_flips = still_malware
        .iter()
        .filter(|x| {
            let all: Vec<u32> = (0..config.dim as u32).collect();
            let full = FeatureVector::new(config.dim, all).unwrap();
            let valid = validate_perturbations(x, &full, &ds.table).unwrap();
            model.predict_label(&valid) == 0
        })
        .count();

    print!(
        "b={benign_density} m={malware_density} noise={flip_noise}: val_acc {val_acc:.3}, \
         {}/{} malware detected, saturate flips {saturated_flips}",
        still_malware.len(),
        malware.len()
    );

    for k in [50usize, 100, 150, 200, 300, 512] {
        let flips = still_malware
            .iter()
            .filter(|x| {
                let mut v = (**x).clone();
                for &f in pool.ordering().iter().take(k) {
                    v.insert(f);
                }
                let valid = validate_perturbations(x, &v, &ds.table).unwrap();
                model.predict_label(&valid) == 0
            })
            .count();
        print!(", top{k} {flips}");
    }

    let mut evasions = 0;
    let any = AnyModel::Mlp(model.clone());
    for (i, x) in still_malware.iter().take(20).enumerate() {
        let mut oracle = UndefendedOracle::new(any.clone(), 10_000).unwrap();
        let r = run_graybox(&mut oracle, x, &pool, 500, &ds.table, 1000 + i as u64).unwrap();
        if r.outcome == malprotect::attacks::AttackOutcome::Success {
            evasions += 1;
        }
    }
    println!(", graybox {evasions}/20");
}

fn main() {
    probe(0.30, 0.10, 0.05);
    probe(0.45, 0.08, 0.05);
    probe(0.50, 0.05, 0.05);
    probe(0.60, 0.05, 0.05);
}
