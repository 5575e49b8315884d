//! Release-gate check for the binary: the full artifact chain, run twice at
//! the same seed into different directories, must agree byte for byte on
//! every file it writes. Run with `--nocapture` to see the verdict line.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;

/// Desk-scale settings shrunk until the whole chain runs in seconds while
/// still producing a nonempty adversarial pool for the mix stream.
const CHAIN_CONFIG: &str = r#"{
  "dataset": {"dim": 24, "n_per_class": 40, "n_families": 4},
  "history_capacity": 100,
  "n_init": 20,
  "samples_per_run": 4,
  "n_max_grid": [10, 24],
  "k_grid": [0.5],
  "q_size_grid": [50, 100],
  "mix_queries": 1000,
  "seeds": [0, 1],
  "defenses": ["none", "malprotect-lr", "l0"],
  "models": ["mlp"],
  "mlp": {"hidden": [8], "epochs": 6},
  "autoencoder": {"epochs": 3},
  "decision_sim": {
    "n_legit_sessions": 10,
    "legit_queries_per_session": 100,
    "n_attack_sessions": 2,
    "attack_n_max": 24,
    "history_init": 20,
    "history_capacity": 100
  },
  "transfer": {"max_rounds": 30},
  "stats_pair_budget": 300,
  "ensemble_widths": [[8], [6]],
  "sd_k": 4,
  "bench_batch": 100
}"#;

fn run_chain(config: &str, out: &Path) {
    let out = out.to_str().unwrap();
    let steps: &[&[&str]] = &[
        &["gen-data"],
        &["train"],
        &["attack", "--defense", "malprotect-lr", "--model", "mlp"],
        &["mix"],
        &["importance"],
    ];
    for step in steps {
        let result = Command::new(env!("CARGO_BIN_EXE_malprotect"))
            .args(*step)
            .args(["--config", config, "--out", out, "--seed", "7"])
            .output()
            .expect("binary runs");
        assert!(
            result.status.success(),
            "{} failed: {}",
            step[0],
            String::from_utf8_lossy(&result.stderr)
        );
    }
}

fn dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .expect("output dir lists")
        .map(|entry| {
            let path = entry.expect("dir entry").path();
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            (name, std::fs::read(&path).expect("file reads"))
        })
        .collect()
}

#[test]
fn rerunning_the_chain_reproduces_every_output_byte() {
    let check = || -> Result<String, String> {
        let dir = tempfile::tempdir().expect("tempdir");
        let config_path = dir.path().join("config.json");
        std::fs::write(&config_path, CHAIN_CONFIG).expect("config writes");
        let config = config_path.to_str().unwrap();

        let (rep1, rep2) = (dir.path().join("rep1"), dir.path().join("rep2"));
        run_chain(config, &rep1);
        run_chain(config, &rep2);

        let (files1, files2) = (dir_bytes(&rep1), dir_bytes(&rep2));
        let names1: Vec<&String> = files1.keys().collect();
        let names2: Vec<&String> = files2.keys().collect();
        if names1 != names2 {
            return Err(format!("file sets differ: {names1:?} vs {names2:?}"));
        }
        for required in ["dataset.jsonl", "model-mlp.json", "attack.csv", "mix.csv", "importance.csv"] {
            if !files1.contains_key(required) {
                return Err(format!("{required} missing from the chain output"));
            }
        }
        for (name, bytes) in &files1 {
            if bytes != &files2[name] {
                return Err(format!("{name} differs between reruns"));
            }
        }
        Ok(format!("{} files byte-identical across reruns", files1.len()))
    };
    match check() {
        Ok(detail) => println!("pipeline determinism: PASS ({detail})"),
        Err(detail) => {
            println!("pipeline determinism: FAIL ({detail})");
            panic!("pipeline determinism: {detail}");
        }
    }
}
