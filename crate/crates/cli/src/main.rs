//! Command-line front end for the defense laboratory.
//!
//! Subcommands map onto the artifact pipeline: `gen-data` writes the
//! synthetic dataset, `train` fits every model and calibration on it,
//! `calibrate` refreshes just the calibrations, and the experiment
//! commands (`attack`, `sweep`, `mix`, `bench`, `importance`) consume the
//! stored artifacts and emit fixed-header CSVs. Every run leaves a
//! `<command>-manifest.json` beside its outputs digesting the config and
//! each file it read or wrote, so outputs can be verified byte-for-byte.

use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use malprotect::defense::{
    decision_feature_importance, Calibration, DecisionDataset, DecisionModel,
};
use malprotect::baselines::SdCalibration;
use malprotect::featurespace::{Dataset, FeatureVector};
use malprotect::harness::{
    bench_costs, bench_csv, calibrate_artifacts, generate_dataset, history_pool, mix_csv,
    run_evasion_sweep, run_traffic_mix, sweep_csv, Artifacts, DefenseKind, ExperimentConfig,
    ModelKind, OracleSpec, RunManifest,
};
use malprotect::models::{load_autoencoder, load_model, save_autoencoder, save_model};
use malprotect::{Error, Result};

const DATASET_FILE: &str = "dataset.jsonl";
const DATASET_HEADER_FILE: &str = "dataset-header.json";
const AUTOENCODER_FILE: &str = "autoencoder.json";
const CALIBRATION_FILE: &str = "calibration.json";
const SD_FILE: &str = "sd.json";
const DECISION_DATA_FILE: &str = "decision-data.csv";
const DECISION_LR_FILE: &str = "decision-lr.json";
const DECISION_NN_FILE: &str = "decision-nn.json";
const ADVERSARIAL_POOL_FILE: &str = "adversarial-pool.json";

const INDICATOR_NAMES: [&str; 6] = ["s1", "s2", "s3a", "s3b", "s4a", "s4b"];

fn model_file(kind: ModelKind) -> String {
    format!("model-{}.json", kind.name())
}

#[derive(Parser)]
#[command(name = "malprotect", version, about = "Stateful-defense experiment runner")]
struct Cli {
    /// Root seed for artifact training and anything not covered by the
    /// config's per-run seed list.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Experiment config JSON; built-in defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory, overriding the config's.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic dataset.
    GenData,
    /// Train models, autoencoder and decision heads on the stored dataset.
    Train,
    /// Recompute indicator calibration and the SD threshold.
    Calibrate,
    /// Evasion sweep for a single defense/model pair.
    Attack(SpecArgs),
    /// Evasion sweep over the full configured grid.
    Sweep,
    /// Traffic-mix classification metrics over the k grid.
    Mix,
    /// Worst-case prediction time and storage versus history size.
    Bench,
    /// Indicator importance for both decision heads.
    Importance,
}

#[derive(Args)]
struct SpecArgs {
    /// Stateful defense wrapped around the model.
    #[arg(long, value_parser = parse_defense)]
    defense: DefenseKind,

    /// Prediction model behind the defense.
    #[arg(long, value_parser = parse_model)]
    model: ModelKind,
}

fn parse_defense(s: &str) -> std::result::Result<DefenseKind, String> {
    DefenseKind::ALL
        .into_iter()
        .find(|kind| kind.name() == s)
        .ok_or_else(|| {
            let names: Vec<&str> = DefenseKind::ALL.iter().map(|kind| kind.name()).collect();
            format!("unknown defense '{s}' (expected one of {})", names.join(", "))
        })
}

fn parse_model(s: &str) -> std::result::Result<ModelKind, String> {
    ModelKind::ALL
        .into_iter()
        .find(|kind| kind.name() == s)
        .ok_or_else(|| {
            let names: Vec<&str> = ModelKind::ALL.iter().map(|kind| kind.name()).collect();
            format!("unknown model '{s}' (expected one of {})", names.join(", "))
        })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_)
        | Error::Calibration(_)
        | Error::InsufficientData(_)
        | Error::DimensionMismatch { .. } => 2,
        Error::MissingArtifact(_) | Error::Format(_) => 3,
        Error::Resource(_) => 4,
        _ => 1,
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(out) = &cli.out {
        config.out_dir = out.clone();
    }
    std::fs::create_dir_all(&config.out_dir)?;

    match cli.command {
        Command::GenData => gen_data(&config, cli.seed),
        Command::Train => train(&config, cli.seed),
        Command::Calibrate => calibrate(&config, cli.seed),
        Command::Attack(spec) => attack(&config, cli.seed, &spec),
        Command::Sweep => sweep(&config, cli.seed),
        Command::Mix => mix(&config, cli.seed),
        Command::Bench => bench(&config, cli.seed),
        Command::Importance => importance(&config, cli.seed),
    }
}

/// Writes `<command>-manifest.json` digesting the effective config and
/// every file the run read or wrote. The output directory is blanked
/// before hashing: it decides where files land, never their bytes.
fn write_manifest(
    command: &str,
    seed: u64,
    config: &ExperimentConfig,
    files: &[PathBuf],
) -> Result<()> {
    let mut canonical = config.clone();
    canonical.out_dir = PathBuf::new();
    let config_json = serde_json::to_string(&canonical)?;
    let mut manifest = RunManifest::new(command, seed, &config_json);
    for path in files {
        manifest.record_file(path)?;
    }
    manifest.save(&config.out_dir.join(format!("{command}-manifest.json")))
}

fn gen_data(config: &ExperimentConfig, seed: u64) -> Result<()> {
    let dataset = generate_dataset(config, seed)?;
    let samples_path = config.out_dir.join(DATASET_FILE);
    let header_path = config.out_dir.join(DATASET_HEADER_FILE);
    dataset.save(&samples_path, &header_path)?;
    write_manifest("gen-data", seed, config, &[samples_path.clone(), header_path])?;
    println!(
        "wrote {} samples to {}",
        dataset.samples.len(),
        samples_path.display()
    );
    Ok(())
}

fn train(config: &ExperimentConfig, seed: u64) -> Result<()> {
    let out = &config.out_dir;
    let (dataset, mut files) = load_dataset(out)?;
    let artifacts = Artifacts::build_from_dataset(config, seed, dataset)?;

    let mut save = |path: PathBuf, write: &dyn Fn(&Path) -> Result<()>| -> Result<()> {
        write(&path)?;
        files.push(path);
        Ok(())
    };
    save(out.join(AUTOENCODER_FILE), &|p| {
        save_autoencoder(&artifacts.autoencoder, p)
    })?;
    save(out.join(CALIBRATION_FILE), &|p| artifacts.calibration.save(p))?;
    save(out.join(SD_FILE), &|p| artifacts.sd.save(p))?;
    save(out.join(DECISION_DATA_FILE), &|p| {
        artifacts.decision_data.save(p)
    })?;
    save(out.join(DECISION_LR_FILE), &|p| artifacts.decision_lr.save(p))?;
    save(out.join(DECISION_NN_FILE), &|p| artifacts.decision_nn.save(p))?;
    save(out.join(ADVERSARIAL_POOL_FILE), &|p| {
        save_pool(&artifacts.adversarial_pool, p)
    })?;
    for (&kind, model) in &artifacts.models {
        save(out.join(model_file(kind)), &|p| save_model(model, p))?;
    }

    write_manifest("train", seed, config, &files)?;
    println!(
        "trained {} models and wrote {} artifacts to {}",
        artifacts.models.len(),
        files.len() - 2,
        out.display()
    );
    Ok(())
}

fn calibrate(config: &ExperimentConfig, seed: u64) -> Result<()> {
    let out = &config.out_dir;
    let (dataset, mut files) = load_dataset(out)?;
    let autoencoder_path = out.join(AUTOENCODER_FILE);
    let autoencoder = load_autoencoder(&autoencoder_path)?;
    files.push(autoencoder_path);

    let (calibration, sd) = calibrate_artifacts(&dataset, &autoencoder, config, seed)?;
    let calibration_path = out.join(CALIBRATION_FILE);
    let sd_path = out.join(SD_FILE);
    calibration.save(&calibration_path)?;
    sd.save(&sd_path)?;
    files.push(calibration_path.clone());
    files.push(sd_path);

    write_manifest("calibrate", seed, config, &files)?;
    println!("recalibrated {}", calibration_path.display());
    Ok(())
}

fn attack(config: &ExperimentConfig, seed: u64, spec: &SpecArgs) -> Result<()> {
    let mut single = config.clone();
    single.defenses = vec![spec.defense];
    single.models = vec![spec.model];

    let (artifacts, mut files) = load_artifacts(&single)?;
    let rows = run_evasion_sweep(&single, &artifacts)?;
    let path = single.out_dir.join("attack.csv");
    std::fs::write(&path, sweep_csv(&rows))?;
    files.push(path.clone());

    write_manifest("attack", seed, &single, &files)?;
    println!("wrote {} rows to {}", rows.len(), path.display());
    Ok(())
}

fn sweep(config: &ExperimentConfig, seed: u64) -> Result<()> {
    let (artifacts, mut files) = load_artifacts(config)?;
    let rows = run_evasion_sweep(config, &artifacts)?;
    let path = config.out_dir.join("sweep.csv");
    std::fs::write(&path, sweep_csv(&rows))?;
    files.push(path.clone());

    write_manifest("sweep", seed, config, &files)?;
    println!("wrote {} rows to {}", rows.len(), path.display());
    Ok(())
}

fn mix(config: &ExperimentConfig, seed: u64) -> Result<()> {
    let (artifacts, mut files) = load_artifacts(config)?;
    let rows = run_traffic_mix(config, &artifacts)?;
    let path = config.out_dir.join("mix.csv");
    std::fs::write(&path, mix_csv(&rows))?;
    files.push(path.clone());

    write_manifest("mix", seed, config, &files)?;
    println!("wrote {} rows to {}", rows.len(), path.display());
    Ok(())
}

fn bench(config: &ExperimentConfig, seed: u64) -> Result<()> {
    let (artifacts, mut files) = load_artifacts(config)?;
    let model = config.models[0];
    let mut reports = Vec::new();
    for &defense in &config.defenses {
        reports.push(bench_costs(config, &artifacts, OracleSpec { defense, model })?);
    }
    let path = config.out_dir.join("bench.csv");
    std::fs::write(&path, bench_csv(&reports))?;
    files.push(path.clone());

    write_manifest("bench", seed, config, &files)?;
    println!("wrote {} reports to {}", reports.len(), path.display());
    Ok(())
}

fn importance(config: &ExperimentConfig, seed: u64) -> Result<()> {
    let out = &config.out_dir;
    let data_path = out.join(DECISION_DATA_FILE);
    let lr_path = out.join(DECISION_LR_FILE);
    let nn_path = out.join(DECISION_NN_FILE);
    let data = DecisionDataset::load(&data_path)?;
    let lr = DecisionModel::load(&lr_path)?;
    let nn = DecisionModel::load(&nn_path)?;

    let mut csv = String::from("model,indicator,importance\n");
    for (name, model) in [("logistic", &lr), ("mlp", &nn)] {
        let values = decision_feature_importance(model, data.rows(), seed)?;
        for (indicator, value) in INDICATOR_NAMES.iter().zip(values) {
            csv.push_str(&format!("{name},{indicator},{value}\n"));
        }
    }
    let path = out.join("importance.csv");
    std::fs::write(&path, csv)?;

    write_manifest(
        "importance",
        seed,
        config,
        &[data_path, lr_path, nn_path, path.clone()],
    )?;
    println!("wrote {}", path.display());
    Ok(())
}

fn load_dataset(out: &Path) -> Result<(Dataset, Vec<PathBuf>)> {
    let samples_path = out.join(DATASET_FILE);
    let header_path = out.join(DATASET_HEADER_FILE);
    let dataset = Dataset::load(&samples_path, &header_path)?;
    Ok((dataset, vec![samples_path, header_path]))
}

/// Loads the full artifact bundle the experiment commands run against,
/// returning the paths read so manifests can digest them.
fn load_artifacts(config: &ExperimentConfig) -> Result<(Artifacts, Vec<PathBuf>)> {
    let out = &config.out_dir;
    let (dataset, mut files) = load_dataset(out)?;

    let mut consume = |path: PathBuf| {
        files.push(path.clone());
        path
    };
    let autoencoder = load_autoencoder(&consume(out.join(AUTOENCODER_FILE)))?;
    let calibration = Calibration::load(&consume(out.join(CALIBRATION_FILE)))?;
    let sd = SdCalibration::load(&consume(out.join(SD_FILE)))?;
    let decision_data = DecisionDataset::load(&consume(out.join(DECISION_DATA_FILE)))?;
    let decision_lr = DecisionModel::load(&consume(out.join(DECISION_LR_FILE)))?;
    let decision_nn = DecisionModel::load(&consume(out.join(DECISION_NN_FILE)))?;
    let adversarial_pool = load_pool(&consume(out.join(ADVERSARIAL_POOL_FILE)))?;
    let mut models = std::collections::BTreeMap::new();
    for &kind in &config.models {
        models.insert(kind, load_model(&consume(out.join(model_file(kind))))?);
    }

    let history_pool = history_pool(&dataset, &autoencoder);
    let artifacts = Artifacts {
        dataset,
        autoencoder,
        calibration,
        models,
        decision_data,
        decision_lr,
        decision_nn,
        sd,
        l0_threshold: config.l0_threshold,
        prada_delta: config.prada_delta,
        adversarial_pool,
        history_pool,
    };
    Ok((artifacts, files))
}

fn save_pool(pool: &[FeatureVector], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(BufWriter::new(file), pool)?;
    Ok(())
}

fn load_pool(path: &Path) -> Result<Vec<FeatureVector>> {
    let file = std::fs::File::open(path)
        .map_err(|_| Error::MissingArtifact(path.display().to_string()))?;
    serde_json::from_reader(BufReader::new(file))
        .map_err(|e| Error::Format(format!("adversarial pool: {e}")))
}
