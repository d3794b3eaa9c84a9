use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;
use nct_core::config::{DataSource, RunConfig};
use nct_core::io::csv::{load_csv, parse_csv, write_csv};
use nct_core::io::idx::load_idx;
use nct_core::io::model_file::{load_model, save_model};
use nct_core::metrics::{
    append_record, collect_report, write_metrics, MetricsRecord, ProbeRecord, SummaryRecord, METRICS_FILE,
    REPORT_HEADER,
};
use nct_core::noise::corrupt;
use nct_core::probe::probe_model;
use nct_core::rng::{ids, stream};
use nct_core::trainer::{train, TrainedModels};
use nct_core::{generate_blobs, Error, LabeledDataset, NoiseKind, Result};

const RESOLVED_CONFIG: &str = "config.resolved";

#[derive(Parser)]
#[command(name = "nct", version, about = "Train two networks jointly under label noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a Gaussian-blobs dataset as CSV.
    Generate {
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 2)]
        classes: usize,
        /// Distance between class means, in units of the blob standard deviation.
        #[arg(long, default_value_t = 3.0)]
        separation: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: PathBuf,
    },
    /// Corrupt the labels of a clean CSV dataset.
    Corrupt {
        #[arg(long)]
        input: PathBuf,
        /// Defaults to rewriting the input file.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        kind: NoiseKind,
        #[arg(long)]
        rate: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Train the configured method and write metrics and model files.
    Train {
        #[arg(long)]
        config: PathBuf,
    },
    /// Fit random labels on frozen features of a trained model.
    Probe {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        model: PathBuf,
    },
    /// Print a CSV summary of every run directory under RUNS.
    Report {
        #[arg(long)]
        runs: PathBuf,
    },
}

fn load_source(src: &DataSource, num_classes: Option<usize>) -> Result<LabeledDataset> {
    match src {
        DataSource::Csv(path) => load_csv(path, num_classes),
        DataSource::Idx { images, labels } => load_idx(images, labels, num_classes),
    }
}

fn generate(n: usize, dim: usize, classes: usize, separation: f64, seed: u64, output: &Path) -> Result<()> {
    let ds = generate_blobs(n, dim, classes, separation, &mut stream(seed, ids::BLOBS))?;
    let mut out = Vec::new();
    write_csv(&ds, &mut out)?;
    fs::write(output, out)?;
    info!("wrote {n} samples to {}", output.display());
    Ok(())
}

fn corrupt_file(input: &Path, output: &Path, kind: NoiseKind, rate: f64, seed: u64) -> Result<()> {
    let text = fs::read_to_string(input)?;
    let ds = parse_csv(&text, input, None)?;
    let noisy = corrupt(&ds, kind, rate, &mut stream(seed, ids::CORRUPTION))?;
    let realized = noisy.noise_rate();

    let mut out = Vec::new();
    write_csv(&noisy, &mut out)?;
    let mut out = String::from_utf8(out).expect("csv output is utf-8");
    for line in text.lines().filter(|l| l.trim_start().starts_with('#')) {
        out.push_str(line);
        out.push('\n');
    }
    out.push_str(&format!("# corrupt kind={kind} rate={rate} seed={seed} realized_rate={realized}\n"));
    fs::write(output, out)?;
    println!(
        "realized noise rate {realized:.6} (expected {:.6}, n = {})",
        kind.expected_flip_fraction(rate, ds.num_classes()),
        ds.len()
    );
    Ok(())
}

fn run_train(config_path: &Path) -> Result<()> {
    let cfg = RunConfig::load(config_path)?;
    let mut train_ds = load_source(&cfg.dataset, cfg.num_classes)?;
    let test = load_source(&cfg.test, Some(train_ds.num_classes()))?;
    if let Some((kind, rate)) = cfg.noise {
        train_ds = corrupt(&train_ds, kind, rate, &mut stream(cfg.noise_seed, ids::CORRUPTION))?;
        info!("applied {kind} noise at rate {rate}: realized {:.4}", train_ds.noise_rate());
    }

    fs::create_dir_all(&cfg.output_dir)?;
    fs::write(cfg.output_dir.join(RESOLVED_CONFIG), cfg.to_text())?;

    let method = cfg.train.method;
    info!("training {method} for {} epochs", cfg.train.schedule.total_epochs);
    let outcome = train(&train_ds, &test, &cfg.train)?;
    for m in &outcome.metrics {
        info!("epoch {:>4}  test_acc {:.4}  alpha {:.3}  r {:.3}", m.epoch, m.test_acc, m.alpha_d, m.r_d);
    }

    let mut records: Vec<MetricsRecord> = outcome.metrics.iter().cloned().map(MetricsRecord::Epoch).collect();
    if let Some(summary) = outcome.summary(method) {
        println!(
            "{method}: best {:.4} at epoch {}, last {:.4}",
            summary.best_test_acc, summary.best_epoch, summary.last_test_acc
        );
        records.push(MetricsRecord::Summary(SummaryRecord {
            summary,
            final_train_acc_noisy_subset: outcome.metrics.last().and_then(|m| m.train_acc_noisy_subset),
        }));
    }
    write_metrics(&cfg.output_dir.join(METRICS_FILE), &records)?;

    match &outcome.models {
        TrainedModels::Single(m) => save_model(m, &cfg.output_dir.join("model1.bin"))?,
        TrainedModels::Dual(state) => {
            save_model(&state.model1, &cfg.output_dir.join("model1.bin"))?;
            save_model(&state.model2, &cfg.output_dir.join("model2.bin"))?;
        }
    }
    info!("outputs written to {}", cfg.output_dir.display());
    Ok(())
}

fn run_probe(config_path: &Path, model_path: &Path) -> Result<()> {
    let cfg = RunConfig::load(config_path)?;
    let ds = load_source(&cfg.dataset, cfg.num_classes)?;
    let model = load_model(model_path)?;
    let result = probe_model(&model, &ds, &cfg.probe)?;
    println!(
        "probe: {} samples, {}-dim features, final train error {:.4}",
        result.num_samples, result.feature_dim, result.final_train_error
    );
    fs::create_dir_all(&cfg.output_dir)?;
    append_record(
        &cfg.output_dir.join(METRICS_FILE),
        &MetricsRecord::Probe(ProbeRecord {
            model: model_path.display().to_string(),
            num_samples: result.num_samples,
            feature_dim: result.feature_dim,
            hidden_dims: cfg.probe.hidden_dims.clone(),
            epochs: cfg.probe.epochs,
            lr: cfg.probe.lr,
            seed: cfg.probe.seed,
            final_train_error: result.final_train_error,
        }),
    )
}

fn report(runs: &Path) -> Result<()> {
    println!("{REPORT_HEADER}");
    for row in collect_report(runs)? {
        println!("{}", row.to_csv());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { n, dim, classes, separation, seed, output } => {
            generate(n, dim, classes, separation, seed, &output)
        }
        Command::Corrupt { input, output, kind, rate, seed } => {
            let output = output.unwrap_or_else(|| input.clone());
            corrupt_file(&input, &output, kind, rate, seed)
        }
        Command::Train { config } => run_train(&config),
        Command::Probe { config, model } => run_probe(&config, &model),
        Command::Report { runs } => report(&runs),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config(_) => 2,
                _ => 3,
            })
        }
    }
}
