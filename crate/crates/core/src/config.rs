//! Flat `key = value` run configuration.
//!
//! `#` starts a comment; blank lines are ignored; unknown keys are rejected.
//! Relative paths are resolved against the directory holding the config
//! file. [`RunConfig::to_text`] writes the fully resolved configuration (all
//! defaults materialized, absolute paths) so a run can be reproduced from
//! it alone.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::losses::LossParams;
use crate::noise::NoiseKind;
use crate::probe::ProbeConfig;
use crate::rng::StreamIds;
use crate::schedules::ScheduleParams;
use crate::trainer::{Method, OptimizerConfig, TrainConfig};

/// Every accepted key, in the order [`RunConfig::to_text`] writes them.
pub const KEYS: &[&str] = &[
    "method",
    "layer_dims",
    "batch_size",
    "total_epochs",
    "eval_every",
    "lr_initial",
    "lr_decay_epoch",
    "lr_decay_factor",
    "momentum",
    "weight_decay",
    "tau",
    "alpha_max",
    "beta_mag",
    "ramp_len",
    "dml_alpha",
    "r_min",
    "r_max",
    "warmup",
    "seed_master",
    "num_classes",
    "dataset_path",
    "dataset_labels_path",
    "test_path",
    "test_labels_path",
    "noise_kind",
    "noise_rate",
    "noise_seed",
    "output_dir",
    "probe_hidden_dims",
    "probe_num_samples",
    "probe_epochs",
    "probe_lr",
    "probe_batch_size",
    "probe_seed",
];

/// Where a dataset comes from: a CSV file, or an IDX image/label file pair.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Csv(PathBuf),
    Idx { images: PathBuf, labels: PathBuf },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub num_classes: Option<usize>,
    pub dataset: DataSource,
    pub test: DataSource,
    /// Corruption applied to the (clean) training set after loading.
    pub noise: Option<(NoiseKind, f64)>,
    pub noise_seed: u64,
    pub output_dir: PathBuf,
    pub probe: ProbeConfig,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn parse_value<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| config_err(format!("{key}: cannot parse {raw:?}")))
}

fn parse_list(key: &str, raw: &str) -> Result<Vec<usize>> {
    let inner = raw.trim().trim_start_matches('[').trim_end_matches(']');
    inner
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(key, s))
        .collect()
}

fn format_list(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| config_err(format!("line {}: expected `key = value`", i + 1)))?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(config_err(format!("line {}: unknown key {key:?}", i + 1)));
            }
            if map.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(config_err(format!("line {}: duplicate key {key:?}", i + 1)));
            }
        }
        Self::from_map(&map, base_dir)
    }

    fn from_map(map: &BTreeMap<String, String>, base_dir: &Path) -> Result<Self> {
        let get = |k: &str| map.get(k).map(String::as_str);
        let required = |k: &str| get(k).ok_or_else(|| config_err(format!("missing required key {k:?}")));
        fn or<T: std::str::FromStr>(map: &BTreeMap<String, String>, k: &str, default: T) -> Result<T> {
            map.get(k).map_or(Ok(default), |v| parse_value(k, v))
        }
        let path = |k: &str| -> Option<PathBuf> {
            get(k).map(|p| {
                let p = Path::new(p);
                if p.is_absolute() {
                    p.to_path_buf()
                } else {
                    base_dir.join(p)
                }
            })
        };
        let existing = |k: &str| -> Result<Option<PathBuf>> {
            match path(k) {
                Some(p) if !p.is_file() => Err(config_err(format!("{k}: no such file {}", p.display()))),
                Some(p) => Ok(Some(fs::canonicalize(&p)?)),
                None => Ok(None),
            }
        };
        let source = |k: &str, labels_key: &str| -> Result<DataSource> {
            let main = existing(k)?.ok_or_else(|| config_err(format!("missing required key {k:?}")))?;
            Ok(match existing(labels_key)? {
                Some(labels) => DataSource::Idx { images: main, labels },
                None => DataSource::Csv(main),
            })
        };

        let method: Method = parse_value("method", required("method")?)?;
        let layer_dims = parse_list("layer_dims", required("layer_dims")?)?;
        let total_epochs: usize = or(map, "total_epochs", 200)?;
        let defaults = ScheduleParams::with_total_epochs(total_epochs);
        let schedule = ScheduleParams {
            alpha_max: or(map, "alpha_max", defaults.alpha_max)?,
            beta_mag: or(map, "beta_mag", defaults.beta_mag)?,
            ramp_len: or(map, "ramp_len", defaults.ramp_len)?,
            r_min: or(map, "r_min", defaults.r_min)?,
            r_max: or(map, "r_max", defaults.r_max)?,
            warmup: or(map, "warmup", defaults.warmup)?,
            total_epochs,
            lr_initial: or(map, "lr_initial", defaults.lr_initial)?,
            lr_decay_epoch: or(map, "lr_decay_epoch", defaults.lr_decay_epoch)?,
            lr_decay_factor: or(map, "lr_decay_factor", defaults.lr_decay_factor)?,
        };
        let seed_master: u64 = or(map, "seed_master", 0)?;
        let train = TrainConfig {
            method,
            layer_dims,
            batch_size: or(map, "batch_size", 128)?,
            schedule,
            loss: LossParams {
                tau: or(map, "tau", 4.0)?,
                alpha: or(map, "dml_alpha", 0.5)?,
            },
            optimizer: OptimizerConfig {
                momentum: or(map, "momentum", 0.9)?,
                weight_decay: or(map, "weight_decay", 1e-5)?,
            },
            seed_master,
            streams: StreamIds::default(),
            eval_every: or(map, "eval_every", 1)?,
        };
        train.validate().map_err(|e| config_err(e.to_string()))?;

        let noise = match get("noise_kind") {
            None | Some("none") => None,
            Some(kind) => {
                let kind: NoiseKind = kind.parse().map_err(|e: Error| config_err(e.to_string()))?;
                let rate: f64 = parse_value("noise_rate", required("noise_rate")?)?;
                if !(0.0..=1.0).contains(&rate) {
                    return Err(config_err(format!("noise_rate {rate} outside [0, 1]")));
                }
                Some((kind, rate))
            }
        };

        let probe_defaults = ProbeConfig::default();
        let probe = ProbeConfig {
            hidden_dims: match get("probe_hidden_dims") {
                Some(v) => parse_list("probe_hidden_dims", v)?,
                None => probe_defaults.hidden_dims,
            },
            num_samples: or(map, "probe_num_samples", probe_defaults.num_samples)?,
            epochs: or(map, "probe_epochs", probe_defaults.epochs)?,
            lr: or(map, "probe_lr", probe_defaults.lr)?,
            batch_size: or(map, "probe_batch_size", probe_defaults.batch_size)?,
            seed: or(map, "probe_seed", seed_master)?,
        };
        probe.validate().map_err(|e| config_err(e.to_string()))?;

        let output_dir = path("output_dir").ok_or_else(|| config_err("missing required key \"output_dir\""))?;
        let output_dir = if output_dir.is_absolute() {
            output_dir
        } else {
            std::env::current_dir()?.join(output_dir)
        };

        Ok(Self {
            train,
            num_classes: get("num_classes").map(|v| parse_value("num_classes", v)).transpose()?,
            dataset: source("dataset_path", "dataset_labels_path")?,
            test: source("test_path", "test_labels_path")?,
            noise,
            noise_seed: or(map, "noise_seed", seed_master)?,
            output_dir,
            probe,
        })
    }

    /// Fully resolved configuration in `key = value` form.
    pub fn to_text(&self) -> String {
        let t = &self.train;
        let s = &t.schedule;
        let mut entries: Vec<(&str, String)> = vec![
            ("method", t.method.to_string()),
            ("layer_dims", format_list(&t.layer_dims)),
            ("batch_size", t.batch_size.to_string()),
            ("total_epochs", s.total_epochs.to_string()),
            ("eval_every", t.eval_every.to_string()),
            ("lr_initial", s.lr_initial.to_string()),
            ("lr_decay_epoch", s.lr_decay_epoch.to_string()),
            ("lr_decay_factor", s.lr_decay_factor.to_string()),
            ("momentum", t.optimizer.momentum.to_string()),
            ("weight_decay", t.optimizer.weight_decay.to_string()),
            ("tau", t.loss.tau.to_string()),
            ("alpha_max", s.alpha_max.to_string()),
            ("beta_mag", s.beta_mag.to_string()),
            ("ramp_len", s.ramp_len.to_string()),
            ("dml_alpha", t.loss.alpha.to_string()),
            ("r_min", s.r_min.to_string()),
            ("r_max", s.r_max.to_string()),
            ("warmup", s.warmup.to_string()),
            ("seed_master", t.seed_master.to_string()),
        ];
        if let Some(c) = self.num_classes {
            entries.push(("num_classes", c.to_string()));
        }
        for (key, labels_key, src) in [
            ("dataset_path", "dataset_labels_path", &self.dataset),
            ("test_path", "test_labels_path", &self.test),
        ] {
            match src {
                DataSource::Csv(p) => entries.push((key, p.display().to_string())),
                DataSource::Idx { images, labels } => {
                    entries.push((key, images.display().to_string()));
                    entries.push((labels_key, labels.display().to_string()));
                }
            }
        }
        match self.noise {
            Some((kind, rate)) => {
                entries.push(("noise_kind", kind.to_string()));
                entries.push(("noise_rate", rate.to_string()));
            }
            None => entries.push(("noise_kind", "none".into())),
        }
        entries.push(("noise_seed", self.noise_seed.to_string()));
        entries.push(("output_dir", self.output_dir.display().to_string()));
        let p = &self.probe;
        entries.extend([
            ("probe_hidden_dims", format_list(&p.hidden_dims)),
            ("probe_num_samples", p.num_samples.to_string()),
            ("probe_epochs", p.epochs.to_string()),
            ("probe_lr", p.lr.to_string()),
            ("probe_batch_size", p.batch_size.to_string()),
            ("probe_seed", p.seed.to_string()),
        ]);
        entries.sort_by_key(|(k, _)| KEYS.iter().position(|x| x == k));
        let mut out = String::from("# resolved run configuration\n");
        for (k, v) in entries {
            writeln!(out, "{k} = {v}").unwrap();
        }
        out
    }
}
