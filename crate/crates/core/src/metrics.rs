//! JSON-lines metrics: one object per line, tagged by `record_type`.

use std::fs::{self, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trainer::{EpochMetrics, Method, RunSummary};

pub const METRICS_FILE: &str = "metrics.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRecord {
    pub model: String,
    pub num_samples: usize,
    pub feature_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
    pub final_train_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    #[serde(flatten)]
    pub summary: RunSummary,
    pub final_train_acc_noisy_subset: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record_type", rename_all = "snake_case")]
pub enum MetricsRecord {
    Epoch(EpochMetrics),
    Probe(ProbeRecord),
    Summary(SummaryRecord),
}

pub fn to_jsonl(records: &[MetricsRecord]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn write_metrics(path: &Path, records: &[MetricsRecord]) -> Result<()> {
    fs::write(path, to_jsonl(records)?)?;
    Ok(())
}

pub fn append_record(path: &Path, record: &MetricsRecord) -> Result<()> {
    let mut f = OpenOptions::new().append(true).create(true).open(path)?;
    writeln!(f, "{}", serde_json::to_string(record)?)?;
    Ok(())
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRecord>> {
    let f = fs::File::open(path)?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg: e.to_string(),
        })?);
    }
    Ok(out)
}

/// One row of the cross-run comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub run: String,
    pub method: Method,
    pub best_test_acc: f64,
    pub best_epoch: usize,
    pub last_test_acc: f64,
    pub last_epoch: usize,
    pub final_train_acc_noisy_subset: Option<f64>,
    pub probe_train_error: Option<f64>,
}

pub const REPORT_HEADER: &str = "run,method,best_test_acc,best_epoch,last_test_acc,last_epoch,best_minus_last,final_train_acc_noisy_subset,probe_train_error";

impl ReportRow {
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(String::new, |v| v.to_string());
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.run,
            self.method,
            self.best_test_acc,
            self.best_epoch,
            self.last_test_acc,
            self.last_epoch,
            self.best_test_acc - self.last_test_acc,
            opt(self.final_train_acc_noisy_subset),
            opt(self.probe_train_error),
        )
    }
}

/// Rows for every immediate subdirectory of `runs_dir` holding a metrics
/// file with a summary record, sorted by directory name.
pub fn collect_report(runs_dir: &Path) -> Result<Vec<ReportRow>> {
    let mut dirs: Vec<PathBuf> = fs::read_dir(runs_dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(METRICS_FILE).is_file())
        .collect();
    dirs.sort();
    let mut rows = Vec::new();
    for dir in dirs {
        let records = read_metrics(&dir.join(METRICS_FILE))?;
        let Some(summary) = records.iter().rev().find_map(|r| match r {
            MetricsRecord::Summary(s) => Some(s),
            _ => None,
        }) else {
            continue;
        };
        let probe_train_error = records.iter().rev().find_map(|r| match r {
            MetricsRecord::Probe(p) => Some(p.final_train_error),
            _ => None,
        });
        rows.push(ReportRow {
            run: dir.file_name().unwrap().to_string_lossy().into_owned(),
            method: summary.summary.method,
            best_test_acc: summary.summary.best_test_acc,
            best_epoch: summary.summary.best_epoch,
            last_test_acc: summary.summary.last_test_acc,
            last_epoch: summary.summary.last_epoch,
            final_train_acc_noisy_subset: summary.final_train_acc_noisy_subset,
            probe_train_error,
        });
    }
    Ok(rows)
}
