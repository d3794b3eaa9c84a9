//! CSV datasets: header `f0,...,f{d-1},label,clean_label`.
//!
//! Reals are written with 17 significant digits so a save/load round trip
//! is exact. Lines starting with `#` are comments and are skipped on load.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv<W: Write>(ds: &LabeledDataset, mut out: W) -> Result<()> {
    let d = ds.num_features();
    let mut header: Vec<String> = (0..d).map(|j| format!("f{j}")).collect();
    header.push("label".into());
    header.push("clean_label".into());
    writeln!(out, "{}", header.join(","))?;
    for i in 0..ds.len() {
        let mut fields: Vec<String> = ds.features().row(i).iter().map(|&v| format_real(v)).collect();
        fields.push(ds.labels()[i].to_string());
        fields.push(ds.clean_labels()[i].to_string());
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

pub fn save_csv(ds: &LabeledDataset, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_csv(ds, &mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn load_csv(path: &Path, num_classes: Option<usize>) -> Result<LabeledDataset> {
    let text = fs::read_to_string(path)?;
    parse_csv(&text, path, num_classes)
}

/// Parses CSV text; `path` is only used in error messages.
pub fn parse_csv(text: &str, path: &Path, num_classes: Option<usize>) -> Result<LabeledDataset> {
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (header_line, header) = lines.next().ok_or_else(|| parse_err(1, "missing header".into()))?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    let label_col = columns
        .iter()
        .position(|&c| c == "label")
        .ok_or_else(|| parse_err(header_line, "no `label` column".into()))?;
    let clean_col = columns.iter().position(|&c| c == "clean_label");
    let feature_cols: Vec<usize> = (0..columns.len())
        .filter(|&j| j != label_col && Some(j) != clean_col)
        .collect();
    for (k, &j) in feature_cols.iter().enumerate() {
        if columns[j] != format!("f{k}") {
            return Err(parse_err(
                header_line,
                format!("expected feature column f{k}, found {:?}", columns[j]),
            ));
        }
    }
    if feature_cols.is_empty() {
        return Err(parse_err(header_line, "no feature columns".into()));
    }

    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut clean = Vec::new();
    for (line_no, line) in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != columns.len() {
            return Err(parse_err(
                line_no,
                format!("{} fields, header has {}", fields.len(), columns.len()),
            ));
        }
        for &j in &feature_cols {
            let v: f64 = fields[j]
                .parse()
                .map_err(|_| parse_err(line_no, format!("non-numeric feature {:?}", fields[j])))?;
            if !v.is_finite() {
                return Err(parse_err(line_no, format!("non-finite feature {:?}", fields[j])));
            }
            values.push(v);
        }
        let parse_label = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| parse_err(line_no, format!("invalid label {s:?}")))
        };
        let y = parse_label(fields[label_col])?;
        labels.push(y);
        clean.push(match clean_col {
            Some(j) => parse_label(fields[j])?,
            None => y,
        });
        if let Some(c) = num_classes {
            if y >= c || *clean.last().unwrap() >= c {
                return Err(parse_err(line_no, format!("label outside {c} classes")));
            }
        }
    }
    if labels.is_empty() {
        return Err(Error::EmptyDataset(path.display().to_string()));
    }
    let c = num_classes.unwrap_or_else(|| labels.iter().chain(&clean).max().unwrap() + 1);
    let n = labels.len();
    let ds = LabeledDataset::new(Tensor::new(vec![n, feature_cols.len()], values)?, labels, clean, c)?;
    Ok(if clean_col.is_none() { ds.assume_clean() } else { ds })
}
