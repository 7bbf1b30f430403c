//! CSV datasets: a header row, numeric feature columns, an optional `label`
//! column (`normal`, `abnormal` or empty) and an optional `truth` column
//! holding the ground-truth class of every row.

use std::path::Path;

use adclust_core::dataset::Label;
use adclust_core::rng::stream;
use adclust_core::synthetic::{labels_to_keep, ComponentClass};
use adclust_core::Dataset;
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestOptions {
    pub label_column: String,
    pub truth_column: String,
    /// Keep labels on this random fraction of the labeled rows and blank the
    /// rest. The blanked labels become the ground truth when the file has no
    /// truth column.
    pub label_fraction: Option<f64>,
    pub seed: u64,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            label_column: "label".into(),
            truth_column: "truth".into(),
            label_fraction: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub data: Dataset,
    pub truth: Option<Vec<ComponentClass>>,
}

fn parse_label(token: &str) -> Option<Label> {
    match token.trim() {
        "normal" => Some(Label::Normal),
        "abnormal" => Some(Label::Abnormal),
        "" => Some(Label::Unlabeled),
        _ => None,
    }
}

fn parse_truth(token: &str) -> Option<ComponentClass> {
    match token.trim() {
        "normal" => Some(ComponentClass::Normal),
        "abnormal" => Some(ComponentClass::Abnormal),
        "unknown" => Some(ComponentClass::Unknown),
        _ => None,
    }
}

pub fn truth_str(class: ComponentClass) -> &'static str {
    match class {
        ComponentClass::Normal => "normal",
        ComponentClass::Abnormal => "abnormal",
        ComponentClass::Unknown => "unknown",
    }
}

pub fn ingest_csv(path: &Path, opts: &IngestOptions) -> Result<Ingested> {
    if !path.is_file() {
        return Err(CliError::Input {
            path: path.into(),
            message: "no such file".into(),
        });
    }
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(CliError::csv(path))?;
    let headers = reader.headers().map_err(CliError::csv(path))?.clone();
    let label_at = headers.iter().position(|h| h == opts.label_column);
    let truth_at = headers.iter().position(|h| h == opts.truth_column);
    let features: Vec<usize> = (0..headers.len())
        .filter(|&c| Some(c) != label_at && Some(c) != truth_at)
        .collect();
    if features.is_empty() {
        return Err(CliError::Input {
            path: path.into(),
            message: "no feature columns".into(),
        });
    }

    let cell_error = |row: usize, col: usize, message: String| CliError::Cell {
        path: path.into(),
        row,
        column: headers[col].to_string(),
        message,
    };
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut truth = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(CliError::csv(path))?;
        let row = i + 1;
        for &c in &features {
            let cell = &record[c];
            let v: f64 = cell
                .parse()
                .map_err(|_| cell_error(row, c, format!("`{cell}` is not a number")))?;
            if !v.is_finite() {
                return Err(cell_error(row, c, format!("non-finite value `{cell}`")));
            }
            values.push(v);
        }
        labels.push(match label_at {
            Some(c) => parse_label(&record[c])
                .ok_or_else(|| cell_error(row, c, format!("unknown label `{}`", &record[c])))?,
            None => Label::Unlabeled,
        });
        if let Some(c) = truth_at {
            truth.push(
                parse_truth(&record[c])
                    .ok_or_else(|| cell_error(row, c, format!("unknown class `{}`", &record[c])))?,
            );
        }
    }
    if labels.is_empty() {
        return Err(CliError::Input {
            path: path.into(),
            message: "no data rows".into(),
        });
    }

    let mut truth = truth_at.map(|_| truth);
    if let Some(fraction) = opts.label_fraction {
        if !(0.0..=1.0).contains(&fraction) {
            return Err(CliError::Config(format!("label_fraction must lie in [0, 1], got {fraction}")));
        }
        if truth.is_none() {
            truth = Some(
                labels
                    .iter()
                    .map(|l| match l {
                        Label::Normal => ComponentClass::Normal,
                        Label::Abnormal => ComponentClass::Abnormal,
                        Label::Unlabeled => ComponentClass::Unknown,
                    })
                    .collect(),
            );
        }
        retain_labels(&mut labels, fraction, opts.seed);
    }
    let names = features.iter().map(|&c| headers[c].to_string()).collect();
    let data = Dataset::from_flat(features.len(), values, labels, names)?;
    Ok(Ingested { data, truth })
}

/// Keeps a uniformly random `fraction` of the labeled entries.
pub fn retain_labels(labels: &mut [Label], fraction: f64, seed: u64) {
    let labeled: Vec<usize> = (0..labels.len()).filter(|&i| labels[i].is_labeled()).collect();
    let keep = labels_to_keep(fraction, labeled.len());
    let mut kept = vec![false; labeled.len()];
    for i in sample(&mut stream(seed, 0), labeled.len(), keep) {
        kept[i] = true;
    }
    for (slot, &p) in labeled.iter().enumerate() {
        if !kept[slot] {
            labels[p] = Label::Unlabeled;
        }
    }
}

pub fn write_csv(path: &Path, data: &Dataset, truth: Option<&[ComponentClass]>) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(CliError::csv(path))?;
    let mut header: Vec<&str> = data.feature_names().iter().map(String::as_str).collect();
    header.push("label");
    if truth.is_some() {
        header.push("truth");
    }
    writer.write_record(&header).map_err(CliError::csv(path))?;
    for p in 0..data.len() {
        // Display for f64 is the shortest string that parses back exactly
        let mut row: Vec<String> = data.point(p).iter().map(|v| v.to_string()).collect();
        row.push(data.label(p).as_str().to_string());
        if let Some(t) = truth {
            row.push(truth_str(t[p]).to_string());
        }
        writer.write_record(&row).map_err(CliError::csv(path))?;
    }
    writer.flush().map_err(CliError::io(path))
}
