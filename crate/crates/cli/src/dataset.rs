//! CSV dataset loading: RFC-4180 quoting, auto-detected header, a label
//! column selected by name or (possibly negative) index, and class ids
//! canonicalized by first appearance.

use std::path::Path;

use ndarray::Array2;
use spsnmf::graph::LabeledDataset;

use crate::error::{CliError, Result};

/// Label column selector: a header name, or an index where `-1` means the
/// last column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelSelector {
    Name(String),
    Index(isize),
}

impl std::str::FromStr for LabelSelector {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<isize>() {
            Ok(idx) => LabelSelector::Index(idx),
            Err(_) => LabelSelector::Name(s.to_string()),
        })
    }
}

impl std::fmt::Display for LabelSelector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LabelSelector::Name(n) => write!(f, "{n}"),
            LabelSelector::Index(i) => write!(f, "{i}"),
        }
    }
}

fn is_numeric(field: &str) -> bool {
    field.trim().parse::<f64>().is_ok()
}

/// Loads a CSV dataset, splitting off the label column.
///
/// The first row counts as a header when none of its fields parse as a
/// number; otherwise it is data (so headerless files with string labels
/// still load). Feature cells must be finite numbers; the offending cell
/// is named on failure. Positions in errors are 1-based file coordinates.
pub fn load_csv_dataset(path: &Path, selector: &LabelSelector) -> Result<LabeledDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| CliError::Dataset {
            path: path.into(),
            message: e.to_string(),
        })?;

    let mut rows: Vec<Vec<String>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Parse {
            path: path.into(),
            row: i + 1,
            col: 0,
            message: e.to_string(),
        })?;
        rows.push(record.iter().map(str::to_string).collect());
    }
    if rows.is_empty() {
        return Err(CliError::Dataset {
            path: path.into(),
            message: "file is empty".into(),
        });
    }

    let width = rows[0].len();
    if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != width) {
        return Err(CliError::Parse {
            path: path.into(),
            row: i + 1,
            col: 0,
            message: format!("expected {width} fields, found {}", row.len()),
        });
    }

    let has_header = !rows[0].iter().any(|f| is_numeric(f));
    let header: Option<&Vec<String>> = if has_header { Some(&rows[0]) } else { None };
    let data_start = usize::from(has_header);

    let label_col = match selector {
        LabelSelector::Name(name) => header
            .and_then(|h| h.iter().position(|c| c == name))
            .ok_or_else(|| CliError::MissingLabelColumn {
                path: path.into(),
                selector: selector.to_string(),
            })?,
        LabelSelector::Index(idx) => {
            let resolved = if *idx < 0 { width as isize + idx } else { *idx };
            if resolved < 0 || resolved >= width as isize {
                return Err(CliError::MissingLabelColumn {
                    path: path.into(),
                    selector: selector.to_string(),
                });
            }
            resolved as usize
        }
    };

    let n = rows.len() - data_start;
    if n < 2 {
        return Err(CliError::Dataset {
            path: path.into(),
            message: format!("need at least 2 samples, found {n}"),
        });
    }
    let d = width - 1;
    if d == 0 {
        return Err(CliError::Dataset {
            path: path.into(),
            message: "no feature columns besides the label".into(),
        });
    }

    let mut features = Array2::zeros((n, d));
    let mut class_names: Vec<String> = Vec::new();
    let mut labels = Vec::with_capacity(n);

    for (r, row) in rows[data_start..].iter().enumerate() {
        let mut out_col = 0;
        for (c, field) in row.iter().enumerate() {
            if c == label_col {
                let id = match class_names.iter().position(|s| s == field) {
                    Some(id) => id,
                    None => {
                        class_names.push(field.clone());
                        class_names.len() - 1
                    }
                };
                labels.push(id);
                continue;
            }
            let value: f64 = field.trim().parse().map_err(|_| CliError::Parse {
                path: path.into(),
                row: data_start + r + 1,
                col: c + 1,
                message: format!("feature cell '{field}' is not numeric"),
            })?;
            if !value.is_finite() {
                return Err(CliError::Parse {
                    path: path.into(),
                    row: data_start + r + 1,
                    col: c + 1,
                    message: format!("feature cell '{field}' is not finite"),
                });
            }
            features[[r, out_col]] = value;
            out_col += 1;
        }
    }

    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string());
    Ok(LabeledDataset {
        features,
        labels,
        name,
    })
}
