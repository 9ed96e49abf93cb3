//! Feature encoding: standardization for numeric columns, first-appearance
//! indicator expansion for categorical columns. The codec is fit once on the
//! training data and persisted with the model so scoring applies the exact
//! same transform.

use super::{Column, ColumnKind, RawDataset, Schema};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnCodec {
    /// `(x - mean) / std`, population variance. A constant column gets the
    /// std sentinel 1 so it encodes to all zeros instead of dividing by zero.
    Numeric { mean: f64, std: f64 },
    /// One indicator per distinct value, ordered by first appearance.
    Categorical { tokens: Vec<String> },
}

impl ColumnCodec {
    pub fn width(&self) -> usize {
        match self {
            ColumnCodec::Numeric { .. } => 1,
            ColumnCodec::Categorical { tokens } => tokens.len(),
        }
    }
}

/// Deterministic raw-row -> feature-vector transform.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureCodec {
    pub columns: Vec<ColumnCodec>,
    /// Encoded feature count.
    pub m: usize,
}

/// What to do with a category value never seen during training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UnknownCategory {
    #[default]
    Error,
    /// Emit an all-zero indicator block.
    Zeros,
}

impl FeatureCodec {
    pub fn schema(&self) -> Schema {
        Schema {
            kinds: self
                .columns
                .iter()
                .map(|c| match c {
                    ColumnCodec::Numeric { .. } => ColumnKind::Numeric,
                    ColumnCodec::Categorical { .. } => ColumnKind::Categorical,
                })
                .collect(),
        }
    }

    /// Encode one raw row given as tokens (scoring path).
    pub fn encode_tokens(&self, tokens: &[String], unknown: UnknownCategory) -> Result<Vec<f64>> {
        if tokens.len() != self.columns.len() {
            return Err(Error::Dimension(format!(
                "row has {} features, codec expects {}",
                tokens.len(),
                self.columns.len()
            )));
        }
        let mut out = vec![0.0; self.m];
        let mut at = 0usize;
        for (tok, col) in tokens.iter().zip(&self.columns) {
            match col {
                ColumnCodec::Numeric { mean, std } => {
                    let v: f64 = tok.parse().map_err(|_| {
                        Error::Parse { line: 0, msg: format!("{tok:?} is not numeric") }
                    })?;
                    out[at] = (v - mean) / std;
                    at += 1;
                }
                ColumnCodec::Categorical { tokens: known } => {
                    match known.iter().position(|t| t == tok) {
                        Some(i) => out[at + i] = 1.0,
                        None => match unknown {
                            UnknownCategory::Error => {
                                return Err(Error::Parse {
                                    line: 0,
                                    msg: format!("unknown category {tok:?}"),
                                })
                            }
                            UnknownCategory::Zeros => {}
                        },
                    }
                    at += known.len();
                }
            }
        }
        Ok(out)
    }

    /// Encode row `row` of a parsed dataset (training path; the dataset must
    /// be schema-compatible with the codec).
    pub(crate) fn encode_dataset_row(&self, ds: &RawDataset, row: usize, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.m);
        out.fill(0.0);
        let mut at = 0usize;
        for (col, codec) in ds.columns.iter().zip(&self.columns) {
            match (col, codec) {
                (Column::Numeric(vals), ColumnCodec::Numeric { mean, std }) => {
                    out[at] = (vals[row] - mean) / std;
                    at += 1;
                }
                (Column::Categorical { values, .. }, ColumnCodec::Categorical { tokens }) => {
                    out[at + values[row] as usize] = 1.0;
                    at += tokens.len();
                }
                _ => unreachable!("dataset/codec schema mismatch is checked upfront"),
            }
        }
    }
}

/// Fit the encoding on a training dataset.
pub fn fit_codec(ds: &RawDataset) -> Result<FeatureCodec> {
    if ds.n == 0 {
        return Err(Error::Config("cannot fit a codec on an empty dataset".into()));
    }
    let mut columns = Vec::with_capacity(ds.columns.len());
    for col in &ds.columns {
        match col {
            Column::Numeric(vals) => {
                let n = vals.len() as f64;
                let mean = vals.iter().sum::<f64>() / n;
                let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
                let std = if var == 0.0 { 1.0 } else { var.sqrt() };
                columns.push(ColumnCodec::Numeric { mean, std });
            }
            Column::Categorical { tokens, .. } => {
                columns.push(ColumnCodec::Categorical { tokens: tokens.clone() });
            }
        }
    }
    let m = columns.iter().map(ColumnCodec::width).sum();
    if m == 0 {
        return Err(Error::Config("dataset has no feature columns".into()));
    }
    Ok(FeatureCodec { columns, m })
}
