//! Ingestion of labeled tabular data: dense delimited text and sparse
//! `label idx:val` files, feature encoding, and contiguous row partitioning
//! across workers.

mod codec;
mod dense;
mod partition;
mod sparse;

pub use codec::{fit_codec, ColumnCodec, FeatureCodec, UnknownCategory};
pub use dense::{infer_schema, parse_dense, parse_dense_rows, DenseOptions, LabelSpec};
pub use partition::{encode_and_partition, TrainingPartition};
pub use sparse::parse_sparse;

use crate::error::{Error, Result};

/// Kind of a raw feature column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

/// Per-feature-column kinds (the label column is not part of the schema).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    pub kinds: Vec<ColumnKind>,
}

/// Mapping between the two raw label tokens and the signed classes.
/// The first distinct token seen becomes the positive class unless the
/// caller overrides it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassMap {
    pub positive: String,
    pub negative: String,
}

impl ClassMap {
    pub fn to_sign(&self, token: &str) -> Option<i8> {
        if token == self.positive {
            Some(1)
        } else if token == self.negative {
            Some(-1)
        } else {
            None
        }
    }

    pub fn token(&self, sign: i8) -> &str {
        if sign >= 0 {
            &self.positive
        } else {
            &self.negative
        }
    }
}

/// One raw feature column in column-major storage. Categorical values are
/// interned against `tokens`, which preserves first-appearance order.
#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Numeric(Vec<f64>),
    Categorical { values: Vec<u32>, tokens: Vec<String> },
}

impl Column {
    pub fn kind(&self) -> ColumnKind {
        match self {
            Column::Numeric(_) => ColumnKind::Numeric,
            Column::Categorical { .. } => ColumnKind::Categorical,
        }
    }
}

/// A parsed two-class dataset before encoding.
#[derive(Debug, Clone)]
pub struct RawDataset {
    pub n: usize,
    pub raw_width: usize,
    pub columns: Vec<Column>,
    pub labels: Vec<i8>,
    pub class_map: ClassMap,
}

impl RawDataset {
    pub fn schema(&self) -> Schema {
        Schema {
            kinds: self.columns.iter().map(Column::kind).collect(),
        }
    }

    /// Raw tokens of row `i`, materialized for scoring-style access.
    pub fn row_tokens(&self, i: usize) -> Vec<String> {
        self.columns
            .iter()
            .map(|c| match c {
                Column::Numeric(v) => format_numeric(v[i]),
                Column::Categorical { values, tokens } => tokens[values[i] as usize].clone(),
            })
            .collect()
    }
}

fn format_numeric(x: f64) -> String {
    // Shortest representation that round-trips.
    format!("{x}")
}

/// Build the two-class map from label tokens in first-seen order.
pub(crate) fn build_class_map(
    tokens: impl Iterator<Item = (usize, String)>,
    positive_override: Option<&str>,
) -> Result<(ClassMap, Vec<i8>)> {
    let mut distinct: Vec<String> = Vec::new();
    let mut raw: Vec<(usize, u8)> = Vec::new();
    for (line, tok) in tokens {
        let idx = match distinct.iter().position(|t| *t == tok) {
            Some(i) => i,
            None => {
                if distinct.len() == 2 {
                    return Err(Error::Parse {
                        line,
                        msg: format!(
                            "third label value {tok:?} (already saw {:?} and {:?})",
                            distinct[0], distinct[1]
                        ),
                    });
                }
                distinct.push(tok);
                distinct.len() - 1
            }
        };
        raw.push((line, idx as u8));
    }
    if raw.is_empty() {
        return Err(Error::Parse { line: 0, msg: "empty input".into() });
    }
    if distinct.len() < 2 {
        return Err(Error::Parse {
            line: 0,
            msg: format!("expected two label values, found only {:?}", distinct[0]),
        });
    }
    let mut positive_idx = 0;
    if let Some(tok) = positive_override {
        positive_idx = distinct
            .iter()
            .position(|t| t == tok)
            .ok_or_else(|| Error::Config(format!("positive class {tok:?} not present in data")))?;
    }
    let class_map = ClassMap {
        positive: distinct[positive_idx].clone(),
        negative: distinct[1 - positive_idx].clone(),
    };
    let labels = raw
        .into_iter()
        .map(|(_, idx)| if idx as usize == positive_idx { 1 } else { -1 })
        .collect();
    Ok((class_map, labels))
}
