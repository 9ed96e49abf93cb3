//! Dense delimited-text parsing.

use std::io::BufRead;

use super::{build_class_map, Column, ColumnKind, RawDataset, Schema};
use crate::error::{Error, Result};

/// Which column carries the label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelSpec {
    Index(usize),
    Name(String),
}

#[derive(Debug, Clone)]
pub struct DenseOptions {
    pub delimiter: char,
    pub has_header: bool,
    pub label: LabelSpec,
    /// Token that maps to +1. Defaults to first-seen-is-positive.
    pub positive_class: Option<String>,
}

impl Default for DenseOptions {
    fn default() -> Self {
        DenseOptions {
            delimiter: ',',
            has_header: false,
            label: LabelSpec::Index(0),
            positive_class: None,
        }
    }
}

/// Split one physical line into trimmed tokens.
fn tokenize(line: &str, delimiter: char) -> Vec<String> {
    line.split(delimiter).map(|t| t.trim().to_string()).collect()
}

/// Read all rows of a delimited file: `(line_number, tokens)` per non-empty
/// line, 1-based physical line numbers. Used both for training ingestion and
/// for scoring input.
pub fn parse_dense_rows<R: BufRead>(reader: R, delimiter: char) -> Result<Vec<(usize, Vec<String>)>> {
    let mut rows = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        rows.push((i + 1, tokenize(&line, delimiter)));
    }
    Ok(rows)
}

/// Mark a feature column numeric iff every token parses as a float.
pub fn infer_schema(rows: &[Vec<String>]) -> Schema {
    let width = rows.first().map_or(0, Vec::len);
    let kinds = (0..width)
        .map(|c| {
            if rows.iter().all(|r| r[c].parse::<f64>().is_ok()) {
                ColumnKind::Numeric
            } else {
                ColumnKind::Categorical
            }
        })
        .collect();
    Schema { kinds }
}

/// Parse a dense labeled file. When `schema` is `None` the column kinds are
/// inferred (numeric iff every value parses as a float).
pub fn parse_dense<R: BufRead>(
    reader: R,
    schema: Option<&Schema>,
    opts: &DenseOptions,
) -> Result<RawDataset> {
    let mut rows = parse_dense_rows(reader, opts.delimiter)?;
    let header = if opts.has_header && !rows.is_empty() {
        Some(rows.remove(0))
    } else {
        None
    };
    if rows.is_empty() {
        return Err(Error::Parse { line: 0, msg: "empty input".into() });
    }

    // An explicit schema pins the expected width; otherwise the first row does.
    let width = match schema {
        Some(s) => s.kinds.len() + 1,
        None => rows[0].1.len(),
    };
    let label_col = match &opts.label {
        LabelSpec::Index(i) => *i,
        LabelSpec::Name(name) => {
            let header = header
                .as_ref()
                .ok_or_else(|| Error::Config(format!("label column {name:?} given by name but the file has no header row")))?;
            header
                .1
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Config(format!("label column {name:?} not found in header")))?
        }
    };
    if label_col >= width {
        return Err(Error::Config(format!(
            "label column {label_col} out of range for {width}-column rows"
        )));
    }
    let raw_width = width - 1;

    for (line, toks) in &rows {
        if toks.len() != width {
            return Err(Error::Parse {
                line: *line,
                msg: format!("expected {width} fields, found {}", toks.len()),
            });
        }
    }

    let (class_map, labels) = build_class_map(
        rows.iter().map(|(line, toks)| (*line, toks[label_col].clone())),
        opts.positive_class.as_deref(),
    )?;

    // Feature tokens per column, label column removed.
    let feature_cols: Vec<usize> = (0..width).filter(|c| *c != label_col).collect();
    let schema = match schema {
        Some(s) => s.clone(),
        None => {
            let feat_rows: Vec<Vec<String>> = rows
                .iter()
                .map(|(_, toks)| feature_cols.iter().map(|&c| toks[c].clone()).collect())
                .collect();
            infer_schema(&feat_rows)
        }
    };

    let mut columns = Vec::with_capacity(raw_width);
    for (fi, &c) in feature_cols.iter().enumerate() {
        match schema.kinds[fi] {
            ColumnKind::Numeric => {
                let mut vals = Vec::with_capacity(rows.len());
                for (line, toks) in &rows {
                    let v: f64 = toks[c].parse().map_err(|_| Error::Parse {
                        line: *line,
                        msg: format!("column {c}: {:?} is not numeric", toks[c]),
                    })?;
                    vals.push(v);
                }
                columns.push(Column::Numeric(vals));
            }
            ColumnKind::Categorical => {
                let mut tokens: Vec<String> = Vec::new();
                let mut values = Vec::with_capacity(rows.len());
                for (_, toks) in &rows {
                    let tok = &toks[c];
                    let idx = match tokens.iter().position(|t| t == tok) {
                        Some(i) => i,
                        None => {
                            tokens.push(tok.clone());
                            tokens.len() - 1
                        }
                    };
                    values.push(idx as u32);
                }
                columns.push(Column::Categorical { values, tokens });
            }
        }
    }

    Ok(RawDataset {
        n: rows.len(),
        raw_width,
        columns,
        labels,
        class_map,
    })
}
