//! Sparse `<label> <idx>:<val> ...` parsing with 1-based, strictly
//! increasing indices. Missing indices are zero.

use std::io::BufRead;

use super::{ClassMap, Column, RawDataset};
use crate::error::{Error, Result};

/// Parse a sparse file. `m_declared` caps the feature count; when `None` the
/// width is the largest index seen.
pub fn parse_sparse<R: BufRead>(reader: R, m_declared: Option<usize>) -> Result<RawDataset> {
    let mut labels: Vec<i8> = Vec::new();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut max_index = 0usize;

    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let label_tok = parts.next().expect("non-empty line has a first token");
        let label = match label_tok {
            "+1" | "1" => 1,
            "-1" => -1,
            other => {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("label must be +1 or -1, got {other:?}"),
                })
            }
        };

        let mut entries: Vec<(usize, f64)> = Vec::new();
        let mut prev_index = 0usize;
        for part in parts {
            let (idx_str, val_str) = part.split_once(':').ok_or_else(|| Error::Parse {
                line: line_no,
                msg: format!("expected idx:val, got {part:?}"),
            })?;
            let idx: usize = idx_str.parse().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("bad index {idx_str:?}"),
            })?;
            if idx == 0 {
                return Err(Error::Parse {
                    line: line_no,
                    msg: "indices are 1-based; got 0".into(),
                });
            }
            if idx <= prev_index {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("indices not increasing ({prev_index} then {idx})"),
                });
            }
            if let Some(m) = m_declared {
                if idx > m {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!("index {idx} exceeds declared feature count {m}"),
                    });
                }
            }
            let val: f64 = val_str.parse().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("bad value {val_str:?}"),
            })?;
            prev_index = idx;
            entries.push((idx, val));
        }
        max_index = max_index.max(prev_index);
        labels.push(label);
        rows.push(entries);
    }

    if rows.is_empty() {
        return Err(Error::Parse { line: 0, msg: "empty input".into() });
    }
    let m = m_declared.unwrap_or(max_index);

    // Densify column-major.
    let n = rows.len();
    let mut cols: Vec<Vec<f64>> = vec![vec![0.0; n]; m];
    for (r, entries) in rows.iter().enumerate() {
        for &(idx, val) in entries {
            cols[idx - 1][r] = val;
        }
    }

    // Sparse labels are already signed; both classes need not be present for
    // scoring inputs, but training validates that downstream.
    let class_map = ClassMap {
        positive: "+1".into(),
        negative: "-1".into(),
    };

    Ok(RawDataset {
        n,
        raw_width: m,
        columns: cols.into_iter().map(Column::Numeric).collect(),
        labels,
        class_map,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn col(ds: &RawDataset, i: usize) -> &[f64] {
        match &ds.columns[i] {
            Column::Numeric(v) => v,
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn basic_line() {
        let ds = parse_sparse(Cursor::new("+1 1:0.5 3:2.0\n"), Some(3)).unwrap();
        assert_eq!(ds.labels, vec![1]);
        assert_eq!(col(&ds, 0), &[0.5]);
        assert_eq!(col(&ds, 1), &[0.0]);
        assert_eq!(col(&ds, 2), &[2.0]);
    }

    #[test]
    fn all_absent_row() {
        let ds = parse_sparse(Cursor::new("-1\n"), Some(2)).unwrap();
        assert_eq!(ds.labels, vec![-1]);
        assert_eq!(col(&ds, 0), &[0.0]);
        assert_eq!(col(&ds, 1), &[0.0]);
    }

    #[test]
    fn non_increasing_indices_rejected() {
        let err = parse_sparse(Cursor::new("+1 3:1 2:1\n"), None).unwrap_err();
        match err {
            Error::Parse { line, msg } => {
                assert_eq!(line, 1);
                assert!(msg.contains("not increasing"), "{msg}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn index_beyond_declared_rejected() {
        let err = parse_sparse(Cursor::new("+1 5:1\n"), Some(3)).unwrap_err();
        assert!(err.to_string().contains("exceeds"), "{err}");
    }

    #[test]
    fn bad_value_rejected() {
        let err = parse_sparse(Cursor::new("+1 1:zzz\n"), None).unwrap_err();
        assert!(err.to_string().contains("bad value"), "{err}");
    }

    #[test]
    fn width_inferred_from_max_index() {
        let ds = parse_sparse(Cursor::new("+1 2:1\n-1 4:2\n"), None).unwrap();
        assert_eq!(ds.raw_width, 4);
    }

    #[test]
    fn zero_index_rejected() {
        let err = parse_sparse(Cursor::new("+1 0:1\n"), None).unwrap_err();
        assert!(err.to_string().contains("1-based"), "{err}");
    }

    #[test]
    fn empty_input_rejected() {
        let err = parse_sparse(Cursor::new("\n\n"), None).unwrap_err();
        assert!(err.to_string().contains("empty input"), "{err}");
    }
}
