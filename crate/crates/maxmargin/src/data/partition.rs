//! Contiguous block partitioning of the encoded, label-signed design matrix.

use super::{FeatureCodec, RawDataset};
use crate::error::{Error, Result};

/// One worker's immutable slice of the label-signed design matrix.
/// Row `j` stores `d_j * x_j` so the worker-side solver never needs the raw
/// features again.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPartition {
    /// Encoded feature count.
    pub m: usize,
    /// Local row count.
    pub n_rows: usize,
    /// Global index of the first local row.
    pub global_offset: usize,
    /// Row-major `n_rows x m` signed rows.
    y: Vec<f64>,
    /// Labels, each exactly -1 or +1.
    d: Vec<f64>,
}

impl TrainingPartition {
    pub fn new(m: usize, global_offset: usize, y: Vec<f64>, d: Vec<f64>) -> Result<Self> {
        if m == 0 || y.len() % m != 0 || y.len() / m != d.len() {
            return Err(Error::Dimension(format!(
                "partition storage {} x {} vs {} labels",
                y.len(),
                m,
                d.len()
            )));
        }
        if !d.iter().all(|&l| l == 1.0 || l == -1.0) {
            return Err(Error::Dimension("labels must be exactly -1 or +1".into()));
        }
        if !y.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("partition rows"));
        }
        Ok(TrainingPartition {
            m,
            n_rows: d.len(),
            global_offset,
            y,
            d,
        })
    }

    #[inline]
    pub fn row(&self, j: usize) -> &[f64] {
        &self.y[j * self.m..(j + 1) * self.m]
    }

    #[inline]
    pub fn label(&self, j: usize) -> f64 {
        self.d[j]
    }

    pub fn labels(&self) -> &[f64] {
        &self.d
    }

    pub fn rows_flat(&self) -> &[f64] {
        &self.y
    }
}

/// Encode every row and split into `p` contiguous blocks. Sizes differ by at
/// most one; the first `n mod p` workers take the extra row.
pub fn encode_and_partition(
    ds: &RawDataset,
    codec: &FeatureCodec,
    p: usize,
) -> Result<Vec<TrainingPartition>> {
    if p == 0 {
        return Err(Error::Config("worker count must be at least 1".into()));
    }
    if p > ds.n {
        return Err(Error::Config(format!(
            "cannot split {} rows across {} workers",
            ds.n, p
        )));
    }
    if ds.schema() != codec.schema() {
        return Err(Error::Config("dataset does not match the codec schema".into()));
    }
    let m = codec.m;
    let base = ds.n / p;
    let extra = ds.n % p;

    let mut parts = Vec::with_capacity(p);
    let mut offset = 0usize;
    let mut row_buf = vec![0.0; m];
    for rank in 0..p {
        let rows = base + usize::from(rank < extra);
        let mut y = Vec::with_capacity(rows * m);
        let mut d = Vec::with_capacity(rows);
        for local in 0..rows {
            let global = offset + local;
            codec.encode_dataset_row(ds, global, &mut row_buf);
            let sign = f64::from(ds.labels[global]);
            y.extend(row_buf.iter().map(|v| sign * v));
            d.push(sign);
        }
        parts.push(TrainingPartition::new(m, offset, y, d)?);
        offset += rows;
    }
    Ok(parts)
}
