//! Distributed linear support-vector-machine training and scoring.
//!
//! The solver is a primal-dual interior-point method arranged so that every
//! quantity sized like the observation count lives on the worker that owns
//! that slice of the data. Workers ship only an m-by-m reduction package per
//! Newton iteration; the coordinator assembles and factors the reduced
//! m-by-m system, broadcasts the step, and workers back-substitute their own
//! blocks. Communication per iteration is therefore independent of the
//! number of observations.
//!
//! Two execution modes share one code path: an in-process mode that runs
//! workers on threads, and a socket mode that runs them as separate
//! processes connected over TCP. Reductions fold in fixed rank order, so a
//! given data split trains to bit-identical models on both transports.
//!
//! See the `examples/` directory for runnable entry points covering
//! training, scoring, socket clusters, and the scaling benchmark.

pub mod cli;
pub mod comm;
pub mod data;
pub mod error;
pub mod ipm;
pub mod linalg;
pub mod model;
pub mod synth;

pub use error::{Error, Result};

use data::{encode_and_partition, fit_codec, RawDataset};
use ipm::{train_in_process, SolveReport, TrainConfig};
use model::{ModelDiagnostics, SvmModel};

/// Fit the feature codec on `ds`, split it across `p` in-process workers,
/// train, and package the result as a persistable model.
///
/// `label_col` records where the label sits in dense inputs so scoring can
/// drop it; sparse datasets use 0 (the leading token).
pub fn train_dataset(
    ds: &RawDataset,
    label_col: usize,
    p: usize,
    cfg: &TrainConfig,
) -> Result<(SvmModel, SolveReport)> {
    if !ds.labels.contains(&1) || !ds.labels.contains(&-1) {
        return Err(Error::Config(
            "training data must contain both classes".into(),
        ));
    }
    let codec = fit_codec(ds)?;
    let partitions = encode_and_partition(ds, &codec, p)?;
    let (params, report) = train_in_process(&partitions, cfg)?;
    let model = SvmModel {
        w: params.w,
        beta: params.beta,
        tau: cfg.tau,
        codec,
        class_map: ds.class_map.clone(),
        label_col,
        diagnostics: ModelDiagnostics {
            iterations: report.iterations,
            final_mu: report.final_mu,
            support_vector_count: report.support_vector_count,
            converged: report.converged,
        },
    };
    Ok((model, report))
}
