//! The bulk-synchronous training loop.
//!
//! Per Newton iteration each worker ships one reduction buffer, one
//! two-float complementarity split, eight max-reduced diagnostics, and one
//! step-length candidate: exactly `m(m+1)/2 + 3m + 16` floats upstream. The
//! coordinator answers with one `(dw, dbeta, sigma)` broadcast of `m + 2`
//! floats plus a fixed two-float control pack (the shared step length and
//! the next barrier target). The only message that scales with the row
//! count is the one-time support-vector report at the end.

use std::time::{Duration, Instant};

use super::coordinator::{
    advance_model, assemble, barrier_schedule, check_convergence, newton_solve, r_w_inf,
    CoordinatorState,
};
use super::worker::{
    apply_step, back_substitute, compute_residuals, extract_support_vectors, init_iterate,
    local_reduction, local_stats, max_step, WorkerReduction,
};
use crate::comm::Communicator;
use crate::data::TrainingPartition;
use crate::error::{Error, Result};
use crate::linalg::{axpy, inf_norm};

/// Broadcast channels used by the protocol.
pub const CH_DIRECTION: u8 = 1;
pub const CH_STEP_CONTROL: u8 = 2;
pub const CH_STOP: u8 = 3;

/// Stop flags carried by the `CH_STOP` broadcast.
const STOP_CONVERGED: f64 = 1.0;
const STOP_ITERATION_CAP: f64 = 0.0;
const STOP_ABORT: f64 = 2.0;

#[derive(Debug, Clone)]
pub struct TrainConfig {
    /// Soft-margin penalty.
    pub tau: f64,
    /// Relative feasibility tolerance.
    pub tol_feas: f64,
    /// Complementarity tolerance.
    pub tol_comp: f64,
    pub max_iterations: usize,
    /// Fraction-to-boundary factor.
    pub eta: f64,
    /// Barrier centering factor.
    pub centering: f64,
    /// Support vectors are rows with `v > sv_threshold * tau`.
    pub sv_threshold: f64,
    /// Threads per worker for the reduction kernel.
    pub threads: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            tau: 1.0,
            tol_feas: 1e-8,
            tol_comp: 1e-8,
            max_iterations: 200,
            eta: 0.995,
            centering: 0.1,
            sv_threshold: 1e-6,
            threads: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tau <= 0.0 {
            return Err(Error::Config(format!("--tau must be positive, got {}", self.tau)));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::Config(format!("--eta must lie in (0, 1), got {}", self.eta)));
        }
        if !(self.centering > 0.0 && self.centering < 1.0) {
            return Err(Error::Config(format!(
                "--centering must lie in (0, 1), got {}",
                self.centering
            )));
        }
        if self.tol_feas <= 0.0 || self.tol_comp <= 0.0 {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("--max-iter must be at least 1".into()));
        }
        Ok(())
    }

    /// Socket-mode registration ack: the coordinator is the single source of
    /// truth for solver parameters, so workers take them from the wire.
    pub fn to_ack_payload(&self, n: usize, m: usize) -> Vec<f64> {
        vec![
            self.tau,
            self.tol_feas,
            self.tol_comp,
            self.max_iterations as f64,
            self.eta,
            self.centering,
            self.sv_threshold,
            n as f64,
            m as f64,
        ]
    }

    pub fn from_ack_payload(payload: &[f64]) -> Result<(TrainConfig, usize, usize)> {
        if payload.len() != 9 {
            return Err(Error::Protocol(format!(
                "registration ack carries {} values, expected 9",
                payload.len()
            )));
        }
        let cfg = TrainConfig {
            tau: payload[0],
            tol_feas: payload[1],
            tol_comp: payload[2],
            max_iterations: payload[3] as usize,
            eta: payload[4],
            centering: payload[5],
            sv_threshold: payload[6],
            threads: 1,
        };
        Ok((cfg, payload[7] as usize, payload[8] as usize))
    }
}

/// Per-iteration record kept by the coordinator.
#[derive(Debug, Clone)]
pub struct IterationStats {
    pub iteration: usize,
    /// Complementarity measure at the iterate the step was computed from.
    pub mu: f64,
    /// Barrier target the residuals of this iteration were perturbed toward.
    pub mu_target: f64,
    pub alpha: f64,
    pub r_w_inf: f64,
    pub rho_beta_abs: f64,
    pub r_v_inf: f64,
    pub r_z_inf: f64,
    pub r_u_inf: f64,
    pub r_s_inf: f64,
    /// The two complementarity products `z'u` and `s'v`; each averages to
    /// `mu` on the central path.
    pub comp_zu: f64,
    pub comp_sv: f64,
    pub min_s: f64,
    pub min_u: f64,
    pub min_v: f64,
    pub min_z: f64,
    pub wall: Duration,
    /// Upstream payload bytes this iteration, per worker.
    pub bytes_up_per_worker: u64,
    /// The `(dw, dbeta, sigma)` broadcast payload, per worker.
    pub bytes_down_direction_per_worker: u64,
    /// Fixed step-control scalars (shared alpha, next barrier target).
    pub bytes_down_control_per_worker: u64,
}

/// Training diagnostics; the counters are cumulative and monotone.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub converged: bool,
    pub iterations: usize,
    pub final_mu: f64,
    pub final_r_w_inf: f64,
    pub final_rho_beta_abs: f64,
    pub final_r_v_inf: f64,
    pub final_r_z_inf: f64,
    pub support_vector_count: usize,
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub total_wall: Duration,
    pub total_bytes_up: u64,
    pub total_bytes_down: u64,
    pub iteration_stats: Vec<IterationStats>,
}

/// The trained hyperplane plus the support-vector report.
#[derive(Debug, Clone)]
pub struct TrainedParams {
    pub w: Vec<f64>,
    pub beta: f64,
    /// `(global row index, dual multiplier)` pairs, ascending by index.
    pub support_vectors: Vec<(usize, f64)>,
}

/// Worker side of the loop. Mirrors the coordinator phase for phase; any
/// local failure is reported upstream as an abort frame before returning.
pub fn run_worker(
    comm: &mut dyn Communicator,
    part: &TrainingPartition,
    cfg: &TrainConfig,
) -> Result<()> {
    let mut run = || -> Result<()> {
        let mut it = init_iterate(part, cfg.tau)?;
        let mut w = vec![0.0; part.m];
        let mut beta = 0.0;
        let mut mu_target = barrier_schedule(cfg.tau / 2.0, cfg.centering);

        loop {
            compute_residuals(&mut it, part, &w, beta, cfg.tau, mu_target)?;
            let stats = local_stats(&it);
            let red = local_reduction(part, &it, cfg.threads);
            comm.all_reduce_sum(&red.to_buffer())?;
            comm.all_reduce_sum(&[stats.comp_zu, stats.comp_sv])?;
            for value in [
                stats.r_v_inf,
                stats.r_z_inf,
                stats.r_u_inf,
                stats.r_s_inf,
                -stats.min_s,
                -stats.min_u,
                -stats.min_v,
                -stats.min_z,
            ] {
                comm.all_reduce_max(value)?;
            }

            let (channel, payload) = comm.recv_broadcast()?;
            match channel {
                CH_STOP => {
                    let flag = payload.first().copied().unwrap_or(STOP_ABORT);
                    if flag == STOP_ABORT {
                        return Err(Error::Train("coordinator aborted the run".into()));
                    }
                    break;
                }
                CH_DIRECTION => {
                    if payload.len() != part.m + 2 {
                        return Err(Error::Protocol(format!(
                            "direction broadcast has {} floats, expected {}",
                            payload.len(),
                            part.m + 2
                        )));
                    }
                    let dw = &payload[..part.m];
                    let dbeta = payload[part.m];
                    let _sigma = payload[part.m + 1]; // diagnostics only
                    let dir = back_substitute(part, &it, dw, dbeta)?;
                    let candidate = max_step(&it, &dir, cfg.eta);
                    let alpha = comm.all_reduce_min(candidate)?;
                    let (ch, control) = comm.recv_broadcast()?;
                    if ch != CH_STEP_CONTROL || control.is_empty() {
                        return Err(Error::Protocol(format!("expected step control, got channel {ch}")));
                    }
                    mu_target = control[0];
                    apply_step(&mut it, &dir, alpha)?;
                    axpy(alpha, dw, &mut w);
                    beta += alpha * dbeta;
                }
                other => {
                    return Err(Error::Protocol(format!("unexpected broadcast channel {other}")))
                }
            }
        }

        let svs = extract_support_vectors(part, &it, cfg.tau, cfg.sv_threshold);
        let mut report = Vec::with_capacity(svs.len() * 2);
        for (idx, v) in svs {
            report.push(idx as f64);
            report.push(v);
        }
        comm.gather(&report)?;
        Ok(())
    };

    let result = run();
    if result.is_err() {
        comm.abort(1.0);
    }
    result
}

/// Coordinator side of the loop.
pub fn run_coordinator(
    comm: &mut dyn Communicator,
    n: usize,
    m: usize,
    cfg: &TrainConfig,
) -> Result<(TrainedParams, SolveReport)> {
    let mut run = || -> Result<(TrainedParams, SolveReport)> {
        let p = comm.workers();
        let start = Instant::now();
        let mut state = CoordinatorState::new(m, cfg.tau);
        let mut mu_target = barrier_schedule(cfg.tau / 2.0, cfg.centering);
        let mut stats_log: Vec<IterationStats> = Vec::new();
        let red_len = WorkerReduction::buffer_len(m);

        // (converged, r_w_inf, |rho_beta|, r_v_inf, r_z_inf) at the stopping iterate
        let (converged, final_norms) = loop {
            let iter_start = Instant::now();
            let up_before = comm.bytes_received();
            let red_buf = comm
                .all_reduce_sum(&vec![0.0; red_len])?
                .expect("coordinator receives the sum");
            let total = WorkerReduction::from_buffer(m, &red_buf)?;
            if total.n_local != n {
                return Err(Error::Protocol(format!(
                    "workers reported {} rows, expected {n}",
                    total.n_local
                )));
            }
            let comps = comm
                .all_reduce_sum(&[0.0, 0.0])?
                .expect("coordinator receives the sum");
            let mut maxes = [0.0f64; 8];
            for slot in maxes.iter_mut() {
                *slot = comm
                    .all_reduce_max(f64::NEG_INFINITY)?
                    .expect("coordinator receives the max");
            }
            let [r_v_inf, r_z_inf, r_u_inf, r_s_inf, neg_s, neg_u, neg_v, neg_z] = maxes;

            state.mu = total.comp_gap / (2.0 * n as f64);
            assemble(&mut state, &total)?;
            let rw = r_w_inf(&state);
            let rho_abs = state.rho_beta.abs();

            let done = check_convergence(
                rw,
                rho_abs,
                r_v_inf,
                r_z_inf,
                state.mu,
                inf_norm(&state.w),
                state.beta,
                cfg.tau,
                cfg.tol_feas,
                cfg.tol_comp,
            );
            if done {
                break (true, [rw, rho_abs, r_v_inf, r_z_inf]);
            }
            if state.iteration >= cfg.max_iterations {
                break (false, [rw, rho_abs, r_v_inf, r_z_inf]);
            }

            let (dw, dbeta) = newton_solve(&state)?;

            let down_before = comm.bytes_sent();
            let mut direction = Vec::with_capacity(m + 2);
            direction.extend_from_slice(&dw);
            direction.push(dbeta);
            direction.push(state.sigma);
            comm.broadcast(CH_DIRECTION, &direction)?;
            let down_direction = comm.bytes_sent() - down_before;

            let control_down_before = comm.bytes_sent();
            // the coordinator's own candidate caps the step at a full Newton step
            let alpha = comm.all_reduce_min(1.0)?;
            let residual_target = mu_target;
            mu_target = barrier_schedule(state.mu, cfg.centering);
            comm.broadcast(CH_STEP_CONTROL, &[mu_target])?;
            let down_control = comm.bytes_sent() - control_down_before;
            let up_total = comm.bytes_received() - up_before;

            stats_log.push(IterationStats {
                iteration: state.iteration,
                mu: state.mu,
                mu_target: residual_target,
                alpha,
                r_w_inf: rw,
                rho_beta_abs: rho_abs,
                r_v_inf,
                r_z_inf,
                r_u_inf,
                r_s_inf,
                comp_zu: comps[0],
                comp_sv: comps[1],
                min_s: -neg_s,
                min_u: -neg_u,
                min_v: -neg_v,
                min_z: -neg_z,
                wall: iter_start.elapsed(),
                bytes_up_per_worker: up_total / p as u64,
                bytes_down_direction_per_worker: down_direction / p as u64,
                bytes_down_control_per_worker: down_control / p as u64,
            });

            advance_model(&mut state, &dw, dbeta, alpha);
        };

        let flag = if converged { STOP_CONVERGED } else { STOP_ITERATION_CAP };
        comm.broadcast(CH_STOP, &[flag])?;
        let reports = comm.gather(&[])?.expect("coordinator gathers");
        let mut support_vectors: Vec<(usize, f64)> = Vec::new();
        for report in reports {
            for pair in report.chunks_exact(2) {
                support_vectors.push((pair[0] as usize, pair[1]));
            }
        }

        // final residual norms are the ones measured at the stopping iterate
        let report = SolveReport {
            converged,
            iterations: state.iteration,
            final_mu: state.mu,
            final_r_w_inf: final_norms[0],
            final_rho_beta_abs: final_norms[1],
            final_r_v_inf: final_norms[2],
            final_r_z_inf: final_norms[3],
            support_vector_count: support_vectors.len(),
            n,
            m,
            p,
            total_wall: start.elapsed(),
            total_bytes_up: comm.bytes_received(),
            total_bytes_down: comm.bytes_sent(),
            iteration_stats: stats_log,
        };

        Ok((
            TrainedParams {
                w: state.w.clone(),
                beta: state.beta,
                support_vectors,
            },
            report,
        ))
    };

    let result = run();
    if result.is_err() {
        comm.abort(2.0);
    }
    result
}

/// Train with `p` in-process workers on threads (SMP mode). Partitions must
/// agree on the feature count; the result is identical to the socket path
/// for the same partitioning.
pub fn train_in_process(
    partitions: &[TrainingPartition],
    cfg: &TrainConfig,
) -> Result<(TrainedParams, SolveReport)> {
    cfg.validate()?;
    let p = partitions.len();
    if p == 0 {
        return Err(Error::Config("at least one partition is required".into()));
    }
    let m = partitions[0].m;
    if !partitions.iter().all(|part| part.m == m) {
        return Err(Error::Config("partitions disagree on the feature count".into()));
    }
    let n: usize = partitions.iter().map(|part| part.n_rows).sum();

    let (mut coord, workers) = crate::comm::in_process_cluster(p);
    std::thread::scope(|scope| {
        let handles: Vec<_> = workers
            .into_iter()
            .zip(partitions)
            .map(|(mut endpoint, part)| {
                scope.spawn(move || run_worker(&mut endpoint, part, cfg))
            })
            .collect();

        let outcome = run_coordinator(&mut coord, n, m, cfg);
        let worker_results: Vec<Result<()>> = handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(Error::Internal("worker thread panicked".into())))
            })
            .collect();
        let outcome = outcome?;
        for r in worker_results {
            r?;
        }
        Ok(outcome)
    })
}
