//! The primal-dual interior-point solver, split along the paper's
//! master/worker boundary: `worker` owns everything sized by the local row
//! count, `coordinator` owns the m-sized reduced system, and `trainer` runs
//! the bulk-synchronous loop over a communicator.

pub mod coordinator;
pub mod trainer;
pub mod worker;

pub use coordinator::{assemble, barrier_schedule, check_convergence, newton_solve, CoordinatorState};
pub use trainer::{
    train_in_process, IterationStats, SolveReport, TrainConfig, TrainedParams,
};
pub use worker::{
    apply_step, back_substitute, compute_residuals, extract_support_vectors, init_iterate,
    local_reduction, local_stats, max_step, WorkerDirection, WorkerIterate, WorkerReduction,
    WorkerStats,
};
