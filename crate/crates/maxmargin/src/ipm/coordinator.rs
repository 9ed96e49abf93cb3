//! Coordinator-side math: assemble the reduced m-by-m system from the summed
//! worker reductions, solve it for the step, schedule the barrier parameter,
//! and decide convergence. Nothing here is sized by the observation count.

use super::worker::WorkerReduction;
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, inf_norm, solve_refined, SymMatrix};

/// Everything the coordinator carries between iterations plus the assembled
/// reduced system of the current one.
#[derive(Debug, Clone)]
pub struct CoordinatorState {
    pub m: usize,
    pub tau: f64,
    pub w: Vec<f64>,
    pub beta: f64,
    /// Complementarity measure `(z'u + s'v) / 2n` at the current iterate.
    pub mu: f64,
    pub iteration: usize,
    /// Reduced system matrix `I + Y'WY - (1/sigma) (Y'Wd)(Y'Wd)'`.
    pub m_matrix: SymMatrix,
    pub r_hat_m: Vec<f64>,
    /// `d'Wd`, strictly positive on interior iterates.
    pub sigma: f64,
    pub rho_beta: f64,
    pub rho_hat_beta: f64,
    pub r_w: Vec<f64>,
    pub r_hat_w: Vec<f64>,
    /// `Y'Wd`, kept for the `dbeta` back-solve.
    pub ytwd: Vec<f64>,
}

impl CoordinatorState {
    pub fn new(m: usize, tau: f64) -> Self {
        CoordinatorState {
            m,
            tau,
            w: vec![0.0; m],
            beta: 0.0,
            mu: tau / 2.0,
            iteration: 0,
            m_matrix: SymMatrix::zeros(m),
            r_hat_m: vec![0.0; m],
            sigma: 0.0,
            rho_beta: 0.0,
            rho_hat_beta: 0.0,
            r_w: vec![0.0; m],
            r_hat_w: vec![0.0; m],
            ytwd: vec![0.0; m],
        }
    }
}

/// Build the reduced system from the rank-ordered sum of worker reductions.
///
/// The schur elimination of the bias row folds the rank-one term
/// `(1/sigma)(Y'Wd)(Y'Wd)'` out of the Gram block, and the eliminated
/// right-hand side picks up `+(1/sigma) (Y'Wd) rho_hat_beta`; substituting
/// the solved `dw` back into the bias row then recovers `dbeta`.
pub fn assemble(state: &mut CoordinatorState, total: &WorkerReduction) -> Result<()> {
    let m = state.m;
    if total.ytwd.len() != m {
        return Err(Error::Dimension(format!(
            "reduction is sized {} but coordinator expects {m}",
            total.ytwd.len()
        )));
    }
    let sigma = total.dtwd;
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::Train(format!(
            "sigma = {sigma} is not positive: the iterate left the interior"
        )));
    }

    state.sigma = sigma;
    state.rho_beta = total.dtv;
    state.rho_hat_beta = total.dtv - total.dtwr;
    state.ytwd.copy_from_slice(&total.ytwd);

    for i in 0..m {
        state.r_w[i] = state.w[i] - total.ytv[i];
        state.r_hat_w[i] = state.r_w[i] + total.ytwr[i];
        state.r_hat_m[i] = state.r_hat_w[i] + total.ytwd[i] / sigma * state.rho_hat_beta;
    }

    let mut m_matrix = total.ytwy.clone();
    m_matrix.add_identity(1.0);
    m_matrix.rank1_downdate(&total.ytwd, sigma)?;
    state.m_matrix = m_matrix;

    if !state.r_hat_m.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite("reduced right-hand side"));
    }
    Ok(())
}

/// Solve the reduced system for `(dw, dbeta)`. A Cholesky failure means the
/// iterate is no longer interior and the run must abort.
pub fn newton_solve(state: &CoordinatorState) -> Result<(Vec<f64>, f64)> {
    let factor = state.m_matrix.cholesky()?;
    let neg_rhs: Vec<f64> = state.r_hat_m.iter().map(|x| -x).collect();
    let dw = solve_refined(&state.m_matrix, &factor, &neg_rhs);
    let dbeta = (-state.rho_hat_beta + dot(&state.ytwd, &dw)) / state.sigma;
    if !dbeta.is_finite() || !dw.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite("newton direction"));
    }
    Ok((dw, dbeta))
}

/// Fixed-centering barrier schedule: aim each step at a fraction of the
/// current complementarity measure.
pub fn barrier_schedule(mu_current: f64, centering: f64) -> f64 {
    centering * mu_current
}

/// Scale-aware stopping rule: all primal/dual residuals small relative to
/// the iterate's magnitude, and the complementarity measure itself small.
#[allow(clippy::too_many_arguments)]
pub fn check_convergence(
    r_w_inf: f64,
    rho_beta_abs: f64,
    r_v_inf: f64,
    r_z_inf: f64,
    mu: f64,
    w_inf: f64,
    beta: f64,
    tau: f64,
    tol_feas: f64,
    tol_comp: f64,
) -> bool {
    let feas = r_w_inf.max(rho_beta_abs).max(r_v_inf).max(r_z_inf);
    let scale = 1.0 + w_inf + beta.abs() + tau;
    feas <= tol_feas * scale && mu <= tol_comp
}

/// Apply the accepted step on the coordinator's copy of the model.
pub fn advance_model(state: &mut CoordinatorState, dw: &[f64], dbeta: f64, alpha: f64) {
    axpy(alpha, dw, &mut state.w);
    state.beta += alpha * dbeta;
    state.iteration += 1;
}

/// Infinity norm of the coordinator residual `r_w = w - Y'v`.
pub fn r_w_inf(state: &CoordinatorState) -> f64 {
    inf_norm(&state.r_w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    /// Reduction for Y = I2, omega = I, d = (1, -1), v = r_omega = 0.
    fn identity_reduction() -> WorkerReduction {
        let mut red = WorkerReduction::zeros(2);
        red.ytwy.set(0, 0, 1.0);
        red.ytwy.set(1, 1, 1.0);
        red.ytwd = vec![1.0, -1.0];
        red.dtwd = 2.0;
        red.n_local = 2;
        red
    }

    #[test]
    fn assemble_hand_case() {
        let mut state = CoordinatorState::new(2, 1.0);
        let red = identity_reduction();
        assemble(&mut state, &red).unwrap();
        assert_eq!(state.sigma, 2.0);
        assert_close(state.m_matrix.get(0, 0), 1.5, 1e-15);
        assert_close(state.m_matrix.get(1, 0), 0.5, 1e-15);
        assert_close(state.m_matrix.get(1, 1), 1.5, 1e-15);
    }

    #[test]
    fn assemble_solved_fixed_point() {
        // all residual inputs zero, d'v = 0, w = Y'v
        let mut state = CoordinatorState::new(2, 1.0);
        state.w = vec![0.25, -0.5];
        let mut red = identity_reduction();
        red.ytv = vec![0.25, -0.5];
        red.dtv = 0.0;
        red.ytwr = vec![0.0, 0.0];
        red.dtwr = 0.0;
        assemble(&mut state, &red).unwrap();
        assert_eq!(state.r_hat_m, vec![0.0, 0.0]);
    }

    #[test]
    fn assemble_is_additive_over_workers() {
        // two workers each contributing Y_i'W_iY_i = I2 fold to 2I
        let mut a = identity_reduction().to_buffer();
        let b = identity_reduction().to_buffer();
        for (x, y) in a.iter_mut().zip(&b) {
            *x += y;
        }
        let total = WorkerReduction::from_buffer(2, &a).unwrap();
        assert_eq!(total.ytwy.get(0, 0), 2.0);
        assert_eq!(total.ytwy.get(1, 1), 2.0);
        assert_eq!(total.n_local, 4);
    }

    #[test]
    fn assemble_rejects_nonpositive_sigma() {
        let mut state = CoordinatorState::new(2, 1.0);
        let mut red = identity_reduction();
        red.dtwd = 0.0;
        assert!(assemble(&mut state, &red).is_err());
    }

    #[test]
    fn newton_solve_fixed_point() {
        let mut state = CoordinatorState::new(2, 1.0);
        state.m_matrix = SymMatrix::identity(2);
        state.r_hat_m = vec![0.0, 0.0];
        state.sigma = 1.0;
        state.rho_hat_beta = 0.0;
        state.ytwd = vec![0.0, 0.0];
        let (dw, dbeta) = newton_solve(&state).unwrap();
        assert_eq!(dw, vec![0.0, 0.0]);
        assert_eq!(dbeta, 0.0);
    }

    #[test]
    fn newton_solve_hand_case() {
        let mut state = CoordinatorState::new(2, 1.0);
        let mut m = SymMatrix::zeros(2);
        m.set(0, 0, 1.5);
        m.set(1, 0, 0.5);
        m.set(1, 1, 1.5);
        state.m_matrix = m;
        state.r_hat_m = vec![-2.0, -2.0];
        state.sigma = 2.0;
        state.ytwd = vec![1.0, -1.0];
        state.rho_hat_beta = 0.0;
        let (dw, dbeta) = newton_solve(&state).unwrap();
        assert_close(dw[0], 1.0, 1e-14);
        assert_close(dw[1], 1.0, 1e-14);
        // (Y'Wd)' dw = 0, so dbeta stays 0
        assert_close(dbeta, 0.0, 1e-14);
    }

    #[test]
    fn newton_solve_bias_only() {
        let mut state = CoordinatorState::new(1, 1.0);
        state.m_matrix = SymMatrix::identity(1);
        state.r_hat_m = vec![0.0];
        state.sigma = 2.0;
        state.rho_hat_beta = -2.0;
        state.ytwd = vec![0.0];
        let (_, dbeta) = newton_solve(&state).unwrap();
        assert_eq!(dbeta, 1.0);
    }

    #[test]
    fn barrier_schedule_cases() {
        assert_eq!(barrier_schedule(1.0, 0.1), 0.1);
        assert_eq!(barrier_schedule(0.0, 0.1), 0.0);
        let mut mu = 1.0;
        let mut last = mu;
        for _ in 0..3 {
            mu = barrier_schedule(mu, 0.1);
            assert!(mu < last);
            last = mu;
        }
        assert_close(mu, 1e-3, 1e-18);
    }

    #[test]
    fn convergence_cases() {
        // exact solution
        assert!(check_convergence(
            0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 1e-8, 1e-8
        ));
        // large gap blocks convergence
        assert!(!check_convergence(
            0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1e-8, 1e-8
        ));
        // residuals 1e-9 at unit scale pass under the defaults
        assert!(check_convergence(
            1e-9, 1e-9, 1e-9, 1e-9, 1e-9, 1.0, 0.0, 1.0, 1e-8, 1e-8
        ));
    }
}
