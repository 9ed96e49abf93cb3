//! Worker-side state and kernels. Everything here is sized by the local row
//! count: the positive variables, their residuals, the reduction package
//! shipped to the coordinator, and the back-substitution of the local
//! direction blocks once the coordinator's step arrives.

use crate::data::TrainingPartition;
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, inf_norm, SymMatrix};

/// The per-worker interior variables and residuals.
///
/// `s` is the primal margin slack, `z` the soft-margin slack, `v` the dual
/// multiplier of the margin constraints, and `u = tau*e - v` its box
/// complement. All four stay strictly positive at every iterate. `omega`
/// holds the diagonal `z/u + s/v` produced by eliminating the slack blocks.
#[derive(Debug, Clone)]
pub struct WorkerIterate {
    pub s: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub z: Vec<f64>,
    pub omega: Vec<f64>,
    pub r_z: Vec<f64>,
    pub r_v: Vec<f64>,
    pub r_u: Vec<f64>,
    pub r_s: Vec<f64>,
    pub r_hat_z: Vec<f64>,
    pub r_hat_v: Vec<f64>,
    pub r_omega: Vec<f64>,
}

/// Local direction blocks recovered after the coordinator broadcast.
#[derive(Debug, Clone)]
pub struct WorkerDirection {
    pub dv: Vec<f64>,
    pub du: Vec<f64>,
    pub ds: Vec<f64>,
    pub dz: Vec<f64>,
}

/// The fixed-size package a worker contributes to the all-reduce. Its
/// serialized size is `m(m+1)/2 + 3m + 4` floats plus one count, independent
/// of the local row count.
#[derive(Debug, Clone)]
pub struct WorkerReduction {
    /// `Y_i^T W_i Y_i` where `W_i = Omega_i^{-1}`.
    pub ytwy: SymMatrix,
    /// `Y_i^T W_i d_i`
    pub ytwd: Vec<f64>,
    /// `Y_i^T W_i r_omega_i`
    pub ytwr: Vec<f64>,
    /// `Y_i^T v_i`
    pub ytv: Vec<f64>,
    /// `d_i^T W_i d_i`
    pub dtwd: f64,
    /// `d_i^T W_i r_omega_i`
    pub dtwr: f64,
    /// `d_i^T v_i`
    pub dtv: f64,
    /// `z_i^T u_i + s_i^T v_i`
    pub comp_gap: f64,
    pub n_local: usize,
}

/// Residual norms and interior diagnostics reported alongside the reduction.
#[derive(Debug, Clone, Copy)]
pub struct WorkerStats {
    pub r_v_inf: f64,
    pub r_z_inf: f64,
    pub r_u_inf: f64,
    pub r_s_inf: f64,
    pub comp_zu: f64,
    pub comp_sv: f64,
    pub min_s: f64,
    pub min_u: f64,
    pub min_v: f64,
    pub min_z: f64,
}

/// Start well inside the cone: `v = u = tau/2` keeps `u + v = tau e` exact,
/// `s = z = 1` is scale-free in the row count. Residuals are evaluated at
/// `w = 0`, `beta = 0` with no barrier perturbation.
pub fn init_iterate(part: &TrainingPartition, tau: f64) -> Result<WorkerIterate> {
    if tau <= 0.0 {
        return Err(Error::Config(format!("penalty must be positive, got {tau}")));
    }
    let n = part.n_rows;
    let half = tau / 2.0;
    let mut it = WorkerIterate {
        s: vec![1.0; n],
        u: vec![half; n],
        v: vec![half; n],
        z: vec![1.0; n],
        omega: vec![0.0; n],
        r_z: vec![0.0; n],
        r_v: vec![0.0; n],
        r_u: vec![0.0; n],
        r_s: vec![0.0; n],
        r_hat_z: vec![0.0; n],
        r_hat_v: vec![0.0; n],
        r_omega: vec![0.0; n],
    };
    compute_residuals(&mut it, part, &vec![0.0; part.m], 0.0, tau, 0.0)?;
    Ok(it)
}

/// Refresh `omega` and all residuals at the current `(w, beta)`. The
/// complementarity residuals are perturbed toward `mu_target` so the Newton
/// step follows the central path instead of crashing into the boundary.
pub fn compute_residuals(
    it: &mut WorkerIterate,
    part: &TrainingPartition,
    w: &[f64],
    beta: f64,
    tau: f64,
    mu_target: f64,
) -> Result<()> {
    debug_assert_eq!(w.len(), part.m);
    let mut all_finite = true;
    for j in 0..part.n_rows {
        let (s, u, v, z) = (it.s[j], it.u[j], it.v[j], it.z[j]);
        let zu = z / u;
        it.omega[j] = zu + s / v;
        it.r_z[j] = tau - v - u;
        it.r_v[j] = dot(part.row(j), w) - beta * part.label(j) - 1.0 + z - s;
        it.r_u[j] = z * u - mu_target;
        it.r_s[j] = s * v - mu_target;
        it.r_hat_z[j] = it.r_z[j] + it.r_u[j] / z;
        it.r_hat_v[j] = it.r_v[j] + it.r_s[j] / v;
        it.r_omega[j] = it.r_hat_v[j] - zu * it.r_hat_z[j];
        all_finite &= it.omega[j].is_finite() && it.r_omega[j].is_finite();
    }
    if !all_finite {
        return Err(Error::NonFinite("worker residuals"));
    }
    Ok(())
}

/// Norms and interior diagnostics for the stats pack.
pub fn local_stats(it: &WorkerIterate) -> WorkerStats {
    let min_of = |x: &[f64]| x.iter().copied().fold(f64::INFINITY, f64::min);
    WorkerStats {
        r_v_inf: inf_norm(&it.r_v),
        r_z_inf: inf_norm(&it.r_z),
        r_u_inf: inf_norm(&it.r_u),
        r_s_inf: inf_norm(&it.r_s),
        comp_zu: dot(&it.z, &it.u),
        comp_sv: dot(&it.s, &it.v),
        min_s: min_of(&it.s),
        min_u: min_of(&it.u),
        min_v: min_of(&it.v),
        min_z: min_of(&it.z),
    }
}

impl WorkerReduction {
    pub fn zeros(m: usize) -> Self {
        WorkerReduction {
            ytwy: SymMatrix::zeros(m),
            ytwd: vec![0.0; m],
            ytwr: vec![0.0; m],
            ytv: vec![0.0; m],
            dtwd: 0.0,
            dtwr: 0.0,
            dtv: 0.0,
            comp_gap: 0.0,
            n_local: 0,
        }
    }

    /// Serialized length in 64-bit slots for feature count `m`.
    pub fn buffer_len(m: usize) -> usize {
        m * (m + 1) / 2 + 3 * m + 5
    }

    pub fn to_buffer(&self) -> Vec<f64> {
        let m = self.ytwd.len();
        let mut buf = Vec::with_capacity(Self::buffer_len(m));
        buf.extend_from_slice(self.ytwy.packed());
        buf.extend_from_slice(&self.ytwd);
        buf.extend_from_slice(&self.ytwr);
        buf.extend_from_slice(&self.ytv);
        buf.push(self.dtwd);
        buf.push(self.dtwr);
        buf.push(self.dtv);
        buf.push(self.comp_gap);
        buf.push(self.n_local as f64);
        buf
    }

    pub fn from_buffer(m: usize, buf: &[f64]) -> Result<Self> {
        if buf.len() != Self::buffer_len(m) {
            return Err(Error::Dimension(format!(
                "reduction buffer has {} slots, expected {}",
                buf.len(),
                Self::buffer_len(m)
            )));
        }
        let l = m * (m + 1) / 2;
        let ytwy = SymMatrix::from_packed(m, buf[..l].to_vec())?;
        let ytwd = buf[l..l + m].to_vec();
        let ytwr = buf[l + m..l + 2 * m].to_vec();
        let ytv = buf[l + 2 * m..l + 3 * m].to_vec();
        let tail = &buf[l + 3 * m..];
        Ok(WorkerReduction {
            ytwy,
            ytwd,
            ytwr,
            ytv,
            dtwd: tail[0],
            dtwr: tail[1],
            dtv: tail[2],
            comp_gap: tail[3],
            n_local: tail[4] as usize,
        })
    }
}

fn reduce_range(part: &TrainingPartition, it: &WorkerIterate, lo: usize, hi: usize) -> WorkerReduction {
    let m = part.m;
    let mut red = WorkerReduction::zeros(m);
    for j in lo..hi {
        let row = part.row(j);
        let weight = 1.0 / it.omega[j];
        red.ytwy
            .syrk_accumulate(row, weight)
            .expect("partition row length matches reduction order");
        let d = part.label(j);
        axpy(weight * d, row, &mut red.ytwd);
        axpy(weight * it.r_omega[j], row, &mut red.ytwr);
        axpy(it.v[j], row, &mut red.ytv);
        // d_j^2 = 1, so the d^T W d increment is just the weight
        red.dtwd += weight;
        red.dtwr += weight * d * it.r_omega[j];
        red.dtv += d * it.v[j];
        red.comp_gap += it.z[j] * it.u[j] + it.s[j] * it.v[j];
    }
    red.n_local = hi - lo;
    red
}

/// Compute the local reduction, optionally splitting the row range across
/// `threads` scoped threads. Partials fold in fixed chunk order so a given
/// thread count always produces the same bits.
pub fn local_reduction(part: &TrainingPartition, it: &WorkerIterate, threads: usize) -> WorkerReduction {
    let t = threads.max(1).min(part.n_rows.max(1));
    if t <= 1 {
        return reduce_range(part, it, 0, part.n_rows);
    }
    let base = part.n_rows / t;
    let extra = part.n_rows % t;
    let partials: Vec<WorkerReduction> = std::thread::scope(|scope| {
        let mut handles = Vec::with_capacity(t);
        let mut start = 0usize;
        for k in 0..t {
            let len = base + usize::from(k < extra);
            let (lo, hi) = (start, start + len);
            start = hi;
            handles.push(scope.spawn(move || reduce_range(part, it, lo, hi)));
        }
        handles
            .into_iter()
            .map(|h| h.join().expect("reduction thread"))
            .collect()
    });
    let mut total = WorkerReduction::zeros(part.m);
    for p in partials {
        total
            .ytwy
            .add_assign(&p.ytwy)
            .expect("partials share one order");
        axpy(1.0, &p.ytwd, &mut total.ytwd);
        axpy(1.0, &p.ytwr, &mut total.ytwr);
        axpy(1.0, &p.ytv, &mut total.ytv);
        total.dtwd += p.dtwd;
        total.dtwr += p.dtwr;
        total.dtv += p.dtv;
        total.comp_gap += p.comp_gap;
        total.n_local += p.n_local;
    }
    total
}

/// Recover the local direction blocks from the broadcast `(dw, dbeta)`:
/// first the dual block through the diagonal solve, then the slack blocks in
/// a fixed order so every run is deterministic.
pub fn back_substitute(
    part: &TrainingPartition,
    it: &WorkerIterate,
    dw: &[f64],
    dbeta: f64,
) -> Result<WorkerDirection> {
    if dw.len() != part.m {
        return Err(Error::Dimension(format!(
            "direction has {} entries, partition expects {}",
            dw.len(),
            part.m
        )));
    }
    let n = part.n_rows;
    let mut dir = WorkerDirection {
        dv: vec![0.0; n],
        du: vec![0.0; n],
        ds: vec![0.0; n],
        dz: vec![0.0; n],
    };
    let mut all_finite = true;
    for j in 0..n {
        let ydw = dot(part.row(j), dw);
        let dv = (-it.r_omega[j] + part.label(j) * dbeta - ydw) / it.omega[j];
        let dz = it.z[j] / it.u[j] * (dv - it.r_hat_z[j]);
        let du = it.r_z[j] - dv;
        let ds = -(it.r_s[j] + it.s[j] * dv) / it.v[j];
        dir.dv[j] = dv;
        dir.dz[j] = dz;
        dir.du[j] = du;
        dir.ds[j] = ds;
        all_finite &= dv.is_finite() && dz.is_finite() && du.is_finite() && ds.is_finite();
    }
    if !all_finite {
        return Err(Error::NonFinite("worker direction"));
    }
    Ok(dir)
}

/// Fraction-to-boundary rule: the largest step that keeps every positive
/// variable at least `(1 - eta)` of its distance from zero, capped at one.
pub fn max_step(it: &WorkerIterate, dir: &WorkerDirection, eta: f64) -> f64 {
    debug_assert!(eta > 0.0 && eta < 1.0);
    let mut limit = f64::INFINITY;
    let blocks = [
        (&it.s, &dir.ds),
        (&it.u, &dir.du),
        (&it.v, &dir.dv),
        (&it.z, &dir.dz),
    ];
    for (x, dx) in blocks {
        for (xi, di) in x.iter().zip(dx.iter()) {
            if *di < 0.0 {
                limit = limit.min(-xi / di);
            }
        }
    }
    (eta * limit).min(1.0)
}

/// Advance all four positive blocks by `alpha` along the direction. The step
/// length must come from the shared fraction-to-boundary reduction; losing
/// positivity here is a step-control bug, not a data problem.
pub fn apply_step(it: &mut WorkerIterate, dir: &WorkerDirection, alpha: f64) -> Result<()> {
    axpy(alpha, &dir.ds, &mut it.s);
    axpy(alpha, &dir.du, &mut it.u);
    axpy(alpha, &dir.dv, &mut it.v);
    axpy(alpha, &dir.dz, &mut it.z);
    let positive = it
        .s
        .iter()
        .chain(&it.u)
        .chain(&it.v)
        .chain(&it.z)
        .all(|x| *x > 0.0);
    if !positive {
        return Err(Error::Internal(format!(
            "step length {alpha} produced a non-interior iterate"
        )));
    }
    Ok(())
}

/// Rows whose dual multiplier is bounded away from zero, reported with
/// global row indices. This is the one message whose size scales with the
/// local row count, and it is sent exactly once at the end of training.
pub fn extract_support_vectors(
    part: &TrainingPartition,
    it: &WorkerIterate,
    tau: f64,
    threshold: f64,
) -> Vec<(usize, f64)> {
    let cut = threshold * tau;
    (0..part.n_rows)
        .filter(|&j| it.v[j] > cut)
        .map(|j| (part.global_offset + j, it.v[j]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::TrainingPartition;

    fn part_from(m: usize, rows: Vec<f64>, labels: Vec<f64>) -> TrainingPartition {
        TrainingPartition::new(m, 0, rows, labels).unwrap()
    }

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn init_point_is_centered() {
        let part = part_from(1, vec![0.5], vec![1.0]);
        let it = init_iterate(&part, 2.0).unwrap();
        assert_eq!(it.v, vec![1.0]);
        assert_eq!(it.u, vec![1.0]);
        assert_eq!(it.s, vec![1.0]);
        assert_eq!(it.z, vec![1.0]);
        assert_eq!(it.omega, vec![2.0]);
        // u + v = tau e exactly
        assert_eq!(it.r_z, vec![0.0]);
    }

    #[test]
    fn init_margin_residual() {
        // zero row, d = +1, w = 0, beta = 0: r_v = -e + z - s = -1
        let part = part_from(1, vec![0.0], vec![1.0]);
        let it = init_iterate(&part, 2.0).unwrap();
        assert_eq!(it.r_v, vec![-1.0]);
    }

    #[test]
    fn perturbed_complementarity_residuals() {
        let part = part_from(1, vec![0.0], vec![1.0]);
        let mut it = init_iterate(&part, 2.0).unwrap();
        it.s = vec![1.0];
        it.u = vec![1.0];
        it.v = vec![1.0];
        it.z = vec![1.0];
        compute_residuals(&mut it, &part, &[0.0], 0.0, 2.0, 1.0).unwrap();
        assert_eq!(it.r_u, vec![0.0]);
        assert_eq!(it.r_s, vec![0.0]);
        compute_residuals(&mut it, &part, &[0.0], 0.0, 2.0, 0.0).unwrap();
        assert_eq!(it.r_u, vec![1.0]);
        assert_eq!(it.r_s, vec![1.0]);
    }

    #[test]
    fn eliminated_residual_at_solved_point() {
        // with all base residuals zero the eliminated residual vanishes too
        let part = part_from(1, vec![0.0], vec![1.0]);
        let mut it = init_iterate(&part, 2.0).unwrap();
        it.v = vec![1.0];
        it.u = vec![1.0];
        it.z = vec![2.0];
        it.s = vec![1.0];
        it.r_u = vec![0.0];
        it.r_z = vec![0.0];
        it.r_v = vec![0.0];
        it.r_s = vec![0.0];
        it.r_hat_z = vec![0.0];
        it.r_hat_v = vec![0.0];
        let r_omega = it.r_hat_v[0] - it.z[0] / it.u[0] * it.r_hat_z[0];
        assert_eq!(r_omega, 0.0);
    }

    #[test]
    fn reduction_identity_case() {
        // Y = I2, omega = 1, d = (1, -1), v = (1, 1)
        let part = part_from(2, vec![1.0, 0.0, 0.0, -1.0], vec![1.0, -1.0]);
        let mut it = init_iterate(&part, 2.0).unwrap();
        it.omega = vec![1.0, 1.0];
        it.v = vec![1.0, 1.0];
        it.r_omega = vec![0.0, 0.0];
        let red = local_reduction(&part, &it, 1);
        // rows of Y are (1,0) and (0,-1): Y^T Y = I
        assert_eq!(red.ytwy.get(0, 0), 1.0);
        assert_eq!(red.ytwy.get(1, 1), 1.0);
        assert_eq!(red.ytwy.get(1, 0), 0.0);
        // Y^T d = (1, 1)... with label-signed rows Y already contains d, so
        // Y^T W d = sum_j w_j d_j y_j = (1*1*(1,0)) + (1*-1*(0,-1)) = (1, 1)
        assert_eq!(red.ytwd, vec![1.0, 1.0]);
        assert_eq!(red.dtwd, 2.0);
        assert_eq!(red.dtv, 0.0);
    }

    #[test]
    fn reduction_zero_rows() {
        let part = part_from(2, vec![0.0; 4], vec![1.0, -1.0]);
        let it = init_iterate(&part, 2.0).unwrap();
        let red = local_reduction(&part, &it, 1);
        assert_eq!(red.ytwy, SymMatrix::zeros(2));
        assert_eq!(red.ytwd, vec![0.0, 0.0]);
        assert_eq!(red.ytv, vec![0.0, 0.0]);
    }

    #[test]
    fn reduction_comp_gap_at_ones() {
        let part = part_from(1, vec![0.0, 0.0], vec![1.0, -1.0]);
        let mut it = init_iterate(&part, 2.0).unwrap();
        it.s = vec![1.0; 2];
        it.u = vec![1.0; 2];
        it.v = vec![1.0; 2];
        it.z = vec![1.0; 2];
        compute_residuals(&mut it, &part, &[0.0], 0.0, 2.0, 0.0).unwrap();
        let red = local_reduction(&part, &it, 1);
        assert_eq!(red.comp_gap, 4.0);
        assert_eq!(red.n_local, 2);
    }

    #[test]
    fn threaded_reduction_matches_serial() {
        let m = 3;
        let n = 17;
        let rows: Vec<f64> = (0..n * m).map(|i| ((i * 37 % 11) as f64 - 5.0) / 3.0).collect();
        let labels: Vec<f64> = (0..n).map(|i| if i % 3 == 0 { -1.0 } else { 1.0 }).collect();
        let part = part_from(m, rows, labels);
        let mut it = init_iterate(&part, 1.0).unwrap();
        compute_residuals(&mut it, &part, &[0.1, -0.2, 0.3], 0.05, 1.0, 0.01).unwrap();
        let serial = local_reduction(&part, &it, 1);
        let threaded = local_reduction(&part, &it, 4);
        for i in 0..m {
            for j in 0..=i {
                assert_close(threaded.ytwy.get(i, j), serial.ytwy.get(i, j), 1e-12);
            }
        }
        assert_close(threaded.dtwd, serial.dtwd, 1e-12);
        assert_eq!(threaded.n_local, serial.n_local);
    }

    #[test]
    fn buffer_roundtrip_and_size() {
        let m = 4;
        let mut red = WorkerReduction::zeros(m);
        red.ytwy.syrk_accumulate(&[1.0, 2.0, 3.0, 4.0], 0.5).unwrap();
        red.ytwd = vec![1.0, -1.0, 0.5, 0.25];
        red.dtwd = 3.5;
        red.n_local = 9;
        let buf = red.to_buffer();
        assert_eq!(buf.len(), WorkerReduction::buffer_len(m));
        assert_eq!(buf.len(), m * (m + 1) / 2 + 3 * m + 5);
        let back = WorkerReduction::from_buffer(m, &buf).unwrap();
        assert_eq!(back.ytwd, red.ytwd);
        assert_eq!(back.n_local, 9);
    }

    #[test]
    fn back_substitution_hand_cases() {
        let part = part_from(1, vec![0.0], vec![1.0]);
        let mut it = init_iterate(&part, 2.0).unwrap();
        it.omega = vec![1.0];
        it.r_omega = vec![1.0];
        // dv = (-1 + 1*2 - 0) / 1 = 1
        let dir = back_substitute(&part, &it, &[0.0], 2.0).unwrap();
        assert_eq!(dir.dv, vec![1.0]);

        // dz = (z/u)(dv - r_hat_z) with z = u = 1, r_hat_z = 0, dv = 1
        it.z = vec![1.0];
        it.u = vec![1.0];
        it.r_hat_z = vec![0.0];
        let dir = back_substitute(&part, &it, &[0.0], 2.0).unwrap();
        assert_eq!(dir.dz, vec![1.0]);
    }

    #[test]
    fn back_substitution_fixed_point() {
        let part = part_from(1, vec![0.5], vec![1.0]);
        let mut it = init_iterate(&part, 2.0).unwrap();
        for r in [&mut it.r_z, &mut it.r_v, &mut it.r_u, &mut it.r_s] {
            r.fill(0.0);
        }
        it.r_hat_z = vec![0.0];
        it.r_hat_v = vec![0.0];
        it.r_omega = vec![0.0];
        let dir = back_substitute(&part, &it, &[0.0], 0.0).unwrap();
        assert_eq!(dir.dv, vec![0.0]);
        assert_eq!(dir.du, vec![0.0]);
        assert_eq!(dir.ds, vec![0.0]);
        assert_eq!(dir.dz, vec![0.0]);
    }

    #[test]
    fn step_rule_hand_cases() {
        let part = part_from(1, vec![0.0], vec![1.0]);
        let mut it = init_iterate(&part, 2.0).unwrap();
        it.s = vec![1.0];
        it.u = vec![1.0];
        it.v = vec![1.0];
        it.z = vec![1.0];
        let all_neg = WorkerDirection {
            dv: vec![-2.0],
            du: vec![-2.0],
            ds: vec![-2.0],
            dz: vec![-2.0],
        };
        assert_close(max_step(&it, &all_neg, 0.995), 0.4975, 1e-15);

        let all_pos = WorkerDirection {
            dv: vec![3.0],
            du: vec![0.0],
            ds: vec![1.0],
            dz: vec![2.0],
        };
        assert_eq!(max_step(&it, &all_pos, 0.995), 1.0);

        let single_blocker = WorkerDirection {
            dv: vec![-1.0],
            du: vec![1.0],
            ds: vec![1.0],
            dz: vec![1.0],
        };
        assert_close(max_step(&it, &single_blocker, 0.5), 0.5, 1e-15);
    }

    #[test]
    fn apply_step_cases() {
        let part = part_from(1, vec![0.0], vec![1.0]);
        let mut it = init_iterate(&part, 2.0).unwrap();
        it.v = vec![1.0];
        let dir = WorkerDirection {
            dv: vec![1.0],
            du: vec![0.0],
            ds: vec![0.0],
            dz: vec![0.0],
        };
        apply_step(&mut it, &dir, 0.5).unwrap();
        assert_eq!(it.v, vec![1.5]);

        let before = it.clone();
        apply_step(&mut it, &dir, 0.0).unwrap();
        assert_eq!(it.v, before.v);

        it.v = vec![1.0];
        let blocking = WorkerDirection {
            dv: vec![-2.0],
            du: vec![0.0],
            ds: vec![0.0],
            dz: vec![0.0],
        };
        apply_step(&mut it, &blocking, 0.4975).unwrap();
        assert_close(it.v[0], 0.005, 1e-12);
    }

    #[test]
    fn overlong_step_is_an_internal_error() {
        let part = part_from(1, vec![0.0], vec![1.0]);
        let mut it = init_iterate(&part, 2.0).unwrap();
        let dir = WorkerDirection {
            dv: vec![-10.0],
            du: vec![0.0],
            ds: vec![0.0],
            dz: vec![0.0],
        };
        assert!(apply_step(&mut it, &dir, 1.0).is_err());
    }

    #[test]
    fn support_vector_extraction() {
        let tau = 2.0;
        let part = part_from(1, vec![0.5, -0.5], vec![1.0, -1.0]);
        let mut it = init_iterate(&part, tau).unwrap();
        it.v = vec![0.9 * tau, 1e-12];
        let svs = extract_support_vectors(&part, &it, tau, 1e-6);
        assert_eq!(svs.len(), 1);
        assert_eq!(svs[0].0, 0);

        it.v = vec![1e-12, 1e-12];
        assert!(extract_support_vectors(&part, &it, tau, 1e-6).is_empty());
    }

    #[test]
    fn global_indices_respect_offset() {
        let part = TrainingPartition::new(1, 7, vec![0.5], vec![1.0]).unwrap();
        let it = init_iterate(&part, 2.0).unwrap();
        let svs = extract_support_vectors(&part, &it, 2.0, 1e-6);
        assert_eq!(svs[0].0, 7);
    }
}
