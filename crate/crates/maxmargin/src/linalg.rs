//! Dense symmetric linear algebra for the coordinator's reduced system.
//!
//! The only matrix the coordinator ever factors is the m-by-m reduced system,
//! which is symmetric positive definite on every interior iterate (it carries
//! an explicit `+I` term, so its smallest eigenvalue is at least one). That
//! lets us get away with packed lower-triangle storage, an unpivoted Cholesky
//! factorization, and a single step of iterative refinement when the residual
//! check trips.

use crate::error::{Error, Result};

/// Symmetric matrix in packed row-major lower-triangle storage.
///
/// Entry `(i, j)` with `j <= i` lives at `i*(i+1)/2 + j`; the upper triangle
/// is implied. Constructors reject non-finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    order: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(order: usize) -> Self {
        SymMatrix {
            order,
            data: vec![0.0; packed_len(order)],
        }
    }

    pub fn identity(order: usize) -> Self {
        let mut m = Self::zeros(order);
        for i in 0..order {
            m.data[packed_idx(i, i)] = 1.0;
        }
        m
    }

    /// Reconstruct from packed lower-triangle storage (the wire layout).
    pub fn from_packed(order: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != packed_len(order) {
            return Err(Error::Dimension(format!(
                "packed length {} does not match order {}",
                data.len(),
                order
            )));
        }
        if !data.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("symmetric matrix"));
        }
        Ok(SymMatrix { order, data })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn packed(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        self.data[packed_idx(hi, lo)]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        self.data[packed_idx(hi, lo)] = value;
    }

    /// `self += weight * row * row^T`, lower triangle only.
    ///
    /// This is the building block for accumulating the weighted Gram matrix
    /// one observation at a time.
    pub fn syrk_accumulate(&mut self, row: &[f64], weight: f64) -> Result<()> {
        if row.len() != self.order {
            return Err(Error::Dimension(format!(
                "syrk row length {} vs order {}",
                row.len(),
                self.order
            )));
        }
        for i in 0..self.order {
            let wi = weight * row[i];
            let base = i * (i + 1) / 2;
            let dst = &mut self.data[base..base + i + 1];
            let src = &row[..i + 1];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += wi * s;
            }
        }
        Ok(())
    }

    /// `self -= (1/c) * u * u^T`.
    pub fn rank1_downdate(&mut self, u: &[f64], c: f64) -> Result<()> {
        if u.len() != self.order {
            return Err(Error::Dimension(format!(
                "downdate vector length {} vs order {}",
                u.len(),
                self.order
            )));
        }
        if c <= 0.0 {
            return Err(Error::Dimension(format!("downdate scale must be positive, got {c}")));
        }
        let inv = 1.0 / c;
        for i in 0..self.order {
            let ui = inv * u[i];
            let base = i * (i + 1) / 2;
            for j in 0..=i {
                self.data[base + j] -= ui * u[j];
            }
        }
        Ok(())
    }

    /// Element-wise sum, used when folding per-worker contributions.
    pub fn add_assign(&mut self, other: &SymMatrix) -> Result<()> {
        if other.order != self.order {
            return Err(Error::Dimension(format!(
                "sum of order {} and {}",
                self.order, other.order
            )));
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    pub fn add_identity(&mut self, scale: f64) {
        for i in 0..self.order {
            self.data[packed_idx(i, i)] += scale;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.order);
        let mut y = vec![0.0; self.order];
        for i in 0..self.order {
            let base = i * (i + 1) / 2;
            let mut acc = 0.0;
            for j in 0..i {
                let a = self.data[base + j];
                acc += a * x[j];
                y[j] += a * x[i];
            }
            y[i] += acc + self.data[base + i] * x[i];
        }
        y
    }

    /// Max absolute entry; serves as the matrix norm in residual checks.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |a, x| a.max(x.abs()))
    }

    /// Unpivoted Cholesky factorization `A = L L^T`.
    ///
    /// A non-positive pivot means the matrix left the positive-definite cone,
    /// which for the reduced system signals a broken interior iterate.
    pub fn cholesky(&self) -> Result<CholeskyFactor> {
        let n = self.order;
        let mut l = self.data.clone();
        for j in 0..n {
            let jj = packed_idx(j, j);
            let (head, tail) = l.split_at_mut(jj);
            let row_j = &head[j * (j + 1) / 2..];
            let mut diag = tail[0];
            diag -= dot(row_j, row_j);
            if diag <= 0.0 || !diag.is_finite() {
                return Err(Error::NotPositiveDefinite { col: j, pivot: diag });
            }
            let dsqrt = diag.sqrt();
            tail[0] = dsqrt;
            for i in j + 1..n {
                let base_i = i * (i + 1) / 2;
                let (rows, cell) = l.split_at_mut(base_i + j);
                let row_i = &rows[base_i..];
                let row_j = &rows[j * (j + 1) / 2..j * (j + 1) / 2 + j];
                cell[0] = (cell[0] - dot(row_i, row_j)) / dsqrt;
            }
        }
        Ok(CholeskyFactor { order: n, data: l })
    }
}

/// Lower-triangular Cholesky factor, reusable across multiple solves.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    order: usize,
    data: Vec<f64>,
}

impl CholeskyFactor {
    /// Solve `L L^T x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.order);
        let n = self.order;
        let mut x = b.to_vec();
        // forward: L y = b
        for i in 0..n {
            let base = i * (i + 1) / 2;
            let acc = dot(&self.data[base..base + i], &x[..i]);
            x[i] = (x[i] - acc) / self.data[base + i];
        }
        // backward: L^T z = y
        for i in (0..n).rev() {
            let base = i * (i + 1) / 2;
            x[i] /= self.data[base + i];
            let xi = x[i];
            for j in 0..i {
                x[j] -= self.data[base + j] * xi;
            }
        }
        x
    }
}

/// Factor and solve `A x = b`, with one step of iterative refinement when the
/// residual check `|Ax-b| <= 1e-10 (|A||x| + |b|)` fails.
pub fn cholesky_solve(a: &SymMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let factor = a.cholesky()?;
    Ok(solve_refined(a, &factor, b))
}

/// Solve using a precomputed factor, refining once if the residual is poor.
pub fn solve_refined(a: &SymMatrix, factor: &CholeskyFactor, b: &[f64]) -> Vec<f64> {
    let mut x = factor.solve(b);
    let r = residual(a, &x, b);
    let bound = 1e-10 * (a.max_abs() * inf_norm(&x) + inf_norm(b));
    if inf_norm(&r) > bound {
        let dx = factor.solve(&r);
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += di;
        }
    }
    x
}

fn residual(a: &SymMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    let ax = a.matvec(x);
    b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect()
}

fn packed_len(order: usize) -> usize {
    order * (order + 1) / 2
}

#[inline]
fn packed_idx(i: usize, j: usize) -> usize {
    debug_assert!(j <= i);
    i * (i + 1) / 2 + j
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `y += scale * x`
#[inline]
pub fn axpy(scale: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += scale * xi;
    }
}

#[inline]
pub fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn syrk_single_row() {
        let mut a = SymMatrix::zeros(2);
        a.syrk_accumulate(&[1.0, 0.0], 2.0).unwrap();
        assert_eq!(a.get(0, 0), 2.0);
        assert_eq!(a.get(1, 0), 0.0);
        assert_eq!(a.get(1, 1), 0.0);
    }

    #[test]
    fn syrk_zero_row_is_identity_op() {
        let mut a = SymMatrix::identity(3);
        a.syrk_accumulate(&[0.0, 0.0, 0.0], 7.5).unwrap();
        assert_eq!(a, SymMatrix::identity(3));
    }

    #[test]
    fn syrk_applied_twice() {
        // 2 * row row^T for row = [1, 1]
        let mut a = SymMatrix::zeros(2);
        a.syrk_accumulate(&[1.0, 1.0], 1.0).unwrap();
        a.syrk_accumulate(&[1.0, 1.0], 1.0).unwrap();
        assert_eq!(a.get(0, 0), 2.0);
        assert_eq!(a.get(1, 0), 2.0);
        assert_eq!(a.get(1, 1), 2.0);
    }

    #[test]
    fn syrk_dimension_mismatch() {
        let mut a = SymMatrix::zeros(2);
        assert!(a.syrk_accumulate(&[1.0], 1.0).is_err());
    }

    #[test]
    fn downdate_hand_case() {
        // 2I - (1/2) u u^T for u = (1, -1)
        let mut a = SymMatrix::zeros(2);
        a.add_identity(2.0);
        a.rank1_downdate(&[1.0, -1.0], 2.0).unwrap();
        assert_eq!(a.get(0, 0), 1.5);
        assert_eq!(a.get(1, 0), 0.5);
        assert_eq!(a.get(1, 1), 1.5);
    }

    #[test]
    fn downdate_zero_vector_is_noop() {
        let mut a = SymMatrix::identity(2);
        a.rank1_downdate(&[0.0, 0.0], 3.0).unwrap();
        assert_eq!(a, SymMatrix::identity(2));
    }

    #[test]
    fn downdate_to_singular() {
        let mut a = SymMatrix::identity(2);
        a.rank1_downdate(&[1.0, 0.0], 1.0).unwrap();
        assert_eq!(a.get(0, 0), 0.0);
        assert_eq!(a.get(1, 1), 1.0);
    }

    #[test]
    fn downdate_then_restore() {
        let mut a = SymMatrix::zeros(3);
        for (i, row) in [[1.0, 2.0, -1.0], [0.5, 0.1, 3.0], [2.0, 2.0, 2.0]]
            .iter()
            .enumerate()
        {
            a.syrk_accumulate(row, 1.0 + i as f64).unwrap();
        }
        a.add_identity(1.0);
        let orig = a.clone();
        let u = [0.3, -1.7, 2.2];
        a.rank1_downdate(&u, 1.7).unwrap();
        // add back (1/c) u u^T
        let mut uu = SymMatrix::zeros(3);
        uu.syrk_accumulate(&u, 1.0 / 1.7).unwrap();
        a.add_assign(&uu).unwrap();
        for i in 0..3 {
            for j in 0..=i {
                assert_close(a.get(i, j), orig.get(i, j), 1e-13 * orig.max_abs());
            }
        }
    }

    #[test]
    fn cholesky_diagonal_system() {
        let mut a = SymMatrix::zeros(2);
        a.set(0, 0, 4.0);
        a.set(1, 1, 9.0);
        let x = cholesky_solve(&a, &[8.0, 27.0]).unwrap();
        assert_eq!(x, vec![2.0, 3.0]);
    }

    #[test]
    fn cholesky_identity() {
        let a = SymMatrix::identity(4);
        let b = [1.0, -2.0, 0.25, 9.0];
        let x = cholesky_solve(&a, &b).unwrap();
        assert_eq!(x, b.to_vec());
    }

    #[test]
    fn cholesky_hand_case() {
        let mut a = SymMatrix::zeros(2);
        a.set(0, 0, 1.5);
        a.set(1, 0, 0.5);
        a.set(1, 1, 1.5);
        let x = cholesky_solve(&a, &[2.0, 2.0]).unwrap();
        assert_close(x[0], 1.0, 1e-14);
        assert_close(x[1], 1.0, 1e-14);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let mut a = SymMatrix::zeros(2);
        a.set(0, 0, 1.0);
        a.set(1, 0, 2.0);
        a.set(1, 1, 1.0);
        match a.cholesky() {
            Err(Error::NotPositiveDefinite { col, .. }) => assert_eq!(col, 1),
            other => panic!("expected NotPositiveDefinite, got {other:?}"),
        }
    }

    #[test]
    fn matvec_matches_explicit() {
        let mut a = SymMatrix::zeros(3);
        a.set(0, 0, 2.0);
        a.set(1, 0, -1.0);
        a.set(1, 1, 3.0);
        a.set(2, 0, 0.5);
        a.set(2, 1, 1.0);
        a.set(2, 2, 4.0);
        let y = a.matvec(&[1.0, 2.0, 3.0]);
        assert_close(y[0], 2.0 - 2.0 + 1.5, 1e-15);
        assert_close(y[1], -1.0 + 6.0 + 3.0, 1e-15);
        assert_close(y[2], 0.5 + 2.0 + 12.0, 1e-15);
    }
}
