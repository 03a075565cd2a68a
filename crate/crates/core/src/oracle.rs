//! Slow reference implementations used to validate the fast paths: dense
//! difference operators, direct linear solves, an O(n²) cosine-sum DCT, a
//! proximal-gradient solver, and the first-order optimality residual of the
//! L1 fitting problem.
//!
//! Nothing here touches the spectral transform code; correctness rests on
//! plain dense linear algebra so the two routes stay independent.

use crate::error::{Error, Result};
use crate::tensor::GridTensor;
use nalgebra::{DMatrix, DVector};

/// Row-major dense matrix of reals.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    /// Matrix-vector product.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        let mut out = vec![0.0; self.rows];
        for r in 0..self.rows {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            out[r] = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
        out
    }

    fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }
}

/// Second-difference operator with repeating border samples, unit steps.
///
/// Symmetric tridiagonal: diagonal `(-1, -2, …, -2, -1)`, off-diagonals 1.
/// Every row sums to zero, so constants are annihilated.
pub fn dense_d(n: usize) -> Result<DenseMatrix> {
    if n < 2 {
        return Err(Error::InvalidParam(format!(
            "difference operator needs n >= 2, got {n}"
        )));
    }
    let mut d = DenseMatrix::zeros(n, n);
    for i in 0..n {
        let diag = if i == 0 || i == n - 1 { -1.0 } else { -2.0 };
        d.set(i, i, diag);
        if i > 0 {
            d.set(i, i - 1, 1.0);
        }
        if i + 1 < n {
            d.set(i, i + 1, 1.0);
        }
    }
    Ok(d)
}

/// Eigenvalues of a symmetric matrix, sorted descending.
pub fn symmetric_eigenvalues(m: &DenseMatrix) -> Vec<f64> {
    let eig = m.to_nalgebra().symmetric_eigen();
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
    vals
}

fn cholesky_solve(m: DMatrix<f64>, rhs: &[f64]) -> Result<Vec<f64>> {
    let chol = m
        .cholesky()
        .ok_or_else(|| Error::InvalidParam("system is not positive definite".into()))?;
    let x = chol.solve(&DVector::from_column_slice(rhs));
    Ok(x.iter().copied().collect())
}

/// Direct solve of `(I + s DᵀD) z = y`.
pub fn dense_l2_solve(y: &[f64], s: f64) -> Result<Vec<f64>> {
    if s < 0.0 {
        return Err(Error::InvalidParam(format!("s must be nonnegative, got {s}")));
    }
    let n = y.len();
    if n < 2 {
        return Ok(y.to_vec());
    }
    let d = dense_d(n)?.to_nalgebra();
    let m = DMatrix::identity(n, n) + (d.transpose() * &d).scale(s);
    cholesky_solve(m, y)
}

/// Direct solve of the weighted normal equations `(W + s DᵀD) z = W y`.
///
/// The system is positive definite whenever `s > 0` and at least one weight
/// is positive (the only null vector of `DᵀD` is the constant, which `W`
/// does not annihilate). With `s = 0` and a partial mask it is singular —
/// the masked entries are unconstrained — so that combination is rejected.
pub fn dense_weighted_solve(y: &[f64], w: &[f64], s: f64) -> Result<Vec<f64>> {
    let n = y.len();
    assert_eq!(w.len(), n);
    if s <= 0.0 && w.iter().any(|&wi| wi <= 0.0) {
        return Err(Error::InvalidParam(
            "weighted solve needs s > 0 when some weights are zero".into(),
        ));
    }
    let d = dense_d(n)?.to_nalgebra();
    let mut m = (d.transpose() * &d).scale(s);
    for i in 0..n {
        m[(i, i)] += w[i];
    }
    let rhs: Vec<f64> = y.iter().zip(w).map(|(yi, wi)| yi * wi).collect();
    cholesky_solve(m, &rhs)
}

/// Kronecker-sum operator `L = D₁⊗I + I⊗D₂` for a row-major `n1 × n2` grid.
///
/// Its spectrum is the sum of the per-axis spectra, which is exactly the
/// additive multi-axis eigenvalue tensor the spectral path uses.
pub fn kronecker_sum_2d(n1: usize, n2: usize) -> Result<DenseMatrix> {
    let d1 = dense_d(n1)?;
    let d2 = dense_d(n2)?;
    let n = n1 * n2;
    let mut l = DenseMatrix::zeros(n, n);
    for i in 0..n1 {
        for j in 0..n2 {
            let r = i * n2 + j;
            for k in 0..n1 {
                let v = d1.get(i, k);
                if v != 0.0 {
                    l.data[r * n + (k * n2 + j)] += v;
                }
            }
            for l2 in 0..n2 {
                let v = d2.get(j, l2);
                if v != 0.0 {
                    l.data[r * n + (i * n2 + l2)] += v;
                }
            }
        }
    }
    Ok(l)
}

/// Direct solve of `(I + s LᵀL) z = y` on an `n1 × n2` grid, `L` the
/// Kronecker-sum operator.
pub fn dense_l2_solve_2d(y: &[f64], n1: usize, n2: usize, s: f64) -> Result<Vec<f64>> {
    assert_eq!(y.len(), n1 * n2);
    let l = kronecker_sum_2d(n1, n2)?.to_nalgebra();
    let n = n1 * n2;
    let m = DMatrix::identity(n, n) + (l.transpose() * &l).scale(s);
    cholesky_solve(m, y)
}

/// O(n²) orthonormal DCT-II by direct cosine summation.
pub fn naive_dct(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut out = vec![0.0; n];
    let nf = n as f64;
    for (k, o) in out.iter_mut().enumerate() {
        let scale = if k == 0 { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() };
        let mut acc = 0.0;
        for (j, &x) in v.iter().enumerate() {
            acc += x * (std::f64::consts::PI * k as f64 * (2 * j + 1) as f64 / (2.0 * nf)).cos();
        }
        *o = scale * acc;
    }
    out
}

/// O(n²) orthonormal inverse DCT-II (i.e. DCT-III) by direct summation.
pub fn naive_idct(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut out = vec![0.0; n];
    let nf = n as f64;
    for (j, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (k, &x) in v.iter().enumerate() {
            let scale = if k == 0 { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() };
            acc += scale
                * x
                * (std::f64::consts::PI * k as f64 * (2 * j + 1) as f64 / (2.0 * nf)).cos();
        }
        *o = acc;
    }
    out
}

fn curvature_gradient(y_shape: &[usize], z: &[f64], s: f64) -> Result<Vec<f64>> {
    // g = 2s Aᵀ A z with A the dense difference operator of the shape.
    match y_shape.len() {
        1 => {
            let d = dense_d(y_shape[0])?;
            let dz = d.matvec(z);
            let ddz = d.matvec(&dz); // D symmetric
            Ok(ddz.iter().map(|v| 2.0 * s * v).collect())
        }
        2 => {
            let l = kronecker_sum_2d(y_shape[0], y_shape[1])?;
            let lz = l.matvec(z);
            let llz = l.matvec(&lz);
            Ok(llz.iter().map(|v| 2.0 * s * v).collect())
        }
        m => Err(Error::InvalidParam(format!(
            "optimality residual supports 1-D and 2-D shapes, got {m}-D"
        ))),
    }
}

/// Equality tolerance for deciding that a coordinate sits on the kink
/// `z_i = y_i`. Exact float equality is measure-zero, but the shrink dead
/// zone does land coordinates exactly on the data, so both branches occur.
pub const KINK_TOL: f64 = 1e-9;

/// First-order optimality residual of `‖z − y‖₁ + s‖Dz‖₂²` at `z`.
///
/// With `g = 2s DᵀD z`, a global minimizer satisfies `g_i = -sign(z_i - y_i)`
/// off the kinks and `|g_i| ≤ 1` on them; the returned value is the largest
/// violation of either condition, and is zero exactly at a minimizer.
pub fn l1_optimality_residual(y: &GridTensor, z: &GridTensor, s: f64) -> Result<f64> {
    y.check_same_shape(z)?;
    let g = curvature_gradient(y.shape(), z.data(), s)?;
    let mut worst: f64 = 0.0;
    for ((&zi, &yi), &gi) in z.data().iter().zip(y.data()).zip(&g) {
        let r = zi - yi;
        let v = if r.abs() <= KINK_TOL {
            (gi.abs() - 1.0).max(0.0)
        } else {
            (gi + r.signum()).abs()
        };
        worst = worst.max(v);
    }
    Ok(worst)
}

/// Objective value `F(z) = ‖z − y‖₁ + s‖Dz‖₂²` (dense operator).
pub fn l1_objective(y: &GridTensor, z: &GridTensor, s: f64) -> Result<f64> {
    y.check_same_shape(z)?;
    let fit: f64 = z.data().iter().zip(y.data()).map(|(a, b)| (a - b).abs()).sum();
    let smooth = match y.shape().len() {
        1 => {
            let d = dense_d(y.shape()[0])?;
            d.matvec(z.data()).iter().map(|v| v * v).sum::<f64>()
        }
        2 => {
            let l = kronecker_sum_2d(y.shape()[0], y.shape()[1])?;
            l.matvec(z.data()).iter().map(|v| v * v).sum::<f64>()
        }
        m => {
            return Err(Error::InvalidParam(format!(
                "objective supports 1-D and 2-D shapes, got {m}-D"
            )))
        }
    };
    Ok(fit + s * smooth)
}

fn soft_threshold(x: f64, gamma: f64) -> f64 {
    if x > gamma {
        x - gamma
    } else if x < -gamma {
        x + gamma
    } else {
        0.0
    }
}

/// Proximal-gradient (ISTA) reference solver for `‖z − y‖₁ + s‖Dz‖₂²`, 1-D.
///
/// Each iteration takes a gradient step on the smooth term and then the
/// proximal step of the L1 term, which pulls coordinates toward `y` with
/// threshold `step`. The step must satisfy `step < 1/(16 s)`; divergence is
/// detected by norm blow-up and reported.
pub fn prox_gradient_reference(y: &[f64], s: f64, step: f64, iters: usize) -> Result<Vec<f64>> {
    if s <= 0.0 || step <= 0.0 {
        return Err(Error::InvalidParam("s and step must be positive".into()));
    }
    if step >= 1.0 / (16.0 * s) {
        return Err(Error::InvalidParam(format!(
            "step {step} too large for stability; need step < 1/(16 s) = {}",
            1.0 / (16.0 * s)
        )));
    }
    let n = y.len();
    let d = dense_d(n)?;
    let blow_up = 1e12 * (1.0 + y.iter().map(|v| v * v).sum::<f64>().sqrt());
    let mut z = y.to_vec();
    for _ in 0..iters {
        let dz = d.matvec(&z);
        let g = d.matvec(&dz);
        let mut next = vec![0.0; n];
        for i in 0..n {
            let w = z[i] - step * 2.0 * s * g[i];
            next[i] = y[i] + soft_threshold(w - y[i], step);
        }
        z = next;
        let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !norm.is_finite() || norm > blow_up {
            return Err(Error::Diverged("proximal-gradient iterate blew up".into()));
        }
    }
    Ok(z)
}
