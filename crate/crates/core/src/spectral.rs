//! Eigenvalues of the second-difference operator and the per-frequency gain
//! tensor that turns spline solves into element-wise products in the DCT
//! domain.

use crate::error::{Error, Result};
use crate::tensor::GridTensor;
use std::f64::consts::PI;

/// Eigenvalues of the n-point second-difference operator, in frequency
/// order: `λ_k = -2 + 2 cos(kπ/n)` for k = 0..n-1.
///
/// `λ_0` is exactly zero (constants are never penalized) and every value
/// lies in (-4, 0].
pub fn eigenvalues_1d(n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let nf = n as f64;
    Ok((0..n).map(|k| -2.0 + 2.0 * (k as f64 * PI / nf).cos()).collect())
}

/// Additive multi-axis eigenvalue tensor: the entry at `(i_1, …, i_m)` is the
/// sum over axes of the per-axis eigenvalues.
pub fn lambda_tensor(shape: &[usize]) -> Result<GridTensor> {
    if shape.is_empty() {
        return Err(Error::EmptyInput);
    }
    let per_axis: Vec<Vec<f64>> = shape
        .iter()
        .map(|&n| eigenvalues_1d(n))
        .collect::<Result<_>>()?;
    let total: usize = shape.iter().product();
    let mut data = vec![0.0; total];
    let mut idx = vec![0usize; shape.len()];
    for slot in data.iter_mut() {
        *slot = idx.iter().zip(&per_axis).map(|(&i, ev)| ev[i]).sum();
        // row-major increment
        for axis in (0..shape.len()).rev() {
            idx[axis] += 1;
            if idx[axis] < shape[axis] {
                break;
            }
            idx[axis] = 0;
        }
    }
    GridTensor::new(shape.to_vec(), data)
}

/// Per-frequency gains `1 / (1 + s λ²)` for a grid shape and smoothing
/// weight `s`.
#[derive(Debug, Clone)]
pub struct SpectralFilter {
    gamma: GridTensor,
    s: f64,
}

impl SpectralFilter {
    pub fn shape(&self) -> &[usize] {
        self.gamma.shape()
    }

    pub fn gains(&self) -> &GridTensor {
        &self.gamma
    }

    pub fn smoothing(&self) -> f64 {
        self.s
    }

    /// Sum of all gains; the trace of the smoothing hat matrix, since the
    /// transform basis is unitary.
    pub fn trace(&self) -> f64 {
        self.gamma.data().iter().sum()
    }
}

/// Builds the gain tensor for shape and smoothing weight `s ≥ 0`.
pub fn gamma_tensor(shape: &[usize], s: f64) -> Result<SpectralFilter> {
    gamma_from_lambda(&lambda_tensor(shape)?, s)
}

/// Builds gains from an already-materialized eigenvalue tensor, so sweeps
/// over `s` (parameter selection, split-Bregman reweighting) pay for the
/// eigenvalues once.
pub fn gamma_from_lambda(lambda: &GridTensor, s: f64) -> Result<SpectralFilter> {
    if !(s >= 0.0) {
        return Err(Error::InvalidParam(format!(
            "smoothing weight must be nonnegative, got {s}"
        )));
    }
    let gamma = lambda.map(|l| 1.0 / (1.0 + s * l * l));
    Ok(SpectralFilter { gamma, s })
}

/// Element-wise product of the gains with a spectrum.
pub fn apply_filter(filter: &SpectralFilter, spectrum: &GridTensor) -> Result<GridTensor> {
    filter.gamma.check_same_shape(spectrum)?;
    let data = filter
        .gamma
        .data()
        .iter()
        .zip(spectrum.data())
        .map(|(g, x)| g * x)
        .collect();
    GridTensor::new(spectrum.shape().to_vec(), data)
}

/// Multiplies the gains into a spectrum in place.
pub fn apply_filter_in_place(filter: &SpectralFilter, spectrum: &mut GridTensor) -> Result<()> {
    filter.gamma.check_same_shape(spectrum)?;
    for (x, g) in spectrum.data_mut().iter_mut().zip(filter.gamma.data()) {
        *x *= g;
    }
    Ok(())
}
