//! Orthonormal DCT-II and its inverse, one-dimensional and separable
//! m-dimensional.
//!
//! The transform runs as a single complex FFT of the even/odd-permuted
//! sequence followed by a twiddle, so any length is O(n log n), including
//! primes. The m-dimensional transform applies the 1-D transform along every
//! axis in turn over stride descriptors, in place.
//!
//! Normalization is orthonormal: the first coefficient carries √(1/n), the
//! rest √(2/n), making the transform norm-preserving and exactly the unitary
//! basis that diagonalizes the second-difference operator.

use crate::error::{Error, Result};
use crate::tensor::{AxisLine, GridTensor};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

/// Precomputed tables for repeated forward/inverse transforms of one length.
///
/// Immutable after construction and shareable across threads; per-call state
/// lives in [`DctScratch`].
pub struct DctPlan {
    n: usize,
    fft_fwd: Arc<dyn Fft<f64>>,
    fft_inv: Arc<dyn Fft<f64>>,
    /// e^(-iπk/(2n)) for k in 0..n.
    twiddle: Vec<Complex<f64>>,
    scale_dc: f64,
    scale_ac: f64,
    /// Forward scales divided by n, for the unnormalized inverse FFT.
    unscale_dc: f64,
    unscale_ac: f64,
}

/// Reusable per-worker buffers for [`DctPlan`] calls.
#[derive(Default)]
pub struct DctScratch {
    buf: Vec<Complex<f64>>,
    fft: Vec<Complex<f64>>,
}

impl DctPlan {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        let mut planner = FftPlanner::new();
        let fft_fwd = planner.plan_fft_forward(n);
        let fft_inv = planner.plan_fft_inverse(n);
        let nf = n as f64;
        let twiddle = (0..n)
            .map(|k| Complex::from_polar(1.0, -PI * k as f64 / (2.0 * nf)))
            .collect();
        Ok(Self {
            n,
            fft_fwd,
            fft_inv,
            twiddle,
            scale_dc: (1.0 / nf).sqrt(),
            scale_ac: (2.0 / nf).sqrt(),
            unscale_dc: 1.0 / nf.sqrt(),
            unscale_ac: 1.0 / (2.0 * nf).sqrt(),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn prepare_scratch(&self, scratch: &mut DctScratch) {
        scratch.buf.resize(self.n, Complex::default());
        let need = self
            .fft_fwd
            .get_inplace_scratch_len()
            .max(self.fft_inv.get_inplace_scratch_len());
        scratch.fft.resize(need, Complex::default());
    }

    /// In-place orthonormal DCT-II of one strided line.
    pub fn forward_line(&self, data: &mut [f64], line: AxisLine, scratch: &mut DctScratch) {
        debug_assert_eq!(line.len, self.n);
        let n = self.n;
        self.prepare_scratch(scratch);
        let buf = &mut scratch.buf;

        // Even-index entries ascending, odd-index entries descending.
        for k in 0..n.div_ceil(2) {
            buf[k] = Complex::new(data[line.index(2 * k)], 0.0);
        }
        for k in 0..n / 2 {
            buf[n - 1 - k] = Complex::new(data[line.index(2 * k + 1)], 0.0);
        }

        self.fft_fwd.process_with_scratch(buf, &mut scratch.fft);

        data[line.index(0)] = self.scale_dc * buf[0].re;
        for k in 1..n {
            let w = self.twiddle[k] * buf[k];
            data[line.index(k)] = self.scale_ac * w.re;
        }
    }

    /// In-place orthonormal inverse DCT-II of one strided line.
    pub fn inverse_line(&self, data: &mut [f64], line: AxisLine, scratch: &mut DctScratch) {
        debug_assert_eq!(line.len, self.n);
        let n = self.n;
        self.prepare_scratch(scratch);
        let buf = &mut scratch.buf;

        buf[0] = Complex::new(self.unscale_dc * data[line.index(0)], 0.0);
        for k in 1..n {
            let w = Complex::new(
                self.unscale_ac * data[line.index(k)],
                -self.unscale_ac * data[line.index(n - k)],
            );
            buf[k] = self.twiddle[k].conj() * w;
        }

        self.fft_inv.process_with_scratch(buf, &mut scratch.fft);

        for k in 0..n.div_ceil(2) {
            data[line.index(2 * k)] = buf[k].re;
        }
        for k in 0..n / 2 {
            data[line.index(2 * k + 1)] = buf[n - 1 - k].re;
        }
    }
}

/// Per-shape transform worker: one plan per distinct axis length plus the
/// scratch those plans share. Build once per solve, reuse across iterations.
pub struct TensorDct {
    shape: Vec<usize>,
    plans: Vec<Arc<DctPlan>>,
    scratch: DctScratch,
}

impl TensorDct {
    pub fn new(shape: &[usize]) -> Result<Self> {
        if shape.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut plans: Vec<Arc<DctPlan>> = Vec::with_capacity(shape.len());
        for &n in shape {
            let existing = plans.iter().find(|p| p.len() == n).cloned();
            plans.push(match existing {
                Some(p) => p,
                None => Arc::new(DctPlan::new(n)?),
            });
        }
        Ok(Self {
            shape: shape.to_vec(),
            plans,
            scratch: DctScratch::default(),
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    fn check(&self, t: &GridTensor) -> Result<()> {
        if t.shape() != self.shape.as_slice() {
            return Err(Error::ShapeMismatch {
                expected: self.shape.clone(),
                got: t.shape().to_vec(),
            });
        }
        Ok(())
    }

    /// Forward transform along one axis, in place.
    pub fn forward_axis(&mut self, t: &mut GridTensor, axis: usize) -> Result<()> {
        self.check(t)?;
        let plan = self.plans[axis].clone();
        for line in t.lines_along_axis(axis)? {
            plan.forward_line(t.data_mut(), line, &mut self.scratch);
        }
        Ok(())
    }

    /// Inverse transform along one axis, in place.
    pub fn inverse_axis(&mut self, t: &mut GridTensor, axis: usize) -> Result<()> {
        self.check(t)?;
        let plan = self.plans[axis].clone();
        for line in t.lines_along_axis(axis)? {
            plan.inverse_line(t.data_mut(), line, &mut self.scratch);
        }
        Ok(())
    }

    /// Separable forward transform over every axis, in place.
    pub fn forward_in_place(&mut self, t: &mut GridTensor) -> Result<()> {
        for axis in 0..self.shape.len() {
            self.forward_axis(t, axis)?;
        }
        Ok(())
    }

    /// Separable inverse transform over every axis, in place.
    pub fn inverse_in_place(&mut self, t: &mut GridTensor) -> Result<()> {
        for axis in 0..self.shape.len() {
            self.inverse_axis(t, axis)?;
        }
        Ok(())
    }

    pub fn forward(&mut self, t: &GridTensor) -> Result<GridTensor> {
        let mut out = t.clone();
        self.forward_in_place(&mut out)?;
        Ok(out)
    }

    pub fn inverse(&mut self, t: &GridTensor) -> Result<GridTensor> {
        let mut out = t.clone();
        self.inverse_in_place(&mut out)?;
        Ok(out)
    }
}

/// Orthonormal DCT-II of a vector.
pub fn dct_1d(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::EmptyInput);
    }
    let plan = DctPlan::new(v.len())?;
    let mut data = v.to_vec();
    let line = AxisLine { offset: 0, stride: 1, len: v.len() };
    plan.forward_line(&mut data, line, &mut DctScratch::default());
    Ok(data)
}

/// Orthonormal inverse DCT-II of a vector.
pub fn idct_1d(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::EmptyInput);
    }
    let plan = DctPlan::new(v.len())?;
    let mut data = v.to_vec();
    let line = AxisLine { offset: 0, stride: 1, len: v.len() };
    plan.inverse_line(&mut data, line, &mut DctScratch::default());
    Ok(data)
}

/// Separable m-dimensional DCT-II.
pub fn dct_nd(t: &GridTensor) -> Result<GridTensor> {
    TensorDct::new(t.shape())?.forward(t)
}

/// Separable m-dimensional inverse DCT-II.
pub fn idct_nd(t: &GridTensor) -> Result<GridTensor> {
    TensorDct::new(t.shape())?.inverse(t)
}
