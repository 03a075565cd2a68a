//! Robust smoothing, denoising, and inpainting of regularly sampled
//! m-dimensional grid data.
//!
//! Two spline families are provided, both solved spectrally through the
//! orthonormal DCT-II:
//!
//! - classical L2 splines (one transform round trip), with a fixed-point
//!   iteration for weighted/missing data, bisquare-IRLS robust reweighting,
//!   and generalized cross-validation for picking the smoothing weight;
//! - L1-fitted splines, solved by split-Bregman iteration that alternates
//!   one spectral L2 solve with one soft-thresholding step per outer
//!   iteration, with a masked variant that inpaints missing samples.
//!
//! The `oracle` module carries slow dense reference implementations used by
//! the test suites; the binary target exposes the batch CLI.

pub mod error;
pub mod io;
pub mod job;
pub mod l1;
pub mod l2;
pub mod oracle;
pub mod spectral;
pub mod synth;
pub mod tensor;
pub mod transform;

pub use error::{Error, Result};
pub use l1::{l1_spline, l1_spline_masked, shrink, SolveParams, SolveReport, StopReason};
pub use l2::{
    gcv_select_s, l2_spline, robust_l2_spline, weighted_l2_spline, GcvGrid, WeightedSolveParams,
};
pub use spectral::{
    apply_filter, eigenvalues_1d, gamma_from_lambda, gamma_tensor, lambda_tensor, SpectralFilter,
};
pub use tensor::{ingest_with_nan, relative_change, AxisLine, GridTensor, Mask};
pub use transform::{dct_1d, dct_nd, idct_1d, idct_nd, DctPlan, TensorDct};
