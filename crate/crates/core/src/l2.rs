//! L2 smoothing splines: the direct spectral solve, the fixed-point
//! iteration for weighted/missing data, bisquare-IRLS robust reweighting,
//! and generalized cross-validation for choosing the smoothing weight.

use crate::error::{Error, Result};
use crate::l1::{SolveReport, StopReason};
use crate::spectral::{apply_filter_in_place, gamma_from_lambda, lambda_tensor, SpectralFilter};
use crate::tensor::{relative_change, GridTensor, Mask};
use crate::transform::TensorDct;

/// Tuning constant of the bisquare weight function.
pub const BISQUARE_C: f64 = 4.685;
/// Consistency factor turning a median absolute deviation into a normal
/// scale estimate.
pub const MAD_SCALE: f64 = 1.4826;
/// Default number of IRLS rounds for robust smoothing.
pub const DEFAULT_IRLS_ROUNDS: usize = 3;

/// Parameters of the weighted fixed-point iteration.
#[derive(Debug, Clone)]
pub struct WeightedSolveParams {
    /// Smoothing weight, `s ≥ 0`.
    pub s: f64,
    /// Relative-change stopping threshold.
    pub tol: f64,
    /// Iteration cap.
    pub max_iter: usize,
    /// Starting iterate; zero-fill when absent.
    pub warm_start: Option<GridTensor>,
}

impl WeightedSolveParams {
    pub fn new(s: f64) -> Self {
        Self {
            s,
            tol: 1e-6,
            max_iter: 1000,
            warm_start: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.s >= 0.0) {
            return Err(Error::InvalidParam(format!("s must be nonnegative, got {}", self.s)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParam(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParam("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// One spectral smoothing operator: a transform worker plus a gain tensor.
/// Build once, apply many times.
pub(crate) struct FilteredSolver {
    dct: TensorDct,
    filter: SpectralFilter,
}

impl FilteredSolver {
    pub(crate) fn new(shape: &[usize], s: f64) -> Result<Self> {
        let lambda = lambda_tensor(shape)?;
        Self::from_parts(TensorDct::new(shape)?, &lambda, s)
    }

    pub(crate) fn from_parts(dct: TensorDct, lambda: &GridTensor, s: f64) -> Result<Self> {
        let filter = gamma_from_lambda(lambda, s)?;
        Ok(Self { dct, filter })
    }

    pub(crate) fn filter(&self) -> &SpectralFilter {
        &self.filter
    }

    /// `idct(Γ ∘ dct(y))`. With `s = 0` the gains are identically one and
    /// the operator is the identity, so the round trip is skipped.
    pub(crate) fn smooth(&mut self, y: &GridTensor) -> Result<GridTensor> {
        if self.filter.smoothing() == 0.0 {
            return Ok(y.clone());
        }
        let mut t = y.clone();
        self.dct.forward_in_place(&mut t)?;
        apply_filter_in_place(&self.filter, &mut t)?;
        self.dct.inverse_in_place(&mut t)?;
        Ok(t)
    }

    pub(crate) fn into_dct(self) -> TensorDct {
        self.dct
    }
}

fn check_finite(y: &GridTensor) -> Result<()> {
    if !y.all_finite() {
        return Err(Error::NonFinite);
    }
    Ok(())
}

/// L2 smoothing spline: `ŷ = idct(Γ ∘ dct(y))`, the minimizer of
/// `‖z − y‖₂² + s‖Dz‖₂²`.
pub fn l2_spline(y: &GridTensor, s: f64) -> Result<GridTensor> {
    check_finite(y)?;
    FilteredSolver::new(y.shape(), s)?.smooth(y)
}

/// Fixed-point iteration for real-valued weights in [0, 1]:
/// `ŷ ← idct(Γ ∘ dct(w ⊙ y + (1 − w) ⊙ ŷ))`.
///
/// The fixed point solves the weighted normal equations
/// `(W + s DᵀD) ŷ = W y`; binary weights make it the missing-data smoother,
/// anything in (0, 1] is the general weighted fit.
pub(crate) fn weighted_fixed_point(
    y: &GridTensor,
    weights: &[f64],
    solver: &mut FilteredSolver,
    tol: f64,
    max_iter: usize,
    warm_start: Option<&GridTensor>,
) -> Result<(GridTensor, SolveReport)> {
    debug_assert_eq!(weights.len(), y.len());
    let mut z = match warm_start {
        Some(w) => {
            y.check_same_shape(w)?;
            w.clone()
        }
        None => GridTensor::zeros(y.shape().to_vec())?,
    };
    let mut blend = GridTensor::zeros(y.shape().to_vec())?;
    let mut trace = Vec::new();
    for _ in 0..max_iter {
        for ((out, (&yi, &zi)), &wi) in blend
            .data_mut()
            .iter_mut()
            .zip(y.data().iter().zip(z.data()))
            .zip(weights)
        {
            *out = wi * yi + (1.0 - wi) * zi;
        }
        let next = solver.smooth(&blend)?;
        let change = relative_change(&next, &z)?;
        trace.push(change);
        z = next;
        if change < tol {
            let iterations = trace.len();
            return Ok((
                z,
                SolveReport {
                    iterations,
                    converged: true,
                    trace,
                    stop_reason: StopReason::Tolerance,
                },
            ));
        }
    }
    let iterations = trace.len();
    Ok((
        z,
        SolveReport {
            iterations,
            converged: false,
            trace,
            stop_reason: StopReason::IterationCap,
        },
    ))
}

/// Weighted/missing-data L2 spline. Masked samples take no part in the fit
/// and come back filled by the smoothness term.
pub fn weighted_l2_spline(
    y: &GridTensor,
    mask: &Mask,
    params: &WeightedSolveParams,
) -> Result<(GridTensor, SolveReport)> {
    check_finite(y)?;
    params.validate()?;
    mask.check_matches(y)?;
    let mut solver = FilteredSolver::new(y.shape(), params.s)?;
    weighted_fixed_point(
        y,
        &mask.to_weights(),
        &mut solver,
        params.tol,
        params.max_iter,
        params.warm_start.as_ref(),
    )
}

fn median_inplace(v: &mut [f64]) -> f64 {
    let n = v.len();
    if n == 0 {
        return 0.0;
    }
    let mid = n / 2;
    v.select_nth_unstable_by(mid, |a, b| a.partial_cmp(b).unwrap());
    let hi = v[mid];
    if n % 2 == 1 {
        hi
    } else {
        let lo = v[..mid].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lo + hi)
    }
}

/// Bisquare weight of a studentized residual.
fn bisquare(u: f64) -> f64 {
    let r = (u / BISQUARE_C).abs();
    if r < 1.0 {
        let v = 1.0 - r * r;
        v * v
    } else {
        0.0
    }
}

/// Robust scale of residuals over observed points: `1.4826 · MAD`, floored
/// to keep exact fits (all-zero residuals) from zeroing every weight.
fn robust_scale(residuals: &[f64]) -> f64 {
    let mut r = residuals.to_vec();
    let med = median_inplace(&mut r);
    let mut dev: Vec<f64> = residuals.iter().map(|v| (v - med).abs()).collect();
    let mad = median_inplace(&mut dev);
    let floor = f64::EPSILON * (1.0 + residuals.iter().fold(0.0f64, |a, &v| a.max(v.abs())));
    (MAD_SCALE * mad).max(floor)
}

pub(crate) fn robust_irls(
    y: &GridTensor,
    base: Option<&Mask>,
    s: f64,
    irls_rounds: usize,
    tol: f64,
    max_iter: usize,
) -> Result<(GridTensor, GridTensor, SolveReport)> {
    check_finite(y)?;
    if irls_rounds == 0 {
        return Err(Error::InvalidParam("irls_rounds must be at least 1".into()));
    }
    if let Some(m) = base {
        m.check_matches(y)?;
    }
    let observed: Vec<bool> = match base {
        Some(m) => m.flags().to_vec(),
        None => vec![true; y.len()],
    };
    let mut solver = FilteredSolver::new(y.shape(), s)?;
    let mut weights: Vec<f64> = observed.iter().map(|&o| if o { 1.0 } else { 0.0 }).collect();
    let mut z = GridTensor::zeros(y.shape().to_vec())?;
    let mut report = SolveReport {
        iterations: 0,
        converged: true,
        trace: Vec::new(),
        stop_reason: StopReason::Tolerance,
    };
    for round in 0..irls_rounds {
        let warm = if round == 0 { None } else { Some(&z) };
        let (next, rep) = weighted_fixed_point(y, &weights, &mut solver, tol, max_iter, warm)?;
        z = next;
        report = rep;

        let residuals: Vec<f64> = y
            .data()
            .iter()
            .zip(z.data())
            .zip(&observed)
            .filter(|(_, &o)| o)
            .map(|((yi, zi), _)| yi - zi)
            .collect();
        let scale = robust_scale(&residuals);
        let mut ri = residuals.iter();
        for (w, &o) in weights.iter_mut().zip(&observed) {
            *w = if o { bisquare(ri.next().unwrap() / scale) } else { 0.0 };
        }
    }
    let weight_tensor = GridTensor::new(y.shape().to_vec(), weights)?;
    Ok((z, weight_tensor, report))
}

/// Robust L2 spline by bisquare IRLS: each round solves the weighted
/// problem and re-derives weights from MAD-studentized residuals, so gross
/// outliers end up with weights near zero.
///
/// Returns the last fit together with the final weights.
pub fn robust_l2_spline(
    y: &GridTensor,
    s: f64,
    irls_rounds: usize,
) -> Result<(GridTensor, GridTensor)> {
    let (z, w, _) = robust_irls(y, None, s, irls_rounds, 1e-6, 1000)?;
    Ok((z, w))
}

/// Log-spaced search grid for the smoothing weight.
#[derive(Debug, Clone, Copy)]
pub struct GcvGrid {
    pub log10_lo: f64,
    pub log10_hi: f64,
    pub points: usize,
}

impl Default for GcvGrid {
    fn default() -> Self {
        Self {
            log10_lo: -6.0,
            log10_hi: 6.0,
            points: 61,
        }
    }
}

impl GcvGrid {
    fn validate(&self) -> Result<()> {
        if self.points < 2 {
            return Err(Error::InvalidParam("GCV grid needs at least 2 points".into()));
        }
        if !(self.log10_lo < self.log10_hi) || !self.log10_lo.is_finite() || !self.log10_hi.is_finite()
        {
            return Err(Error::InvalidParam(format!(
                "degenerate GCV range [{}, {}]",
                self.log10_lo, self.log10_hi
            )));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let span = self.log10_hi - self.log10_lo;
        (0..self.points)
            .map(|i| 10f64.powf(self.log10_lo + span * i as f64 / (self.points - 1) as f64))
            .collect()
    }
}

struct GcvContext {
    dct: TensorDct,
    lambda: GridTensor,
}

impl GcvContext {
    fn new(shape: &[usize]) -> Result<Self> {
        Ok(Self {
            dct: TensorDct::new(shape)?,
            lambda: lambda_tensor(shape)?,
        })
    }

    /// GCV(s) = n · RSS / (n − tr H)², with tr H the sum of the spectral
    /// gains and RSS the weighted squared residual over observed points.
    /// Returns infinity when the denominator closes (tr H → n as s → 0).
    fn score(
        &mut self,
        y: &GridTensor,
        weights: &[f64],
        s: f64,
        warm: Option<&GridTensor>,
    ) -> Result<(f64, GridTensor)> {
        let dct = std::mem::replace(&mut self.dct, TensorDct::new(&[1])?);
        let mut solver = FilteredSolver::from_parts(dct, &self.lambda, s)?;
        let full = weights.iter().all(|&w| w == 1.0);
        let fit = if full {
            solver.smooth(y)?
        } else {
            weighted_fixed_point(y, weights, &mut solver, 1e-6, 1000, warm)?.0
        };
        let trace = solver.filter().trace();
        self.dct = solver.into_dct();

        let n = y.len() as f64;
        let rss: f64 = y
            .data()
            .iter()
            .zip(fit.data())
            .zip(weights)
            .map(|((yi, zi), wi)| wi * (yi - zi) * (yi - zi))
            .sum();
        let denom = n - trace;
        let score = if denom <= 0.0 {
            f64::INFINITY
        } else {
            n * rss / (denom * denom)
        };
        Ok((score, fit))
    }
}

/// GCV score of one (data, mask, s) triple. Exposed so the selection rule
/// stays independently checkable.
pub fn gcv_score(y: &GridTensor, mask: &Mask, s: f64) -> Result<f64> {
    check_finite(y)?;
    mask.check_matches(y)?;
    let mut ctx = GcvContext::new(y.shape())?;
    Ok(ctx.score(y, &mask.to_weights(), s, None)?.0)
}

fn argmin_gcv(
    ctx: &mut GcvContext,
    y: &GridTensor,
    weights: &[f64],
    grid: &GcvGrid,
) -> Result<f64> {
    let mut best_s = f64::NAN;
    let mut best = f64::INFINITY;
    let mut warm: Option<GridTensor> = None;
    for s in grid.values() {
        let (score, fit) = ctx.score(y, weights, s, warm.as_ref())?;
        // `<=` so ties fall toward larger s (ascending sweep).
        if score <= best {
            best = score;
            best_s = s;
        }
        warm = Some(fit);
    }
    if best_s.is_nan() {
        return Err(Error::InvalidParam("GCV found no finite score on the grid".into()));
    }
    Ok(best_s)
}

/// Picks the smoothing weight minimizing GCV over a log-spaced grid.
/// Ties break toward the larger (smoother) candidate.
pub fn gcv_select_s(y: &GridTensor, mask: &Mask, grid: &GcvGrid) -> Result<f64> {
    check_finite(y)?;
    mask.check_matches(y)?;
    grid.validate()?;
    let mut ctx = GcvContext::new(y.shape())?;
    argmin_gcv(&mut ctx, y, &mask.to_weights(), grid)
}

/// GCV selection against the robust (bisquare-IRLS) weighted fit: rounds of
/// {select s by GCV under the current weights, refit, reweight}. This is the
/// selection used by the batch front end, so the weight handed to every
/// method is the one that suits the robust L2 problem best.
pub fn gcv_select_s_robust(
    y: &GridTensor,
    mask: &Mask,
    grid: &GcvGrid,
    irls_rounds: usize,
) -> Result<f64> {
    check_finite(y)?;
    mask.check_matches(y)?;
    grid.validate()?;
    if irls_rounds == 0 {
        return Err(Error::InvalidParam("irls_rounds must be at least 1".into()));
    }
    let mut ctx = GcvContext::new(y.shape())?;
    let observed = mask.flags();
    let mut weights = mask.to_weights();
    let mut s_hat = f64::NAN;
    for _ in 0..irls_rounds {
        s_hat = argmin_gcv(&mut ctx, y, &weights, grid)?;
        let (_, fit) = ctx.score(y, &weights, s_hat, None)?;
        let residuals: Vec<f64> = y
            .data()
            .iter()
            .zip(fit.data())
            .zip(observed)
            .filter(|(_, &o)| o)
            .map(|((yi, zi), _)| yi - zi)
            .collect();
        let scale = robust_scale(&residuals);
        let mut ri = residuals.iter();
        for (w, &o) in weights.iter_mut().zip(observed) {
            *w = if o { bisquare(ri.next().unwrap() / scale) } else { 0.0 };
        }
    }
    Ok(s_hat)
}
