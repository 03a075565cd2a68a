//! Batch job orchestration behind the CLI: read grid and mask, pick the
//! smoothing weight, run the requested solver, write results and the
//! convergence trace.

use crate::error::{Error, Result};
use crate::io::{read_grid, read_mask, write_grid, GridFile};
use crate::l1::{l1_spline, l1_spline_masked, SolveParams, SolveReport, StopReason};
use crate::l2::{
    gcv_select_s_robust, l2_spline, robust_irls, weighted_l2_spline, GcvGrid, WeightedSolveParams,
    DEFAULT_IRLS_ROUNDS,
};
use crate::tensor::{GridTensor, Mask};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Process exit code: success with convergence.
pub const EXIT_OK: i32 = 0;
/// Process exit code: any error.
pub const EXIT_ERROR: i32 = 1;
/// Process exit code: the iteration cap stopped the solver; the result is
/// still written.
pub const EXIT_ITERATION_CAP: i32 = 2;

/// Which spline to fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    L1,
    L2,
    RobustL2,
}

impl Method {
    /// Name used in run summaries. The robust baseline is spelled out so
    /// nobody mistakes it for a more elaborate scheme.
    pub fn label(self) -> &'static str {
        match self {
            Method::L1 => "l1",
            Method::L2 => "l2",
            Method::RobustL2 => "robust-l2 (bisquare-IRLS)",
        }
    }
}

/// Smoothing weight: fixed, or selected by cross-validation against the
/// robust L2 fit.
#[derive(Debug, Clone, Copy)]
pub enum SmoothingChoice {
    Fixed(f64),
    Gcv(GcvGrid),
}

/// One batch job.
#[derive(Debug, Clone)]
pub struct JobConfig {
    pub method: Method,
    pub input: PathBuf,
    pub mask: Option<PathBuf>,
    /// Shape declaration for headerless multi-dimensional text input.
    pub shape: Option<Vec<usize>>,
    pub smoothing: SmoothingChoice,
    /// Split-Bregman penalty weight; defaults to `min(s, 1)`.
    pub lambda: Option<f64>,
    pub eps: f64,
    pub max_outer: usize,
    pub inner_iters: usize,
    pub irls_rounds: usize,
    pub output: PathBuf,
    pub trace: Option<PathBuf>,
}

impl JobConfig {
    pub fn new(method: Method, input: PathBuf, output: PathBuf, smoothing: SmoothingChoice) -> Self {
        Self {
            method,
            input,
            mask: None,
            shape: None,
            smoothing,
            lambda: None,
            eps: 1e-3,
            max_outer: 100,
            inner_iters: 1,
            irls_rounds: DEFAULT_IRLS_ROUNDS,
            output,
            trace: None,
        }
    }

    /// Parameter validation that runs before any input I/O.
    fn validate(&self) -> Result<()> {
        match self.smoothing {
            SmoothingChoice::Fixed(s) if !(s >= 0.0) => {
                return Err(Error::InvalidParam(format!("s must be nonnegative, got {s}")))
            }
            SmoothingChoice::Fixed(s) if self.method == Method::L1 && s == 0.0 => {
                return Err(Error::InvalidParam("the l1 method needs s > 0".into()))
            }
            _ => {}
        }
        if let Some(l) = self.lambda {
            if !(l > 0.0) {
                return Err(Error::InvalidParam(format!("lambda must be positive, got {l}")));
            }
            if self.method != Method::L1 {
                return Err(Error::InvalidParam("lambda applies only to the l1 method".into()));
            }
        }
        if !(self.eps > 0.0) {
            return Err(Error::InvalidParam(format!("eps must be positive, got {}", self.eps)));
        }
        if self.max_outer == 0 || self.inner_iters == 0 || self.irls_rounds == 0 {
            return Err(Error::InvalidParam(
                "max-outer, inner-iters, and irls-rounds must be at least 1".into(),
            ));
        }
        if let Some(shape) = &self.shape {
            if shape.is_empty() || shape.iter().any(|&n| n == 0) {
                return Err(Error::InvalidParam(format!("invalid shape {shape:?}")));
            }
        }
        Ok(())
    }
}

struct JobOutcome {
    smoothed: GridTensor,
    report: Option<SolveReport>,
    selected_s: f64,
}

fn combine_masks(data_mask: &Mask, file_mask: Option<Mask>) -> Result<Mask> {
    match file_mask {
        None => Ok(data_mask.clone()),
        Some(m) => {
            let flags: Vec<bool> = data_mask
                .flags()
                .iter()
                .zip(m.flags())
                .map(|(&a, &b)| a && b)
                .collect();
            Mask::new(data_mask.shape().to_vec(), flags)
        }
    }
}

fn execute(cfg: &JobConfig, file: &GridFile, mask: &Mask) -> Result<JobOutcome> {
    let y = &file.tensor;
    let s = match cfg.smoothing {
        SmoothingChoice::Fixed(s) => s,
        SmoothingChoice::Gcv(grid) => {
            // Protocol: the weight is tuned on the robust L2 problem and
            // reused by every method.
            let s = gcv_select_s_robust(y, mask, &grid, cfg.irls_rounds)?;
            eprintln!("gcv: selected s = {s:.6e}");
            s
        }
    };

    let (smoothed, report) = match cfg.method {
        Method::L2 => {
            if mask.is_full() {
                (l2_spline(y, s)?, None)
            } else {
                let mut params = WeightedSolveParams::new(s);
                params.max_iter = cfg.max_outer.max(1000);
                let (z, rep) = weighted_l2_spline(y, mask, &params)?;
                (z, Some(rep))
            }
        }
        Method::RobustL2 => {
            let base = if mask.is_full() { None } else { Some(mask) };
            let (z, _, rep) = robust_irls(y, base, s, cfg.irls_rounds, 1e-6, 1000)?;
            (z, Some(rep))
        }
        Method::L1 => {
            let params = SolveParams {
                s,
                lambda: cfg.lambda.unwrap_or_else(|| s.min(1.0)),
                eps: cfg.eps,
                max_outer: cfg.max_outer,
                inner_iters: cfg.inner_iters,
            };
            let (z, rep) = if mask.is_full() {
                l1_spline(y, &params)?
            } else {
                l1_spline_masked(y, mask, &params)?
            };
            (z, Some(rep))
        }
    };
    Ok(JobOutcome {
        smoothed,
        report,
        selected_s: s,
    })
}

fn write_trace(path: &Path, report: Option<&SolveReport>) -> Result<()> {
    let mut out = Vec::new();
    if let Some(rep) = report {
        for (i, change) in rep.trace.iter().enumerate() {
            writeln!(out, "{},{}", i + 1, change)?;
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Removes a possibly partial file, ignoring failures; error paths must not
/// leave half-written output behind.
fn discard(path: &Path) {
    let _ = fs::remove_file(path);
}

/// Runs one job end to end and returns the process exit code. Diagnostics
/// go to standard error.
pub fn run(cfg: &JobConfig) -> i32 {
    match run_inner(cfg) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

fn run_inner(cfg: &JobConfig) -> Result<i32> {
    cfg.validate()?;
    let file = read_grid(&cfg.input, cfg.shape.as_deref())?;
    let file_mask = cfg
        .mask
        .as_ref()
        .map(|p| read_mask(p, file.tensor.shape()))
        .transpose()?;
    let mask = combine_masks(&file.mask, file_mask)?;

    let outcome = execute(cfg, &file, &mask)?;

    if let Err(e) = write_grid(&cfg.output, &outcome.smoothed, None, file.format) {
        discard(&cfg.output);
        return Err(e);
    }
    if let Some(trace_path) = &cfg.trace {
        if let Err(e) = write_trace(trace_path, outcome.report.as_ref()) {
            discard(trace_path);
            return Err(e);
        }
    }

    let (iterations, converged) = match &outcome.report {
        Some(rep) => (rep.iterations, rep.converged),
        None => (0, true),
    };
    eprintln!(
        "method {} | s = {:.6e} | iterations = {} | {}",
        cfg.method.label(),
        outcome.selected_s,
        iterations,
        if converged { "converged" } else { "iteration cap reached" },
    );

    let capped = outcome
        .report
        .as_ref()
        .is_some_and(|r| r.stop_reason == StopReason::IterationCap);
    Ok(if capped { EXIT_ITERATION_CAP } else { EXIT_OK })
}
