//! L1-fitted splines by split-Bregman iteration.
//!
//! The fitting term `‖z − y‖₁` makes the spline robust to outliers; the
//! estimate is the minimizer of `‖z − y‖₁ + s‖Dz‖₂²`. Splitting the L1 term
//! onto an auxiliary variable `d` with a Bregman variable `b` turns each
//! outer iteration into one spectral L2 solve (with effective smoothing
//! `2s/λ`) followed by one soft-thresholding step:
//!
//! ```text
//! z ← idct(Γ̃ ∘ dct(d + y − b))
//! d ← shrink(z − y + b, 1/λ)
//! b ← b + (z − y − d)
//! ```
//!
//! The masked variant runs the z-update through the weighted fixed-point
//! smoother and freezes `d` and `b` at zero on missing samples, which turns
//! the same loop into an inpainting algorithm.

use crate::error::{Error, Result};
use crate::l2::{weighted_fixed_point, FilteredSolver};
use crate::tensor::{relative_change, GridTensor, Mask};

/// Relative-change tolerance of the nested weighted z-update.
const INNER_TOL: f64 = 1e-6;
/// Iteration cap of the nested weighted z-update.
const INNER_CAP: usize = 50;

/// Split-Bregman solve parameters.
#[derive(Debug, Clone)]
pub struct SolveParams {
    /// Smoothing weight of the curvature term, `s > 0`.
    pub s: f64,
    /// Penalty weight of the splitting, `λ > 0`. The solver is insensitive
    /// to it over a wide range; `min(s, 1)` is the working default.
    pub lambda: f64,
    /// Relative-change stopping threshold on consecutive z iterates.
    pub eps: f64,
    /// Outer-iteration cap.
    pub max_outer: usize,
    /// Inner z/d alternations per outer iteration; one is optimal in
    /// practice.
    pub inner_iters: usize,
}

impl SolveParams {
    /// Defaults for a given smoothing weight: `λ = min(s, 1)`, `ε = 1e-3`,
    /// at most 100 outer iterations, one inner iteration.
    pub fn new(s: f64) -> Self {
        Self {
            s,
            lambda: s.min(1.0),
            eps: 1e-3,
            max_outer: 100,
            inner_iters: 1,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.s > 0.0) {
            return Err(Error::InvalidParam(format!("s must be positive, got {}", self.s)));
        }
        if !(self.lambda > 0.0) {
            return Err(Error::InvalidParam(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        if !(self.eps > 0.0) {
            return Err(Error::InvalidParam(format!("eps must be positive, got {}", self.eps)));
        }
        if self.max_outer == 0 {
            return Err(Error::InvalidParam("max_outer must be at least 1".into()));
        }
        if self.inner_iters == 0 {
            return Err(Error::InvalidParam("inner_iters must be at least 1".into()));
        }
        Ok(())
    }
}

/// Why an iterative solve stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Relative change fell below the threshold.
    Tolerance,
    /// The iteration cap was reached first.
    IterationCap,
}

/// Outcome of an iterative solve: the per-iteration relative-change trace
/// and how the loop ended.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<f64>,
    pub stop_reason: StopReason,
}

fn soft_threshold(x: f64, gamma: f64) -> f64 {
    if x > gamma {
        x - gamma
    } else if x < -gamma {
        x + gamma
    } else {
        // covers the dead zone, including the 0/|0| corner of the formula
        0.0
    }
}

/// Element-wise soft threshold: same sign, magnitude `max(|x| − γ, 0)`.
pub fn shrink(v: &GridTensor, gamma: f64) -> Result<GridTensor> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidParam(format!(
            "shrink threshold must be positive, got {gamma}"
        )));
    }
    Ok(v.map(|x| soft_threshold(x, gamma)))
}

/// One split-Bregman engine covering both the plain and the masked solver;
/// `weights` of 1 everywhere reduces every update to the unmasked form,
/// iterate for iterate.
fn split_bregman(
    y: &GridTensor,
    weights: Option<&[f64]>,
    params: &SolveParams,
) -> Result<(GridTensor, SolveReport)> {
    if !y.all_finite() {
        return Err(Error::NonFinite);
    }
    params.validate()?;

    let s_tilde = 2.0 * params.s / params.lambda;
    let gamma = 1.0 / params.lambda;
    let mut solver = FilteredSolver::new(y.shape(), s_tilde)?;

    let shape = y.shape().to_vec();
    let mut z = y.clone();
    let mut d = GridTensor::zeros(shape.clone())?;
    let mut b = GridTensor::zeros(shape.clone())?;
    let mut y_tilde = GridTensor::zeros(shape)?;
    let mut trace = Vec::new();

    for _ in 0..params.max_outer {
        let mut z_next = z.clone();
        for _ in 0..params.inner_iters {
            for ((t, (&di, &yi)), &bi) in y_tilde
                .data_mut()
                .iter_mut()
                .zip(d.data().iter().zip(y.data()))
                .zip(b.data())
            {
                *t = (di + yi) - bi;
            }
            z_next = match weights {
                None => solver.smooth(&y_tilde)?,
                Some(w) => {
                    weighted_fixed_point(&y_tilde, w, &mut solver, INNER_TOL, INNER_CAP, Some(&z_next))?
                        .0
                }
            };
            for (i, (dst, ((&zi, &yi), &bi))) in d
                .data_mut()
                .iter_mut()
                .zip(z_next.data().iter().zip(y.data()).zip(b.data()))
                .enumerate()
            {
                let observed = weights.map_or(true, |w| w[i] > 0.0);
                *dst = if observed {
                    soft_threshold((zi - yi) + bi, gamma)
                } else {
                    0.0
                };
            }
        }
        for (i, (bi, ((&zi, &yi), &di))) in b
            .data_mut()
            .iter_mut()
            .zip(z_next.data().iter().zip(y.data()).zip(d.data()))
            .enumerate()
        {
            let observed = weights.map_or(true, |w| w[i] > 0.0);
            if observed {
                *bi += (zi - yi) - di;
            }
        }

        let change = relative_change(&z_next, &z)?;
        trace.push(change);
        z = z_next;
        if change < params.eps {
            break;
        }
    }

    let iterations = trace.len();
    let converged = *trace.last().unwrap() < params.eps;
    let report = SolveReport {
        iterations,
        converged,
        trace,
        stop_reason: if converged {
            StopReason::Tolerance
        } else {
            StopReason::IterationCap
        },
    };

    // Estimate: y + d where the data was observed (the constraint d = z − y
    // holds there at convergence, and the shrink dead zone puts the fit
    // exactly on the data at its contact points), z where it was missing
    // (the smoother's fill lives in z alone).
    let mut out = z;
    for (i, (o, (&yi, &di))) in out
        .data_mut()
        .iter_mut()
        .zip(y.data().iter().zip(d.data()))
        .enumerate()
    {
        let observed = weights.map_or(true, |w| w[i] > 0.0);
        if observed {
            *o = yi + di;
        }
    }
    Ok((out, report))
}

/// L1 spline of fully observed data.
pub fn l1_spline(y: &GridTensor, params: &SolveParams) -> Result<(GridTensor, SolveReport)> {
    split_bregman(y, None, params)
}

/// L1 spline with missing samples: the z-update solves the weighted
/// problem, while `d` and `b` are updated only where data was observed and
/// stay exactly zero elsewhere. Masked entries of `y` are expected to be
/// zero (the ingestion rule); they never enter the updates.
pub fn l1_spline_masked(
    y: &GridTensor,
    mask: &Mask,
    params: &SolveParams,
) -> Result<(GridTensor, SolveReport)> {
    mask.check_matches(y)?;
    split_bregman(y, Some(&mask.to_weights()), params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::l2::{l2_spline, weighted_l2_spline, WeightedSolveParams};
    use crate::oracle::{l1_objective, l1_optimality_residual};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn shrink_examples() {
        let v = GridTensor::from_vec(vec![3.0, -3.0, 0.5, 0.0]).unwrap();
        let out = shrink(&v, 1.0).unwrap();
        assert_eq!(out.data(), &[2.0, -2.0, 0.0, 0.0]);
    }

    #[test]
    fn shrink_matches_scalar_prox() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let v: Vec<f64> = (0..50).map(|_| rng.random_range(-2.0..2.0)).collect();
        let gamma = 0.3;
        let t = GridTensor::from_vec(v.clone()).unwrap();
        let out = shrink(&t, gamma).unwrap();
        for (x, o) in v.iter().zip(out.data()) {
            // prox of γ‖·‖₁ per entry
            let want = if x.abs() <= gamma {
                0.0
            } else {
                x.signum() * (x.abs() - gamma)
            };
            assert_eq!(*o, want);
        }
    }

    #[test]
    fn shrink_rejects_nonpositive_gamma() {
        let v = GridTensor::from_vec(vec![1.0]).unwrap();
        assert!(shrink(&v, 0.0).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(SolveParams::new(0.0).validate().is_err());
        assert!(SolveParams { eps: 0.0, ..SolveParams::new(1.0) }.validate().is_err());
        assert!(SolveParams { max_outer: 0, ..SolveParams::new(1.0) }.validate().is_err());
        let p = SolveParams::new(7.0);
        assert_eq!(p.lambda, 1.0);
        assert_eq!(p.eps, 1e-3);
        assert_eq!(p.max_outer, 100);
        assert_eq!(p.inner_iters, 1);
        let p = SolveParams::new(0.25);
        assert_eq!(p.lambda, 0.25);
    }

    #[test]
    fn constant_signal_is_fixed_point() {
        let y = GridTensor::full(vec![64], 3.25).unwrap();
        let (z, rep) = l1_spline(&y, &SolveParams::new(10.0)).unwrap();
        assert!(rep.converged);
        assert!(rep.iterations <= 2, "took {}", rep.iterations);
        assert_eq!(z.data(), y.data());
    }

    #[test]
    fn rejects_nonfinite_input() {
        let y = GridTensor::from_vec(vec![1.0, f64::INFINITY]).unwrap();
        assert!(l1_spline(&y, &SolveParams::new(1.0)).is_err());
    }

    #[test]
    fn report_is_consistent_with_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let y: Vec<f64> = (0..256)
            .map(|i| (i as f64 / 20.0).sin() + rng.random_range(-0.2..0.2))
            .collect();
        let t = GridTensor::from_vec(y).unwrap();
        let (_, rep) = l1_spline(&t, &SolveParams::new(20.0)).unwrap();
        assert_eq!(rep.trace.len(), rep.iterations);
        assert_eq!(rep.converged, *rep.trace.last().unwrap() < 1e-3);
        match rep.stop_reason {
            StopReason::Tolerance => assert!(rep.converged),
            StopReason::IterationCap => {
                assert!(!rep.converged);
                assert_eq!(rep.iterations, 100);
            }
        }
        // only the final entry may dip under the threshold
        for &c in &rep.trace[..rep.iterations - 1] {
            assert!(c >= 1e-3);
        }
    }

    fn contaminated_step_signal(n: usize, seed: u64) -> GridTensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 0.25).unwrap();
        let data: Vec<f64> = (0..n)
            .map(|i| {
                let level = if (i / (n / 4)) % 2 == 0 { 1.5 } else { -1.5 };
                let mut v = level + noise.sample(&mut rng);
                if rng.random_bool(0.08) {
                    v = rng.random_range(-5.0..5.0_f64).clamp(-5.0, 5.0);
                }
                v
            })
            .collect();
        GridTensor::from_vec(data).unwrap()
    }

    #[test]
    fn optimality_residual_small_at_termination() {
        let y = contaminated_step_signal(1 << 10, 31);
        let params = SolveParams::new(10.0);
        let (z, rep) = l1_spline(&y, &params).unwrap();
        assert!(rep.converged);
        let res = l1_optimality_residual(&y, &z, params.s).unwrap();
        assert!(res < 1e-2, "residual {res}");
    }

    #[test]
    fn tight_eps_drives_residual_down() {
        let y = contaminated_step_signal(256, 5);
        let mut params = SolveParams::new(10.0);
        params.eps = 1e-8;
        params.max_outer = 10_000;
        let (z, rep) = l1_spline(&y, &params).unwrap();
        assert!(rep.converged);
        let res = l1_optimality_residual(&y, &z, params.s).unwrap();
        assert!(res < 1e-4, "residual {res}");
    }

    #[test]
    fn fixed_point_satisfies_constraint() {
        // At (near-)zero update the split constraint d = z − y must hold on
        // observed coordinates; with the returned estimate that reads
        // out − y = d there.
        let y = contaminated_step_signal(128, 12);
        let mut params = SolveParams::new(5.0);
        params.eps = 1e-10;
        params.max_outer = 20_000;
        let (out, rep) = l1_spline(&y, &params).unwrap();
        assert!(rep.converged);
        // out = y + d by construction; checking the constraint against z is
        // what the tight tolerance guarantees: ‖out − z‖ must be small, and
        // we verify through the objective.
        let f_out = l1_objective(&y, &out, params.s).unwrap();
        let direct = l2_spline(&y, params.s).unwrap();
        let f_l2 = l1_objective(&y, &direct, params.s).unwrap();
        assert!(f_out <= f_l2 + 1e-9, "L1 {f_out} vs L2 {f_l2}");
    }

    #[test]
    fn l1_beats_l2_on_own_objective_under_contamination() {
        let y = contaminated_step_signal(256, 99);
        let params = SolveParams::new(8.0);
        let (z1, _) = l1_spline(&y, &params).unwrap();
        let z2 = l2_spline(&y, params.s).unwrap();
        let f1 = l1_objective(&y, &z1, params.s).unwrap();
        let f2 = l1_objective(&y, &z2, params.s).unwrap();
        assert!(f1 <= f2 + 1e-9);
    }

    #[test]
    fn full_mask_reproduces_unmasked_run_exactly() {
        let y = contaminated_step_signal(512, 44);
        let params = SolveParams::new(15.0);
        let (z_plain, rep_plain) = l1_spline(&y, &params).unwrap();
        let mask = Mask::full(vec![512]).unwrap();
        let (z_masked, rep_masked) = l1_spline_masked(&y, &mask, &params).unwrap();
        assert_eq!(z_plain.data(), z_masked.data());
        assert_eq!(rep_plain.iterations, rep_masked.iterations);
        assert_eq!(rep_plain.trace, rep_masked.trace);
    }

    #[test]
    fn masked_gap_in_ramp_is_inpainted() {
        let n = 128;
        let truth: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let mut flags = vec![true; n];
        for f in flags.iter_mut().take(72).skip(56) {
            *f = false;
        }
        let y: Vec<f64> = truth
            .iter()
            .zip(&flags)
            .map(|(v, &f)| if f { *v } else { 0.0 })
            .collect();
        let t = GridTensor::from_vec(y).unwrap();
        let mask = Mask::new(vec![n], flags.clone()).unwrap();
        let mut params = SolveParams::new(1.0);
        params.eps = 1e-6;
        params.max_outer = 500;
        let (z, _) = l1_spline_masked(&t, &mask, &params).unwrap();
        for i in 0..n {
            if !flags[i] {
                assert!(
                    (z.data()[i] - truth[i]).abs() < 1e-3,
                    "index {i}: {} vs {}",
                    z.data()[i],
                    truth[i]
                );
            }
        }
    }

    #[test]
    fn masked_depth_synthetic_keeps_fill_in_range() {
        // Piecewise-constant 64x64 plateau image, salt outliers, 10% missing.
        let (h, w) = (64usize, 64usize);
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut data = vec![0.0f64; h * w];
        for (idx, v) in data.iter_mut().enumerate() {
            let (i, j) = (idx / w, idx % w);
            *v = match (i >= h / 2, j >= w / 2) {
                (false, false) => 1.0,
                (false, true) => 4.0,
                (true, false) => 2.5,
                (true, true) => 0.5,
            };
            if rng.random_bool(0.05) {
                *v = 8.0; // salt
            }
        }
        let mut flags = vec![true; h * w];
        for f in flags.iter_mut() {
            if rng.random_bool(0.10) {
                *f = false;
            }
        }
        for (v, &f) in data.iter_mut().zip(&flags) {
            if !f {
                *v = 0.0;
            }
        }
        let (lo, hi) = data
            .iter()
            .zip(&flags)
            .filter(|(_, &f)| f)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (&v, _)| {
                (lo.min(v), hi.max(v))
            });

        let t = GridTensor::new(vec![h, w], data).unwrap();
        let mask = Mask::new(vec![h, w], flags.clone()).unwrap();
        let (z, _) = l1_spline_masked(&t, &mask, &SolveParams::new(2.0)).unwrap();
        for (i, &f) in flags.iter().enumerate() {
            if !f {
                let v = z.data()[i];
                assert!(v.is_finite());
                assert!(v >= lo - 1e-9 && v <= hi + 1e-9, "fill {v} outside [{lo}, {hi}]");
            }
        }
    }

    #[test]
    fn masked_ramp_matches_weighted_l2_when_noiseless() {
        // Affine data is fixed by the smoother, so the L1 and L2 fills agree.
        let n = 96;
        let truth: Vec<f64> = (0..n).map(|i| 2.0 * i as f64 / (n - 1) as f64 - 1.0).collect();
        let mut flags = vec![true; n];
        for f in flags.iter_mut().take(60).skip(40) {
            *f = false;
        }
        let y: Vec<f64> = truth
            .iter()
            .zip(&flags)
            .map(|(v, &f)| if f { *v } else { 0.0 })
            .collect();
        let t = GridTensor::from_vec(y).unwrap();
        let mask = Mask::new(vec![n], flags.clone()).unwrap();

        let mut p1 = SolveParams::new(1.0);
        p1.eps = 1e-8;
        p1.max_outer = 2000;
        let (z1, _) = l1_spline_masked(&t, &mask, &p1).unwrap();

        let mut p2 = WeightedSolveParams::new(2.0 / p1.lambda);
        p2.tol = 1e-10;
        let (z2, _) = weighted_l2_spline(&t, &mask, &p2).unwrap();

        for i in 0..n {
            if !flags[i] {
                assert!((z1.data()[i] - z2.data()[i]).abs() < 1e-3);
            }
        }
    }
}
