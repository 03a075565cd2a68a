//! Deterministic synthetic test signals: smooth and piecewise-constant
//! ground truths contaminated with Gaussian noise plus clipped uniform
//! outliers, the protocol the solver comparisons run on.

use crate::error::{Error, Result};
use crate::tensor::GridTensor;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::f64::consts::PI;

/// Ground-truth families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticKind {
    /// Sum of two sines on [0, 1], range within ±3. 1-D.
    Smooth1d,
    /// Periodic piecewise-constant square wave at ±2. 1-D.
    Step1d,
    /// The classic two-dimensional peaks surface on [-3, 3]². 2-D.
    Peaks2d,
    /// Affine ramp: mean of the normalized axis coordinates. Any dimension.
    Ramp,
}

/// How outlier positions are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutlierPlacement {
    /// Uniformly scattered over the grid.
    #[default]
    Scattered,
    /// One contiguous block (in flat order), random start.
    Segment,
}

/// Generator configuration; fully deterministic for a fixed seed.
#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub kind: SyntheticKind,
    pub shape: Vec<usize>,
    /// Standard deviation of the Gaussian noise added everywhere.
    pub sigma: f64,
    /// Fraction of samples hit by uniform outlier noise.
    pub outlier_fraction: f64,
    /// Range of the uniform outlier noise.
    pub outlier_range: (f64, f64),
    /// Clip bounds applied to contaminated samples, `min(max(v, a), b)`.
    pub clip: Option<(f64, f64)>,
    pub placement: OutlierPlacement,
    pub seed: u64,
}

impl SynthConfig {
    pub fn new(kind: SyntheticKind, shape: Vec<usize>, seed: u64) -> Self {
        Self {
            kind,
            shape,
            sigma: 0.0,
            outlier_fraction: 0.0,
            outlier_range: (-5.0, 5.0),
            clip: Some((-5.0, 5.0)),
            placement: OutlierPlacement::default(),
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        let dims = self.shape.len();
        let dim_ok = match self.kind {
            SyntheticKind::Smooth1d | SyntheticKind::Step1d => dims == 1,
            SyntheticKind::Peaks2d => dims == 2,
            SyntheticKind::Ramp => dims >= 1,
        };
        if !dim_ok {
            return Err(Error::InvalidParam(format!(
                "{:?} does not support a {dims}-dimensional shape",
                self.kind
            )));
        }
        if self.shape.iter().any(|&n| n == 0) {
            return Err(Error::InvalidParam("shape extents must be positive".into()));
        }
        if !(self.sigma >= 0.0) {
            return Err(Error::InvalidParam(format!("sigma must be nonnegative, got {}", self.sigma)));
        }
        if !(0.0..=1.0).contains(&self.outlier_fraction) {
            return Err(Error::InvalidParam(format!(
                "outlier fraction must lie in [0, 1], got {}",
                self.outlier_fraction
            )));
        }
        if !(self.outlier_range.0 < self.outlier_range.1) {
            return Err(Error::InvalidParam(format!(
                "outlier range [{}, {}] is empty",
                self.outlier_range.0, self.outlier_range.1
            )));
        }
        if let Some((a, b)) = self.clip {
            if !(a < b) {
                return Err(Error::InvalidParam(format!("clip bounds [{a}, {b}] are empty")));
            }
        }
        Ok(())
    }
}

/// A generated instance: the corrupted observation, the clean ground truth,
/// and which samples took outlier noise.
#[derive(Debug, Clone)]
pub struct Synthetic {
    pub observation: GridTensor,
    pub ground_truth: GridTensor,
    pub outlier_flags: Vec<bool>,
}

fn axis_coord(i: usize, n: usize) -> f64 {
    if n <= 1 {
        0.0
    } else {
        i as f64 / (n - 1) as f64
    }
}

/// The classic peaks surface.
fn peaks(x: f64, y: f64) -> f64 {
    3.0 * (1.0 - x).powi(2) * (-x * x - (y + 1.0).powi(2)).exp()
        - 10.0 * (x / 5.0 - x.powi(3) - y.powi(5)) * (-x * x - y * y).exp()
        - (1.0 / 3.0) * (-(x + 1.0).powi(2) - y * y).exp()
}

fn ground_truth(cfg: &SynthConfig) -> Result<GridTensor> {
    let n: usize = cfg.shape.iter().product();
    let data: Vec<f64> = match cfg.kind {
        SyntheticKind::Smooth1d => (0..n)
            .map(|i| {
                let t = axis_coord(i, n);
                2.0 * (2.0 * PI * t).sin() + (6.0 * PI * t).sin()
            })
            .collect(),
        SyntheticKind::Step1d => {
            let seg = (n / 8).max(1);
            (0..n)
                .map(|i| if (i / seg) % 2 == 0 { 2.0 } else { -2.0 })
                .collect()
        }
        SyntheticKind::Peaks2d => {
            let (n1, n2) = (cfg.shape[0], cfg.shape[1]);
            let mut data = Vec::with_capacity(n);
            for i in 0..n1 {
                let x = -3.0 + 6.0 * axis_coord(i, n1);
                for j in 0..n2 {
                    let y = -3.0 + 6.0 * axis_coord(j, n2);
                    data.push(peaks(x, y));
                }
            }
            data
        }
        SyntheticKind::Ramp => {
            let m = cfg.shape.len() as f64;
            let mut data = Vec::with_capacity(n);
            let mut idx = vec![0usize; cfg.shape.len()];
            for _ in 0..n {
                let v: f64 = idx
                    .iter()
                    .zip(&cfg.shape)
                    .map(|(&i, &nj)| axis_coord(i, nj))
                    .sum();
                data.push(v / m);
                for axis in (0..cfg.shape.len()).rev() {
                    idx[axis] += 1;
                    if idx[axis] < cfg.shape[axis] {
                        break;
                    }
                    idx[axis] = 0;
                }
            }
            data
        }
    };
    GridTensor::new(cfg.shape.clone(), data)
}

/// Generates the observation/ground-truth pair for a configuration.
///
/// Contaminated samples follow `y = min(max(truth + r1 + r2, a), b)` with
/// `r1` Gaussian everywhere and `r2` uniform on the outlier range; clean
/// samples carry only `r1`.
pub fn generate(cfg: &SynthConfig) -> Result<Synthetic> {
    cfg.validate()?;
    let truth = ground_truth(cfg)?;
    let n = truth.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut observation = truth.data().to_vec();
    if cfg.sigma > 0.0 {
        let normal = Normal::new(0.0, cfg.sigma).expect("validated sigma");
        for v in observation.iter_mut() {
            *v += normal.sample(&mut rng);
        }
    }

    let count = ((cfg.outlier_fraction * n as f64).round() as usize).min(n);
    let mut flags = vec![false; n];
    if count > 0 {
        match cfg.placement {
            OutlierPlacement::Scattered => {
                for i in rand::seq::index::sample(&mut rng, n, count) {
                    flags[i] = true;
                }
            }
            OutlierPlacement::Segment => {
                let start = rng.random_range(0..=n - count);
                for f in flags.iter_mut().skip(start).take(count) {
                    *f = true;
                }
            }
        }
        let (lo, hi) = cfg.outlier_range;
        for (v, &hit) in observation.iter_mut().zip(&flags) {
            if hit {
                *v += rng.random_range(lo..hi);
                if let Some((a, b)) = cfg.clip {
                    *v = v.clamp(a, b);
                }
            }
        }
    }

    Ok(Synthetic {
        observation: GridTensor::new(cfg.shape.clone(), observation)?,
        ground_truth: truth,
        outlier_flags: flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_config_reproduces_ground_truth() {
        let cfg = SynthConfig::new(SyntheticKind::Smooth1d, vec![256], 3);
        let out = generate(&cfg).unwrap();
        assert_eq!(out.observation.data(), out.ground_truth.data());
        assert!(out.outlier_flags.iter().all(|&f| !f));
    }

    #[test]
    fn corrupted_samples_respect_clip_bounds() {
        let mut cfg = SynthConfig::new(SyntheticKind::Smooth1d, vec![512], 7);
        cfg.sigma = 0.3;
        cfg.outlier_fraction = 0.2;
        cfg.outlier_range = (-5.0, 5.0);
        cfg.clip = Some((-5.0, 5.0));
        let out = generate(&cfg).unwrap();
        let hit = out.outlier_flags.iter().filter(|&&f| f).count();
        assert_eq!(hit, 102); // round(0.2 * 512)
        for (v, &f) in out.observation.data().iter().zip(&out.outlier_flags) {
            if f {
                assert!((-5.0..=5.0).contains(v), "corrupted value {v} escaped the clip");
            }
        }
    }

    #[test]
    fn fixed_seed_is_bit_identical() {
        let mut cfg = SynthConfig::new(SyntheticKind::Step1d, vec![300], 99);
        cfg.sigma = 0.5;
        cfg.outlier_fraction = 0.1;
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        assert_eq!(a.observation.data(), b.observation.data());
        assert_eq!(a.outlier_flags, b.outlier_flags);
    }

    #[test]
    fn segment_placement_is_contiguous() {
        let mut cfg = SynthConfig::new(SyntheticKind::Smooth1d, vec![200], 11);
        cfg.outlier_fraction = 0.15;
        cfg.placement = OutlierPlacement::Segment;
        let out = generate(&cfg).unwrap();
        let first = out.outlier_flags.iter().position(|&f| f).unwrap();
        let last = out.outlier_flags.iter().rposition(|&f| f).unwrap();
        assert_eq!(last - first + 1, 30);
        assert!(out.outlier_flags[first..=last].iter().all(|&f| f));
    }

    #[test]
    fn peaks_surface_has_expected_range() {
        let cfg = SynthConfig::new(SyntheticKind::Peaks2d, vec![256, 256], 1);
        let out = generate(&cfg).unwrap();
        let (lo, hi) = out
            .ground_truth
            .data()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        // dense sampling of the surface lands near its known extrema
        assert!((lo - (-6.55)).abs() < 0.01, "min {lo}");
        assert!((hi - 8.106).abs() < 0.01, "max {hi}");
    }

    #[test]
    fn ramp_is_affine_along_each_axis() {
        let cfg = SynthConfig::new(SyntheticKind::Ramp, vec![4, 5], 0);
        let out = generate(&cfg).unwrap();
        let d = out.ground_truth.data();
        for i in 0..4 {
            for j in 0..5 {
                let want = (i as f64 / 3.0 + j as f64 / 4.0) / 2.0;
                assert!((d[i * 5 + j] - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn kind_shape_mismatch_rejected() {
        let cfg = SynthConfig::new(SyntheticKind::Peaks2d, vec![64], 0);
        assert!(generate(&cfg).is_err());
        let cfg = SynthConfig::new(SyntheticKind::Smooth1d, vec![8, 8], 0);
        assert!(generate(&cfg).is_err());
    }

    #[test]
    fn invalid_ranges_rejected() {
        let mut cfg = SynthConfig::new(SyntheticKind::Smooth1d, vec![16], 0);
        cfg.outlier_range = (2.0, 2.0);
        assert!(generate(&cfg).is_err());
        let mut cfg = SynthConfig::new(SyntheticKind::Smooth1d, vec![16], 0);
        cfg.clip = Some((5.0, -5.0));
        assert!(generate(&cfg).is_err());
        let mut cfg = SynthConfig::new(SyntheticKind::Smooth1d, vec![16], 0);
        cfg.outlier_fraction = 1.5;
        assert!(generate(&cfg).is_err());
    }
}
