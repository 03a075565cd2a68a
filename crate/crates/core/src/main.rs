//! Batch CLI for smoothing, denoising, and inpainting grid data.

use clap::{Args, Parser, Subcommand, ValueEnum};
use gridspline::io::{write_grid, GridFormat};
use gridspline::job::{JobConfig, Method, SmoothingChoice, EXIT_ERROR};
use gridspline::l2::{GcvGrid, DEFAULT_IRLS_ROUNDS};
use gridspline::synth::{generate, OutlierPlacement, SynthConfig, SyntheticKind};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "gridspline",
    about = "L1 and L2 smoothing splines for gridded data, with missing-data inpainting"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Smooth a grid file with the selected spline.
    Smooth(SmoothArgs),
    /// Generate a synthetic observation (and optionally its ground truth).
    Generate(GenerateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    L1,
    L2,
    RobustL2,
}

#[derive(Args)]
struct SmoothArgs {
    /// Fitting method.
    #[arg(long, value_enum)]
    method: MethodArg,

    /// Input grid: 1-D text (one value per line), m-D text with a
    /// `#shape` header, or PGM. `NaN` marks missing samples.
    #[arg(long)]
    input: PathBuf,

    /// Optional 0/1 mask file in any grid format; combined with the NaN
    /// mask of the input.
    #[arg(long)]
    mask: Option<PathBuf>,

    /// Shape for headerless multi-dimensional text input, e.g. 64,48.
    #[arg(long, value_delimiter = ',')]
    shape: Option<Vec<usize>>,

    /// Smoothing weight. Exactly one of --s and --gcv must be given.
    #[arg(long, conflicts_with = "gcv")]
    s: Option<f64>,

    /// Select the smoothing weight by generalized cross-validation on the
    /// robust L2 fit, then reuse it for the requested method.
    #[arg(long)]
    gcv: bool,

    /// GCV search range as log10 bounds, e.g. -6:6.
    #[arg(long, default_value = "-6:6", value_parser = parse_range)]
    gcv_range: (f64, f64),

    /// Number of points on the GCV grid.
    #[arg(long, default_value_t = 61)]
    gcv_points: usize,

    /// Split-Bregman penalty weight (l1 only); defaults to min(s, 1).
    #[arg(long)]
    lambda: Option<f64>,

    /// Relative-change stopping threshold of the l1 solver.
    #[arg(long, default_value_t = 1e-3)]
    eps: f64,

    /// Outer-iteration cap.
    #[arg(long, default_value_t = 100)]
    max_outer: usize,

    /// Inner z/d alternations per outer iteration (l1 only).
    #[arg(long, default_value_t = 1)]
    inner_iters: usize,

    /// Reweighting rounds of the robust (bisquare-IRLS) fit.
    #[arg(long, default_value_t = DEFAULT_IRLS_ROUNDS)]
    irls_rounds: usize,

    /// Output path; written in the input's format.
    #[arg(long)]
    output: PathBuf,

    /// Optional trace file: one `iter,rel_change` line per outer iteration.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Smooth1d,
    Step1d,
    Peaks2d,
    Ramp,
}

#[derive(Args)]
struct GenerateArgs {
    /// Ground-truth family.
    #[arg(long, value_enum)]
    kind: KindArg,

    /// Number of samples (1-D kinds).
    #[arg(long, conflicts_with = "shape")]
    n: Option<usize>,

    /// Grid shape, e.g. 256,256.
    #[arg(long, value_delimiter = ',')]
    shape: Option<Vec<usize>>,

    /// Standard deviation of the Gaussian noise.
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,

    /// Fraction of samples hit by uniform outlier noise.
    #[arg(long, default_value_t = 0.0)]
    outlier_fraction: f64,

    /// Outlier noise range, e.g. -5:5.
    #[arg(long, default_value = "-5:5", value_parser = parse_range)]
    outlier_range: (f64, f64),

    /// Clip bounds applied to contaminated samples, e.g. -5:5.
    #[arg(long, default_value = "-5:5", value_parser = parse_range)]
    clip: (f64, f64),

    /// Disable clipping of contaminated samples.
    #[arg(long)]
    no_clip: bool,

    /// Place the outliers on one contiguous segment instead of scattering.
    #[arg(long)]
    segment: bool,

    /// RNG seed; output is bit-identical for a fixed seed.
    #[arg(long)]
    seed: u64,

    /// Where the corrupted observation goes (1-D text or m-D text).
    #[arg(long)]
    output: PathBuf,

    /// Optional path for the clean ground truth.
    #[arg(long)]
    truth: Option<PathBuf>,
}

fn parse_range(raw: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = raw
        .split_once(':')
        .ok_or_else(|| format!("expected lo:hi, got {raw:?}"))?;
    let lo: f64 = lo.trim().parse().map_err(|_| format!("bad bound {lo:?}"))?;
    let hi: f64 = hi.trim().parse().map_err(|_| format!("bad bound {hi:?}"))?;
    Ok((lo, hi))
}

fn run_smooth(args: SmoothArgs) -> i32 {
    let smoothing = match (args.s, args.gcv) {
        (Some(s), false) => SmoothingChoice::Fixed(s),
        (None, true) => SmoothingChoice::Gcv(GcvGrid {
            log10_lo: args.gcv_range.0,
            log10_hi: args.gcv_range.1,
            points: args.gcv_points,
        }),
        _ => {
            eprintln!("error: exactly one of --s and --gcv is required");
            return EXIT_ERROR;
        }
    };
    let cfg = JobConfig {
        method: match args.method {
            MethodArg::L1 => Method::L1,
            MethodArg::L2 => Method::L2,
            MethodArg::RobustL2 => Method::RobustL2,
        },
        input: args.input,
        mask: args.mask,
        shape: args.shape,
        smoothing,
        lambda: args.lambda,
        eps: args.eps,
        max_outer: args.max_outer,
        inner_iters: args.inner_iters,
        irls_rounds: args.irls_rounds,
        output: args.output,
        trace: args.trace,
    };
    gridspline::job::run(&cfg)
}

fn run_generate(args: GenerateArgs) -> i32 {
    let kind = match args.kind {
        KindArg::Smooth1d => SyntheticKind::Smooth1d,
        KindArg::Step1d => SyntheticKind::Step1d,
        KindArg::Peaks2d => SyntheticKind::Peaks2d,
        KindArg::Ramp => SyntheticKind::Ramp,
    };
    let shape = match (args.n, args.shape) {
        (Some(n), None) => vec![n],
        (None, Some(shape)) => shape,
        _ => {
            eprintln!("error: exactly one of --n and --shape is required");
            return EXIT_ERROR;
        }
    };
    let cfg = SynthConfig {
        kind,
        shape,
        sigma: args.sigma,
        outlier_fraction: args.outlier_fraction,
        outlier_range: args.outlier_range,
        clip: if args.no_clip { None } else { Some(args.clip) },
        placement: if args.segment {
            OutlierPlacement::Segment
        } else {
            OutlierPlacement::Scattered
        },
        seed: args.seed,
    };
    let out = match generate(&cfg) {
        Ok(out) => out,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    };
    let format = GridFormat::Text {
        with_header: out.observation.ndim() > 1,
    };
    if let Err(e) = write_grid(&args.output, &out.observation, None, format) {
        eprintln!("error: {e}");
        let _ = std::fs::remove_file(&args.output);
        return EXIT_ERROR;
    }
    if let Some(truth) = &args.truth {
        if let Err(e) = write_grid(truth, &out.ground_truth, None, format) {
            eprintln!("error: {e}");
            let _ = std::fs::remove_file(truth);
            return EXIT_ERROR;
        }
    }
    0
}

fn main() {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Smooth(args) => run_smooth(args),
        Command::Generate(args) => run_generate(args),
    };
    std::process::exit(code);
}
