//! `corrfilt`: correction filters for super-resolution from the command line.

mod commands;
mod format;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "corrfilt", version, about = "Correction filters for single-image super-resolution")]
struct Cli {
    /// Print reports as JSON.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Write a built-in kernel to a KERN file.
    MakeKernel(MakeKernelArgs),
    /// Blur and subsample an HR image: y = (x * k) downsampled by the scale.
    Synth(SynthArgs),
    /// Correct an LR image taken with a known kernel so it mimics a bicubic observation.
    Correct(CorrectArgs),
    /// Estimate the downscaling kernel and correction filter from the LR image alone.
    Estimate(EstimateArgs),
    /// Correct and super-resolve an LR image.
    Upscale(UpscaleArgs),
    /// PSNR and SSIM between two images.
    Evaluate(EvaluateArgs),
    /// Check numerically whether a kernel admits exact correction.
    Diagnose(DiagnoseArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum KernelType {
    Bicubic,
    Gaussian,
    Box,
}

#[derive(Args, Debug)]
struct MakeKernelArgs {
    #[arg(value_enum)]
    kind: KernelType,
    /// Scale factor of the bicubic kernel.
    #[arg(long, value_parser = parse_scale)]
    scale: Option<usize>,
    /// Standard deviation of the Gaussian.
    #[arg(long)]
    sigma: Option<f64>,
    /// Odd side length of the Gaussian; defaults to 2*ceil(3 sigma)+1.
    #[arg(long)]
    size: Option<usize>,
    /// Side length of the box.
    #[arg(long)]
    width: Option<usize>,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(short, long)]
    kernel: PathBuf,
    #[arg(short, long, value_parser = parse_scale)]
    scale: usize,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct CorrectArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(short, long)]
    kernel: PathBuf,
    #[arg(short, long, value_parser = parse_scale)]
    scale: usize,
    /// Regularization of the filter denominator.
    #[arg(long, default_value_t = corrfilt::correction::DEFAULT_EPSILON, value_parser = parse_eps)]
    eps: f64,
    /// Also report filter gain (and PSNR if --reference is given) over a range of eps.
    #[arg(long)]
    sweep: bool,
    /// Bicubic-synthesized LR image to score the output against.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Border shaved before scoring; defaults to the scale.
    #[arg(long)]
    border: Option<usize>,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(short, long, value_parser = parse_scale)]
    scale: usize,
    /// Adam learning rate.
    #[arg(long, default_value_t = 1e-4)]
    lr: f64,
    #[arg(long, default_value_t = 250)]
    iters: usize,
    #[arg(long, default_value_t = corrfilt::correction::DEFAULT_EPSILON, value_parser = parse_eps)]
    eps: f64,
    #[arg(long, default_value_t = 0.9)]
    beta1: f64,
    #[arg(long, default_value_t = 0.999)]
    beta2: f64,
    #[arg(long, default_value_t = 1e-8)]
    adam_eps: f64,
    #[arg(long, default_value_t = 1.0)]
    huber_delta: f64,
    #[arg(long, default_value_t = 1.0)]
    lambda_cen: f64,
    #[arg(long, default_value_t = 1.0)]
    lambda_sparse: f64,
    /// Estimated kernel (KERN).
    #[arg(long)]
    kernel_out: PathBuf,
    /// Estimated filter (KERN plus a `.grid` sidecar).
    #[arg(long)]
    filter_out: PathBuf,
    /// Per-iteration loss report.
    #[arg(long)]
    report_out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum ResolverKind {
    Builtin,
    External,
}

#[derive(Args, Debug)]
struct UpscaleArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(short, long, value_parser = parse_scale)]
    scale: usize,
    /// Filter written by `estimate`.
    #[arg(long, conflicts_with = "kernel")]
    filter: Option<PathBuf>,
    /// Known downscaling kernel; the filter is computed with --eps.
    #[arg(short, long)]
    kernel: Option<PathBuf>,
    #[arg(long, default_value_t = corrfilt::correction::DEFAULT_EPSILON, value_parser = parse_eps)]
    eps: f64,
    #[arg(long, value_enum, default_value_t = ResolverKind::Builtin)]
    resolver: ResolverKind,
    /// External resolver command with {in}, {out} and {scale} placeholders.
    #[arg(long, required_if_eq("resolver", "external"))]
    command: Option<String>,
    /// Seconds before the external resolver is killed.
    #[arg(long, default_value_t = 600.0)]
    timeout: f64,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    a: PathBuf,
    b: PathBuf,
    /// Border shaved on every side; defaults to --scale, or 0.
    #[arg(long)]
    border: Option<usize>,
    #[arg(long, value_parser = parse_scale)]
    scale: Option<usize>,
}

#[derive(Args, Debug)]
struct DiagnoseArgs {
    #[arg(short, long)]
    kernel: PathBuf,
    #[arg(short, long, value_parser = parse_scale)]
    scale: usize,
    /// LR grid as HxW.
    #[arg(long, value_parser = parse_grid)]
    grid: (usize, usize),
    #[arg(long, default_value_t = corrfilt::correction::DIAGNOSTIC_THRESHOLD)]
    threshold: f64,
}

fn parse_scale(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(v @ (1 | 2 | 3 | 4 | 8)) => Ok(v),
        Ok(v) => Err(format!("scale {v} is not one of 1, 2, 3, 4, 8")),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_eps(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err("eps must be finite and >= 0".into())
    }
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (h, w) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected HxW, got {s:?}"))?;
    let h: usize = h.trim().parse().map_err(|e| format!("{e}"))?;
    let w: usize = w.trim().parse().map_err(|e| format!("{e}"))?;
    if h == 0 || w == 0 {
        return Err("grid dimensions must be positive".into());
    }
    Ok((h, w))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command, cli.json) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
