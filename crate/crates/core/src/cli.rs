//! Command-line front end.
//!
//! Errors are printed to stderr as one JSON line
//! `{"error": <kind>, "flag": <flag or null>, "message": <text>}` and give a
//! nonzero exit code. Warnings use the same shape with a `"warning"` key.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::error::{ContextKind, ContextValue, ErrorKind};
use clap::{Parser, ValueEnum};
use serde_json::json;

use crate::bench::{available_threads, benchmark, BENCH_REPEATS};
use crate::diffusivity::{Diffusivity, DiffusivityKind};
use crate::error::Error;
use crate::pgm::{load_pgm_with_maxval, save_pgm};
use crate::report::DiagnosticsReport;
use crate::schemes::{run_diffusion, Backend, SchemeConfig, TensorModel, TimeStep};
use crate::stencil::StencilParams;
use crate::tensor::DiffusionTensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    /// Edge-enhancing diffusion tensor rebuilt from the smoothed image every step.
    Eed,
    /// Constant tensor given by --a, --b, --c.
    Constant,
    /// Identity tensor.
    Homogeneous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DiffusivityArg {
    /// Perona-Malik 1/(1+s²/λ²).
    Pm,
    /// Charbonnier 1/sqrt(1+s²/λ²).
    Charbonnier,
    /// Weickert's exponential diffusivity.
    Wexp,
}

impl From<DiffusivityArg> for DiffusivityKind {
    fn from(d: DiffusivityArg) -> Self {
        match d {
            DiffusivityArg::Pm => DiffusivityKind::PeronaMalik,
            DiffusivityArg::Charbonnier => DiffusivityKind::Charbonnier,
            DiffusivityArg::Wexp => DiffusivityKind::Wexp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    /// Per-pixel 3×3 stencil.
    Stencil,
    /// Four-branch forward-difference / gate / backward-difference form.
    Convform,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Stencil => Backend::Stencil,
            BackendArg::Convform => Backend::ConvForm,
        }
    }
}

fn parse_alpha(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    StencilParams::new(v, 0.0)
        .map(|_| v)
        .map_err(|e| e.to_string())
}

fn parse_gamma(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    StencilParams::new(0.0, v)
        .map(|_| v)
        .map_err(|e| e.to_string())
}

fn parse_nonneg(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("expected a nonnegative number, got {s:?}")),
    }
}

fn parse_positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("expected a positive number, got {s:?}")),
    }
}

fn parse_finite(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("expected a finite number, got {s:?}")),
    }
}

fn parse_tau(s: &str) -> Result<TimeStep, String> {
    match s {
        "auto-theorem" => Ok(TimeStep::AutoTheorem),
        "auto-gershgorin" => Ok(TimeStep::AutoGershgorin),
        _ => match s.parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(TimeStep::Fixed(v)),
            _ => Err(format!(
                "expected auto-theorem, auto-gershgorin or a positive number, got {s:?}"
            )),
        },
    }
}

/// Anisotropic diffusion filter with δ-stencil discretisation and Euclidean-norm-stable explicit time stepping.
#[derive(Debug, Parser)]
#[command(name = "deltastencil", version, allow_negative_numbers = true)]
pub struct Cli {
    /// Input image (PGM, P2 or P5). Required unless --benchmark is given.
    #[arg(long, required_unless_present = "benchmark")]
    pub input: Option<PathBuf>,

    /// Output image (P5 PGM, same maxval as the input). Required unless --benchmark is given.
    #[arg(long, required_unless_present = "benchmark")]
    pub output: Option<PathBuf>,

    /// Diffusion tensor model.
    #[arg(long, value_enum, default_value = "eed")]
    pub model: ModelArg,

    /// Pre-smoothing scale σ of the EED structure, in pixel units (h = 1).
    #[arg(long, default_value = "1", value_parser = parse_nonneg)]
    pub sigma: f64,

    /// Contrast parameter λ of the EED diffusivity, in grey levels.
    #[arg(long, default_value = "3", value_parser = parse_positive)]
    pub lambda: f64,

    /// EED diffusivity function.
    #[arg(long, value_enum, default_value = "charbonnier")]
    pub diffusivity: DiffusivityArg,

    /// Constant model: tensor entry a (xx).
    #[arg(long, default_value = "1", value_parser = parse_finite)]
    pub a: f64,

    /// Constant model: tensor entry b (xy).
    #[arg(long, default_value = "0", value_parser = parse_finite)]
    pub b: f64,

    /// Constant model: tensor entry c (yy).
    #[arg(long, default_value = "1", value_parser = parse_finite)]
    pub c: f64,

    /// Stencil parameter α in [0, 0.5].
    #[arg(long, default_value = "0.4", value_parser = parse_alpha)]
    pub alpha: f64,

    /// Stencil parameter γ in [-1, 1].
    #[arg(long, default_value = "1", value_parser = parse_gamma)]
    pub gamma: f64,

    /// Number of explicit steps (at least 1).
    #[arg(long, default_value = "10", value_parser = clap::value_parser!(u64).range(1..))]
    pub steps: u64,

    /// Time step: auto-theorem, auto-gershgorin, or a fixed positive value.
    #[arg(long, default_value = "auto-theorem", value_parser = parse_tau)]
    pub tau: TimeStep,

    /// Execution backend.
    #[arg(long, value_enum, default_value = "stencil")]
    pub backend: BackendArg,

    /// Worker threads (default: all available).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: Option<u64>,

    /// Write the diagnostics (or benchmark) JSON report to this path.
    #[arg(long)]
    pub diagnostics: Option<PathBuf>,

    /// Run the benchmark on a synthetic SIZE×SIZE image instead of filtering a file.
    #[arg(long, value_name = "SIZE", value_parser = clap::value_parser!(u64).range(3..))]
    pub benchmark: Option<u64>,
}

/// Failure with the flag it is attributed to.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub kind: &'static str,
    pub flag: Option<String>,
    pub message: String,
}

impl CliError {
    fn new(kind: &'static str, flag: Option<&str>, message: impl Into<String>) -> Self {
        Self {
            kind,
            flag: flag.map(str::to_string),
            message: message.into(),
        }
    }

    fn from_lib(err: Error, io_flag: &str) -> Self {
        let flag = match &err {
            Error::AlphaOutOfRange(_) => Some("--alpha"),
            Error::GammaOutOfRange(_) => Some("--gamma"),
            Error::IndefiniteTensor { .. } => Some("--a"),
            Error::NegativeSigma(_) => Some("--sigma"),
            Error::InvalidLambda(_) => Some("--lambda"),
            Error::InvalidTimeStep(_) | Error::NoStepLimit => Some("--tau"),
            Error::InvalidSteps => Some("--steps"),
            Error::ThreadPool(_) => Some("--threads"),
            Error::Io(_)
            | Error::PgmHeader(_)
            | Error::PgmTruncated { .. }
            | Error::PgmPayload(_)
            | Error::PgmUnsupported(_)
            | Error::ImageTooSmall { .. } => Some(io_flag),
            _ => None,
        };
        let kind = match &err {
            Error::Io(_) => "io",
            Error::PgmHeader(_) | Error::PgmTruncated { .. } | Error::PgmPayload(_) => "format",
            Error::PgmUnsupported(_) => "unsupported_format",
            Error::NonFinite { .. } => "non_finite",
            _ => "invalid_argument",
        };
        Self::new(kind, flag, err.to_string())
    }

    pub fn to_json_line(&self) -> String {
        json!({"error": self.kind, "flag": self.flag, "message": self.message}).to_string()
    }
}

fn warning_line(flag: &str, message: &str) -> String {
    json!({"warning": "tau_exceeds_bound", "flag": flag, "message": message}).to_string()
}

fn clap_flag(err: &clap::Error) -> Option<String> {
    match err.get(ContextKind::InvalidArg) {
        Some(ContextValue::String(s)) => s.split_whitespace().next().map(str::to_string),
        Some(ContextValue::Strings(v)) => v
            .first()
            .and_then(|s| s.split_whitespace().next())
            .map(str::to_string),
        _ => None,
    }
}

/// Successful outcome of a run.
#[derive(Debug)]
pub enum Outcome {
    Filtered {
        report: Box<DiagnosticsReport>,
        warnings: Vec<String>,
    },
    Benchmark(String),
}

impl Cli {
    pub fn scheme_config(&self) -> Result<SchemeConfig, CliError> {
        let params = StencilParams::new(self.alpha, self.gamma)
            .map_err(|e| CliError::from_lib(e, "--input"))?;
        let model = match self.model {
            ModelArg::Eed => TensorModel::Eed {
                sigma: self.sigma,
                diffusivity: Diffusivity::new(self.diffusivity.into(), self.lambda)
                    .map_err(|e| CliError::from_lib(e, "--input"))?,
            },
            ModelArg::Constant => {
                let t = DiffusionTensor::psd(self.a, self.b, self.c)
                    .map_err(|e| CliError::from_lib(e, "--input"))?;
                TensorModel::Constant(t)
            }
            ModelArg::Homogeneous => TensorModel::Constant(DiffusionTensor::IDENTITY),
        };
        let cfg = SchemeConfig {
            steps: self.steps as usize,
            tau: self.tau,
            params,
            model,
            backend: self.backend.into(),
        };
        cfg.validate()
            .map_err(|e| CliError::from_lib(e, "--input"))?;
        Ok(cfg)
    }

    pub fn threads(&self) -> usize {
        self.threads.map_or_else(available_threads, |t| t as usize)
    }

    fn write_report(&self, text: &str) -> Result<(), CliError> {
        if let Some(path) = &self.diagnostics {
            std::fs::write(path, text)
                .map_err(|e| CliError::new("io", Some("--diagnostics"), e.to_string()))?;
        }
        Ok(())
    }

    /// Runs the configured job on a dedicated thread pool.
    pub fn execute(&self) -> Result<Outcome, CliError> {
        let cfg = self.scheme_config()?;
        let threads = self.threads();

        if let Some(size) = self.benchmark {
            let report = benchmark(size as usize, &cfg, threads, BENCH_REPEATS)
                .map_err(|e| CliError::from_lib(e, "--benchmark"))?;
            let text = report.to_json();
            self.write_report(&text)?;
            return Ok(Outcome::Benchmark(text));
        }

        let input = self.input.as_ref().expect("clap enforces --input");
        let output = self.output.as_ref().expect("clap enforces --output");
        let (img, maxval) =
            load_pgm_with_maxval(input).map_err(|e| CliError::from_lib(e, "--input"))?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| CliError::new("invalid_argument", Some("--threads"), e.to_string()))?;
        let (out, trace) = pool
            .install(|| run_diffusion(&img, &cfg))
            .map_err(|e| CliError::from_lib(e, "--input"))?;
        save_pgm(&out, output, maxval).map_err(|e| CliError::from_lib(e, "--output"))?;

        let mut warnings = Vec::new();
        if let TimeStep::Fixed(tau) = cfg.tau {
            if let Some((k, s)) = trace
                .steps
                .iter()
                .enumerate()
                .find(|(_, s)| tau * s.theorem_bound > 2.0)
            {
                warnings.push(warning_line(
                    "--tau",
                    &format!(
                        "tau {tau} exceeds the stability limit {} at step {k}",
                        2.0 / s.theorem_bound
                    ),
                ));
            }
        }
        let report = DiagnosticsReport::new(&cfg, threads, &trace);
        self.write_report(&report.to_json())?;
        Ok(Outcome::Filtered {
            report: Box::new(report),
            warnings,
        })
    }
}

/// Parses `argv` (including the program name), runs, and returns the exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{err}");
                    0
                }
                _ => {
                    let flag = clap_flag(&err);
                    let message = err.to_string();
                    let first = message
                        .lines()
                        .next()
                        .unwrap_or_default()
                        .trim_start_matches("error: ")
                        .to_string();
                    eprintln!(
                        "{}",
                        CliError::new("invalid_argument", flag.as_deref(), first).to_json_line()
                    );
                    2
                }
            };
        }
    };
    match cli.execute() {
        Ok(Outcome::Filtered { warnings, .. }) => {
            for w in warnings {
                eprintln!("{w}");
            }
            0
        }
        Ok(Outcome::Benchmark(text)) => {
            println!("{text}");
            0
        }
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            1
        }
    }
}
