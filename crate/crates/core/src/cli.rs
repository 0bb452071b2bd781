//! The `phaseobs` command surface.
//!
//! Exit status 0 means success, 1 a broken invocation (usage, I/O, parse), and
//! 2 an input that is well formed but not physical (for example a matrix that
//! is not positive semidefinite). Failures print a JSON object with fields
//! `code`, `message` and `detail` on standard error and write no output file.

use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde_json::{json, Value};

use crate::distribution::{kernel_apply, kernel_c, density, sample, window_probability};
use crate::hardy::{HardyState, PhaseWindow};
use crate::io::{self, IoError};
use crate::observable::{kraus_decompose, validate, PhaseMatrix};
use crate::spectral::{localization_max, localization_sweep, moment_spectrum};

/// Environment variable capping the worker threads used inside one run.
pub const THREADS_ENV: &str = "PHASEOBS_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Check that a matrix is a phase matrix.
    Validate,
    /// Density on a uniform grid (CSV theta,value).
    Density,
    /// Probability of a phase window (JSON).
    WindowProb,
    /// Contraction (Kraus) factorization of the matrix (JSON).
    Kraus,
    /// Kernel diagonal C_s(0,0) against (s+1)^2, optionally the kernel quadrature (JSON).
    KernelCheck,
    /// Spectrum of the first-moment operator (JSON).
    Moment,
    /// Largest window-operator eigenvalue and its eigenvector (JSON).
    Localize,
    /// lambda_max over truncations or over the exponential family parameter (CSV).
    Sweep,
    /// Phase outcomes drawn by inverse-CDF sampling, one per line.
    Sample,
    /// Exact CDF on a uniform grid including 2pi (CSV theta,value).
    Cdf,
}

#[derive(Debug, Clone, Parser)]
#[command(name = "phaseobs", version, about = "Covariant phase observables on truncated number space")]
pub struct RunConfig {
    #[arg(value_enum)]
    pub command: Command,

    /// Matrix JSON file, or one of `canonical`, `trivial`, `exponential` (with --dim, --q).
    #[arg(long)]
    pub matrix: Option<String>,

    /// State JSON file.
    #[arg(long)]
    pub state: Option<PathBuf>,

    /// Window JSON file or inline arcs such as `0:pi,3pi/2:2pi`.
    #[arg(long)]
    pub window: Option<String>,

    /// Truncation S.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub dim: Option<u64>,

    /// Grid size G.
    #[arg(long, default_value_t = 256, value_parser = clap::value_parser!(u64).range(2..))]
    pub grid: u64,

    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Comma-separated truncations for `sweep`.
    #[arg(long, value_delimiter = ',')]
    pub truncations: Vec<usize>,

    /// Exponential family parameter; a comma list makes `sweep` run over q.
    #[arg(long, value_delimiter = ',')]
    pub q: Vec<f64>,

    /// Kernel order s for `kernel-check` with a state.
    #[arg(long)]
    pub order: Option<usize>,

    /// Phase point for `kernel-check` with a state.
    #[arg(long, default_value_t = 0.0)]
    pub theta: f64,

    /// Hermiticity and unit-diagonal tolerance for `validate`.
    #[arg(long, default_value_t = crate::observable::TOL_ENTRY)]
    pub tol: f64,

    /// Reject explicit matrices whose diagonal is not exactly 1.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug)]
pub struct CliError {
    pub exit: u8,
    pub code: &'static str,
    pub message: String,
    pub detail: Value,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self { exit: 1, code: "usage", message: message.into(), detail: Value::Null }
    }

    pub fn to_json(&self) -> String {
        json!({ "code": self.code, "message": self.message, "detail": self.detail }).to_string()
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        let (code, detail) = match &e {
            crate::Error::InvalidPhaseMatrix(report) => ("invalid-matrix", json!(report)),
            _ => ("invalid-input", Value::Null),
        };
        Self { exit: 2, code, message: e.to_string(), detail }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Invalid(inner) => inner.into(),
            IoError::Io { .. } => Self { exit: 1, code: "io", message: e.to_string(), detail: Value::Null },
            IoError::Json(_) | IoError::Format(_) => {
                Self { exit: 1, code: "parse", message: e.to_string(), detail: Value::Null }
            }
        }
    }
}

type CliResult<T> = Result<T, CliError>;

/// Runs one command and writes its output to `--out` (atomically) or stdout.
pub fn run(cfg: &RunConfig) -> CliResult<()> {
    let bytes = with_thread_cap(|| execute(cfg))?;
    match &cfg.out {
        Some(path) => io::write_atomic(path, &bytes)?,
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(&bytes)
                .and_then(|_| stdout.flush())
                .map_err(|source| IoError::Io { path: PathBuf::from("<stdout>"), source })?;
        }
    }
    Ok(())
}

fn with_thread_cap<T: Send>(f: impl FnOnce() -> CliResult<T> + Send) -> CliResult<T> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return f();
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::usage(format!("{THREADS_ENV} must be a positive integer, got `{raw}`")))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::usage(e.to_string()))?;
    pool.install(f)
}

/// Computes the output of one command without touching the filesystem beyond reading inputs.
pub fn execute(cfg: &RunConfig) -> CliResult<Vec<u8>> {
    let text = match cfg.command {
        Command::Validate => cmd_validate(cfg)?,
        Command::Density => {
            let (m, psi) = matrix_and_state(cfg)?;
            io::density_csv(&m, &psi, grid(cfg))?
        }
        Command::Cdf => {
            let (m, psi) = matrix_and_state(cfg)?;
            io::cdf_csv(&m, &psi, grid(cfg))?
        }
        Command::WindowProb => {
            let (m, psi) = matrix_and_state(cfg)?;
            let window = window(cfg)?;
            let p = window_probability(&m, &psi, &window)?;
            json_line(json!({ "probability": p, "measure": window.measure() }))
        }
        Command::Kraus => {
            let m = matrix(cfg, None)?;
            io::kraus_to_json(&kraus_decompose(&m)?) + "\n"
        }
        Command::KernelCheck => cmd_kernel_check(cfg)?,
        Command::Moment => {
            let m = matrix(cfg, None)?;
            let dim = truncation(cfg, &m)?;
            let spectrum = moment_spectrum(&m, dim)?;
            let mean = spectrum.iter().sum::<f64>() / dim as f64;
            json_line(json!({ "dim": dim, "spectrum": spectrum, "mean": mean }))
        }
        Command::Localize => {
            let m = matrix(cfg, None)?;
            let dim = truncation(cfg, &m)?;
            let loc = localization_max(&m, &window(cfg)?, dim)?;
            let maximizer: Value = serde_json::from_str(&io::state_to_json(&loc.maximizer))
                .expect("state JSON is valid");
            json_line(json!({
                "dim": dim,
                "lambda_max": loc.lambda_max,
                "deficiency": loc.deficiency,
                "maximizer": maximizer,
            }))
        }
        Command::Sweep => cmd_sweep(cfg)?,
        Command::Sample => {
            let (m, psi) = matrix_and_state(cfg)?;
            io::samples_text(&sample(&m, &psi, cfg.samples, cfg.seed)?)
        }
    };
    Ok(text.into_bytes())
}

fn json_line(v: Value) -> String {
    let mut s = v.to_string();
    s.push('\n');
    s
}

fn grid(cfg: &RunConfig) -> usize {
    cfg.grid as usize
}

fn read(path: &Path) -> CliResult<String> {
    Ok(io::read_to_string(path)?)
}

/// `--matrix` as a file, or a family name built at `--dim` (else `fallback_dim`).
fn matrix(cfg: &RunConfig, fallback_dim: Option<usize>) -> CliResult<PhaseMatrix> {
    let spec = cfg.matrix.as_deref().ok_or_else(|| CliError::usage("--matrix is required"))?;
    let path = Path::new(spec);
    if path.is_file() {
        return Ok(io::parse_matrix(&read(path)?, cfg.strict)?);
    }
    let dim = cfg
        .dim
        .map(|d| d as usize)
        .or(fallback_dim)
        .ok_or_else(|| CliError::usage(format!("--dim is required with --matrix {spec}")))?;
    let m = match spec {
        "canonical" => PhaseMatrix::canonical(dim)?,
        "trivial" => PhaseMatrix::trivial(dim)?,
        "exponential" => match cfg.q.as_slice() {
            [q] => PhaseMatrix::exponential(*q, dim)?,
            _ => return Err(CliError::usage("--matrix exponential needs exactly one --q value")),
        },
        _ => return Err(CliError::usage(format!("--matrix `{spec}` is neither a file nor a family name"))),
    };
    Ok(m)
}

fn state(cfg: &RunConfig) -> CliResult<HardyState> {
    let path = cfg.state.as_deref().ok_or_else(|| CliError::usage("--state is required"))?;
    Ok(io::parse_state(&read(path)?)?)
}

fn matrix_and_state(cfg: &RunConfig) -> CliResult<(PhaseMatrix, HardyState)> {
    let psi = state(cfg)?;
    let m = matrix(cfg, Some(psi.dim()))?;
    Ok((m, psi))
}

fn window(cfg: &RunConfig) -> CliResult<PhaseWindow> {
    let spec = cfg.window.as_deref().ok_or_else(|| CliError::usage("--window is required"))?;
    let path = Path::new(spec);
    if path.is_file() {
        Ok(io::parse_window(&read(path)?)?)
    } else {
        Ok(io::parse_inline_window(spec)?)
    }
}

fn truncation(cfg: &RunConfig, m: &PhaseMatrix) -> CliResult<usize> {
    Ok(cfg.dim.map_or(m.dim(), |d| d as usize))
}

fn cmd_validate(cfg: &RunConfig) -> CliResult<String> {
    let spec = cfg.matrix.as_deref().ok_or_else(|| CliError::usage("--matrix is required"))?;
    let (kind, entries) = if Path::new(spec).is_file() {
        io::parse_matrix_entries(&read(Path::new(spec))?)?
    } else {
        let m = matrix(cfg, None)?;
        (m.family().name().to_string(), m.entries().clone())
    };
    let report = validate(&entries, cfg.tol)?;
    if cfg.strict && report.is_valid() {
        PhaseMatrix::from_entries(entries, true)?;
    }
    if !report.is_valid() {
        return Err(CliError {
            exit: 2,
            code: "invalid-matrix",
            message: report.to_string(),
            detail: json!(report),
        });
    }
    Ok(json_line(json!({ "kind": kind, "report": "valid", "detail": report })))
}

fn cmd_kernel_check(cfg: &RunConfig) -> CliResult<String> {
    let psi = cfg.state.as_ref().map(|_| state(cfg)).transpose()?;
    let m = matrix(cfg, psi.as_ref().map(HardyState::dim))?;
    let mut points = Vec::with_capacity(m.dim());
    let mut sharp = true;
    for s in 0..m.dim() {
        let value = kernel_c(&m, s, 0.0, 0.0)?;
        let bound = ((s + 1) * (s + 1)) as f64;
        sharp &= (value.re - bound).abs() <= 1e-9;
        points.push(json!({ "s": s, "c00": value.re, "c00_im": value.im, "bound": bound }));
    }
    let mut out = json!({ "dim": m.dim(), "sharp": sharp, "points": points });
    if let Some(psi) = psi {
        let s = cfg.order.unwrap_or_else(|| psi.band_limit());
        let quadrature = kernel_apply(&m, s, &psi, cfg.theta, grid(cfg))?;
        let direct = density(&m, &psi, &psi, cfg.theta)?.re;
        out["apply"] = json!({
            "s": s,
            "theta": cfg.theta,
            "grid": cfg.grid,
            "quadrature": quadrature,
            "density": direct,
            "difference": (quadrature - direct).abs(),
        });
    }
    Ok(json_line(out))
}

fn cmd_sweep(cfg: &RunConfig) -> CliResult<String> {
    let window = window(cfg)?;
    if cfg.q.len() > 1 || (cfg.truncations.is_empty() && !cfg.q.is_empty()) {
        if cfg.matrix.as_deref() != Some("exponential") {
            return Err(CliError::usage("a q sweep needs --matrix exponential"));
        }
        let dim = cfg.dim.ok_or_else(|| CliError::usage("a q sweep needs --dim"))? as usize;
        let rows = cfg
            .q
            .iter()
            .map(|&q| {
                let m = PhaseMatrix::exponential(q, dim)?;
                Ok((io::format_float(q), localization_max(&m, &window, dim)?.lambda_max))
            })
            .collect::<CliResult<Vec<_>>>()?;
        return Ok(io::csv(("q", "lambda_max"), rows));
    }
    if cfg.truncations.is_empty() {
        return Err(CliError::usage("sweep needs --truncations or a --q list"));
    }
    let largest = *cfg.truncations.iter().max().expect("nonempty");
    let m = matrix(cfg, Some(largest))?;
    let rows = localization_sweep(&m, &window, &cfg.truncations)?;
    Ok(io::csv(("S", "lambda_max"), rows))
}
