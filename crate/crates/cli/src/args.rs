use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Clone, Parser)]
#[command(name = "smallball", version, about = "Small-deviation constants and numerical oracles for weighted stationary Gaussian processes")]
pub struct Cli {
    /// Worker threads for eigensolves, Monte Carlo and path batches.
    #[arg(long, global = true, env = "SMALLBALL_WORKERS", default_value_t = 1)]
    pub workers: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Closed-form small-ball constant for a model and weight.
    Constant(ConstantArgs),
    /// Eigenvalues of a discretized weighted covariance operator, with a power-law fit.
    Eigs(EigsArgs),
    /// Theorem, Chernoff and Monte Carlo log-probabilities over a list of ε.
    Smallball(SmallballArgs),
    /// Monte Carlo estimate of P(Σ λ_n ξ_n² ≤ ε²).
    Mc(McArgs),
    /// Sample paths or weighted path norms.
    Sample(SampleArgs),
    /// Run the acceptance criteria.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Theorem {
    PeriodicReal,
    PeriodicProper,
    ContinuousReal,
    ContinuousProper,
    Sequence,
    Fou,
}

/// A positive length: a number, `pi` or `2pi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scale(pub f64);

impl FromStr for Scale {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let v = match s.trim() {
            "2pi" | "tau" => std::f64::consts::TAU,
            "pi" => std::f64::consts::PI,
            other => other.parse::<f64>().map_err(|e| format!("`{other}`: {e}"))?,
        };
        if !(v > 0.0) || !v.is_finite() {
            return Err(format!("scale must be positive, got {s}"));
        }
        Ok(Scale(v))
    }
}

/// Comma-separated window `n1,n2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowArg(pub usize, pub usize);

impl FromStr for WindowArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s.split_once(',').ok_or("expected `n1,n2`")?;
        let a = a.trim().parse().map_err(|e| format!("n1: {e}"))?;
        let b = b.trim().parse().map_err(|e| format!("n2: {e}"))?;
        Ok(WindowArg(a, b))
    }
}

/// Moving-average coefficients: `delta0` or a JSON file `{"offset": i, "values": [...]}`.
#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientArg {
    Delta0,
    File(PathBuf),
}

impl FromStr for CoefficientArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "delta0" => CoefficientArg::Delta0,
            path => CoefficientArg::File(path.into()),
        })
    }
}

/// `none`, `chernoff`, or a fixed non-negative tilt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TiltArg {
    None,
    Chernoff,
    Fixed(f64),
}

impl FromStr for TiltArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "none" => TiltArg::None,
            "chernoff" => TiltArg::Chernoff,
            v => TiltArg::Fixed(v.parse().map_err(|e| format!("`{v}`: {e}"))?),
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct SequenceArgs {
    /// Decay exponent of the weight sequence, d_k = d±|k|^{-p}.
    #[arg(long)]
    pub p: Option<f64>,
    /// Moving-average coefficients.
    #[arg(long, value_name = "delta0|FILE")]
    pub a: Option<CoefficientArg>,
    /// Sets d₋ = d₊.
    #[arg(long, conflicts_with_all = ["d_minus", "d_plus"])]
    pub d_sym: Option<f64>,
    #[arg(long, requires = "d_plus")]
    pub d_minus: Option<f64>,
    #[arg(long, requires = "d_minus")]
    pub d_plus: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Spectral model JSON.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Weight JSON.
    #[arg(long)]
    pub weight: Option<PathBuf>,
    /// Maps a periodic weight given on another period onto [0, 2π).
    #[arg(long)]
    pub map_period: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ConstantArgs {
    #[arg(long, value_enum)]
    pub theorem: Theorem,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub sequence: SequenceArgs,
    /// fOU level h.
    #[arg(long)]
    pub h: Option<f64>,
    /// Restates the result for the norm divided by this factor (e.g. `2pi`).
    #[arg(long)]
    pub rescale: Option<Scale>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Where eigenvalues come from.
#[derive(Debug, Clone, Args)]
pub struct SourceArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub sequence: SequenceArgs,
    /// Mode (or index) cutoff for periodic and sequence matrices.
    #[arg(long = "k", default_value_t = 256)]
    pub k: usize,
    /// Nyström nodes for continuous models.
    #[arg(long = "n", default_value_t = 800)]
    pub n: usize,
    /// Explicit eigenvalues, comma-separated.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub lambda: Option<Vec<f64>>,
    /// Synthetic law λ_n = C n^{-r}: exponent r.
    #[arg(long)]
    pub power: Option<f64>,
    /// Synthetic law: number of terms.
    #[arg(long, default_value_t = 1000)]
    pub terms: usize,
    /// Synthetic law: prefactor C.
    #[arg(long, default_value_t = 1.0)]
    pub prefactor: f64,
    /// Eigenvalue CSV as written by `eigs --format csv`.
    #[arg(long)]
    pub eigs_csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EigsArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Fit window `n1,n2` (1-based, inclusive); defaults to [N/20, N/4].
    #[arg(long)]
    pub window: Option<WindowArg>,
    /// Exponent θ for the Δ_θ plateau; defaults to 1/r̂.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Replace the eigenvalues by their proper doubling.
    #[arg(long)]
    pub proper: bool,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Also write the eigenvalue CSV here.
    #[arg(long)]
    pub csv_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SmallballArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, value_delimiter = ',', num_args = 1.., default_value = "1e-1,1e-2,1e-3,1e-4")]
    pub eps: Vec<f64>,
    /// Do not attach the power-law continuation to the eigenvalue list.
    #[arg(long)]
    pub no_tail: bool,
    /// Monte Carlo samples per ε (0 disables the column).
    #[arg(long, default_value_t = 0)]
    pub mc_samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct McArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long)]
    pub eps: f64,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "none", value_name = "none|chernoff|S")]
    pub tilt: TiltArg,
}

#[derive(Debug, Clone, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Mode cutoff for periodic models.
    #[arg(long = "k", default_value_t = 256)]
    pub k: usize,
    /// Grid points on [0, 2π) for periodic models.
    #[arg(long, default_value_t = 1024)]
    pub grid: usize,
    /// Nyström nodes for continuous models.
    #[arg(long = "n", default_value_t = 256)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub stream: u64,
    /// Draw a proper complex process instead of a real one.
    #[arg(long)]
    pub proper: bool,
    /// Output weighted squared norms of this many paths instead of one path.
    #[arg(long)]
    pub paths: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Run only these criteria.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub only: Vec<String>,
}
