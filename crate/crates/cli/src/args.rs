use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "dfnls",
    version,
    about = "Odd periodic standing waves of the defocusing fractional NLS and their Krein-index stability verdict"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for a single wave and write its profile.
    Solve(SolveArgs),
    /// Solve, count negative eigenvalues, compute V and print the verdict.
    Krein(KreinArgs),
    /// Continuation sweeps in omega for several exponents.
    Sweep(SweepArgs),
    /// Eigenvalues and counts of L1 and L2 about a solved wave.
    Spectrum(SpectrumArgs),
    /// Compare the s = 1 solve against the closed-form elliptic wave.
    ValidateExact(ValidateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Number of grid points (power of two).
    #[arg(long, default_value_t = 4096)]
    pub n_modes: usize,
    /// Newton stopping tolerance on the max-norm residual.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Relative tolerance of each GMRES solve.
    #[arg(long, default_value_t = 1e-8)]
    pub gmres_tol: f64,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Directory for artifacts; must be empty unless --force is given.
    #[arg(long, default_value = "dfnls-out")]
    pub output_dir: PathBuf,
    /// Write into a nonempty output directory.
    #[arg(long)]
    pub force: bool,
    /// Print a JSON summary on stdout instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SpectralArgs {
    /// Basis cutoff M per parity sector (default N/4).
    #[arg(long)]
    pub basis_cutoff: Option<usize>,
    /// Kernel tolerance (default 1e-4 * max(1, omega)).
    #[arg(long)]
    pub kernel_tol: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    /// Fractional exponent in (1/4, 1].
    #[arg(long)]
    pub s: f64,
    /// Wave frequency (> 1 for a nontrivial wave).
    #[arg(long, allow_negative_numbers = true)]
    pub omega: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct KreinArgs {
    #[command(flatten)]
    pub wave: SolveArgs,
    #[command(flatten)]
    pub spectral: SpectralArgs,
    /// Centered-difference step for the d/domega ||phi||^2 cross-check.
    #[arg(long, default_value_t = 1e-3)]
    pub fd_step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OperatorChoice {
    L1,
    L2,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ParityChoice {
    Full,
    Odd,
    Even,
}

#[derive(Debug, Clone, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub wave: SolveArgs,
    #[command(flatten)]
    pub spectral: SpectralArgs,
    #[arg(long, value_enum, default_value_t = OperatorChoice::Both)]
    pub operator: OperatorChoice,
    #[arg(long, value_enum, default_value_t = ParityChoice::Full)]
    pub parity: ParityChoice,
    /// Lowest eigenvalues kept per report.
    #[arg(long, default_value_t = 12)]
    pub keep: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Comma-separated exponents, e.g. 0.5,0.7,0.9,1.
    #[arg(long, value_delimiter = ',', required = true)]
    pub s_list: Vec<f64>,
    #[arg(long, default_value_t = 1.1)]
    pub omega_min: f64,
    #[arg(long, default_value_t = 3.0)]
    pub omega_max: f64,
    #[arg(long, default_value_t = 0.1)]
    pub omega_step: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub fd_step: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub spectral: SpectralArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub omega: f64,
    /// Largest accepted max-norm error.
    #[arg(long, default_value_t = 1e-5)]
    pub max_err: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}
