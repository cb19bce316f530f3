//! Command-line front end for `miw-core`.
//!
//! The binary is a thin wrapper around [`run`]; the acceptance checks live in
//! [`acceptance`] so that the test suite and `miw check` share one
//! implementation.

pub mod acceptance;
mod commands;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use miw_core::numerics::QuadratureSpec;
use miw_core::solver::Family;
use miw_core::targets::BaselineFamily;
use thiserror::Error;

pub use commands::execute;

#[derive(Debug, Parser)]
#[command(
    name = "miw",
    version,
    about = "Many-interacting-worlds recursions and Stein bounds"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Solve the recursion and print the configuration.
    Solve(CommonArgs),
    /// Structural defects of the solved configuration.
    Verify(CommonArgs),
    /// Energies V, U, H and the minimizer certificate.
    Energy(CommonArgs),
    /// Piecewise-constant density over the gaps plus target pdf samples.
    Density {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum, default_value_t = DensityKind::Histogram)]
        kind: DensityKind,
    },
    /// Coupling expectations and the Wasserstein bound.
    Coupling(CommonArgs),
    /// Sup norms of the Stein solution bundle for the standard test functions.
    SteinCheck(CommonArgs),
    /// Distances and coupling terms over a list of N.
    Rates(CommonArgs),
    /// Fixed-point defect of the square-law transform.
    FixedPoint(CommonArgs),
    /// Run one acceptance criterion, or all of them.
    Check {
        #[arg(long, default_value = "all")]
        criterion: CriterionArg,
        #[arg(long = "out-path")]
        out_path: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Ground,
    Maxwell,
    HermiteSq,
    Monomial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DensityKind {
    /// Mass 1/(N-1) spread uniformly over each gap.
    Histogram,
    /// Generalized zero-bias density of the configuration.
    Gzb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriterionArg {
    All,
    One(u8),
}

impl std::str::FromStr for CriterionArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "all" {
            return Ok(CriterionArg::All);
        }
        match s.parse::<u8>() {
            Ok(id) if acceptance::CRITERIA.contains(&id) => Ok(CriterionArg::One(id)),
            _ => Err(format!("expected 1..=10 or 'all', got '{s}'")),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    #[arg(long, value_enum, default_value_t = FamilyArg::Maxwell)]
    pub family: FamilyArg,
    /// Hermite order for `hermite-sq`.
    #[arg(long)]
    pub k: Option<u32>,
    /// Even exponent for `monomial`.
    #[arg(long)]
    pub r: Option<u32>,
    /// Number of worlds.
    #[arg(long)]
    pub n: Option<usize>,
    /// Comma-separated list of N for `rates`.
    #[arg(long = "n-list", value_delimiter = ',')]
    pub n_list: Vec<usize>,
    #[arg(long = "out", value_enum)]
    pub out: Option<OutFormat>,
    #[arg(long = "out-path")]
    pub out_path: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    pub abs_tol: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub rel_tol: Option<f64>,
    #[arg(long)]
    pub max_subdivisions: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub tail_cutoff: Option<f64>,
    /// Grid step for `stein-check`.
    #[arg(long, allow_negative_numbers = true)]
    pub grid_step: Option<f64>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] miw_core::Error),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{failed} acceptance criteria failed")]
    CheckFailed { failed: usize },
}

impl CliError {
    /// 1 for rejected input, 2 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } => 1,
            CliError::Core(e) if e.is_numerical() => 2,
            CliError::Core(_) => 1,
            CliError::CheckFailed { .. } => 2,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

impl CommonArgs {
    /// Validates the family flags and maps them to a solver family.
    pub fn resolve_family(&self) -> Result<Family, CliError> {
        if self.k.is_some() && self.family != FamilyArg::HermiteSq {
            return Err(usage("--k only applies to --family hermite-sq"));
        }
        if self.r.is_some() && self.family != FamilyArg::Monomial {
            return Err(usage("--r only applies to --family monomial"));
        }
        Ok(match self.family {
            FamilyArg::Ground => Family::Ground,
            FamilyArg::Maxwell => Family::Maxwell,
            FamilyArg::HermiteSq => {
                let k = self
                    .k
                    .ok_or_else(|| usage("--k is required for --family hermite-sq"))?;
                if k > miw_core::targets::MAX_ORDER {
                    return Err(usage(format!(
                        "--k must be at most {}, got {k}",
                        miw_core::targets::MAX_ORDER
                    )));
                }
                Family::General(BaselineFamily::HermiteSquare { k })
            }
            FamilyArg::Monomial => {
                let r = self
                    .r
                    .ok_or_else(|| usage("--r is required for --family monomial"))?;
                if r % 2 != 0 {
                    return Err(usage(format!("--r must be even, got {r}")));
                }
                Family::General(BaselineFamily::Monomial { r })
            }
        })
    }

    /// Validates `--n` against the family's parity requirement.
    pub fn resolve_n(&self, family: Family, command: &str) -> Result<usize, CliError> {
        let n = self
            .n
            .ok_or_else(|| usage(format!("--n is required for {command}")))?;
        check_n(family, n)?;
        Ok(n)
    }

    pub fn quadrature(&self) -> Result<QuadratureSpec, CliError> {
        let mut spec = QuadratureSpec::default();
        for (flag, v) in [
            ("--abs-tol", self.abs_tol),
            ("--rel-tol", self.rel_tol),
            ("--tail-cutoff", self.tail_cutoff),
            ("--grid-step", self.grid_step),
        ] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(usage(format!(
                        "{flag} must be positive and finite, got {v}"
                    )));
                }
            }
        }
        if self.max_subdivisions == Some(0) {
            return Err(usage("--max-subdivisions must be at least 1"));
        }
        if let Some(v) = self.abs_tol {
            spec.abs_tol = v;
        }
        if let Some(v) = self.rel_tol {
            spec.rel_tol = v;
        }
        if let Some(v) = self.max_subdivisions {
            spec.max_subdivisions = v;
        }
        if let Some(v) = self.tail_cutoff {
            spec.tail_cutoff = v;
        }
        Ok(spec)
    }

    /// Overrides actually given on the command line, for echoing into output.
    pub fn overrides(&self) -> Vec<(&'static str, f64)> {
        let mut out = Vec::new();
        if let Some(v) = self.abs_tol {
            out.push(("abs_tol", v));
        }
        if let Some(v) = self.rel_tol {
            out.push(("rel_tol", v));
        }
        if let Some(v) = self.max_subdivisions {
            out.push(("max_subdivisions", v as f64));
        }
        if let Some(v) = self.tail_cutoff {
            out.push(("tail_cutoff", v));
        }
        if let Some(v) = self.grid_step {
            out.push(("grid_step", v));
        }
        out
    }
}

fn check_n(family: Family, n: usize) -> Result<(), CliError> {
    if n < 2 {
        return Err(usage(format!("--n must be at least 2, got {n}")));
    }
    let odd_forbidden = match family {
        Family::Maxwell => true,
        _ => family.baseline()?.vanishes_at_origin(),
    };
    if odd_forbidden && n % 2 == 1 {
        return Err(usage(format!(
            "--n: parity violation, the {family} recursion requires an even number of worlds, got N = {n}"
        )));
    }
    Ok(())
}

/// Parses `args` and runs the command, writing to stdout or `--out-path`.
/// Returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
