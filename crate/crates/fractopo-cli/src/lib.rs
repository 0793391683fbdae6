//! The `fractopo` command line, as a library so it can be driven in tests.
//!
//! Exit codes: 0 success, 1 a verification came out negative, 2 bad input,
//! 3 a capacity limit was hit.

mod commands;

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use fractopo::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_CAPACITY: i32 = 3;

/// Environment variable overriding the sampling seed (decimal).
pub const SEED_VAR: &str = "FRACTOPO_SEED";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandResult {
    pub exit_code: i32,
    pub report: String,
    /// `key=value` lines, present iff `--porcelain` was given.
    pub porcelain: Option<String>,
}

#[derive(Debug, Parser)]
#[command(name = "fractopo", version, about = "Finite fractal topologies and iterated mean functions")]
struct Cli {
    /// Also emit stable key=value lines.
    #[arg(long, global = true)]
    porcelain: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Finite topologies and indexed families.
    #[command(subcommand)]
    Topo(TopoCmd),
    /// Fractal-family fixtures.
    #[command(subcommand)]
    Family(FamilyCmd),
    /// Evaluate means.
    #[command(subcommand)]
    Mean(MeanCmd),
    /// Sampled graph of a mean, as CSV.
    #[command(subcommand)]
    Graph(GraphCmd),
    /// Three aligned graphs with their delta tags, as CSV.
    #[command(subcommand)]
    Nset(NsetCmd),
    /// Numerical and set-level verifications.
    #[command(subcommand)]
    Verify(VerifyCmd),
    /// The expanding diagram of charts.
    #[command(subcommand)]
    Tree(TreeCmd),
    /// Run the invariant suite on the built-in fixture.
    Selftest {
        /// Break one property of the fixture first (i, ii, iii, iv or v).
        #[arg(long)]
        mutate: Option<String>,
    },
}

#[derive(Debug, Subcommand)]
enum TopoCmd {
    /// Check topology literals, one per line, or an indexed family file.
    Check {
        file: PathBuf,
        /// Product size up to which diagonal opens are enumerated.
        #[arg(long, default_value_t = fractopo::diagonal::DEFAULT_ENUMERATION_CAP)]
        cap: u128,
    },
    /// Count labeled topologies and homeomorphism classes on n points.
    Enumerate {
        #[arg(long)]
        n: usize,
    },
}

#[derive(Debug, Subcommand)]
enum FamilyCmd {
    /// Report the five defining properties.
    Check {
        file: PathBuf,
        /// Break one property first (i, ii, iii, iv or v).
        #[arg(long)]
        mutate: Option<String>,
    },
    /// Refining chain upward from a level-0 key.
    Chains {
        file: PathBuf,
        #[arg(long)]
        from: String,
    },
}

#[derive(Debug, Args)]
struct MeanArgs {
    /// weierstrass:a:b[:K], takagi:w, poly:c0:c1:.., const:c, cos:amp:freq[:phase]
    #[arg(long = "gen", default_value = "weierstrass:0.5:13")]
    generator: String,
    /// Sign string, σ0 first; omit for the raw generator where allowed.
    #[arg(long, allow_hyphen_values = true)]
    signs: Option<String>,
    /// Comma-separated deltas, δ0 first.
    #[arg(long)]
    deltas: Option<String>,
    /// auto, closed or quadrature.
    #[arg(long, default_value = "auto")]
    method: String,
}

#[derive(Debug, Args)]
struct Grid {
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    from: f64,
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    to: f64,
    #[arg(long, default_value_t = 1001)]
    points: usize,
    /// Write CSV here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum MeanCmd {
    /// Value of the iterated mean at one point.
    Eval {
        #[command(flatten)]
        mean: MeanArgs,
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        /// Quadrature tolerance on the mean.
        #[arg(long, default_value_t = fractopo::mean::quadrature::DEFAULT_TOLERANCE)]
        tol: f64,
    },
}

#[derive(Debug, Subcommand)]
enum GraphCmd {
    Dump {
        #[command(flatten)]
        mean: MeanArgs,
        #[command(flatten)]
        grid: Grid,
    },
}

#[derive(Debug, Subcommand)]
enum NsetCmd {
    Dump {
        /// Three generators, separated by commas.
        #[arg(long, default_value = "weierstrass:0.5:13,takagi:0.5,weierstrass:0.6:11")]
        gens: String,
        #[arg(long, allow_hyphen_values = true)]
        signs: String,
        #[arg(long)]
        deltas: String,
        #[arg(long, default_value = "auto")]
        method: String,
        #[command(flatten)]
        grid: Grid,
    },
}

#[derive(Debug, Subcommand)]
enum VerifyCmd {
    /// Appending a level of width δ → 0 recovers the mean.
    Pr1 {
        #[command(flatten)]
        mean: MeanArgs,
        #[arg(long, default_value_t = 20)]
        probes: usize,
        #[arg(long, default_value_t = 1e-2)]
        start: f64,
        #[arg(long, default_value_t = 9)]
        halvings: u32,
    },
    /// Backward mean at x + δ0 against forward mean at x.
    Translation {
        #[arg(long = "gen", default_value = "weierstrass:0.5:13")]
        generator: String,
        #[arg(long, default_value_t = 100)]
        probes: usize,
        #[arg(long, default_value = "quadrature")]
        method: String,
        /// Largest acceptable residual.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Induced-topology identities between levels n and i.
    Formulas {
        file: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        i: usize,
    },
}

#[derive(Debug, Subcommand)]
enum TreeCmd {
    Print {
        #[arg(long, default_value_t = 2)]
        steps: usize,
    },
}

/// Report text plus porcelain pairs and verdict, built by each command.
#[derive(Debug, Default)]
pub(crate) struct Output {
    text: String,
    pairs: Vec<(String, String)>,
    failed: bool,
}

impl Output {
    pub(crate) fn line(&mut self, s: impl AsRef<str>) {
        let _ = writeln!(self.text, "{}", s.as_ref());
    }

    pub(crate) fn pair(&mut self, key: &str, value: impl ToString) {
        self.pairs.push((key.to_string(), value.to_string()));
    }

    pub(crate) fn fail(&mut self) {
        self.failed = true;
    }
}

pub(crate) enum CliError {
    Lib(Error),
    Io(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

/// Runs one command line; `argv[0]` is the program name.
pub fn run<I, T>(argv: I) -> CommandResult
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_INPUT,
            };
            return CommandResult {
                exit_code: code,
                report: e.render().to_string(),
                porcelain: None,
            };
        }
    };
    let mut out = Output::default();
    let result = commands::dispatch(cli.command, &mut out);
    let exit_code = match result {
        Ok(()) if out.failed => EXIT_FAILED,
        Ok(()) => EXIT_OK,
        Err(e) => {
            let (code, kind, msg) = match e {
                CliError::Lib(e @ Error::Capacity(_)) => (EXIT_CAPACITY, "capacity", e.to_string()),
                CliError::Lib(e) => (EXIT_INPUT, "input", e.to_string()),
                CliError::Io(m) => (EXIT_INPUT, "input", m),
            };
            out.line(format!("error: {msg}"));
            out.pair("error", kind);
            code
        }
    };
    out.pair("exit", exit_code);
    let porcelain = cli.porcelain.then(|| {
        out.pairs
            .iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect::<String>()
    });
    CommandResult {
        exit_code,
        report: out.text,
        porcelain,
    }
}
