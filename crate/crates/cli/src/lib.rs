//! Command-line front end: formula sweeps, Monte Carlo runs, formula-vs-MC
//! comparison and the invariant self-test.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod compare;
pub mod config;
pub mod output;
pub mod selftest;

use config::{Format, Param, RunConfig, PRESETS};
use output::Table;

pub use compare::{compare, Target};
pub use selftest::selftest;

/// Exit codes: 0 success, 1 a requested check failed, 2 usage or config
/// error, 3 numerical failure.
pub mod exit {
    pub const OK: i32 = 0;
    pub const CHECK_FAILED: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const NUMERICAL: i32 = 3;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error("{}: {}", .0.name(), .0)]
    Numerical(#[from] parisian_core::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Numerical(_) => exit::NUMERICAL,
            _ => exit::USAGE,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// A finished table plus whether every check in it passed.
pub struct Report {
    pub table: Table,
    pub ok: bool,
}

impl From<Table> for Report {
    fn from(table: Table) -> Self {
        Report { table, ok: true }
    }
}

#[derive(Parser, Debug)]
#[command(name = "parisian", version, about = "Parisian ruin functionals for spectrally negative Levy processes")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Default)]
pub struct GlobalArgs {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Built-in model, replaces the config's model block.
    #[arg(long, global = true, value_parser = PRESETS)]
    pub model: Option<String>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write the table here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true)]
    pub talbot_nodes: Option<usize>,
    #[arg(long, global = true)]
    pub lambda_tol: Option<f64>,
    #[arg(long, global = true)]
    pub zmax: Option<f64>,
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    #[arg(long, global = true, value_parser = parse_count)]
    pub n_paths: Option<u64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub horizon: Option<f64>,
}

/// Grid overrides; each takes a comma separated list.
#[derive(Args, Debug, Default, Clone)]
pub struct QueryArgs {
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub x: Option<Vec<f64>>,
    /// Barrier levels, `inf` allowed.
    #[arg(long, value_delimiter = ',')]
    pub b: Option<Vec<Param>>,
    #[arg(long, value_delimiter = ',')]
    pub q: Option<Vec<f64>>,
    /// Exponents, `phi` stands for `Phi(q)`.
    #[arg(long, value_delimiter = ',')]
    pub lam: Option<Vec<Param>>,
    #[arg(long, value_delimiter = ',')]
    pub r: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub y: Option<Vec<f64>>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Laplace exponent and its derivative.
    Psi {
        #[command(flatten)]
        query: QueryArgs,
    },
    /// Right inverse of the Laplace exponent.
    Phi {
        #[command(flatten)]
        query: QueryArgs,
    },
    /// q-scale function W^(q)(x).
    Scale {
        #[command(flatten)]
        query: QueryArgs,
        /// Also print the Phi(q)-tilted function.
        #[arg(long)]
        tilted: bool,
    },
    /// Lambda^(q)(x, r).
    LambdaKernel {
        #[command(flatten)]
        query: QueryArgs,
    },
    /// Parisian ruin identities.
    Parisian {
        #[command(subcommand)]
        kind: ParisianKind,
    },
    /// Expected discounted payoff for exponential-mixture payoffs.
    Value {
        #[command(flatten)]
        query: QueryArgs,
        /// Running payoff as `w:lam` pairs.
        #[arg(long, value_delimiter = ',', value_parser = parse_term, allow_negative_numbers = true)]
        g: Option<Vec<(f64, f64)>>,
        /// Payoff at Parisian ruin as `w:lam` pairs.
        #[arg(long, value_delimiter = ',', value_parser = parse_term, allow_negative_numbers = true)]
        f_below: Option<Vec<(f64, f64)>>,
        /// Payoff on reaching the barrier.
        #[arg(long, allow_negative_numbers = true)]
        f_at_b: Option<f64>,
    },
    /// Monte Carlo estimates.
    Simulate {
        #[command(flatten)]
        query: QueryArgs,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "ruin")]
        estimand: Vec<commands::EstimandKind>,
        /// Occupation bin width around each `y`.
        #[arg(long, default_value_t = 0.1)]
        bin_width: f64,
    },
    /// Formula against Monte Carlo on a query grid.
    Compare {
        #[arg(value_enum)]
        target: Target,
        /// Overrides applied to the chosen grid.
        #[command(flatten)]
        query: QueryArgs,
        #[arg(long, value_enum, default_value = "standard")]
        grid: compare::GridChoice,
    },
    /// Invariant residual table.
    Selftest,
}

#[derive(Subcommand, Debug)]
pub enum ParisianKind {
    Joint(QueryArgs),
    Exit(QueryArgs),
    Potential(QueryArgs),
    Density {
        #[command(flatten)]
        query: QueryArgs,
        /// Whole-line density instead of the `y >= 0` formula.
        #[arg(long)]
        full: bool,
    },
    RuinProb(QueryArgs),
}

fn parse_count(s: &str) -> Result<u64, String> {
    let v: f64 = s.parse().map_err(|_| format!("not a number: {s}"))?;
    if v >= 1.0 && v.fract() == 0.0 && v <= 2f64.powi(53) {
        Ok(v as u64)
    } else {
        Err(format!("expected a positive integer, got {s}"))
    }
}

fn parse_term(s: &str) -> Result<(f64, f64), String> {
    let (w, lam) = s.split_once(':').ok_or_else(|| format!("expected w:lam, got {s}"))?;
    let w = w.trim().parse().map_err(|_| format!("bad weight in {s}"))?;
    let lam = lam.trim().parse().map_err(|_| format!("bad exponent in {s}"))?;
    Ok((w, lam))
}

impl GlobalArgs {
    /// Config file, then preset, then flags.
    pub fn resolve(&self) -> CliResult<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(name) = &self.model {
            cfg.model = config::ModelConfig::preset(name).ok_or_else(|| CliError::Usage(format!("unknown model {name}")))?;
        }
        if let Some(f) = self.format {
            cfg.output.format = f;
        }
        if let Some(p) = &self.output {
            cfg.output.path = Some(p.display().to_string());
        }
        let n = &mut cfg.numeric;
        n.talbot_nodes = self.talbot_nodes.unwrap_or(n.talbot_nodes);
        n.lambda_tol = self.lambda_tol.unwrap_or(n.lambda_tol);
        n.zmax = self.zmax.unwrap_or(n.zmax);
        n.dt = self.dt.or(n.dt);
        let s = &mut cfg.sim;
        s.n_paths = self.n_paths.unwrap_or(s.n_paths);
        s.seed = self.seed.unwrap_or(s.seed);
        s.horizon = self.horizon.unwrap_or(s.horizon);
        Ok(cfg)
    }
}

impl QueryArgs {
    pub fn apply(&self, cfg: &mut RunConfig) {
        let g = &mut cfg.query;
        let set = |dst: &mut Vec<f64>, src: &Option<Vec<f64>>| {
            if let Some(v) = src {
                *dst = v.clone();
            }
        };
        set(&mut g.x, &self.x);
        set(&mut g.q, &self.q);
        set(&mut g.r, &self.r);
        set(&mut g.y, &self.y);
        if let Some(b) = &self.b {
            g.b = b.clone();
        }
        if let Some(lam) = &self.lam {
            g.lam = lam.clone();
        }
    }
}

fn execute(cli: &Cli) -> CliResult<(Report, RunConfig)> {
    let mut cfg = cli.global.resolve()?;
    let report = match &cli.command {
        Command::Psi { query } => {
            query.apply(&mut cfg);
            commands::psi(&cfg)?.into()
        }
        Command::Phi { query } => {
            query.apply(&mut cfg);
            commands::phi(&cfg)?.into()
        }
        Command::Scale { query, tilted } => {
            query.apply(&mut cfg);
            commands::scale(&cfg, *tilted)?.into()
        }
        Command::LambdaKernel { query } => {
            query.apply(&mut cfg);
            commands::lambda_kernel(&cfg)?.into()
        }
        Command::Parisian { kind } => {
            let (query, which) = match kind {
                ParisianKind::Joint(q) => (q, commands::Identity::Joint),
                ParisianKind::Exit(q) => (q, commands::Identity::Exit),
                ParisianKind::Potential(q) => (q, commands::Identity::Potential),
                ParisianKind::Density { query, full } => (query, commands::Identity::Density { full: *full }),
                ParisianKind::RuinProb(q) => (q, commands::Identity::RuinProb),
            };
            query.apply(&mut cfg);
            commands::parisian(&cfg, which)?.into()
        }
        Command::Value { query, g, f_below, f_at_b } => {
            query.apply(&mut cfg);
            let mut v = cfg.valuation.clone().unwrap_or_default();
            if let Some(g) = g {
                v.g = g.clone();
            }
            if let Some(f) = f_below {
                v.f_below = f.clone();
            }
            if let Some(f) = f_at_b {
                v.f_at_b = *f;
            }
            cfg.valuation = Some(v);
            commands::value(&cfg)?.into()
        }
        Command::Simulate { query, estimand, bin_width } => {
            query.apply(&mut cfg);
            commands::simulate(&cfg, estimand, *bin_width)?.into()
        }
        Command::Compare { target, grid, query } => {
            if *grid == compare::GridChoice::Standard {
                cfg.query = config::QueryConfig::standard();
            }
            query.apply(&mut cfg);
            compare(&cfg, *target)?
        }
        Command::Selftest => selftest(&cfg)?,
    };
    Ok((report, cfg))
}

fn emit(report: &Report, cfg: &RunConfig) -> CliResult<()> {
    match &cfg.output.path {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            report.table.write(cfg.output.format, &mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut w = stdout.lock();
            report.table.write(cfg.output.format, &mut w)?;
        }
    }
    Ok(())
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::USAGE } else { exit::OK };
        }
    };
    let result = execute(&cli).and_then(|(report, cfg)| emit(&report, &cfg).map(|_| report.ok));
    match result {
        Ok(true) => exit::OK,
        Ok(false) => {
            eprintln!("error: some checks failed");
            exit::CHECK_FAILED
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.code()
        }
    }
}
