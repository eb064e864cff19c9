//! `nlbs`: exact invariant solutions, residual gates and the implicit PDE
//! solver from the command line.

pub mod commands;
pub mod error;
pub mod output;
pub mod spec;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use error::CliError;
use spec::{AxisName, BoundaryName, Format, Range, RunSpec, SchemeName, SweepParam};

#[derive(Debug, Parser)]
#[command(
    name = "nlbs",
    version,
    about = "Nonlinear Black-Scholes equations for illiquid markets"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate an exact family on an (S, t) grid.
    Eval(Common),
    /// Run the PDE and reduced-ODE residual gates.
    Residual(Common),
    /// March the PDE backwards from terminal data.
    Solve {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        solver: SolverFlags,
        /// Terminal data: `family`, `call:K` or `linear:D`.
        #[arg(long)]
        payoff: Option<String>,
    },
    /// Refinement study against an exact family.
    Converge {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        solver: SolverFlags,
        /// Node counts (space axis) or step counts (time axis).
        #[arg(long, value_delimiter = ',')]
        ladder: Option<Vec<usize>>,
        #[arg(long, value_enum)]
        axis: Option<AxisName>,
        /// Time steps per space interval on space ladders.
        #[arg(long)]
        dt_ratio: Option<f64>,
    },
    /// Analytic and finite-difference delta side by side.
    Greeks(Common),
    /// Evaluate one family for several values of a parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        sweep_param: Option<SweepParam>,
        /// Values of the parameter; `c` takes |c|.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        sweep_values: Option<Vec<f64>>,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    /// Solution family (r, u1, u2, u3, u3-1, u3-2, linear, log-plus, log-minus).
    #[arg(long)]
    pub family: Option<String>,
    /// PDE model (cjp, frey, sircar, reaction-exp, reaction-hyperbolic).
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub d: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub d2: Option<f64>,
    /// Price grid `a:b:n`.
    #[arg(long)]
    pub s_range: Option<Range>,
    /// Time grid `a:b:n`.
    #[arg(long)]
    pub t_range: Option<Range>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON RunSpec; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolverFlags {
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeName>,
    #[arg(long, value_enum)]
    pub boundary: Option<BoundaryName>,
}

fn base_spec(name: &str, c: &Common) -> Result<RunSpec, CliError> {
    let mut s = match &c.config {
        Some(p) => RunSpec::load(p)?,
        None => RunSpec::default(),
    };
    s.command = name.to_string();
    macro_rules! set {
        ($($f:ident),*) => { $( if let Some(v) = c.$f.clone() { s.$f = v; } )* };
    }
    set!(model, sigma, rho, omega, d, d2, s_range, t_range, format);
    if c.family.is_some() {
        s.family = c.family.clone();
    }
    if c.c.is_some() {
        s.c = c.c;
    }
    if c.out.is_some() {
        s.out = c.out.clone();
    }
    Ok(s)
}

fn apply_solver(s: &mut RunSpec, f: &SolverFlags) {
    if let Some(v) = f.scheme {
        s.scheme = v;
    }
    if f.boundary.is_some() {
        s.boundary = f.boundary;
    }
}

/// Resolves the command line into a validated RunSpec.
pub fn resolve(cli: &Cli) -> Result<RunSpec, CliError> {
    let spec = match &cli.command {
        Command::Eval(c) => base_spec("eval", c)?,
        Command::Residual(c) => base_spec("residual", c)?,
        Command::Greeks(c) => base_spec("greeks", c)?,
        Command::Solve {
            common,
            solver,
            payoff,
        } => {
            let mut s = base_spec("solve", common)?;
            apply_solver(&mut s, solver);
            if payoff.is_some() {
                s.payoff = payoff.clone();
            }
            s
        }
        Command::Converge {
            common,
            solver,
            ladder,
            axis,
            dt_ratio,
        } => {
            let mut s = base_spec("converge", common)?;
            apply_solver(&mut s, solver);
            if let Some(l) = ladder {
                s.ladder = l.clone();
            }
            if let Some(a) = axis {
                s.axis = *a;
            }
            if let Some(r) = dt_ratio {
                s.dt_ratio = *r;
            }
            s
        }
        Command::Sweep {
            common,
            sweep_param,
            sweep_values,
        } => {
            let mut s = base_spec("sweep", common)?;
            if sweep_param.is_some() {
                s.sweep_param = *sweep_param;
            }
            if let Some(v) = sweep_values {
                s.sweep_values = v.clone();
            }
            s
        }
    };
    spec.validate()?;
    Ok(spec)
}

/// Runs one command and writes its output.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let spec = resolve(cli)?;
    let (table, failure) = match spec.command.as_str() {
        "eval" => (commands::eval(&spec)?, None),
        "greeks" => (commands::greeks(&spec)?, None),
        "residual" => commands::residual(&spec)?,
        "solve" => (commands::solve(&spec)?, None),
        "converge" => (commands::converge(&spec)?, None),
        "sweep" => (commands::sweep(&spec)?, None),
        other => return Err(CliError::Internal(format!("unknown command {other}"))),
    };
    let bytes = output::render(&spec, &table, spec.format)?;
    output::emit(spec.out.as_deref(), &bytes)?;
    match failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}
