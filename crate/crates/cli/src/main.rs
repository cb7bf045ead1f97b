use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod checks;
mod emit;
mod model;

use checks::Check;
use emit::Format;
use model::ModelArgs;

#[derive(Parser, Debug)]
#[command(name = "ncphase", version, about = "Exact checks on deformed quantum phase spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Write the output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Record wall time in reports.
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List the built-in models.
    Catalog,
    /// Run one check (or all) on a model.
    Check {
        #[arg(value_enum)]
        which: CheckArg,
        #[command(flatten)]
        model: ModelArgs,
        /// Borel twist for `cocycle`; all of them when omitted.
        #[arg(long)]
        twist: Option<String>,
        /// Symmetric instead of antisymmetric `a` for `qdeform`.
        #[arg(long)]
        symmetric: bool,
    },
    /// Every catalog model against every operator check.
    Batch {
        #[arg(long, default_value_t = 6)]
        order: u32,
        #[arg(long, default_value = "0")]
        u: String,
    },
    /// The composition law `D_mu(k, q)` and `G(k, q)`.
    Dmu {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// The coproduct of momenta.
    Coproduct {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Star product of two polynomials in `x[0..n-1]`.
    Star {
        #[command(flatten)]
        model: ModelArgs,
        f: String,
        g: String,
    },
    /// `J_mu(k, q)` and `h(k, q)` from the flow equations.
    SolveJ {
        #[command(flatten)]
        model: ModelArgs,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
enum CheckArg {
    Jacobi,
    Closure,
    Assoc,
    Coassoc,
    Twist,
    Conjugation,
    Cocycle,
    Qdeform,
    Pde,
    All,
}

impl CheckArg {
    fn checks(self) -> Vec<Check> {
        match self {
            CheckArg::Jacobi => vec![Check::Jacobi],
            CheckArg::Closure => vec![Check::Closure],
            CheckArg::Assoc => vec![Check::Assoc],
            CheckArg::Coassoc => vec![Check::Coassoc],
            CheckArg::Twist => vec![Check::Twist],
            CheckArg::Conjugation => vec![Check::Conjugation],
            CheckArg::Cocycle => vec![Check::Cocycle],
            CheckArg::Qdeform => vec![Check::Qdeform],
            CheckArg::Pde => vec![Check::Pde],
            CheckArg::All => Check::OPERATOR.to_vec(),
        }
    }
}

/// Failure of the command itself, as opposed to a failed check.
struct UsageError(String);

impl<E: std::fmt::Display> From<E> for UsageError {
    fn from(e: E) -> Self {
        UsageError(e.to_string())
    }
}

fn run(cli: &Cli) -> Result<(String, bool), UsageError> {
    let fmt = cli.format;
    match &cli.command {
        Command::Catalog => Ok((emit::catalog(fmt), true)),
        Command::Check {
            which,
            model,
            twist,
            symmetric,
        } => {
            let opts = checks::Options {
                order: model.order,
                u: model.u()?,
                twist: twist.clone(),
                symmetric: *symmetric,
                timing: cli.timing,
            };
            let checks = which.checks();
            let needs_model = checks.iter().any(|c| c.needs_model());
            let loaded = if needs_model { Some(model.load()?) } else { None };
            let dim = model.dim;
            let mut reports = Vec::new();
            for c in checks {
                reports.extend(checks::run(c, loaded.as_ref(), dim, &opts)?);
            }
            let ok = reports.iter().all(|r| r.verdict.is_pass());
            Ok((emit::reports(&reports, fmt), ok))
        }
        Command::Batch { order, u } => {
            let u = model::parse_rational(u)?;
            let reports = checks::batch(*order, &u, cli.timing)?;
            let ok = reports.iter().all(|r| r.verdict.is_pass());
            Ok((emit::reports(&reports, fmt), ok))
        }
        Command::Dmu { model } => {
            let r = model.load()?;
            let law = ncphase_core::star::composition_law(&r, model.order)?;
            Ok((emit::composition(&law, fmt), true))
        }
        Command::Coproduct { model } => {
            let r = model.load()?;
            let law = ncphase_core::star::composition_law(&r, model.order)?;
            let cop = ncphase_core::coalgebra::coproduct(&law);
            Ok((emit::coproduct(&cop, fmt), true))
        }
        Command::Star { model, f, g } => {
            let r = model.load()?;
            let out = checks::star(&r, model.order, f, g)?;
            Ok((emit::named_series(r.name(), model.order, &[("f*g".into(), out)], fmt), true))
        }
        Command::SolveJ { model } => {
            let r = model.load()?;
            let pair = ncphase_core::star::solve_j_h(&r, model.order)?;
            let mut rows: Vec<(String, _)> = pair.j.iter().enumerate().map(|(m, s)| (format!("J_{m}"), s.clone())).collect();
            rows.push(("h".into(), pair.h.clone()));
            Ok((emit::named_series(r.name(), model.order, &rows, fmt), true))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((text, ok)) => {
            let written = match &cli.out {
                Some(path) => std::fs::write(path, &text).map_err(|e| format!("{}: {e}", path.display())),
                None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| e.to_string()),
            };
            if let Err(e) = written {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(UsageError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
