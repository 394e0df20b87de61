use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use spsys_cli::commands::{self, Direction};
use spsys_cli::{
    CliError, Outcome, Tolerances, DEFAULT_TOL_ISO, DEFAULT_TOL_MEMBER, DEFAULT_TOL_RANK,
};
use spsys_core::invariants::SearchBudget;

/// Subproduct systems over ℕ×ℕ: validation, completion, ideals, Fock-space
/// norms, Fourier coefficients, variety invariants and isomorphism search.
///
/// Documents are JSON files; "-" reads standard input. Reports go to
/// standard output as JSON, a one-line summary goes to standard error.
/// Exit codes: 0 success, 1 invalid or refuted, 2 usage or parse error.
#[derive(Parser, Debug)]
#[command(name = "spsys", version)]
struct Cli {
    /// Singular values at or below tol·max(σ_max, 1) count as zero.
    #[arg(long, global = true, default_value_t = DEFAULT_TOL_RANK)]
    tol_rank: f64,
    /// Largest |g(pt)| accepted as a zero of a normalized generator.
    #[arg(long, global = true, default_value_t = DEFAULT_TOL_MEMBER)]
    tol_member: f64,
    /// Largest accepted residual of an isomorphism witness.
    #[arg(long, global = true, default_value_t = DEFAULT_TOL_ISO)]
    tol_iso: f64,
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum DirectionArg {
    ToIdeal,
    ToSystem,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the subproduct inequalities of a system document.
    Validate { doc: String },
    /// Fill in every degree outside a staircase with the maximal fiber.
    Complete {
        doc: String,
        /// Degrees kept from the document, e.g. "2,0 1,1". Defaults to the
        /// listed fibers.
        #[arg(long)]
        staircase: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convert between system documents and ideal documents.
    Ideal {
        doc: String,
        #[arg(long, value_enum)]
        direction: DirectionArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The invariant pair (m + n, k_X) and the variety generators.
    Invariants { doc: String },
    /// Membership of a point, or a Monte Carlo containment report.
    Variety {
        doc: String,
        /// "z1,..,zm;w1,..,wn", entries like 0.5 or 0.2+0.1i.
        #[arg(long)]
        point: Option<String>,
        /// Number of uniform samples from the polyball.
        #[arg(long)]
        sample: Option<usize>,
    },
    /// Compare creation-operator norms with vector norms.
    FockNorms {
        doc: String,
        /// Prefix operator expression, e.g. "(+ (* e1 f1) 2)".
        #[arg(long)]
        expr: Option<String>,
        /// Random fiber vectors per degree besides the basis vectors.
        #[arg(long, default_value_t = 2)]
        samples: usize,
    },
    /// Graded components of an operator expression.
    Fourier {
        doc: String,
        #[arg(long)]
        expr: String,
    },
    /// Search for an isomorphism between two systems.
    Iso {
        doc_x: String,
        doc_y: String,
        /// Number of restarts per branch.
        #[arg(long, default_value_t = 50)]
        budget: usize,
        /// Iterations per restart.
        #[arg(long, default_value_t = 200)]
        iterations: usize,
    },
}

fn read_input(path: &str) -> Result<String, CliError> {
    if path == "-" {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| CliError::Usage(format!("reading standard input: {e}")))?;
        Ok(s)
    } else {
        std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("reading {path}: {e}")))
    }
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    let tol = Tolerances {
        rank: cli.tol_rank,
        member: cli.tol_member,
        iso: cli.tol_iso,
    };
    let (mut outcome, out) = match cli.command {
        Command::Validate { doc } => (commands::validate(&read_input(&doc)?, tol)?, None),
        Command::Complete {
            doc,
            staircase,
            out,
        } => (
            commands::complete(&read_input(&doc)?, staircase.as_deref(), tol)?,
            out,
        ),
        Command::Ideal {
            doc,
            direction,
            out,
        } => {
            let direction = match direction {
                DirectionArg::ToIdeal => Direction::ToIdeal,
                DirectionArg::ToSystem => Direction::ToSystem,
            };
            (commands::ideal(&read_input(&doc)?, direction, tol)?, out)
        }
        Command::Invariants { doc } => (commands::invariants(&read_input(&doc)?, tol)?, None),
        Command::Variety { doc, point, sample } => (
            commands::variety(&read_input(&doc)?, point.as_deref(), sample, cli.seed, tol)?,
            None,
        ),
        Command::FockNorms { doc, expr, samples } => (
            commands::fock_norms(&read_input(&doc)?, expr.as_deref(), samples, cli.seed, tol)?,
            None,
        ),
        Command::Fourier { doc, expr } => {
            (commands::fourier(&read_input(&doc)?, &expr, tol)?, None)
        }
        Command::Iso {
            doc_x,
            doc_y,
            budget,
            iterations,
        } => {
            let budget = SearchBudget {
                restarts: budget,
                iterations,
            };
            (
                commands::iso(
                    &read_input(&doc_x)?,
                    &read_input(&doc_y)?,
                    budget,
                    cli.seed,
                    tol,
                )?,
                None,
            )
        }
    };
    if let Some(document) = outcome.document.take() {
        match out {
            Some(path) => std::fs::write(&path, document)
                .map_err(|e| CliError::Usage(format!("writing {}: {e}", path.display())))?,
            None => {
                let value: serde_json::Value =
                    serde_json::from_str(&document).expect("emitted documents are valid JSON");
                if let serde_json::Value::Object(map) = &mut outcome.report.findings {
                    map.insert("document".into(), value);
                }
            }
        }
    }
    Ok(outcome)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(outcome) => {
            print!("{}", outcome.report.to_json());
            eprintln!("{}", outcome.summary);
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
