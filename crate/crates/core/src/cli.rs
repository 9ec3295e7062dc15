//! Command-line front end.
//!
//! ```text
//! mediator --config mediator.conf query '/student[batch_no="cs08"]/registration_number'
//! mediator --config mediator.conf explain '/student[department_id=13]/registration_number'
//! mediator --config mediator.conf validate
//! ```
//!
//! Exit codes: 0 success, 1 config or catalog error, 2 invalid query,
//! 3 source execution failure, 4 no plan.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::catalog::Severity;
use crate::config::MediatorConfig;
use crate::mediator::{Mediator, MediatorError};

#[derive(Debug, Parser)]
#[command(name = "mediator", version, about = "Constraint-aware federated query mediator")]
struct Args {
    /// Mediator configuration file.
    #[arg(long, global = true, default_value = "mediator.conf")]
    config: PathBuf,
    /// Treat declared formats as hard constraints during pruning.
    #[arg(long, global = true)]
    strict_format: bool,
    /// Drop failed sources instead of aborting.
    #[arg(long, global = true)]
    partial: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a global query and print the result document.
    Query { query: String },
    /// Print the per-source plan for a global query.
    Explain { query: String },
    /// Cross-check the catalog documents.
    Validate,
}

fn load(args: &Args) -> Result<Mediator, MediatorError> {
    let mut config = MediatorConfig::load(&args.config)?;
    config.strict_format |= args.strict_format;
    config.partial_results |= args.partial;
    Mediator::from_config(&config)
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(args) => args,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                2
            } else {
                let _ = write!(stdout, "{text}");
                0
            };
        }
    };
    match &args.command {
        Command::Validate => validate(&args, stdout, stderr),
        Command::Query { query } => {
            let outcome = load(&args).and_then(|m| m.query(query));
            match outcome {
                Ok(outcome) => {
                    for (id, e) in &outcome.failures {
                        let _ = writeln!(stderr, "source {id} failed: {e}");
                    }
                    let _ = write!(stdout, "{}", outcome.document.as_str());
                    0
                }
                Err(e) => report(&e, stderr),
            }
        }
        Command::Explain { query } => match load(&args).and_then(|m| m.explain(query)) {
            Ok(report) => {
                let _ = write!(stdout, "{report}");
                0
            }
            Err(e) => report(&e, stderr),
        },
    }
}

fn report(e: &MediatorError, stderr: &mut dyn Write) -> i32 {
    match e {
        MediatorError::Invalid(violations) => {
            for v in violations {
                let _ = writeln!(stderr, "invalid query: {v}");
            }
        }
        _ => {
            let _ = writeln!(stderr, "error: {e}");
        }
    }
    e.exit_code()
}

/// Findings go to stdout; load failures are reported as errors too.
fn validate(args: &Args, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let mediator = match load(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = writeln!(stdout, "{} {e}", Severity::Error);
            let _ = writeln!(stderr, "error: {e}");
            return 1;
        }
    };
    let findings = mediator.validate();
    for f in &findings {
        let _ = writeln!(stdout, "{f}");
    }
    if findings.iter().any(|f| f.severity == Severity::Error) {
        1
    } else {
        0
    }
}
