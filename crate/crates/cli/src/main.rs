mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser, Subcommand, ValueEnum};
use quilthedra::trees::Family;

use crate::report::{Check, Report};

#[derive(Parser, Debug)]
#[command(name = "quilthedra", version, about = "Face posets, sign identities and A-infinity checks for quilted polytopes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Tree family (stable, colored, bicolored, seam) or sign family (assoc, functor, jacobian, all).
    #[arg(long, global = true)]
    family: Option<String>,
    /// Number of boundary markings.
    #[arg(long, global = true)]
    d: Option<usize>,
    /// Number of seam markings.
    #[arg(long, global = true, default_value_t = 0)]
    e: usize,
    /// Largest arity checked.
    #[arg(long, global = true, default_value_t = 4)]
    dmax: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Fixture directory; falls back to QUILTHEDRA_FIXTURES, then the bundled fixtures.
    #[arg(long, global = true)]
    fixtures: Option<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
    /// Hasse diagram; `faces` only.
    Dot,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List the trees of one family.
    Enumerate,
    /// f-vector, Euler characteristic and grading of a face poset.
    Faces {
        /// Include the full poset in the report.
        #[arg(long)]
        poset: bool,
    },
    /// Tagged facets and their matching against identity terms.
    Facets,
    /// Exhaustive sign congruences and the Jacobian oracle.
    Signs {
        #[arg(value_parser = ["verify"])]
        action: Option<String>,
    },
    /// A-infinity checks over the fixture instances.
    Ainfty,
    /// Correspondence fixtures and brute-force associativity.
    Relations {
        /// Largest space size for exhaustive associativity.
        #[arg(long, default_value_t = 3)]
        max_elems: usize,
    },
    /// Delay compatibility, the rank surrogate and rigid-bubble bookkeeping.
    Delays,
    /// Every suite up to --dmax.
    VerifyAll,
}

fn usage_error(msg: String) -> ! {
    Cli::command().error(ErrorKind::InvalidValue, msg).exit()
}

fn tree_family(cli: &Cli) -> Family {
    let Some(name) = cli.family.as_deref() else { usage_error("--family is required".into()) };
    Family::ALL.into_iter().find(|f| f.name() == name).unwrap_or_else(|| usage_error(format!("unknown tree family {name}")))
}

fn arity(cli: &Cli) -> usize {
    cli.d.unwrap_or_else(|| usage_error("--d is required".into()))
}

fn verify_all(cli: &Cli) -> Vec<Check> {
    let dmax = cli.dmax;
    let mut out = Vec::new();
    for family in Family::ALL {
        let seams: &[usize] = if family == Family::Seam { &[0, 1, 2] } else { &[0] };
        for &e in seams {
            for d in family.min_d()..=dmax {
                out.extend(commands::faces(family, d, e, false));
                out.extend(commands::facets(family, d, e));
            }
        }
    }
    out.extend(commands::signs("assoc", dmax));
    out.extend(commands::signs("functor", dmax));
    out.extend(commands::signs("jacobian", dmax.min(5)));
    let fixtures = commands::resolve_fixtures(cli.fixtures.clone());
    out.extend(commands::ainfty(&fixtures, dmax));
    out.extend(commands::relations(&fixtures, 3));
    out.extend(commands::delays(dmax));
    out
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = Cli::parse();
    if cli.format == Format::Dot && !matches!(cli.command, Command::Faces { .. }) {
        usage_error("--format dot applies to faces only".into());
    }
    let start = Instant::now();
    let checks = match &cli.command {
        Command::Enumerate => commands::enumerate_trees(tree_family(&cli), arity(&cli), cli.e),
        Command::Faces { poset } => {
            if cli.format == Format::Dot {
                return match commands::hasse_dot(tree_family(&cli), arity(&cli), cli.e) {
                    Ok(dot) => emit(&cli, &dot),
                    Err(e) => {
                        eprintln!("error: {e}");
                        ExitCode::FAILURE
                    }
                };
            }
            commands::faces(tree_family(&cli), arity(&cli), cli.e, *poset)
        }
        Command::Facets => commands::facets(tree_family(&cli), arity(&cli), cli.e),
        Command::Signs { .. } => {
            let family = cli.family.as_deref().unwrap_or("all");
            if !matches!(family, "assoc" | "functor" | "jacobian" | "all") {
                usage_error(format!("unknown sign family {family}"));
            }
            commands::signs(family, cli.dmax)
        }
        Command::Ainfty => commands::ainfty(&commands::resolve_fixtures(cli.fixtures.clone()), cli.dmax),
        Command::Relations { max_elems } => commands::relations(&commands::resolve_fixtures(cli.fixtures.clone()), *max_elems),
        Command::Delays => commands::delays(cli.dmax),
        Command::VerifyAll => verify_all(&cli),
    };
    let report = Report::new(argv, checks, start.elapsed().as_millis());
    let text = match cli.format {
        Format::Text => report.to_text(),
        _ => report.to_json(),
    };
    match emit(&cli, &text) {
        c if c == ExitCode::SUCCESS && !report.checks.iter().all(Check::passes) => ExitCode::FAILURE,
        c => c,
    }
}

fn emit(cli: &Cli, text: &str) -> ExitCode {
    match &cli.out {
        Some(path) => match std::fs::write(path, text) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                ExitCode::FAILURE
            }
        },
        None => {
            print!("{text}");
            ExitCode::SUCCESS
        }
    }
}
