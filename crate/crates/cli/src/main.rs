mod config;
mod report;
mod suites;

use anyhow::Result;
use clap::{Parser, Subcommand, ValueEnum};
use config::{Mode, Overrides, Settings};
use g2glue::scalar::Rational;
use report::{run_checks, write_outputs, Report};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "g2glue", version, about = "Verification driver for the G2 gluing computations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Arithmetic for identity suites.
    #[arg(long, global = true, value_enum)]
    mode: Option<Mode>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Rational decay parameter, e.g. 1/100.
    #[arg(long, global = true)]
    gamma: Option<String>,
    /// Eguchi-Hanson scale.
    #[arg(long, global = true)]
    a: Option<f64>,
    /// Gluing scale.
    #[arg(long, global = true)]
    t: Option<f64>,
    /// Directory for report.json and CSV tables.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Flat key = value file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum VerifySuite {
    Identities,
    Linearization,
    Product,
    #[value(name = "appendix-a")]
    HkMaps,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Pointwise algebraic identity suites.
    Verify {
        #[arg(value_enum)]
        suite: VerifySuite,
    },
    /// Eguchi-Hanson metric suite.
    Eh,
    /// Radial Poisson solves on the Eguchi-Hanson fibre.
    SolveFibre,
    /// Region-by-region torsion exponents.
    TorsionTable {
        /// Print the table as CSV on stdout instead of the JSON report.
        #[arg(long)]
        csv: bool,
    },
    /// Admissible range for alpha.
    AlphaWindow {
        /// Custom C0, L2, L14 exponents as "c0,l2,l14".
        #[arg(long)]
        exponents: Option<String>,
    },
    /// Betti numbers of resolutions.
    Betti {
        /// ex7_1, ex7_2, ex7_3, ex7_5 or all.
        #[arg(long, conflicts_with = "input")]
        example: Option<String>,
        /// JSON file with generators and singular-set data.
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

fn usage<T>(r: Result<T>) -> Result<T, Failure> {
    r.map_err(Failure::Usage)
}

fn run(cli: Cli) -> Result<bool, Failure> {
    let flags = Overrides {
        mode: cli.mode,
        seed: cli.seed,
        gamma: cli.gamma.clone(),
        a: cli.a,
        t: cli.t,
        out: cli.out.clone(),
    };
    let settings = usage(Settings::resolve(cli.config.as_deref(), &flags))?;
    let exact = settings.mode == Mode::Exact;
    let mut csv_only = false;
    let (name, (checks, tables)) = match &cli.command {
        Command::Verify { suite } => {
            let s = match (suite, exact) {
                (VerifySuite::Identities, true) => suites::identities::<Rational>(),
                (VerifySuite::Identities, false) => suites::identities::<f64>(),
                (VerifySuite::Linearization, _) => suites::linearization(&settings),
                (VerifySuite::Product, true) => suites::product::<Rational>(),
                (VerifySuite::Product, false) => suites::product::<f64>(),
                (VerifySuite::HkMaps, true) => suites::hk_maps::<Rational>(),
                (VerifySuite::HkMaps, false) => suites::hk_maps::<f64>(),
            };
            let label = suite.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
            (format!("verify {label}"), s)
        }
        Command::Eh => ("eh".to_string(), usage(suites::eguchi_hanson(&settings))?),
        Command::SolveFibre => {
            let g = settings.gamma_f64();
            if !(g > 0.0 && g <= g2glue::fibre::MAX_GAMMA) {
                return Err(Failure::Usage(anyhow::anyhow!(
                    "solve-fibre needs 0 < gamma <= {}",
                    g2glue::fibre::MAX_GAMMA
                )));
            }
            ("solve-fibre".to_string(), suites::fibre(&settings).map_err(Failure::Runtime)?)
        }
        Command::TorsionTable { csv } => {
            csv_only = *csv;
            ("torsion-table".to_string(), suites::torsion(&settings).map_err(Failure::Runtime)?)
        }
        Command::AlphaWindow { exponents } => ("alpha-window".to_string(), usage(suites::alpha(exponents.as_deref()))?),
        Command::Betti { example, input } => match (example, input) {
            (Some(e), None) => (format!("betti --example {e}"), usage(suites::betti_examples(e))?),
            (None, Some(p)) => (format!("betti --input {}", p.display()), usage(suites::betti_input(p))?),
            _ => return Err(Failure::Usage(anyhow::anyhow!("betti needs --example or --input"))),
        },
    };
    let results = run_checks(checks);
    let report = Report::new(name, &settings, results);
    if let Some(dir) = &settings.out {
        write_outputs(dir, &report, &tables).map_err(Failure::Runtime)?;
    }
    if csv_only {
        if let Some(t) = tables.first() {
            print!("{}", t.render());
        }
    } else {
        let text = serde_json::to_string_pretty(&report).map_err(|e| Failure::Runtime(e.into()))?;
        println!("{text}");
    }
    Ok(report.all_passed())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
