//! Command-line driver: `run` executes an experiment and writes artifacts,
//! `check` compares a produced CSV against a reference, `table` renders one
//! result table to stdout.

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use certfem_cli::check::{check_csvs, parse_rtol_spec};
use certfem_cli::config::ExperimentConfig;
use certfem_cli::report::{emit, OUTPUT_FILES};
use certfem_cli::runner::run_experiment;
use certfem_cli::table::{print_table, Which};

#[derive(Parser)]
#[command(
    name = "certfem",
    version,
    about = "Certified enclosures for a semilinear finite-element benchmark"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured experiment and write CSV tables plus report.json.
    Run {
        /// JSON configuration file; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory; falls back to the config's outDir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare a produced CSV against a reference CSV column by column.
    Check {
        /// CSV produced by `run`.
        #[arg(long)]
        got: PathBuf,
        /// Reference CSV to compare against.
        #[arg(long = "ref")]
        reference: PathBuf,
        /// Relative tolerance applied to every column without an override.
        #[arg(long, default_value_t = 1e-3)]
        rtol: f64,
        /// Per-column tolerance override NAME=VALUE; 0 demands exact equality.
        #[arg(long = "rtol-col", value_name = "NAME=VALUE")]
        rtol_col: Vec<String>,
    },
    /// Run the configured experiment and render one table to stdout.
    Table {
        /// Which table to render.
        #[arg(long, value_enum)]
        which: Which,
        /// JSON configuration file; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn load_config(path: Option<&PathBuf>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::load(p),
        None => Ok(ExperimentConfig::default()),
    }
}

fn cmd_run(config: Option<&PathBuf>, out: Option<PathBuf>) -> Result<()> {
    let config = load_config(config)?;
    let Some(dir) = out.or_else(|| config.out_dir.clone()) else {
        bail!("no output directory: pass --out or set outDir in the config");
    };
    let report = run_experiment(&config)?;
    for outcome in &report.outcomes {
        match (&outcome.row, &outcome.error) {
            (Some(row), _) => println!(
                "N={}: eta={} rho={} path={} inside={}",
                row.n,
                certfem_cli::report::fmt_sci(row.eta, 6),
                certfem_cli::report::fmt_sci(row.rho, 6),
                row.path,
                u8::from(row.inside)
            ),
            (None, Some(error)) => println!("N={}: failed: {error}", outcome.n),
            (None, None) => unreachable!("every outcome has a row or an error"),
        }
    }
    emit(&report, &dir)?;
    for name in OUTPUT_FILES {
        println!("wrote {}", dir.join(name).display());
    }
    if report.outcomes.iter().any(|o| o.error.is_some()) {
        bail!("one or more meshes failed; see the report");
    }
    Ok(())
}

fn cmd_check(got: &Path, reference: &Path, rtol: f64, rtol_col: &[String]) -> Result<()> {
    let mut overrides = BTreeMap::new();
    for spec in rtol_col {
        let (name, value) = parse_rtol_spec(spec)?;
        overrides.insert(name, value);
    }
    let summaries = check_csvs(got, reference, rtol, &overrides)?;
    let mut failures = 0;
    for s in &summaries {
        if s.ok() {
            println!(
                "ok   {}: worst rel {:.3e} at row {} (rtol {:.1e})",
                s.column, s.worst_rel, s.worst_key, s.rtol
            );
        } else {
            failures += 1;
            println!(
                "FAIL {}: at row {} got {:.17e}, ref {:.17e}, rel {:.3e} > rtol {:.1e}",
                s.column, s.worst_key, s.got, s.reference, s.worst_rel, s.rtol
            );
        }
    }
    if failures > 0 {
        bail!("{failures} column(s) exceeded tolerance");
    }
    println!(
        "all {} column(s) within tolerance ({} vs {})",
        summaries.len(),
        got.display(),
        reference.display()
    );
    Ok(())
}

fn cmd_table(which: Which, config: Option<&PathBuf>) -> Result<()> {
    let config = load_config(config)?;
    let report = run_experiment(&config)?;
    let stdout = std::io::stdout();
    print_table(&report, which, &mut stdout.lock()).context("cannot write the table")
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Run { config, out } => cmd_run(config.as_ref(), out.clone()),
        Command::Check {
            got,
            reference,
            rtol,
            rtol_col,
        } => cmd_check(got, reference, *rtol, rtol_col),
        Command::Table { which, config } => cmd_table(*which, config.as_ref()),
    }
}
