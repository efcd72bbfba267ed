//! `optgeom`: classify congruences of catalog metrics, dump their optical
//! invariants, and run the verification suites.

mod config;
mod report;

use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use optgeom::catalog;
use optgeom::optical::analyze;
use optgeom::verify::{self, Suite, VerifyOptions};
use optgeom::{Error, Jet2};
use rayon::prelude::*;

use config::{Format, RunArgs, RunConfig};
use report::{ClassifyRow, Header, InvariantRow, Status, Verdict};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

pub const EXIT_PASS: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_INDETERMINATE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "optgeom",
    version,
    about = "Optical invariants of null congruences on Lorentzian metrics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SuiteArg {
    Frames,
    Covariance,
    Connections,
    Conformal,
    Catalog,
    All,
}

#[derive(Subcommand)]
enum Command {
    /// Flags and twist rank per point, with an aggregate verdict.
    Classify(RunArgs),
    /// Components of (γ, ρ, τ, σ, π) per point in the constructed frame.
    Invariants {
        #[command(flatten)]
        run: RunArgs,
        /// Multiplies the generator by the constant e^φ.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        boost: f64,
    },
    /// Runs a verification suite and prints one row per check.
    Verify {
        #[arg(value_enum)]
        suite: SuiteArg,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Random points per entry for the sampled checks.
        #[arg(long, default_value_t = 10)]
        samples: usize,
        #[arg(long)]
        out: Option<std::path::PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Lists catalog entries with their parameters and congruences.
    List,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Classify(args) => args.resolve().and_then(|c| classify(&c)),
        Command::Invariants { run, boost } => run.resolve().and_then(|c| invariants(&c, boost)),
        Command::Verify {
            suite,
            seed,
            samples,
            out,
            format,
        } => run_verify(suite, seed, samples, out, format),
        Command::List => list(),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("optgeom: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}

fn status_of(err: &Error) -> Status {
    match err {
        Error::OutsideDomain { .. } => Status::OutsideDomain,
        Error::Indeterminate { .. } => Status::Indeterminate,
        _ => Status::Error,
    }
}

fn classify(cfg: &RunConfig) -> Result<u8, CliError> {
    let spec = cfg
        .entry
        .congruence(&cfg.congruence)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let rows: Vec<ClassifyRow> = cfg
        .points
        .par_iter()
        .enumerate()
        .map(
            |(i, p)| match analyze(&cfg.entry.model, spec, p).and_then(|a| a.classify(cfg.tol)) {
                Ok(r) => ClassifyRow::ok(i, p, r),
                Err(e) => ClassifyRow::failed(i, p, status_of(&e), e.to_string()),
            },
        )
        .collect();
    if rows.iter().all(|r| r.status == Status::OutsideDomain) {
        return Err(CliError::Config(
            "no point lies in the admissible domain".into(),
        ));
    }
    let verdict = Verdict::from_rows(&rows);
    let header = Header::new("classify", cfg);
    report::write_classify(cfg, &header, &rows, &verdict)?;
    for r in rows.iter().filter(|r| r.status == Status::OutsideDomain) {
        eprintln!(
            "optgeom: point {} excluded: {}",
            r.index,
            r.message.as_deref().unwrap_or("")
        );
    }
    let numerical: Vec<&ClassifyRow> = rows
        .iter()
        .filter(|r| matches!(r.status, Status::Indeterminate | Status::Error))
        .collect();
    if numerical.is_empty() {
        Ok(EXIT_PASS)
    } else {
        for r in numerical {
            eprintln!(
                "optgeom: point {}: {}",
                r.index,
                r.message.as_deref().unwrap_or("")
            );
        }
        Ok(EXIT_INDETERMINATE)
    }
}

fn invariants(cfg: &RunConfig, boost: f64) -> Result<u8, CliError> {
    let base = cfg
        .entry
        .congruence(&cfg.congruence)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let spec = if boost == 0.0 {
        base.clone()
    } else {
        let s = boost.exp();
        base.rescaled(
            base.label.clone(),
            Arc::new(move |x: &[Jet2]| Jet2::seed_const(s, x.len())),
        )
    };
    let rows: Vec<InvariantRow> = cfg
        .points
        .par_iter()
        .enumerate()
        .map(|(i, p)| match analyze(&cfg.entry.model, &spec, p) {
            Ok(a) => InvariantRow::ok(i, p, &a.invariants),
            Err(e) => InvariantRow::failed(i, p, status_of(&e), e.to_string()),
        })
        .collect();
    if rows.iter().all(|r| r.status == Status::OutsideDomain) {
        return Err(CliError::Config(
            "no point lies in the admissible domain".into(),
        ));
    }
    let mut header = Header::new("invariants", cfg);
    header.boost = Some(boost);
    report::write_invariants(cfg, &header, &rows)?;
    Ok(if rows.iter().any(|r| r.status == Status::Error) {
        EXIT_INDETERMINATE
    } else {
        EXIT_PASS
    })
}

fn run_verify(
    suite: SuiteArg,
    seed: u64,
    samples: usize,
    out: Option<std::path::PathBuf>,
    format: Format,
) -> Result<u8, CliError> {
    let opts = VerifyOptions {
        seed,
        points: samples,
    };
    let suites: Vec<Suite> = match suite {
        SuiteArg::All => Suite::ALL.to_vec(),
        SuiteArg::Frames => vec![Suite::Frames],
        SuiteArg::Covariance => vec![Suite::Covariance],
        SuiteArg::Connections => vec![Suite::Connections],
        SuiteArg::Conformal => vec![Suite::Conformal],
        SuiteArg::Catalog => vec![Suite::Catalog],
    };
    let checks: Vec<_> = suites
        .par_iter()
        .flat_map(|s| verify::run_suite(*s, &opts))
        .collect();
    let (passed, total) = verify::summary(&checks);
    let name = suite
        .to_possible_value()
        .map(|v| v.get_name().to_string())
        .unwrap_or_default();
    report::write_verify(&name, seed, out.as_deref(), format, &checks, passed, total)?;
    eprintln!("optgeom: {passed}/{total} checks passed");
    Ok(if passed == total {
        EXIT_PASS
    } else {
        EXIT_FAIL
    })
}

fn list() -> Result<u8, CliError> {
    for name in catalog::entry_names() {
        let e = catalog::get(name).map_err(|e| CliError::Config(e.to_string()))?;
        let params = catalog::default_params(name).map_err(|e| CliError::Config(e.to_string()))?;
        let params: Vec<String> = params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let labels: Vec<&str> = e.congruences.iter().map(|c| c.label.as_str()).collect();
        println!(
            "{name:28} dim={} params=[{}] congruences=[{}]  {}",
            e.model.dim,
            params.join(", "),
            labels.join(", "),
            e.description
        );
    }
    Ok(EXIT_PASS)
}
