//! Command line front end.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical error, 1 for
//! output failures. Errors are reported as a single line
//! `error kind=<tag> class=<class> message="<text>"` on standard error.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use super::config::{ExperimentConfig, Mode};
use super::experiments::{run_halting, run_predict, run_simulate, run_two_init, run_verify};
use super::output;
use crate::error::{Error, ErrorClass, Result};
use crate::kernelspace::{alg_barrier, interior_grid, kappa3_on_diagonal, validate_partials};

#[derive(Debug, Parser)]
#[command(name = "grfopt", version, about = "Limit curves and exact simulation of gradient span algorithms on isotropic Gaussian random functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; defaults to experiment.output, then standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides experiment.master_seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Limit curve as CSV.
    Predict(Common),
    /// Sampled trajectories as CSV.
    Simulate(Common),
    /// Sampled trajectories against the limit curve.
    Verify(Common),
    /// Pairs of runs from two initializations.
    TwoInit(Common),
    /// Empirical against limiting halting times.
    Halting(Common),
    /// Algorithmic threshold of a spin glass kernel.
    Barrier(Common),
    /// Finite-difference check of the kernel partials.
    CheckKernel(Common),
}

impl Command {
    fn split(self) -> (Mode, Common) {
        match self {
            Command::Predict(c) => (Mode::Predict, c),
            Command::Simulate(c) => (Mode::Simulate, c),
            Command::Verify(c) => (Mode::Verify, c),
            Command::TwoInit(c) => (Mode::TwoInit, c),
            Command::Halting(c) => (Mode::Halting, c),
            Command::Barrier(c) => (Mode::Barrier, c),
            Command::CheckKernel(c) => (Mode::CheckKernel, c),
        }
    }
}

fn class_name(c: ErrorClass) -> &'static str {
    match c {
        ErrorClass::Config => "config",
        ErrorClass::Numerical => "numerical",
        ErrorClass::Io => "io",
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e.class() {
        ErrorClass::Config => 2,
        ErrorClass::Numerical => 3,
        ErrorClass::Io => 1,
    }
}

pub fn error_line(e: &Error) -> String {
    let msg = e.to_string().replace('"', "'").replace('\n', " ");
    format!("error kind={} class={} message=\"{}\"", e.kind(), class_name(e.class()), msg)
}

/// Runs the command line `argv` (program name first) and returns the exit
/// code.
pub fn cli_main<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return 0;
            }
            let first = e.to_string().lines().next().unwrap_or("").trim_start_matches("error: ").to_string();
            let err = Error::Config(format!("command line: {first}"));
            let _ = writeln!(stderr, "{}", error_line(&err));
            return exit_code(&err);
        }
    };
    match run(cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "{}", error_line(&e));
            exit_code(&e)
        }
    }
}

fn report_path(out: &Path) -> PathBuf {
    out.with_extension("report.csv")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn run(cli: Cli, stdout: &mut dyn Write) -> Result<i32> {
    let (mode, common) = cli.command.split();
    let path = common
        .config
        .ok_or_else(|| Error::Config("missing required --config PATH".into()))?;
    let mut cfg = ExperimentConfig::load(&path)?;
    if let Some(m) = cfg.mode {
        if m != mode {
            return Err(Error::Config(format!(
                "config declares mode {m:?} but the {mode:?} command was given"
            )));
        }
    }
    if let Some(seed) = common.seed {
        cfg.master_seed = seed;
    }
    let out = common.out.or_else(|| cfg.output.clone());

    match mode {
        Mode::Predict => {
            let curve = run_predict(&cfg)?;
            match &out {
                Some(p) => output::write_curve(&curve, create(p)?)?,
                None => output::write_curve(&curve, &mut *stdout)?,
            }
        }
        Mode::Simulate => {
            let records = run_simulate(&cfg)?;
            match &out {
                Some(p) => output::write_simulate(&records, &cfg.epsilon, create(p)?)?,
                None => output::write_simulate(&records, &cfg.epsilon, &mut *stdout)?,
            }
        }
        Mode::Verify => {
            let v = run_verify(&cfg)?;
            match &out {
                Some(p) => {
                    output::write_verify_samples(&v.samples, create(p)?)?;
                    output::write_report(&v.report, create(&report_path(p))?)?;
                    let failures = v.report.gap_failures();
                    writeln!(stdout, "gap checks: {} of {} rows within tolerance", v.report.rows.len() - failures.len(), v.report.rows.len())?;
                    for (step, sf, sg) in v.report.slopes() {
                        writeln!(stdout, "step {step}: slope_f {sf:.3} slope_grad {sg:.3}")?;
                    }
                }
                None => output::write_report(&v.report, &mut *stdout)?,
            }
        }
        Mode::TwoInit => {
            let r = run_two_init(&cfg)?;
            if let Some(p) = &out {
                output::write_two_init(&r, create(p)?)?;
            }
            for row in &r.rows {
                writeln!(stdout, "N={} pairs={} median_max_gap={}", row.n, row.pairs, row.median_max_gap)?;
            }
            writeln!(stdout, "median non-increasing in N: {}", r.medians_non_increasing())?;
        }
        Mode::Halting => {
            let r = run_halting(&cfg)?;
            match &out {
                Some(p) => output::write_halting(&r, create(p)?)?,
                None => output::write_halting(&r, &mut *stdout)?,
            }
        }
        Mode::Barrier => {
            let mix = cfg
                .spin_glass_mixture()
                .ok_or_else(|| Error::Config("barrier needs kernel.type = \"spin_glass\"".into()))?;
            let value = alg_barrier(mix, cfg.quadrature_points)?;
            writeln!(stdout, "{value:.6}")?;
        }
        Mode::CheckKernel => {
            let report = validate_partials(&cfg.kernel, &interior_grid(5), 1e-6);
            for c in &report.checks {
                writeln!(stdout, "{} max_rel_error={:e}", c.name.label(), c.max_rel_error)?;
            }
            // s = 0 is excluded: spin glasses without a 1-spin term vanish
            // there, and a start at the origin is rejected by the predictor.
            let positive = (1..=20).all(|i| kappa3_on_diagonal(&cfg.kernel, 0.25 * i as f64) > 0.0);
            writeln!(stdout, "kappa_3(s, s, 2s) > 0 on (0, 5]: {positive}")?;
            let ok = report.passed() && positive;
            writeln!(stdout, "{}", if ok { "PASS" } else { "FAIL" })?;
            if !ok {
                return Ok(3);
            }
        }
    }
    stdout.flush()?;
    Ok(0)
}
