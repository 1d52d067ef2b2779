//! CSV writers and readers for the experiment outputs.

use std::io::{Read, Write};

use super::experiments::{ConvergenceReport, HaltingReport, ReportRow, TwoInitReport, VerifySample};
use crate::error::{Error, Result};
use crate::predictor::LimitCurve;
use crate::sampler::{empirical_halting_time, TrajectoryRecord};

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

fn fmt_step(s: Option<usize>) -> String {
    s.map_or_else(|| "inf".to_string(), |v| v.to_string())
}

pub const CURVE_HEADER: [&str; 5] = ["step", "f_limit", "grad_norm_sq_limit", "sigma_w", "dim"];

/// `dim` is the span dimension `d_n` before step `n`.
pub fn write_curve<W: Write>(curve: &LimitCurve, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CURVE_HEADER).map_err(csv_err)?;
    for n in 0..=curve.last_step() {
        w.write_record([
            n.to_string(),
            curve.f_limit[n].to_string(),
            curve.grad_norm_sq(n).to_string(),
            curve.sigma_w[n].to_string(),
            curve.dims[n].to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per `(replication, N, step)`; the column `halted_<eps>` is 1 from
/// the empirical halting step on.
pub fn write_simulate<W: Write>(records: &[(usize, TrajectoryRecord)], epsilon: &[f64], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = ["replication", "N", "step", "f_value", "grad_norm_sq"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend(epsilon.iter().map(|e| format!("halted_{e}")));
    w.write_record(&header).map_err(csv_err)?;
    for (rep, rec) in records {
        let halts: Vec<Option<usize>> = epsilon.iter().map(|&e| empirical_halting_time(rec, e)).collect();
        for step in 0..=rec.steps() {
            let mut row = vec![
                rep.to_string(),
                rec.dimension.to_string(),
                step.to_string(),
                rec.f_values[step].to_string(),
                rec.grad_norm_sq(step).to_string(),
            ];
            row.extend(halts.iter().map(|h| u8::from(h.is_some_and(|t| t <= step)).to_string()));
            w.write_record(&row).map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_verify_samples<W: Write>(samples: &[VerifySample], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for s in samples {
        w.serialize(s).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_verify_samples<R: Read>(input: R) -> Result<Vec<VerifySample>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}

pub fn write_report<W: Write>(report: &ConvergenceReport, mut out: W) -> Result<()> {
    writeln!(out, "# gap_f = |mean_f - f_limit|, tol_f = 3 * se_f + 2 / sqrt(N); same for grad")?;
    writeln!(out, "# slope_*: least-squares slope of ln(sd) against ln(N) per step; expected in [-0.65, -0.35]")?;
    writeln!(out, "# two-sample KS comparisons elsewhere use significance 1e-3")?;
    let mut w = csv::Writer::from_writer(out);
    for row in &report.rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_report<R: Read>(input: R) -> Result<ConvergenceReport> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    let rows: Result<Vec<ReportRow>> = r.deserialize().map(|row| row.map_err(csv_err)).collect();
    Ok(ConvergenceReport { rows: rows? })
}

pub fn write_two_init<W: Write>(report: &TwoInitReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["N", "pair", "step", "abs_gap", "max_gap"]).map_err(csv_err)?;
    for (row, gaps) in report.rows.iter().zip(&report.gaps) {
        for (pair, g) in gaps.iter().enumerate() {
            for (k, v) in g.iter().enumerate() {
                w.write_record([
                    row.n.to_string(),
                    pair.to_string(),
                    k.to_string(),
                    v.to_string(),
                    row.max_gaps[pair].to_string(),
                ])
                .map_err(csv_err)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_halting<W: Write>(report: &HaltingReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["N", "epsilon", "tau", "tau_plus", "replications", "matches", "frequency"])
        .map_err(csv_err)?;
    for r in &report.rows {
        w.write_record([
            r.n.to_string(),
            r.epsilon.to_string(),
            fmt_step(r.tau),
            fmt_step(r.tau_plus),
            r.replications.to_string(),
            r.matches.to_string(),
            r.frequency.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
