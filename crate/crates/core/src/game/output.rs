use std::io::Write;

use super::engine::{BatchResult, MCEstimate};
use super::saddle::SaddleReport;
use super::GameError;

/// Largest number of rows written by [`write_samples_csv`].
pub const SAMPLE_ROW_CAP: usize = 10_000;

fn float(v: f64) -> String {
    format!("{v:.16e}")
}

/// One row per estimate: kind, mean, standard error, sample counts, the
/// sampling parameters, and stop statistics per player. Mean stop times
/// are empty for a player who never stopped.
pub fn write_estimates_csv<W: Write>(rows: &[(&str, &MCEstimate)], mut out: W) -> Result<(), GameError> {
    writeln!(
        out,
        "kind,mean,std_error,n_effective,paths,excluded,dt,horizon,seed,\
         stop_fraction_theta,stop_fraction_tau,mean_stop_time_theta,mean_stop_time_tau,exit_fraction"
    )?;
    for (kind, e) in rows {
        writeln!(
            out,
            "{kind},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            float(e.mean),
            float(e.std_error),
            e.n_effective,
            e.paths,
            e.excluded,
            float(e.dt),
            float(e.horizon),
            e.seed,
            float(e.stop_fraction[0]),
            float(e.stop_fraction[1]),
            e.mean_stop_time[0].map(float).unwrap_or_default(),
            e.mean_stop_time[1].map(float).unwrap_or_default(),
            float(e.exit_fraction),
        )?;
    }
    Ok(())
}

/// Per-path outcomes of one pair, at most [`SAMPLE_ROW_CAP`] rows. Steps
/// of rules that did not fire are left empty.
pub fn write_samples_csv<W: Write>(batch: &BatchResult, pair: usize, mut out: W) -> Result<(), GameError> {
    writeln!(out, "path,theta_step,tau_step,payoff")?;
    let step = |s: Option<u32>| s.map(|v| v.to_string()).unwrap_or_default();
    for (p, o) in batch.path_index.iter().zip(&batch.outcomes[pair]).take(SAMPLE_ROW_CAP) {
        writeln!(out, "{p},{},{},{}", step(o.theta), step(o.tau), float(o.payoff))?;
    }
    Ok(())
}

/// One row per check of a saddle report, followed by the exit-fraction row.
pub fn write_saddle_csv<W: Write>(report: &SaddleReport, mut out: W) -> Result<(), GameError> {
    writeln!(out, "check,rule,estimate,std_error,difference,difference_std_error,margin,expected,passed")?;
    for c in report.checks() {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            c.kind,
            c.rule.replace(',', ";"),
            float(c.estimate.mean),
            float(c.estimate.std_error),
            float(c.difference),
            float(c.std_error),
            float(c.margin),
            c.expected.map(float).unwrap_or_default(),
            c.passed
        )?;
    }
    writeln!(
        out,
        "exit-fraction,main,{},,,,{},,{}",
        float(report.main.exit_fraction),
        float(super::saddle::MAX_EXIT_FRACTION),
        report.exit_fraction_ok
    )?;
    Ok(())
}
