//! CSV outputs: one row per solver run, and the optional per-iteration trace.

use std::io::Write;

use crate::drivers::{Algorithm, SolveReport};
use crate::error::Result;
use crate::spg::IterationRecord;

pub const RESULT_COLUMNS: [&str; 10] = [
    "instance",
    "algorithm",
    "seed",
    "n",
    "m",
    "relaxed_objective",
    "rounded_objective",
    "iterations",
    "time_seconds",
    "termination_reason",
];

pub const TRACE_COLUMNS: [&str; 6] = ["iteration", "f", "residual", "lambda", "alpha", "ls_trials"];

/// A results row. Failed runs keep the instance and algorithm, leave the
/// numeric columns empty and carry the error in `termination_reason`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub instance: String,
    pub algorithm: String,
    pub seed: Option<u64>,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub relaxed_objective: Option<f64>,
    pub rounded_objective: Option<f64>,
    pub iterations: Option<usize>,
    pub time_seconds: Option<f64>,
    pub termination_reason: String,
}

impl ResultRow {
    pub fn from_report(report: &SolveReport) -> Self {
        Self {
            instance: report.instance.clone(),
            algorithm: report.algorithm.to_string(),
            seed: Some(report.seed),
            n: Some(report.n),
            m: Some(report.m),
            relaxed_objective: Some(report.relaxed_objective),
            rounded_objective: Some(report.rounded_objective),
            iterations: Some(report.iterations),
            time_seconds: Some(report.wall_time_seconds),
            termination_reason: report.termination_label().to_string(),
        }
    }

    pub fn failed(instance: &str, algorithm: Algorithm, message: &str) -> Self {
        Self {
            instance: instance.to_string(),
            algorithm: algorithm.to_string(),
            seed: None,
            n: None,
            m: None,
            relaxed_objective: None,
            rounded_objective: None,
            iterations: None,
            time_seconds: None,
            termination_reason: format!("error: {}", message.replace(['\n', '\r'], " ")),
        }
    }

    pub fn is_error(&self) -> bool {
        self.termination_reason.starts_with("error")
    }

    pub fn fields(&self) -> [String; 10] {
        fn opt<T: ToString>(v: &Option<T>) -> String {
            v.as_ref().map(ToString::to_string).unwrap_or_default()
        }
        [
            self.instance.clone(),
            self.algorithm.clone(),
            opt(&self.seed),
            opt(&self.n),
            opt(&self.m),
            opt(&self.relaxed_objective),
            opt(&self.rounded_objective),
            opt(&self.iterations),
            opt(&self.time_seconds),
            self.termination_reason.clone(),
        ]
    }
}

/// Writes the header and the rows. `f64` values use the shortest decimal
/// form that round-trips, which never uses an exponent.
pub fn write_results<W: Write>(out: W, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULT_COLUMNS)?;
    for row in rows {
        w.write_record(row.fields())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace<W: Write>(out: W, trace: &[IterationRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_COLUMNS)?;
    for rec in trace {
        w.write_record([
            rec.iteration.to_string(),
            rec.f.to_string(),
            rec.residual.to_string(),
            rec.lambda.to_string(),
            rec.alpha.to_string(),
            rec.ls_trials.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn failed_rows_keep_columns() {
        let row = ResultRow::failed("bad", Algorithm::Scp, "line 3: oops\nmore");
        let mut buf = Vec::new();
        write_results(&mut buf, &[row]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], RESULT_COLUMNS.join(","));
        assert_eq!(lines[1], "bad,scp,,,,,,,,error: line 3: oops more");
    }

    #[test]
    fn floats_are_plain_decimals() {
        let mut row = ResultRow::failed("x", Algorithm::Scsc, "");
        row.relaxed_objective = Some(1e20);
        row.rounded_objective = Some(1.5e-7);
        let f = row.fields();
        assert_eq!(f[5], "100000000000000000000");
        assert_eq!(f[6], "0.00000015");
    }
}
