//! Report rows, CSV and JSON persistence.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::CliError;

pub const CSV_COLUMNS: [&str; 10] = [
    "experiment",
    "criterion",
    "case",
    "metric",
    "value",
    "lower",
    "upper",
    "passed",
    "note",
    "config_hash",
];

/// One measured quantity with its declared bounds.
///
/// `passed` is recomputable: a skipped row passes, otherwise the value must be
/// finite and satisfy `lower ≤ value ≤ upper`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub experiment: String,
    pub criterion: String,
    pub case: String,
    pub metric: String,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub passed: bool,
    pub note: String,
    pub config_hash: String,
}

pub fn row_passes(value: f64, lower: f64, upper: f64, note: &str) -> bool {
    if note.starts_with("skipped") {
        return true;
    }
    value.is_finite() && lower <= value && value <= upper
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Fit {
    pub name: String,
    pub value: f64,
}

/// Accumulates rows for one experiment.
#[derive(Clone, Debug)]
pub struct Report {
    pub experiment: String,
    pub config_hash: String,
    criterion: String,
    pub rows: Vec<ReportRow>,
    pub fits: Vec<Fit>,
}

impl Report {
    pub fn new(experiment: &str, config_hash: &str) -> Self {
        Self {
            experiment: experiment.to_string(),
            config_hash: config_hash.to_string(),
            criterion: String::new(),
            rows: Vec::new(),
            fits: Vec::new(),
        }
    }

    /// Tag subsequent rows with a criterion id.
    pub fn set_criterion(&mut self, id: &str) {
        self.criterion = id.to_string();
    }

    fn push(&mut self, case: &str, metric: &str, value: f64, lower: f64, upper: f64, note: String) {
        let passed = row_passes(value, lower, upper, &note);
        self.rows.push(ReportRow {
            experiment: self.experiment.clone(),
            criterion: self.criterion.clone(),
            case: case.to_string(),
            metric: metric.to_string(),
            value,
            lower,
            upper,
            passed,
            note,
            config_hash: self.config_hash.clone(),
        });
    }

    pub fn check(&mut self, case: &str, metric: &str, value: f64, lower: f64, upper: f64) {
        self.push(case, metric, value, lower, upper, String::new());
    }

    pub fn at_most(&mut self, case: &str, metric: &str, value: f64, upper: f64) {
        self.check(case, metric, value, f64::NEG_INFINITY, upper);
    }

    pub fn at_least(&mut self, case: &str, metric: &str, value: f64, lower: f64) {
        self.check(case, metric, value, lower, f64::INFINITY);
    }

    /// Recorded value whose only requirement is finiteness.
    pub fn info(&mut self, case: &str, metric: &str, value: f64) {
        self.check(case, metric, value, f64::NEG_INFINITY, f64::INFINITY);
    }

    pub fn skip(&mut self, case: &str, metric: &str, reason: &str) {
        self.push(
            case,
            metric,
            f64::NAN,
            f64::NEG_INFINITY,
            f64::INFINITY,
            format!("skipped: {reason}"),
        );
    }

    /// A failed computation: the row fails and carries the message.
    pub fn error(&mut self, case: &str, metric: &str, err: &dyn std::fmt::Display) {
        self.push(
            case,
            metric,
            f64::NAN,
            f64::NEG_INFINITY,
            f64::INFINITY,
            format!("error: {err}"),
        );
    }

    pub fn fit(&mut self, name: &str, value: f64) {
        self.fits.push(Fit {
            name: name.to_string(),
            value,
        });
    }

    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_COLUMNS)?;
        for r in &self.rows {
            w.write_record([
                r.experiment.as_str(),
                r.criterion.as_str(),
                r.case.as_str(),
                r.metric.as_str(),
                &fmt_f64(r.value),
                &fmt_f64(r.lower),
                &fmt_f64(r.upper),
                if r.passed { "true" } else { "false" },
                r.note.as_str(),
                r.config_hash.as_str(),
            ])?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.into_error()))
    }

    pub fn summary_json(&self) -> Result<String, CliError> {
        #[derive(Serialize)]
        struct Summary<'a> {
            experiment: &'a str,
            config_hash: &'a str,
            rows: usize,
            failed: usize,
            all_passed: bool,
            failed_rows: Vec<String>,
            fits: Vec<(&'a str, String)>,
        }
        let failed_rows: Vec<String> = self
            .rows
            .iter()
            .filter(|r| !r.passed)
            .map(|r| format!("{} {} {}", r.criterion, r.case, r.metric).trim().to_string())
            .collect();
        let s = Summary {
            experiment: &self.experiment,
            config_hash: &self.config_hash,
            rows: self.rows.len(),
            failed: failed_rows.len(),
            all_passed: failed_rows.is_empty(),
            failed_rows,
            fits: self.fits.iter().map(|f| (f.name.as_str(), fmt_f64(f.value))).collect(),
        };
        Ok(serde_json::to_string_pretty(&s)? + "\n")
    }

    /// Write `<experiment>.csv` and `<experiment>.json` under `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        fs::create_dir_all(dir)?;
        let stem = self.experiment.replace('-', "_");
        fs::write(dir.join(format!("{stem}.csv")), self.to_csv()?)?;
        fs::write(dir.join(format!("{stem}.json")), self.summary_json()?)?;
        Ok(())
    }
}

/// Shortest round-trip scientific form; `nan`, `inf`, `-inf` for the rest.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_rule_and_csv() {
        let mut r = Report::new("demo", "abc");
        r.at_most("a", "err", 1e-13, 1e-12);
        r.at_most("b", "err", f64::NAN, 1e-12);
        r.skip("c", "err", "bandwidth");
        r.info("d", "c", f64::INFINITY);
        let passed: Vec<bool> = r.rows.iter().map(|x| x.passed).collect();
        assert_eq!(passed, vec![true, false, true, false]);
        let csv = String::from_utf8(r.to_csv().unwrap()).unwrap();
        let first = csv.lines().nth(1).unwrap();
        assert_eq!(first, "demo,,a,err,1e-13,-inf,1e-12,true,,abc");
        for row in &r.rows {
            assert_eq!(row.passed, row_passes(row.value, row.lower, row.upper, &row.note));
        }
    }

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, -3.25e-17, 8.984, 1.0] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }
}
