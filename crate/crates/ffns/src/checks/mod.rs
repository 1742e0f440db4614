//! Verification checks. Every check produces a [`CheckResult`] with a
//! status, named metrics, fitted exponents and CSV tables.

use std::collections::BTreeMap;

use ffns_core::fit::FitReport;
use ffns_core::sphere;
use ffns_core::{Dim, Vector};
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::FfnsError;

pub mod kernel;
pub mod mild;
pub mod norms;
pub mod pointwise;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    /// The hypothesis degenerates and no verdict is given.
    Declined,
    Error,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Declined => "declined",
            Status::Error => "error",
        }
    }
}

// JSON has no NaN; serde_json writes non-finite floats as null.
fn nan_if_null<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

fn nan_map<'de, D: Deserializer<'de>>(
    d: D,
) -> std::result::Result<BTreeMap<String, f64>, D::Error> {
    let m = BTreeMap::<String, Option<f64>>::deserialize(d)?;
    Ok(m.into_iter()
        .map(|(k, v)| (k, v.unwrap_or(f64::NAN)))
        .collect())
}

/// One CSV row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub abscissa: f64,
    pub value: f64,
    pub prediction: f64,
    pub residual: f64,
}

/// A named series of rows; the unnamed table is the check's primary CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub suffix: String,
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub quantity: String,
    #[serde(deserialize_with = "nan_if_null")]
    pub fitted: f64,
    #[serde(deserialize_with = "nan_if_null")]
    pub predicted: f64,
    pub criterion: String,
    #[serde(deserialize_with = "nan_if_null")]
    pub tolerance: f64,
    pub window: (f64, f64),
    #[serde(deserialize_with = "nan_if_null")]
    pub residual: f64,
    #[serde(deserialize_with = "nan_if_null")]
    pub stderr: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorInfo {
    pub message: String,
    pub exit_code: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub status: Status,
    #[serde(deserialize_with = "nan_map")]
    pub metrics: BTreeMap<String, f64>,
    pub labels: BTreeMap<String, String>,
    pub fits: Vec<FitSummary>,
    pub notes: Vec<String>,
    pub error: Option<ErrorInfo>,
    #[serde(skip)]
    pub tables: Vec<Table>,
    #[serde(skip, default = "verdict_default")]
    pass: bool,
}

fn verdict_default() -> bool {
    true
}

impl CheckResult {
    pub fn new(name: &str) -> Self {
        CheckResult {
            name: name.into(),
            status: Status::Pass,
            metrics: BTreeMap::new(),
            labels: BTreeMap::new(),
            fits: Vec::new(),
            notes: Vec::new(),
            error: None,
            tables: Vec::new(),
            pass: true,
        }
    }

    pub fn from_error(name: &str, e: &FfnsError) -> Self {
        let mut r = CheckResult::new(name);
        r.status = Status::Error;
        r.pass = false;
        r.error = Some(ErrorInfo {
            message: e.to_string(),
            exit_code: e.exit_code(),
        });
        r
    }

    pub fn metric(&mut self, key: &str, value: f64) -> &mut Self {
        self.metrics.insert(key.into(), value);
        self
    }

    pub fn label(&mut self, key: &str, value: &str) -> &mut Self {
        self.labels.insert(key.into(), value.into());
        self
    }

    pub fn note(&mut self, note: impl Into<String>) -> &mut Self {
        self.notes.push(note.into());
        self
    }

    /// Ands `ok` into the verdict, recording `what` when it fails.
    pub fn require(&mut self, ok: bool, what: impl Into<String>) -> bool {
        if !ok {
            self.pass = false;
            self.notes.push(format!("failed: {}", what.into()));
        }
        ok
    }

    /// Records a fit, its samples as a table and its verdict.
    pub fn fit(&mut self, suffix: &str, report: &FitReport) {
        self.fits.push(FitSummary {
            quantity: report.quantity.clone(),
            fitted: report.fitted,
            predicted: report.predicted,
            criterion: report.criterion.label().into(),
            tolerance: report.criterion.tolerance(),
            window: report.window,
            residual: report.residual,
            stderr: report.stderr,
            pass: report.pass,
        });
        for (k, v) in &report.constants {
            self.metrics.insert(format!("{}.{k}", report.quantity), *v);
        }
        for n in &report.notes {
            self.notes.push(format!("{}: {n}", report.quantity));
        }
        self.table(
            suffix,
            report
                .samples
                .iter()
                .map(|s| Row {
                    abscissa: s.abscissa,
                    value: s.value,
                    prediction: s.prediction,
                    residual: s.residual,
                })
                .collect(),
        );
        if !report.pass {
            self.pass = false;
            self.notes.push(format!(
                "failed: {} exponent {:.4} vs {:.4} ({} {})",
                report.quantity,
                report.fitted,
                report.predicted,
                report.criterion.label(),
                report.criterion.tolerance()
            ));
        }
    }

    pub fn table(&mut self, suffix: &str, rows: Vec<Row>) {
        self.tables.push(Table {
            suffix: suffix.into(),
            rows,
        });
    }

    pub fn decline(&mut self, why: &str) {
        self.status = Status::Declined;
        self.notes.push(why.into());
    }

    pub fn finish(mut self) -> Self {
        if self.status == Status::Pass && !self.pass {
            self.status = Status::Fail;
        }
        self
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

/// Runs a check body, turning an error into an error result.
pub fn guarded<F>(name: &str, body: F) -> CheckResult
where
    F: FnOnce(&mut CheckResult) -> crate::error::Result<()>,
{
    let mut r = CheckResult::new(name);
    match body(&mut r) {
        Ok(()) => r.finish(),
        Err(e) => {
            let mut err = CheckResult::from_error(name, &e);
            err.metrics = r.metrics;
            err.labels = r.labels;
            err.notes.extend(r.notes);
            err.tables = r.tables;
            err
        }
    }
}

/// `n` logarithmically spaced values from `a` to `b` inclusive.
pub fn log_space(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let (la, lb) = (a.ln(), b.ln());
    (0..n)
        .map(|i| {
            if i == 0 {
                a
            } else if i + 1 == n {
                b
            } else {
                (la + (lb - la) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// Sample directions; 2-D angles are offset from the axes.
pub fn sample_directions(dim: Dim, n: usize) -> Vec<Vector> {
    match dim {
        Dim::Two => sphere::circle(n, 0.37),
        Dim::Three => sphere::fibonacci(n),
    }
}

/// `r·ω` for every direction.
pub fn ring(r: f64, dirs: &[Vector]) -> Vec<Vector> {
    dirs.iter().map(|w| w.scale(r)).collect()
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

pub fn min_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}
