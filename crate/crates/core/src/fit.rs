//! Least-squares power-law and Gaussian-rate fits, and the report type the
//! checks emit.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// `y ≈ C x^β` fitted in log-log space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerFit {
    pub exponent: f64,
    /// `ln C`.
    pub log_prefactor: f64,
    /// Largest `|ln y − (ln C + β ln x)|`.
    pub residual: f64,
    /// Standard error of the slope; zero for two points or exact data.
    pub stderr: f64,
    pub points: usize,
}

fn line_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let mut max_res: f64 = 0.0;
    let mut ss = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let r = y - (icpt + slope * x);
        max_res = max_res.max(math::abs(r));
        ss += r * r;
    }
    let stderr = if xs.len() > 2 {
        math::sqrt(ss / (n - 2.0) / sxx)
    } else {
        0.0
    };
    (slope, icpt, max_res, stderr)
}

/// Fits `ln y` against `ln x`. Needs at least two samples with positive
/// abscissa and value and distinct abscissae.
pub fn fit_power_law(samples: &[(f64, f64)]) -> Result<PowerFit> {
    let pos: Vec<(f64, f64)> = samples
        .iter()
        .copied()
        .filter(|&(x, y)| x > 0.0 && y > 0.0)
        .collect();
    if pos.len() != samples.len() {
        return Err(Error::Fit(
            "power-law fit needs positive abscissae and values".into(),
        ));
    }
    if pos.len() < 2 {
        return Err(Error::Fit(
            "power-law fit needs at least two samples".into(),
        ));
    }
    let xs: Vec<f64> = pos.iter().map(|p| math::ln(p.0)).collect();
    let ys: Vec<f64> = pos.iter().map(|p| math::ln(p.1)).collect();
    if xs.iter().all(|&x| x == xs[0]) {
        return Err(Error::Fit("abscissae are all equal".into()));
    }
    let (slope, icpt, res, stderr) = line_fit(&xs, &ys);
    Ok(PowerFit {
        exponent: slope,
        log_prefactor: icpt,
        residual: res,
        stderr,
        points: pos.len(),
    })
}

/// `y ≈ C e^{−c x²}`: returns `(c, ln C, max log residual)`.
pub fn fit_gaussian_rate(samples: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    if samples.len() < 2 || samples.iter().any(|&(_, y)| !(y > 0.0)) {
        return Err(Error::Fit(
            "Gaussian-rate fit needs ≥ 2 positive values".into(),
        ));
    }
    let xs: Vec<f64> = samples.iter().map(|p| p.0 * p.0).collect();
    let ys: Vec<f64> = samples.iter().map(|p| math::ln(p.1)).collect();
    let (slope, icpt, res, _) = line_fit(&xs, &ys);
    Ok((-slope, icpt, res))
}

/// How a fitted exponent is judged against the predicted one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Criterion {
    /// `|fitted − predicted| ≤ tol`.
    Within(f64),
    /// `fitted ≤ predicted + tol`.
    AtMost(f64),
}

impl Criterion {
    pub fn accepts(self, fitted: f64, predicted: f64) -> bool {
        match self {
            Criterion::Within(tol) => math::abs(fitted - predicted) <= tol,
            Criterion::AtMost(tol) => fitted <= predicted + tol,
        }
    }

    pub fn tolerance(self) -> f64 {
        match self {
            Criterion::Within(t) | Criterion::AtMost(t) => t,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Criterion::Within(_) => "within",
            Criterion::AtMost(_) => "at-most",
        }
    }
}

/// One row of a report: abscissa, measured value, prediction, log residual
/// against the fitted line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitSample {
    pub abscissa: f64,
    pub value: f64,
    pub prediction: f64,
    pub residual: f64,
}

/// A fitted exponent with its samples and verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub quantity: String,
    pub samples: Vec<FitSample>,
    pub fitted: f64,
    pub predicted: f64,
    pub window: (f64, f64),
    pub residual: f64,
    pub stderr: f64,
    pub criterion: Criterion,
    pub pass: bool,
    /// Named measured constants.
    pub constants: Vec<(String, f64)>,
    pub notes: Vec<String>,
}

impl FitReport {
    /// Fits a power law and judges it. At least five samples are required;
    /// with `span_decade` the abscissae must also span a factor of ten.
    pub fn power_law(
        quantity: &str,
        samples: &[(f64, f64)],
        predicted: f64,
        criterion: Criterion,
        span_decade: bool,
    ) -> Result<FitReport> {
        if samples.len() < 5 {
            return Err(Error::Fit(alloc::format!(
                "{quantity}: fit window has {} points, need ≥ 5",
                samples.len()
            )));
        }
        let lo = samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
        let hi = samples
            .iter()
            .map(|s| s.0)
            .fold(f64::NEG_INFINITY, f64::max);
        if span_decade && hi < 10.0 * lo * (1.0 - 1e-12) {
            return Err(Error::Fit(alloc::format!(
                "{quantity}: window [{lo}, {hi}] spans less than a decade"
            )));
        }
        let fit = fit_power_law(samples)?;
        // predicted line anchored on the data's log centroid
        let n = samples.len() as f64;
        let mlx = samples.iter().map(|s| math::ln(s.0)).sum::<f64>() / n;
        let mly = samples.iter().map(|s| math::ln(s.1)).sum::<f64>() / n;
        let rows = samples
            .iter()
            .map(|&(x, y)| {
                let lx = math::ln(x);
                FitSample {
                    abscissa: x,
                    value: y,
                    prediction: math::exp(mly + predicted * (lx - mlx)),
                    residual: math::ln(y) - (fit.log_prefactor + fit.exponent * lx),
                }
            })
            .collect();
        Ok(FitReport {
            quantity: quantity.into(),
            samples: rows,
            fitted: fit.exponent,
            predicted,
            window: (lo, hi),
            residual: fit.residual,
            stderr: fit.stderr,
            criterion,
            pass: criterion.accepts(fit.exponent, predicted),
            constants: Vec::new(),
            notes: Vec::new(),
        })
    }

    pub fn with_constant(mut self, name: &str, value: f64) -> Self {
        self.constants.push((name.into(), value));
        self
    }

    pub fn with_note(mut self, note: &str) -> Self {
        self.notes.push(note.into());
        self
    }

    /// Replaces the prediction column, e.g. with a pointwise profile.
    pub fn with_predictions(mut self, preds: &[f64]) -> Self {
        for (s, p) in self.samples.iter_mut().zip(preds) {
            s.prediction = *p;
        }
        self
    }

    /// Ands an extra condition into the verdict.
    pub fn require(mut self, ok: bool, note: &str) -> Self {
        if !ok {
            self.pass = false;
            self.notes.push(note.into());
        }
        self
    }

    pub fn constant(&self, name: &str) -> Option<f64> {
        self.constants
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law_recovered() {
        let s: Vec<(f64, f64)> = (0..8)
            .map(|i| {
                let x = math::powf(2.0, i as f64);
                (x, 3.0 * math::powf(x, -2.5))
            })
            .collect();
        let f = fit_power_law(&s).unwrap();
        assert!((f.exponent + 2.5).abs() < 1e-12);
        assert!((math::exp(f.log_prefactor) - 3.0).abs() < 1e-10);
        assert!(f.residual < 1e-12);
    }

    #[test]
    fn report_enforces_window() {
        let s: Vec<(f64, f64)> = (1..=4).map(|i| (i as f64, 1.0 / i as f64)).collect();
        assert!(FitReport::power_law("q", &s, -1.0, Criterion::Within(0.1), false).is_err());
        let s: Vec<(f64, f64)> = (1..=6).map(|i| (i as f64, 1.0 / i as f64)).collect();
        assert!(FitReport::power_law("q", &s, -1.0, Criterion::Within(0.1), true).is_err());
        let r = FitReport::power_law("q", &s, -1.0, Criterion::Within(0.1), false).unwrap();
        assert!(r.pass);
        assert!(r.residual >= 0.0);
    }

    #[test]
    fn gaussian_rate_recovered() {
        let s: Vec<(f64, f64)> = (1..10)
            .map(|i| {
                let x = i as f64;
                (x, 2.0 * math::exp(-0.3 * x * x))
            })
            .collect();
        let (c, lc, _) = fit_gaussian_rate(&s).unwrap();
        assert!((c - 0.3).abs() < 1e-12);
        assert!((lc - math::ln(2.0)).abs() < 1e-10);
    }
}
