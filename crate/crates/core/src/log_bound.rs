//! The space-time mass `∫₀ᵗ∫_{|y|≤|x|} |K(y,s)| dy ds` and its logarithmic
//! growth bound `C t log(|x|/√t)` on `|x| ≥ e√t`.
//!
//! With `J(ρ) = ω∫₀^ρ r^{d−1}|K(r,1)| dr` and the scaling of `K`, the mass
//! equals `2t ∫₀^∞ e^{−2v} J(ρ₀ e^v) dv` for `ρ₀ = |x|/√t`.

use alloc::vec::Vec;
use core::f64::consts::E;

use crate::dim::Dim;
use crate::error::{Error, Result};
use crate::kernel;
use crate::math;
use crate::quad::GaussLegendre;

/// Beyond this radius `|K(r,1)|` equals `|𝔎(r)|` to double precision.
const R_CUT: f64 = 12.0;
const V_MAX: f64 = 26.0;

/// Cumulative table of `J` on `[0, R_CUT]` plus its exact logarithmic tail.
#[derive(Debug, Clone)]
pub struct RadialMass {
    dim: Dim,
    rule: GaussLegendre,
    edges: Vec<f64>,
    cumulative: Vec<f64>,
}

fn integrand(dim: Dim, r: f64) -> f64 {
    let (_, a, b) = kernel::radial(dim, r, 1.0);
    let d = dim.as_f64();
    let frob = math::sqrt((d - 1.0) * a * a + (a + b) * (a + b));
    dim.sphere_area() * dim.pow_d(r) / r.max(f64::MIN_POSITIVE) * frob
}

impl RadialMass {
    pub fn new(dim: Dim, panels: usize) -> Self {
        let rule = GaussLegendre::new(8);
        let h = R_CUT / panels as f64;
        let edges: Vec<f64> = (0..=panels).map(|i| i as f64 * h).collect();
        let mut cumulative = Vec::with_capacity(panels + 1);
        let mut acc = 0.0;
        cumulative.push(0.0);
        for w in edges.windows(2) {
            acc += rule.integrate(w[0], w[1], |r| integrand(dim, r));
            cumulative.push(acc);
        }
        RadialMass {
            dim,
            rule,
            edges,
            cumulative,
        }
    }

    /// `J(ρ)`.
    pub fn eval(&self, rho: f64) -> f64 {
        if rho >= R_CUT {
            let d = self.dim.as_f64();
            return self.cumulative[self.cumulative.len() - 1]
                + math::sqrt(d * (d - 1.0)) * math::ln(rho / R_CUT);
        }
        let h = self.edges[1];
        let i = ((rho / h) as usize).min(self.edges.len() - 2);
        let lo = self.edges[i];
        self.cumulative[i] + self.rule.integrate(lo, rho, |r| integrand(self.dim, r))
    }
}

/// The mass `∫₀ᵗ∫_{|y|≤|x|}|K|` for `|x| = x_norm`, with `level` controlling
/// refinement (panels scale linearly with it).
pub fn log_bound_lhs(dim: Dim, x_norm: f64, t: f64, level: usize) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(alloc::format!(
            "time must be positive, got {t}"
        )));
    }
    let level = level.max(1);
    let j = RadialMass::new(dim, 48 * level);
    let rho0 = x_norm / math::sqrt(t);
    let rule = GaussLegendre::new(8);
    let v = rule.composite(0.0, V_MAX, 64 * level, |v| {
        math::exp(-2.0 * v) * j.eval(rho0 * math::exp(v))
    });
    Ok(2.0 * t * v)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogBoundRow {
    pub x: f64,
    pub t: f64,
    pub lhs: f64,
    /// `lhs / (t log(|x|/√t))`.
    pub ratio: f64,
    /// Relative change of `lhs` under refinement.
    pub refinement_change: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogBoundReport {
    pub rows: Vec<LogBoundRow>,
    pub sup_ratio: f64,
    /// `max/min` of the ratio over the rows.
    pub variation: f64,
    pub max_refinement_change: f64,
    pub pass: bool,
}

/// Evaluates the ratio at every `(|x|, t)` pair. Passes when every ratio is
/// finite, the ratios vary by less than a factor two and refinement moves
/// each value by less than `1e−6` relative.
pub fn log_bound_check(dim: Dim, pairs: &[(f64, f64)]) -> Result<LogBoundReport> {
    let mut rows = Vec::with_capacity(pairs.len());
    for &(x, t) in pairs {
        if !(t > 0.0) || x < E * math::sqrt(t) * (1.0 - 1e-12) {
            return Err(Error::Precondition(alloc::format!(
                "|x| = {x} lies inside e√t = {} at t = {t}",
                E * math::sqrt(t)
            )));
        }
        let lhs = log_bound_lhs(dim, x, t, 1)?;
        let fine = log_bound_lhs(dim, x, t, 2)?;
        let log = math::ln(x / math::sqrt(t)).max(1.0);
        rows.push(LogBoundRow {
            x,
            t,
            lhs: fine,
            ratio: fine / (t * log),
            refinement_change: math::abs(fine - lhs) / math::abs(fine),
        });
    }
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    let sup_ratio = ratios.iter().copied().fold(0.0, f64::max);
    let variation = crate::verdict::variation_ratio(&ratios);
    let max_change = rows.iter().map(|r| r.refinement_change).fold(0.0, f64::max);
    let pass = ratios.iter().all(|r| r.is_finite()) && variation < 2.0 && max_change < 1e-6;
    Ok(LogBoundReport {
        rows,
        sup_ratio,
        variation,
        max_refinement_change: max_change,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radial_mass_tail_is_continuous() {
        let j = RadialMass::new(Dim::Two, 48);
        let below = j.eval(R_CUT * (1.0 - 1e-10));
        let above = j.eval(R_CUT);
        assert!((below - above).abs() < 1e-8);
    }

    #[test]
    fn boundary_of_region_accepted() {
        let t = 0.5;
        let r = log_bound_check(Dim::Two, &[(E * math::sqrt(t), t)]).unwrap();
        assert!(r.rows[0].ratio.is_finite());
        assert!(log_bound_check(Dim::Two, &[(1.0, 1.0)]).is_err());
    }
}
