//! Weighted-norm time exponents and spatial divergence of weighted norms.

use ffns_core::fit::{Criterion, FitReport};
use ffns_core::grid::restrict_annulus_norm;
use ffns_core::quad::GaussLegendre;
use ffns_core::verdict::{classify_increments, variation_ratio, DivergenceVerdict};
use ffns_core::{Dim, Error as CoreError, Vector};

use super::{guarded, max_of, ring, sample_directions, CheckResult, Row};
use crate::error::{FfnsError, Result};
use crate::probe::FieldProbe;

pub const SWEEP: &str = "sweep";
pub const DIVERGENCE: &str = "divergence";

/// Relative tolerance on the regime boundary `α + d/p = d`.
const REGIME_EPS: f64 = 1e-12;
/// Increments within 10% of each other count as constant.
pub const CONSTANT_INCREMENT_TOL: f64 = 0.10;

/// A weight exponent and an integrability exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormPair {
    pub alpha: f64,
    pub p: f64,
}

impl NormPair {
    pub fn new(alpha: f64, p: f64) -> Self {
        NormPair { alpha, p }
    }

    /// `α + d/p`.
    pub fn index(&self, dim: Dim) -> f64 {
        self.alpha
            + if self.p.is_infinite() {
                0.0
            } else {
                dim.as_f64() / self.p
            }
    }

    /// `(d, ∞)`, included with the decaying pairs as a bounded limit.
    pub fn is_limit(&self, dim: Dim) -> bool {
        self.p.is_infinite() && (self.alpha - dim.as_f64()).abs() <= REGIME_EPS
    }

    pub fn decays(&self, dim: Dim) -> bool {
        self.index(dim) < dim.as_f64() - REGIME_EPS
    }

    pub fn on_boundary(&self, dim: Dim) -> bool {
        (self.index(dim) - dim.as_f64()).abs() <= REGIME_EPS
    }

    /// `−(d − α − d/p)/2`.
    pub fn predicted_exponent(&self, dim: Dim) -> f64 {
        -(dim.as_f64() - self.index(dim)) / 2.0
    }

    pub fn label(&self) -> String {
        let p = if self.p.is_infinite() {
            "inf".to_string()
        } else {
            format!("{}", self.p)
        };
        format!("a{}_p{p}", self.alpha)
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite() && self.p >= 1.0) {
            return Err(FfnsError::Core(CoreError::Domain(format!(
                "need α ≥ 0 and p ≥ 1, got ({}, {})",
                self.alpha, self.p
            ))));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepParams {
    pub pairs: Vec<NormPair>,
    pub times: Vec<f64>,
    /// Directions on each far-field ring of the tail model.
    pub tail_directions: usize,
    pub tol: f64,
    pub span_decade: bool,
}

/// One weighted norm evaluation: the grid part inside `r_g` plus a power
/// tail `A_θ(r/r_g)^{−d}` integrated to infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormSample {
    pub t: f64,
    pub inner: f64,
    pub tail: f64,
    pub total: f64,
    /// Radial slope between `r_g` and `2r_g`, averaged over directions.
    pub tail_slope: f64,
}

/// Per-time far-field rings shared across pairs.
struct TailRings {
    r_g: f64,
    inner: Vec<f64>,
    outer: Vec<f64>,
}

fn tail_rings(probe: &dyn FieldProbe, t: f64, r_g: f64, dirs: &[Vector]) -> Result<TailRings> {
    let inner = probe.velocities(&ring(r_g, dirs), t)?;
    let outer = probe.velocities(&ring(2.0 * r_g, dirs), t)?;
    Ok(TailRings {
        r_g,
        inner: inner.iter().map(|v| v.0.norm()).collect(),
        outer: outer.iter().map(|v| v.0.norm()).collect(),
    })
}

/// `∫_{r_g}^∞ (1+r)^{αp} (A(r/r_g)^{−d})^p r^{d−1} dr` for `A = 1`.
fn tail_radial_integral(dim: Dim, pair: NormPair, r_g: f64) -> f64 {
    let d = dim.as_f64();
    let (a, p) = (pair.alpha, pair.p);
    let kappa = d * p - a * p - d;
    let v_max = 60.0 / kappa + 2.0;
    let gl = GaussLegendre::new(16);
    // r = r_g e^v
    gl.composite(0.0, v_max, 64, |v| {
        (a * p * (1.0 + r_g * v.exp()).ln() + (d - d * p) * v).exp()
    }) * r_g.powf(d)
}

fn norm_sample(
    dim: Dim,
    pair: NormPair,
    t: f64,
    snap: &ffns_core::grid::VectorFieldGrid,
    rings: &TailRings,
) -> Result<NormSample> {
    let r_g = rings.r_g;
    let inner = restrict_annulus_norm(snap, 0.0, r_g, pair.alpha, pair.p)?;
    let d = dim.as_f64();
    let slopes: Vec<f64> = rings
        .inner
        .iter()
        .zip(&rings.outer)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (b / a).ln() / 2f64.ln())
        .collect();
    let tail_slope = if slopes.is_empty() {
        f64::NAN
    } else {
        slopes.iter().sum::<f64>() / slopes.len() as f64
    };
    let n = rings.inner.len() as f64;
    let (tail, total) = if pair.p.is_infinite() {
        let a_in = max_of(&rings.inner);
        let a_out = max_of(&rings.outer);
        let tail =
            ((1.0 + r_g).powf(pair.alpha) * a_in).max((1.0 + 2.0 * r_g).powf(pair.alpha) * a_out);
        (tail, inner.max(tail))
    } else {
        let radial = tail_radial_integral(dim, pair, r_g);
        let ap: f64 = rings.inner.iter().map(|a| a.powf(pair.p)).sum::<f64>() / n;
        let tail = dim.sphere_area() * ap * radial;
        (
            tail.powf(1.0 / pair.p),
            (inner.powf(pair.p) + tail).powf(1.0 / pair.p),
        )
    };
    let _ = d;
    Ok(NormSample {
        t,
        inner,
        tail,
        total,
        tail_slope,
    })
}

/// Weighted norms of the probe at every time, one series per pair.
pub fn weighted_norms(
    probe: &dyn FieldProbe,
    pairs: &[NormPair],
    times: &[f64],
    tail_directions: usize,
) -> Result<Vec<Vec<NormSample>>> {
    let dim = probe.dim();
    let dirs = sample_directions(dim, tail_directions);
    let mut out = vec![Vec::new(); pairs.len()];
    for &t in times {
        let snap = probe
            .snapshot(t)
            .ok_or_else(|| FfnsError::State(format!("no grid snapshot at t = {t}")))?;
        let r_g = snap.grid().half_width() / 4.0;
        let rings = tail_rings(probe, t, r_g, &dirs)?;
        for (k, pair) in pairs.iter().enumerate() {
            out[k].push(norm_sample(dim, *pair, t, &snap, &rings)?);
        }
    }
    Ok(out)
}

/// `‖(1+|x|)^α u(t)‖_p ~ t^{−(d−α−d/p)/2}` for every pair.
pub fn sweep_check(probe: &dyn FieldProbe, p: &SweepParams) -> CheckResult {
    guarded(SWEEP, |c| {
        let dim = probe.dim();
        for pair in &p.pairs {
            pair.validate()?;
            if !pair.decays(dim) && !pair.is_limit(dim) {
                return Err(FfnsError::Core(CoreError::WrongRegime(format!(
                    "(α, p) = ({}, {}) has α + d/p = {} ≥ d; use the divergence check",
                    pair.alpha,
                    pair.p,
                    pair.index(dim)
                ))));
            }
        }
        let series = weighted_norms(probe, &p.pairs, &p.times, p.tail_directions)?;
        for (pair, s) in p.pairs.iter().zip(&series) {
            let key = pair.label();
            let samples: Vec<(f64, f64)> = s.iter().map(|n| (n.t, n.total)).collect();
            let tail_share = s
                .iter()
                .map(|n| if n.total > 0.0 { n.tail / n.total } else { 0.0 })
                .fold(0.0, f64::max);
            let slope = s.iter().map(|n| n.tail_slope).sum::<f64>() / s.len() as f64;
            c.metric(&format!("{key}.tail_share_max"), tail_share)
                .metric(&format!("{key}.tail_slope"), slope);
            if pair.is_limit(dim) {
                let vals: Vec<f64> = samples.iter().map(|s| s.1).collect();
                let var = variation_ratio(&vals);
                c.metric(&format!("{key}.max"), max_of(&vals))
                    .metric(&format!("{key}.variation"), var);
                c.note(format!(
                    "{key}: limit case, exponent 0 with a boundedness check"
                ));
                c.table(
                    &key,
                    samples
                        .iter()
                        .map(|&(t, v)| Row {
                            abscissa: t,
                            value: v,
                            prediction: vals[0],
                            residual: (v / vals[0]).ln(),
                        })
                        .collect(),
                );
                c.require(
                    vals.iter().all(|v| v.is_finite() && *v > 0.0) && var < 2.0,
                    format!("{key}: bounded with variation {var:.3} < 2"),
                );
                continue;
            }
            let mut rep = FitReport::power_law(
                &key,
                &samples,
                pair.predicted_exponent(dim),
                Criterion::Within(p.tol),
                p.span_decade,
            )?;
            if !p.span_decade {
                rep = rep.with_note("time window spans less than a decade");
            }
            c.metric(&format!("{key}.fitted"), rep.fitted);
            c.fit(&key, &rep);
        }
        Ok(())
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceParams {
    pub pair: NormPair,
    pub t: f64,
    /// Increasing truncation radii, one octave apart.
    pub radii: Vec<f64>,
    pub directions: usize,
    /// Log-radial quadrature nodes per octave.
    pub nodes: usize,
}

/// Contribution of `R_k ≤ |x| < R_{k+1}` to the truncated norm (the `p`-th
/// power for finite `p`, the sup for `p = ∞`).
pub fn octave_increments(
    probe: &dyn FieldProbe,
    pair: NormPair,
    t: f64,
    radii: &[f64],
    directions: usize,
    nodes: usize,
) -> Result<Vec<f64>> {
    let dim = probe.dim();
    let d = dim.as_f64();
    let dirs = sample_directions(dim, directions);
    let gl = GaussLegendre::new(nodes);
    let mut out = Vec::new();
    for w in radii.windows(2) {
        let (r0, r1) = (w[0], w[1]);
        let span = (r1 / r0).ln();
        let mut points = Vec::new();
        let mut weights = Vec::new();
        let mut rs = Vec::new();
        for (v, wv) in gl.mapped(0.0, span) {
            let r = r0 * v.exp();
            points.extend(ring(r, &dirs));
            for _ in 0..dirs.len() {
                rs.push(r);
                weights.push(wv);
            }
        }
        let vals = probe.velocities(&points, t)?;
        let inc = if pair.p.is_infinite() {
            vals.iter()
                .zip(&rs)
                .map(|(u, r)| (1.0 + r).powf(pair.alpha) * u.0.norm())
                .fold(0.0, f64::max)
        } else {
            let omega = dim.sphere_area() / dirs.len() as f64;
            vals.iter()
                .zip(rs.iter().zip(&weights))
                .map(|(u, (r, wv))| {
                    // dr r^{d−1} = r^d dv
                    wv * ((1.0 + r).powf(pair.alpha) * u.0.norm()).powf(pair.p) * r.powf(d)
                })
                .sum::<f64>()
                * omega
        };
        out.push(inc);
    }
    Ok(out)
}

/// `‖(1+|x|)^α u(t)‖_p = ∞` when `α + d/p ≥ d`: octave increments of the
/// truncated norm do not decay.
pub fn divergence_check(probe: &dyn FieldProbe, p: &DivergenceParams) -> CheckResult {
    guarded(DIVERGENCE, |c| {
        let dim = probe.dim();
        let pair = p.pair;
        pair.validate()?;
        if pair.decays(dim) || pair.is_limit(dim) {
            return Err(FfnsError::Core(CoreError::WrongRegime(format!(
                "(α, p) = ({}, {}) has a finite norm; use the sweep check",
                pair.alpha, pair.p
            ))));
        }
        if p.radii.len() < 3 || p.radii.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(FfnsError::Core(CoreError::Domain(
                "need at least three increasing truncation radii".into(),
            )));
        }
        let incs = octave_increments(probe, pair, p.t, &p.radii, p.directions, p.nodes)?;
        let an = classify_increments(&incs, CONSTANT_INCREMENT_TOL);
        let expected = if pair.on_boundary(dim) {
            DivergenceVerdict::DivergentLog
        } else {
            DivergenceVerdict::DivergentPower
        };
        c.label("verdict", an.verdict.label())
            .label("expected", expected.label());
        c.metric("increment_spread", an.spread)
            .metric(
                "increment_ratio_min",
                an.ratios.iter().copied().fold(f64::INFINITY, f64::min),
            )
            .metric("increment_ratio_max", max_of(&an.ratios));

        // truncated norms, based on the grid inside the first radius
        let base = match probe.snapshot(p.t) {
            Some(s) if p.radii[0] <= s.grid().half_width() => {
                let b = restrict_annulus_norm(&s, 0.0, p.radii[0], pair.alpha, pair.p)?;
                if pair.p.is_infinite() {
                    b
                } else {
                    b.powf(pair.p)
                }
            }
            _ => {
                c.note("no grid inside the first radius; truncated norms start at zero");
                0.0
            }
        };
        c.metric("base", base);
        let mut acc = base;
        let mut rows = Vec::new();
        for (k, inc) in incs.iter().enumerate() {
            acc = if pair.p.is_infinite() {
                acc.max(*inc)
            } else {
                acc + inc
            };
            let total = if pair.p.is_infinite() {
                acc
            } else {
                acc.powf(1.0 / pair.p)
            };
            rows.push(Row {
                abscissa: p.radii[k + 1],
                value: *inc,
                prediction: incs[0],
                residual: total,
            });
        }
        c.table("", rows);
        c.require(
            an.verdict == expected,
            format!(
                "verdict {} (expected {})",
                an.verdict.label(),
                expected.label()
            ),
        );
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probe::SyntheticProbe;
    use ffns_core::grid::BoxGrid;
    use ffns_core::kernel::profile_field;

    fn scaling_probe() -> SyntheticProbe {
        SyntheticProbe::new(
            Dim::Two,
            |x, t| {
                let xi2 = (x[0] * x[0] + x[1] * x[1]) / t;
                [1.0 / (t * (1.0 + xi2)), 0.0, 0.0]
            },
            |t| BoxGrid::new(Dim::Two, 16.0 * t.sqrt(), 256).ok(),
        )
    }

    #[test]
    fn regime_arithmetic() {
        let d = Dim::Two;
        assert_eq!(
            NormPair::new(0.0, f64::INFINITY).predicted_exponent(d),
            -1.0
        );
        assert_eq!(
            NormPair::new(1.0, f64::INFINITY).predicted_exponent(d),
            -0.5
        );
        assert!(NormPair::new(1.0, 1.0).index(d) >= 2.0);
        assert!(NormPair::new(0.0, 1.0).on_boundary(d));
        assert!(NormPair::new(2.0, f64::INFINITY).is_limit(d));
    }

    #[test]
    fn divergence_pair_rejected_by_sweep() {
        let p = SweepParams {
            pairs: vec![NormPair::new(1.0, 1.0)],
            times: vec![1.0, 2.0],
            tail_directions: 4,
            tol: 0.02,
            span_decade: true,
        };
        let r = sweep_check(&scaling_probe(), &p);
        assert_eq!(r.status, super::super::Status::Error);
        assert!(r.error.unwrap().message.contains("regime"));
    }

    #[test]
    fn scaling_oracle_hits_exponents() {
        let times: Vec<f64> = super::super::log_space(1e4, 1e6, 5);
        let p = SweepParams {
            pairs: vec![NormPair::new(0.0, f64::INFINITY), NormPair::new(0.0, 2.0)],
            times,
            tail_directions: 8,
            tol: 0.02,
            span_decade: true,
        };
        let r = sweep_check(&scaling_probe(), &p);
        assert!(r.passed(), "{r:?}");
        assert!((r.metrics["a0_pinf.fitted"] + 1.0).abs() < 1e-9);
        assert!((r.metrics["a0_p2.fitted"] + 0.5).abs() < 1e-3);
    }

    #[test]
    fn leading_field_increments_are_constant() {
        let c = Vector::from_array(Dim::Two, [1.0, 0.3, 0.0]);
        let probe = SyntheticProbe::steady(
            Dim::Two,
            move |x| {
                profile_field(&Vector::from_array(Dim::Two, *x), &c)
                    .unwrap()
                    .raw()
            },
            None,
        );
        let p = DivergenceParams {
            pair: NormPair::new(0.0, 1.0),
            t: 1.0,
            radii: vec![32.0, 64.0, 128.0, 256.0, 512.0],
            directions: 16,
            nodes: 4,
        };
        let r = divergence_check(&probe, &p);
        assert!(r.passed(), "{r:?}");
        assert!(r.metrics["increment_spread"] < 0.05);
        assert_eq!(r.labels["verdict"], "divergent-log");
    }

    #[test]
    fn faster_tail_converges() {
        let probe = SyntheticProbe::steady(
            Dim::Two,
            |x| {
                let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
                [r.powi(-3), 0.0, 0.0]
            },
            None,
        );
        let p = DivergenceParams {
            pair: NormPair::new(0.0, 1.0),
            t: 1.0,
            radii: vec![32.0, 64.0, 128.0, 256.0, 512.0],
            directions: 16,
            nodes: 4,
        };
        let r = divergence_check(&probe, &p);
        assert_eq!(r.labels["verdict"], "convergent");
        assert_eq!(r.status, super::super::Status::Fail);
    }
}
