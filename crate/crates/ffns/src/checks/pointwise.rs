//! Pointwise far-field checks: the leading profile and its remainder, the
//! decay window, the free-decay control and the next-order profile.

use std::f64::consts::E;

use ffns_core::fit::{Criterion, FitReport};
use ffns_core::forcing::{first_moment, force_integral, ForceModel};
use ffns_core::initial::InitialData;
use ffns_core::kernel::{next_order_profile, sphere_min};
use ffns_core::profile::profile_predict;
use ffns_core::verdict::{nonincreasing, variation_ratio, window_stats};
use ffns_core::{Dim, Error as CoreError, Vector};

use super::{guarded, log_space, max_of, mean, min_of, ring, sample_directions, CheckResult, Row};
use crate::error::{FfnsError, Result};
use crate::probe::FieldProbe;

pub const PROFILE: &str = "profile";
pub const WINDOW: &str = "window";
pub const FREE_DECAY: &str = "free-decay";
pub const NEXT_ORDER: &str = "next-order";

/// Exponent tolerance of pipeline fits.
pub const PIPELINE_TOL: f64 = 0.15;
const WINDOW_RATIO: f64 = 5.0;
const DECADE_NOTE: &str = "window spans less than a decade; fitted over the mandated radii";

/// Log-spaced radii times evenly spread directions at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialSample {
    pub t: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub radii: usize,
    pub directions: usize,
}

impl RadialSample {
    pub fn radii(&self) -> Vec<f64> {
        log_space(self.r_min, self.r_max, self.radii)
    }

    fn span_decade(&self) -> bool {
        self.r_max >= 10.0 * self.r_min
    }

    fn check_region(&self) -> Result<()> {
        let edge = E * self.t.sqrt();
        if self.r_min < edge * (1.0 - 1e-12) {
            return Err(FfnsError::Core(CoreError::Precondition(format!(
                "sample radius {} lies inside e√t = {edge:.4}",
                self.r_min
            ))));
        }
        Ok(())
    }
}

/// Velocities and error budgets on every ring, `[radius][direction]`.
struct Rings {
    radii: Vec<f64>,
    points: Vec<Vec<Vector>>,
    u: Vec<Vec<Vector>>,
    budget: Vec<Vec<f64>>,
}

fn sample_rings(probe: &dyn FieldProbe, s: &RadialSample) -> Result<Rings> {
    let dim = probe.dim();
    let dirs = sample_directions(dim, s.directions);
    let radii = s.radii();
    let mut points = Vec::new();
    let mut u = Vec::new();
    let mut budget = Vec::new();
    for &r in &radii {
        let xs = ring(r, &dirs);
        let vals = probe.velocities(&xs, s.t)?;
        u.push(vals.iter().map(|v| v.0).collect());
        budget.push(vals.iter().map(|v| v.1).collect());
        points.push(xs);
    }
    Ok(Rings {
        radii,
        points,
        u,
        budget,
    })
}

fn power_fit(c: &mut CheckResult, suffix: &str, report: Result<FitReport>) -> Result<FitReport> {
    let rep = report.map_err(|e| match e {
        FfnsError::Core(e) => FfnsError::Core(e),
        other => other,
    })?;
    c.fit(suffix, &rep);
    Ok(rep)
}

fn fit(
    quantity: &str,
    samples: &[(f64, f64)],
    predicted: f64,
    criterion: Criterion,
    span_decade: bool,
) -> Result<FitReport> {
    let rep = FitReport::power_law(quantity, samples, predicted, criterion, span_decade)?;
    Ok(if span_decade {
        rep
    } else {
        rep.with_note(DECADE_NOTE)
    })
}

fn zero_field(rings: &Rings) -> bool {
    rings.u.iter().flatten().all(|v| v.is_zero())
}

/// `e^{tΔ}a + 𝔎M` with its remainder `ℛ = u − e^{tΔ}a − 𝔎M`.
pub fn profile_check(
    probe: &dyn FieldProbe,
    a: &InitialData,
    f: &ForceModel,
    s: &RadialSample,
) -> CheckResult {
    guarded(PROFILE, |c| {
        s.check_region()?;
        let dim = probe.dim();
        let d = dim.as_f64();
        let m = force_integral(f, s.t);
        let rings = sample_rings(probe, s)?;
        let mut mean_u = Vec::new();
        let mut mean_pred = Vec::new();
        let mut max_rem = Vec::new();
        let mut min_lead = Vec::new();
        let mut worst_budget: f64 = 0.0;
        for (i, &r) in rings.radii.iter().enumerate() {
            let mut us = Vec::new();
            let mut ps = Vec::new();
            let mut rem = Vec::new();
            let mut lead = Vec::new();
            for (j, x) in rings.points[i].iter().enumerate() {
                let p = profile_predict(a, f, x, s.t)?;
                let u = rings.u[i][j];
                us.push(u.norm());
                ps.push(p.total().norm());
                let rv = (u - p.total()).norm();
                rem.push(rv);
                lead.push(p.leading.norm());
                if rv > 0.0 {
                    worst_budget = worst_budget.max(rings.budget[i][j] / rv);
                }
            }
            mean_u.push(mean(&us));
            mean_pred.push(mean(&ps));
            max_rem.push(max_of(&rem));
            min_lead.push(min_of(&lead));
            let _ = r;
        }
        c.metric("leading_mass_norm", m.norm());
        if zero_field(&rings) && m.is_zero() {
            c.note("zero field and zero force integral: remainder vanishes identically");
            c.metric("max_remainder", 0.0);
            return Ok(());
        }
        if sphere_min(&m) <= 0.0 {
            return Err(FfnsError::Core(CoreError::Hypothesis(
                "force integral vanishes; the leading profile is zero (use the next-order check)"
                    .into(),
            )));
        }
        let su: Vec<(f64, f64)> = rings
            .radii
            .iter()
            .copied()
            .zip(mean_u.iter().copied())
            .collect();
        let rep = fit(
            "velocity",
            &su,
            -d,
            Criterion::Within(PIPELINE_TOL),
            s.span_decade(),
        )?
        .with_predictions(&mean_pred);
        power_fit(c, "", Ok(rep))?;

        let sr: Vec<(f64, f64)> = rings
            .radii
            .iter()
            .copied()
            .zip(max_rem.iter().copied())
            .collect();
        let consts: Vec<f64> = sr
            .iter()
            .map(|&(r, v)| v * r.powf(d + 1.0) / s.t.sqrt())
            .collect();
        let var = variation_ratio(&consts);
        c.metric("remainder_constant_max", max_of(&consts))
            .metric("remainder_constant_min", min_of(&consts))
            .metric("remainder_constant_variation", var)
            .metric("budget_to_remainder_max", worst_budget);
        if sr.iter().all(|p| p.1 == 0.0) {
            c.note("remainder vanishes at every sample");
        } else {
            let env: Vec<f64> = rings
                .radii
                .iter()
                .map(|r| max_of(&consts) * r.powf(-d - 1.0) * s.t.sqrt())
                .collect();
            let rep = fit(
                "remainder",
                &sr,
                -(d + 1.0),
                Criterion::AtMost(0.25),
                s.span_decade(),
            )?
            .with_predictions(&env);
            power_fit(c, "remainder", Ok(rep))?;
            c.require(
                var < 2.0,
                format!("remainder constant variation {var:.3} < 2"),
            );
            let doubling: Vec<f64> = consts.windows(2).map(|w| w[1] / w[0]).collect();
            c.metric("remainder_constant_step_max", max_of(&doubling));
        }
        if worst_budget > 1.0 {
            c.note(format!(
                "reported error budget exceeds the measured remainder (up to {worst_budget:.2}×)"
            ));
        }
        // the far-field radius: first radius where the remainder is below a
        // third of the leading term
        let far = rings
            .radii
            .iter()
            .zip(max_rem.iter().zip(&min_lead))
            .find(|(_, (rem, lead))| **rem < **lead / 3.0)
            .map(|(r, _)| *r);
        match far {
            Some(r) => {
                c.metric("far_field_radius", r);
            }
            None => {
                c.note("no sampled radius has remainder below a third of the leading term");
            }
        }
        Ok(())
    })
}

/// Window statistics of `|u|·|x|^d` plus the radial slope of `|u|`.
struct WindowMeasure {
    stats: ffns_core::verdict::WindowStats,
    slope: FitReport,
    per_radius_min: Vec<f64>,
}

fn window_measure(rings: &Rings, dim: Dim, span_decade: bool) -> Result<WindowMeasure> {
    let d = dim.as_f64();
    let mut vals = Vec::new();
    let mut per_radius_min = Vec::new();
    let mut su = Vec::new();
    for (i, &r) in rings.radii.iter().enumerate() {
        let v: Vec<f64> = rings.u[i].iter().map(|u| u.norm() * r.powf(d)).collect();
        per_radius_min.push(min_of(&v));
        su.push((
            r,
            mean(&rings.u[i].iter().map(|u| u.norm()).collect::<Vec<_>>()),
        ));
        vals.extend(v);
    }
    let slope = fit(
        "velocity",
        &su,
        -d,
        Criterion::Within(PIPELINE_TOL),
        span_decade,
    )?;
    Ok(WindowMeasure {
        stats: window_stats(&vals),
        slope,
        per_radius_min,
    })
}

fn window_passes(w: &WindowMeasure) -> bool {
    w.stats.min > 0.0 && w.stats.ratio < WINDOW_RATIO && w.slope.pass
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowParams {
    pub sample: RadialSample,
    /// Run the short-time variant at `t₀ ∈ {1/4, 1/8, 1/16}·T_f`.
    pub short_time: bool,
    pub short_time_directions: usize,
}

/// `c ≤ |u|·|x|^d ≤ c'` over radii and directions, and its short-time form
/// with the constants divided by `t`.
pub fn window_check(probe: &dyn FieldProbe, f: &ForceModel, p: &WindowParams) -> CheckResult {
    guarded(WINDOW, |c| {
        let s = &p.sample;
        s.check_region()?;
        let dim = probe.dim();
        let m = force_integral(f, s.t);
        let smin = sphere_min(&m);
        if !(smin > 1e-14 * m.norm().max(1e-300)) || m.is_zero() {
            return Err(FfnsError::Core(CoreError::Hypothesis(
                "M(t) = 0: the window needs a nonzero force integral (use the next-order check)"
                    .into(),
            )));
        }
        let rings = sample_rings(probe, s)?;
        let w = window_measure(&rings, dim, s.span_decade())?;
        c.metric("window_min", w.stats.min)
            .metric("window_max", w.stats.max)
            .metric("window_ratio", w.stats.ratio)
            .metric("sphere_min", smin);
        c.fit("", &w.slope);
        if !s.span_decade() {
            c.note(DECADE_NOTE);
        }
        c.require(w.stats.min > 0.0, "lower window constant positive");
        c.require(
            w.stats.ratio < WINDOW_RATIO,
            format!("window ratio {:.3} < {WINDOW_RATIO}", w.stats.ratio),
        );

        // lower constant against sphere_min(M)(1 − remainder fraction)
        let last = rings.radii.len() - 1;
        let r = rings.radii[last];
        let frac = rings.points[last]
            .iter()
            .zip(&rings.u[last])
            .map(|(x, u)| {
                let lead = ffns_core::kernel::profile_field(x, &m).unwrap_or(Vector::zero(dim));
                (*u - lead).norm() / lead.norm().max(1e-300)
            })
            .fold(0.0, f64::max);
        let bound = smin * (1.0 - frac);
        c.metric("remainder_fraction", frac)
            .metric("lower_bound_prediction", bound);
        c.require(
            w.per_radius_min[last] >= bound * (1.0 - 1e-9),
            format!(
                "lower constant {:.4e} ≥ sphere_min·(1 − fraction) {bound:.4e} at r = {r}",
                w.per_radius_min[last]
            ),
        );

        if p.short_time {
            let tf = f.support_end();
            let sample_times = probe.slice_times().map(|v| v.to_vec());
            let is_slice = |t: f64| match &sample_times {
                Some(ts) => ts.iter().any(|&x| (x - t).abs() <= 1e-9 * t.max(1.0)),
                None => true,
            };
            let mut smallest: Option<f64> = None;
            let mut rows = Vec::new();
            for frac in [0.25, 0.125, 0.0625] {
                let t0 = frac * tf;
                let times = [t0, t0 / 2.0, t0 / 4.0];
                if !times.iter().all(|&t| is_slice(t) && t > 0.0) {
                    c.note(format!(
                        "short-time window t₀ = {t0} skipped: not on the slice grid"
                    ));
                    continue;
                }
                let mut lo = Vec::new();
                let mut hi = Vec::new();
                for &t in &times {
                    let sub = RadialSample {
                        t,
                        directions: p.short_time_directions,
                        ..s.clone()
                    };
                    sub.check_region()?;
                    let ri = sample_rings(probe, &sub)?;
                    let mut vals = Vec::new();
                    for (i, &r) in ri.radii.iter().enumerate() {
                        vals.extend(ri.u[i].iter().map(|u| u.norm() * r.powf(dim.as_f64()) / t));
                    }
                    let st = window_stats(&vals);
                    lo.push(st.min);
                    hi.push(st.max);
                    rows.push(Row {
                        abscissa: t,
                        value: st.min,
                        prediction: st.max,
                        residual: st.ratio,
                    });
                }
                let (vl, vh) = (variation_ratio(&lo), variation_ratio(&hi));
                c.metric(&format!("short_time_{t0}_lower_variation"), vl)
                    .metric(&format!("short_time_{t0}_upper_variation"), vh);
                if lo.iter().all(|&v| v > 0.0) && vl < 2.0 && vh < 2.0 {
                    smallest = Some(t0);
                }
            }
            c.table("short-time", rows);
            match smallest {
                Some(t0) => {
                    c.metric("short_time_smallest_passing_t0", t0);
                }
                None => {
                    c.require(false, "short-time constants stable within 2× for some t₀");
                }
            }
        }
        Ok(())
    })
}

/// With `f ≡ 0` the `−d` window must fail and `|u|` must decay at least
/// like `|x|^{−(d+1/2)}`.
pub fn free_decay_check(probe: &dyn FieldProbe, f: &ForceModel, s: &RadialSample) -> CheckResult {
    guarded(FREE_DECAY, |c| {
        s.check_region()?;
        if !f.is_zero() {
            return Err(FfnsError::Core(CoreError::Hypothesis(
                "the free-decay control needs f ≡ 0".into(),
            )));
        }
        let dim = probe.dim();
        let d = dim.as_f64();
        let rings = sample_rings(probe, s)?;
        if zero_field(&rings) {
            return Err(FfnsError::Core(CoreError::Hypothesis(
                "the free-decay control needs nonzero data".into(),
            )));
        }
        let w = window_measure(&rings, dim, s.span_decade())?;
        c.metric("window_min", w.stats.min)
            .metric("window_max", w.stats.max)
            .metric("window_ratio", w.stats.ratio)
            .metric("window_slope", w.slope.fitted);
        let fails = !window_passes(&w);
        c.label("window_verdict", if fails { "fail" } else { "pass" });
        c.require(fails, "the −d window must fail without forcing");
        let su: Vec<(f64, f64)> = w
            .slope
            .samples
            .iter()
            .map(|p| (p.abscissa, p.value))
            .collect();
        let rep = fit(
            "velocity",
            &su,
            -(d + 0.5),
            Criterion::AtMost(0.0),
            s.span_decade(),
        )?;
        c.fit("", &rep);
        Ok(())
    })
}

/// `|∫f|` against `∫|f|`, for deciding whether the mean vanishes.
fn mean_and_mass(f: &ForceModel) -> (f64, f64) {
    let t = f.support_end();
    let m = force_integral(f, t).norm();
    let mass = match f {
        ForceModel::Separable {
            spatial,
            temporal,
            amplitude,
        } => amplitude.norm() * spatial.abs_integral() * temporal.cumulative(t).abs(),
        ForceModel::Sampled(sf) => {
            let grid = sf.grid();
            let dt = if sf.times().len() > 1 {
                sf.times()[1] - sf.times()[0]
            } else {
                0.0
            };
            sf.slices()
                .iter()
                .map(|v| {
                    (0..grid.len()).map(|i| v.magnitude(i)).sum::<f64>() * grid.cell_volume() * dt
                })
                .sum()
        }
    };
    (m, mass)
}

/// Mean-zero forcing: `|u| ~ |x|^{−d−1}` and `u ≈ −Σ ∂_h𝔎_{jk} M1_{hk}`.
pub fn next_order_check(probe: &dyn FieldProbe, f: &ForceModel, s: &RadialSample) -> CheckResult {
    guarded(NEXT_ORDER, |c| {
        s.check_region()?;
        let dim = probe.dim();
        let d = dim.as_f64();
        let (mean_norm, mass) = mean_and_mass(f);
        c.metric("mean_norm", mean_norm).metric("abs_mass", mass);
        if mean_norm > 1e-10 * mass.max(1e-300) {
            return Err(FfnsError::Core(CoreError::Hypothesis(format!(
                "force integral {mean_norm:e} does not vanish (relative to ∫|f| = {mass:e})"
            ))));
        }
        let m1 = first_moment(f, s.t);
        c.metric("first_moment_norm", m1.norm());
        if m1.norm() <= 1e-12 * mass.max(1e-300) * f.support_radius().max(1.0) {
            c.decline("next order also vanishes: M1 = 0, no verdict");
            return Ok(());
        }
        let rings = sample_rings(probe, s)?;
        let mut su = Vec::new();
        let mut preds = Vec::new();
        let mut agree = Vec::new();
        for (i, &r) in rings.radii.iter().enumerate() {
            let mut us = Vec::new();
            let mut ps = Vec::new();
            let mut diff = Vec::new();
            for (j, x) in rings.points[i].iter().enumerate() {
                let p = -next_order_profile(x, &m1)?;
                let u = rings.u[i][j];
                us.push(u.norm());
                ps.push(p.norm());
                diff.push((u - p).norm());
            }
            su.push((r, mean(&us)));
            preds.push(mean(&ps));
            agree.push(max_of(&diff) / max_of(&ps));
        }
        let rep = fit(
            "velocity",
            &su,
            -(d + 1.0),
            Criterion::Within(0.25),
            s.span_decade(),
        )?
        .with_predictions(&preds);
        c.fit("", &rep);
        c.table(
            "agreement",
            rings
                .radii
                .iter()
                .zip(&agree)
                .map(|(&r, &e)| Row {
                    abscissa: r,
                    value: e,
                    prediction: 0.0,
                    residual: e,
                })
                .collect(),
        );
        let half = agree.len() / 2;
        let outer = &agree[half.saturating_sub(1).min(agree.len() - 1)..];
        c.metric("agreement_outer_first", outer[0])
            .metric("agreement_outer_last", outer[outer.len() - 1]);
        c.require(
            nonincreasing(outer),
            "agreement with −∇𝔎:M1 improves over the outer half",
        );
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probe::SyntheticProbe;
    use ffns_core::forcing::{SpatialProfile, TemporalKind, TemporalProfile};
    use ffns_core::kernel::profile_field;

    fn canonical_force(amp: f64) -> ForceModel {
        ForceModel::separable(
            SpatialProfile::gaussian(Dim::Two, 1.0).unwrap(),
            TemporalProfile::new(TemporalKind::Indicator, 0.0, 1.0).unwrap(),
            Vector::from_array(Dim::Two, [amp, 0.0, 0.0]),
        )
        .unwrap()
    }

    fn sample() -> RadialSample {
        RadialSample {
            t: 1.0,
            r_min: 16.0,
            r_max: 128.0,
            radii: 8,
            directions: 8,
        }
    }

    #[test]
    fn exact_profile_has_vanishing_remainder() {
        let f = canonical_force(1.0);
        let m = force_integral(&f, 1.0);
        let probe = SyntheticProbe::steady(
            Dim::Two,
            move |x| {
                profile_field(&Vector::from_array(Dim::Two, *x), &m)
                    .unwrap()
                    .raw()
            },
            None,
        );
        let r = profile_check(&probe, &InitialData::Zero(Dim::Two), &f, &sample());
        assert!(r.passed(), "{r:?}");
        assert!(r.metrics["remainder_constant_max"] < 1e-25);
    }

    #[test]
    fn region_violation_is_rejected() {
        let f = canonical_force(1.0);
        let probe = SyntheticProbe::steady(Dim::Two, |_| [0.0; 3], None);
        let s = RadialSample {
            r_min: 1.0,
            ..sample()
        };
        let r = profile_check(&probe, &InitialData::Zero(Dim::Two), &f, &s);
        assert_eq!(r.status, super::super::Status::Error);
        assert_eq!(r.error.unwrap().exit_code, crate::error::EXIT_CONFIG);
    }

    #[test]
    fn pure_leading_field_has_unit_window_ratio() {
        let f = canonical_force(1.0);
        let m = force_integral(&f, 1.0);
        let probe = SyntheticProbe::steady(
            Dim::Two,
            move |x| {
                profile_field(&Vector::from_array(Dim::Two, *x), &m)
                    .unwrap()
                    .raw()
            },
            None,
        );
        let p = WindowParams {
            sample: RadialSample {
                r_min: 32.0,
                radii: 5,
                ..sample()
            },
            short_time: false,
            short_time_directions: 4,
        };
        let r = window_check(&probe, &f, &p);
        assert!(r.passed(), "{r:?}");
        assert!((r.metrics["window_ratio"] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_mean_force_rejected_by_window() {
        let probe = SyntheticProbe::steady(Dim::Two, |_| [1.0, 0.0, 0.0], None);
        let p = WindowParams {
            sample: sample(),
            short_time: false,
            short_time_directions: 4,
        };
        let r = window_check(&probe, &ForceModel::zero(Dim::Two), &p);
        assert_eq!(r.status, super::super::Status::Error);
        assert!(r.error.unwrap().message.contains("hypothesis"));
    }

    #[test]
    fn exact_next_order_field_agrees() {
        let f = ForceModel::separable(
            SpatialProfile::dipole(Dim::Two, 1.0, 1.5, 0).unwrap(),
            TemporalProfile::new(TemporalKind::Indicator, 0.0, 1.0).unwrap(),
            Vector::from_array(Dim::Two, [0.0, 1.0, 0.0]),
        )
        .unwrap();
        let m1 = first_moment(&f, 1.0);
        let probe = SyntheticProbe::steady(
            Dim::Two,
            move |x| (-next_order_profile(&Vector::from_array(Dim::Two, *x), &m1).unwrap()).raw(),
            None,
        );
        let r = next_order_check(&probe, &f, &sample());
        assert!(r.passed(), "{r:?}");
        assert!((r.fits[0].fitted + 3.0).abs() < 1e-9);
        assert!(r.metrics["agreement_outer_last"] < 1e-12);
        // a nonzero-mean force is refused
        let r = next_order_check(&probe, &canonical_force(1.0), &sample());
        assert_eq!(r.status, super::super::Status::Error);
    }
}
