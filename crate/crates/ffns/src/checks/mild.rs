//! The mild-solution contract: integral-equation residual, contraction,
//! perturbation order in the amplitude, refinement stability and the
//! consistency of point and grid evaluation.

use ffns_core::forcing::{validate_assumptions, ForceModel, SampledForce};
use ffns_core::initial::InitialData;
use ffns_core::{Dim, Vector};

use super::{guarded, ring, sample_directions, CheckResult, Row};
use crate::error::Result;
use crate::farfield::FarField;
use crate::solver::{
    admission_epsilon, is_contractive, l2_diff, ModeTables, Trajectory, ADMISSION_EPSILON,
    DIVERGENCE_TOL,
};
use crate::spectral::Transform;

pub const MILD: &str = "mild";

/// A re-solve requested by the check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Variant {
    /// Data and force multiplied by the factor.
    Scaled(f64),
    /// Twice the grid points per axis.
    FinerGrid,
    /// Twice the slices per unit time.
    FinerTime,
}

/// A solved variant with the inputs it was solved from.
pub struct Solved {
    pub traj: Trajectory,
    pub a: InitialData,
    pub f: ForceModel,
    /// Time panels per slice for the far-field `B` quadrature.
    pub panels: usize,
}

pub struct MildInputs<'a> {
    pub traj: &'a Trajectory,
    pub a: &'a InitialData,
    pub f: &'a ForceModel,
    pub tol: f64,
    pub refine: bool,
    /// Time panels per slice for the far-field `B` quadrature.
    pub panels: usize,
    pub solve: &'a (dyn Fn(Variant) -> Result<Solved> + Sync),
}

/// `a` and `f` multiplied by `s`.
pub fn scale_inputs(a: &InitialData, f: &ForceModel, s: f64) -> Result<(InitialData, ForceModel)> {
    let a = match a.field() {
        Some(field) => InitialData::from_field(field.scale(s).with_divergence_free(true))?,
        None => a.clone(),
    };
    let f = match f {
        ForceModel::Separable {
            spatial,
            temporal,
            amplitude,
        } => ForceModel::separable(spatial.clone(), *temporal, amplitude.scale(s))?,
        ForceModel::Sampled(sf) => ForceModel::Sampled(SampledForce::new(
            sf.times().to_vec(),
            sf.slices().iter().map(|v| v.scale(s)).collect(),
        )?),
    };
    Ok((a, f))
}

/// `sup_m ‖u(t_m) − (e^{t_mΔ}a + ℒ(f)(t_m))‖₂`.
pub fn nonlinear_size(traj: &Trajectory, a: &InitialData, f: &ForceModel) -> Result<f64> {
    let tr = Transform::new(traj.grid);
    let tables = ModeTables::new(traj.grid);
    let lin = traj.linear_or_rebuild(&tr, &tables, a, f)?;
    let mut q: f64 = 0.0;
    for (m, u) in traj.snapshots.iter().enumerate() {
        q = q.max(l2_diff(u, &lin.field_at(&tr, &tables, m, true)));
    }
    Ok(q)
}

/// Far-field sample points: outside the box, near it and deep in the far
/// field, two directions each.
pub fn refinement_points(dim: Dim, half_width: f64) -> Vec<Vector> {
    let dirs = sample_directions(dim, 2);
    [0.6, 1.25, 4.0]
        .iter()
        .flat_map(|f| ring(f * half_width, &dirs))
        .collect()
}

pub fn mild_check(inp: &MildInputs) -> CheckResult {
    guarded(MILD, |r| {
        let traj = inp.traj;
        let dim = traj.grid.dim();
        let worst = traj.residuals.iter().copied().fold(0.0, f64::max);
        r.metric("max_residual", worst)
            .metric("sweeps", traj.iteration_log.len() as f64)
            .metric("max_divergence_residual", traj.max_divergence_residual);
        for (k, v) in traj.iteration_log.iter().enumerate() {
            r.metric(&format!("update_norm_{k}"), *v);
        }
        r.table(
            "iterations",
            traj.iteration_log
                .iter()
                .enumerate()
                .map(|(k, &v)| Row {
                    abscissa: k as f64 + 1.0,
                    value: v,
                    prediction: inp.tol,
                    residual: v - inp.tol,
                })
                .collect(),
        );
        r.require(
            worst < 2.0 * inp.tol,
            format!("integral-equation residual {worst:e} < 2·tol"),
        );
        r.require(
            traj.contractive && is_contractive(&traj.iteration_log, inp.tol),
            "update norms strictly decreasing after the second sweep",
        );
        r.require(
            traj.max_divergence_residual < DIVERGENCE_TOL,
            "every snapshot divergence-free",
        );

        // envelope constants of ℒ(f) and u against the admission constant
        let report = validate_assumptions(inp.f, ADMISSION_EPSILON)?;
        let eps = admission_epsilon(inp.a, &report);
        r.metric("admission_epsilon", eps);
        let tr = Transform::new(traj.grid);
        let tables = ModeTables::new(traj.grid);
        let lin = traj.linear_or_rebuild(&tr, &tables, inp.a, inp.f)?;
        let grid = traj.grid;
        let weight = |x: &[f64; 3], t: f64| {
            let rr = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            dim.pow_d(1.0 + rr).min((1.0 + t).powf(dim.as_f64() / 2.0))
        };
        let (mut c_lin, mut c_u) = (0.0f64, 0.0f64);
        for (m, u) in traj.snapshots.iter().enumerate() {
            let t = traj.times[m];
            let l = lin.field_at(&tr, &tables, m, false);
            for i in 0..grid.len() {
                let w = weight(&grid.point(i), t);
                c_lin = c_lin.max(l.magnitude(i) * w);
                c_u = c_u.max(u.magnitude(i) * w);
            }
        }
        if eps > 0.0 {
            r.metric("linear_envelope_constant", c_lin / eps)
                .metric("solution_envelope_constant", c_u / eps);
            r.require(
                c_lin / eps < 50.0,
                format!("ℒ envelope constant {} < 50", c_lin / eps),
            );
        } else {
            r.note("zero data and force: envelope constants not defined");
        }

        // amplitude halving: u − u_lin must be quadratic in the amplitude
        let q1 = nonlinear_size(traj, inp.a, inp.f)?;
        r.metric("nonlinear_size_1", q1);
        if q1 == 0.0 {
            r.note("nonlinear part vanishes identically; amplitude test trivially satisfied");
        } else {
            let mut q = vec![q1];
            for s in [0.5, 0.25] {
                let v = (inp.solve)(Variant::Scaled(s))?;
                q.push(nonlinear_size(&v.traj, &v.a, &v.f)?);
            }
            let ratios = [q[0] / q[1], q[1] / q[2]];
            r.metric("nonlinear_size_0.5", q[1])
                .metric("nonlinear_size_0.25", q[2])
                .metric("halving_ratio_1", ratios[0])
                .metric("halving_ratio_2", ratios[1]);
            r.table(
                "amplitude",
                [1.0, 0.5, 0.25]
                    .iter()
                    .zip(&q)
                    .map(|(&s, &v)| Row {
                        abscissa: s,
                        value: v,
                        prediction: q1 * s * s,
                        residual: (v / (q1 * s * s)).ln(),
                    })
                    .collect(),
            );
            for (i, ratio) in ratios.iter().enumerate() {
                r.require(
                    (3.5..=4.5).contains(ratio),
                    format!("halving ratio {} = {ratio:.4} in [3.5, 4.5]", i + 1),
                );
            }
        }

        // point evaluation against the grid inside the box
        if traj.snapshots.len() >= 4 {
            let far = FarField::new(traj, inp.a, inp.f)?.with_panels(inp.panels);
            let t = traj.horizon();
            let m = traj.slice_index(t).unwrap_or(traj.times.len() - 1);
            let snap = &traj.snapshots[m];
            let stokes = lin.field_at(&tr, &tables, m, true);
            let inner = grid.half_width() / 4.0;
            let nodes: Vec<usize> = (0..grid.len())
                .filter(|&i| {
                    let x = grid.point(i);
                    let rr = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
                    rr <= inner && rr >= 1.0
                })
                .collect();
            let stride = (nodes.len() / 20).max(1);
            let picked: Vec<usize> = nodes.iter().step_by(stride).take(20).copied().collect();
            let xs: Vec<Vector> = picked
                .iter()
                .map(|&i| Vector::from_array(dim, grid.point(i)))
                .collect();
            let samples = far.eval_many(&xs, t)?;
            let scale_u = picked
                .iter()
                .map(|&i| snap.magnitude(i))
                .fold(0.0, f64::max);
            let scale_l = picked
                .iter()
                .map(|&i| stokes.magnitude(i))
                .fold(0.0, f64::max);
            let (mut du, mut dl) = (0.0f64, 0.0f64);
            let mut rows = Vec::new();
            for (s, &i) in samples.iter().zip(&picked) {
                let g = Vector::from_array(dim, snap.value(i));
                let gl = Vector::from_array(dim, stokes.value(i));
                let e = (s.velocity - g).norm();
                du = du.max(e);
                dl = dl.max((s.heat + s.linear - gl).norm());
                rows.push(Row {
                    abscissa: s.x.norm(),
                    value: s.velocity.norm(),
                    prediction: g.norm(),
                    residual: e,
                });
            }
            r.table("interior", rows);
            if scale_u > 0.0 {
                r.metric("interior_rel_difference", du / scale_u);
                r.require(
                    du / scale_u < 1e-3,
                    format!("point vs grid inside the box {:e} < 1e-3", du / scale_u),
                );
            }
            if scale_l > 0.0 {
                r.metric("stokes_rel_difference", dl / scale_l);
                r.require(
                    dl / scale_l < 1e-3,
                    format!("linear point vs grid {:e} < 1e-3", dl / scale_l),
                );
            }

            if inp.refine {
                let points = refinement_points(dim, grid.half_width());
                let base = far.eval_many(&points, t)?;
                let mut rows = Vec::new();
                for (label, variant) in [("grid", Variant::FinerGrid), ("time", Variant::FinerTime)]
                {
                    let v = (inp.solve)(variant)?;
                    let ff = FarField::new(&v.traj, &v.a, &v.f)?.with_panels(v.panels);
                    let fine = ff.eval_many(&points, t)?;
                    let mut worst: f64 = 0.0;
                    for (b, f) in base.iter().zip(&fine) {
                        let diff = (b.velocity - f.velocity).norm();
                        let allowed = b.budget.total() + f.budget.total();
                        worst = worst.max(if allowed > 0.0 {
                            diff / allowed
                        } else if diff == 0.0 {
                            0.0
                        } else {
                            f64::INFINITY
                        });
                        rows.push(Row {
                            abscissa: b.x.norm(),
                            value: diff,
                            prediction: allowed,
                            residual: diff - allowed,
                        });
                    }
                    r.metric(&format!("refinement_{label}_ratio"), worst);
                    r.require(
                        worst <= 1.0,
                        format!(
                            "{label} refinement change within the error budget (ratio {worst:.3})"
                        ),
                    );
                }
                r.table("refinement", rows);
            }
        }
        Ok(())
    })
}
