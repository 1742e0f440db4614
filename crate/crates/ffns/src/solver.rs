//! Mild solutions on the periodic grid by global Picard iteration.
//!
//! Every slice `t_m = mΔt` is stored. A sweep maps `u ↦ e^{tΔ}a + ℒ(f) − B(u,u)`:
//! `B̂` is advanced slice to slice with the exact decay `e^{−Δtκ}` and the
//! cubic-stencil exponential weights of [`crate::duhamel`], and the
//! nonlinear term `ℙ∇·(u⊗u)` is formed pseudo-spectrally with the 2/3 rule.

use std::sync::Arc;

use ffns_core::forcing::{validate_assumptions, AssumptionReport, ForceModel};
use ffns_core::grid::{BoxGrid, VectorFieldGrid};
use ffns_core::initial::InitialData;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::duhamel::{forced_weights, slice_count, stencil_for, SliceWeights};
use crate::error::{FfnsError, Result};
use crate::spectral::{
    dealias_keep, kappa_unit, mode, mode_norm2, project_mode, Spectrum, Transform,
};

/// Combined data + force admission threshold.
pub const ADMISSION_EPSILON: f64 = 5e-2;
/// Snapshot divergence residual below which the flag is set.
pub const DIVERGENCE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub horizon: f64,
    pub slices_per_unit: usize,
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            horizon: 1.0,
            slices_per_unit: 64,
            tol: 1e-10,
            max_sweeps: 20,
        }
    }
}

/// Per-mode lookup tables shared by every sweep.
#[derive(Debug)]
pub struct ModeTables {
    pub grid: BoxGrid,
    pub modes: Vec<[i64; 3]>,
    pub norm2: Vec<usize>,
    pub keep: Vec<bool>,
}

impl ModeTables {
    pub fn new(grid: BoxGrid) -> Self {
        let d = grid.dim().n();
        let modes: Vec<[i64; 3]> = (0..grid.len()).map(|i| mode(&grid, i)).collect();
        let norm2 = modes.iter().map(mode_norm2).collect();
        let keep = modes
            .iter()
            .map(|m| m[..d].iter().all(|&k| dealias_keep(&grid, k)))
            .collect();
        ModeTables {
            grid,
            modes,
            norm2,
            keep,
        }
    }
}

/// Projector with the free-space-consistent value `(1 − 1/d)δ` at `ξ = 0`.
#[inline]
fn project_force_mode(d: usize, m: &[i64; 3], v: &mut [Complex64; 3]) {
    if mode_norm2(m) == 0 {
        let f = 1.0 - 1.0 / d as f64;
        for x in v.iter_mut().take(d) {
            *x *= f;
        }
    } else {
        project_mode(ffns_core::Dim::new(d).expect("grid dimension"), m, v);
    }
}

fn zero_spectrum(grid: BoxGrid) -> Spectrum {
    Spectrum {
        grid,
        comps: vec![vec![Complex64::new(0.0, 0.0); grid.len()]; grid.dim().n()],
    }
}

/// `e^{t_mΔ}a + ℒ(f)(t_m)` in spectral form.
#[derive(Debug)]
pub struct LinearPart {
    grid: BoxGrid,
    dt: f64,
    a_hat: Option<Spectrum>,
    forcing: Forcing,
}

#[derive(Debug)]
enum Forcing {
    None,
    Separable {
        rho_hat: Vec<Complex64>,
        amplitude: [f64; 3],
        w: Vec<Vec<f64>>,
    },
    Stored(Vec<Spectrum>),
}

impl LinearPart {
    pub fn build(
        tr: &Transform,
        tables: &ModeTables,
        a: &InitialData,
        f: &ForceModel,
        intervals: usize,
        dt: f64,
    ) -> Result<Self> {
        let grid = *tr.grid();
        let d = grid.dim().n();
        let a_hat = a.field().map(|field| {
            if field.grid() != &grid {
                return Err(FfnsError::State(
                    "initial datum lives on a different grid".into(),
                ));
            }
            let mut s = Spectrum::of(tr, field);
            for i in 0..grid.len() {
                let mut v = [Complex64::new(0.0, 0.0); 3];
                for c in 0..d {
                    v[c] = s.comps[c][i];
                }
                project_mode(grid.dim(), &tables.modes[i], &mut v);
                for c in 0..d {
                    s.comps[c][i] = v[c];
                }
            }
            Ok(s)
        });
        let a_hat = a_hat.transpose()?;
        let forcing = if f.is_zero() {
            Forcing::None
        } else {
            match f {
                ForceModel::Separable {
                    spatial,
                    temporal,
                    amplitude,
                } => Forcing::Separable {
                    rho_hat: tr.forward_real(&spatial.sample(&grid)),
                    amplitude: amplitude.raw(),
                    w: forced_weights(&grid, dt, intervals, temporal),
                },
                ForceModel::Sampled(s) => {
                    Forcing::Stored(sampled_response(tr, tables, s, intervals, dt)?)
                }
            }
        };
        Ok(LinearPart {
            grid,
            dt,
            a_hat,
            forcing,
        })
    }

    /// Spectrum of the full linear part at slice `m`.
    pub fn spectrum_at(&self, tables: &ModeTables, m: usize, with_heat: bool) -> Spectrum {
        let grid = self.grid;
        let d = grid.dim().n();
        let t = m as f64 * self.dt;
        let ku = kappa_unit(&grid);
        let mut out = match &self.forcing {
            Forcing::Stored(v) => v[m].clone(),
            _ => zero_spectrum(grid),
        };
        if let Forcing::Separable {
            rho_hat,
            amplitude,
            w,
        } = &self.forcing
        {
            let wm = &w[m];
            let vals: Vec<[Complex64; 3]> = (0..grid.len())
                .into_par_iter()
                .map(|i| {
                    let mut v = [Complex64::new(0.0, 0.0); 3];
                    let base = rho_hat[i] * wm[tables.norm2[i]];
                    for (k, slot) in v.iter_mut().enumerate().take(d) {
                        *slot = base * amplitude[k];
                    }
                    project_force_mode(d, &tables.modes[i], &mut v);
                    v
                })
                .collect();
            for (c, comp) in out.comps.iter_mut().enumerate() {
                for (x, v) in comp.iter_mut().zip(&vals) {
                    *x = v[c];
                }
            }
        }
        if let (true, Some(a)) = (with_heat, &self.a_hat) {
            for c in 0..d {
                out.comps[c].par_iter_mut().enumerate().for_each(|(i, v)| {
                    *v += a.comps[c][i] * (-t * ku * tables.norm2[i] as f64).exp()
                });
            }
        }
        out
    }

    pub fn field_at(
        &self,
        tr: &Transform,
        tables: &ModeTables,
        m: usize,
        with_heat: bool,
    ) -> VectorFieldGrid {
        self.spectrum_at(tables, m, with_heat)
            .to_field(tr)
            .with_divergence_free(true)
    }
}

/// `ℒ̂` at every slice for a force sampled at the slice times.
fn sampled_response(
    tr: &Transform,
    tables: &ModeTables,
    s: &ffns_core::forcing::SampledForce,
    intervals: usize,
    dt: f64,
) -> Result<Vec<Spectrum>> {
    let grid = *tr.grid();
    if s.grid() != &grid {
        return Err(FfnsError::Core(ffns_core::Error::Coverage(
            "sampled force grid differs from the solver grid".into(),
        )));
    }
    for (i, &t) in s.times().iter().enumerate() {
        if (t - i as f64 * dt).abs() > 1e-9 * dt.max(1.0) {
            return Err(FfnsError::Core(ffns_core::Error::Validation(format!(
                "sampled force time {t} is not slice {i} (Δt = {dt})"
            ))));
        }
    }
    let d = grid.dim().n();
    let weights = SliceWeights::new(&grid, dt);
    let slice_hat = |j: usize| -> Spectrum {
        if j < s.times().len() {
            let mut sp = Spectrum::of(tr, &s.slices()[j]);
            for i in 0..grid.len() {
                let mut v = [Complex64::new(0.0, 0.0); 3];
                for c in 0..d {
                    v[c] = sp.comps[c][i];
                }
                project_force_mode(d, &tables.modes[i], &mut v);
                for c in 0..d {
                    sp.comps[c][i] = v[c];
                }
            }
            sp
        } else {
            zero_spectrum(grid)
        }
    };
    let hats: Vec<Spectrum> = (0..=intervals).map(slice_hat).collect();
    let mut out = Vec::with_capacity(intervals + 1);
    let mut acc = zero_spectrum(grid);
    out.push(acc.clone());
    for m in 0..intervals {
        advance(&weights, tables, &mut acc, m, intervals, |j| &hats[j]);
        out.push(acc.clone());
    }
    Ok(out)
}

/// `acc ← e^{−Δtκ}acc + Σ_q W_q G_{start+q}` for interval `m`.
fn advance<'a, F: Fn(usize) -> &'a Spectrum>(
    w: &SliceWeights,
    tables: &ModeTables,
    acc: &mut Spectrum,
    m: usize,
    intervals: usize,
    g: F,
) {
    let (shape, start) = stencil_for(m, intervals);
    let gs = [g(start), g(start + 1), g(start + 2), g(start + 3)];
    let wt = &w.weights[shape];
    for (c, comp) in acc.comps.iter_mut().enumerate() {
        comp.par_iter_mut().enumerate().for_each(|(i, v)| {
            let n = tables.norm2[i];
            let q = &wt[n];
            *v = *v * w.decay[n]
                + gs[0].comps[c][i] * q[0]
                + gs[1].comps[c][i] * q[1]
                + gs[2].comps[c][i] * q[2]
                + gs[3].comps[c][i] * q[3];
        });
    }
}

/// `ℙ∇·(u⊗u)` in spectral form, dealiased by the 2/3 rule.
pub fn nonlinear_term(tr: &Transform, tables: &ModeTables, u: &VectorFieldGrid) -> Spectrum {
    let grid = *tr.grid();
    let d = grid.dim().n();
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|k| (k..d).map(move |l| (k, l))).collect();
    let prods: Vec<Vec<Complex64>> = pairs
        .par_iter()
        .map(|&(k, l)| {
            let a = u.component(k);
            let b = u.component(l);
            let p: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
            tr.forward_real(&p)
        })
        .collect();
    let pair_index = |k: usize, l: usize| {
        let (a, b) = if k <= l { (k, l) } else { (l, k) };
        pairs
            .iter()
            .position(|&p| p == (a, b))
            .expect("pair listed")
    };
    let mut idx = [[0usize; 3]; 3];
    for k in 0..d {
        for l in 0..d {
            idx[k][l] = pair_index(k, l);
        }
    }
    let kunit = std::f64::consts::PI / grid.half_width();
    let out: Vec<[Complex64; 3]> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let mut v = [Complex64::new(0.0, 0.0); 3];
            if !tables.keep[i] {
                return v;
            }
            let m = &tables.modes[i];
            for k in 0..d {
                let mut s = Complex64::new(0.0, 0.0);
                for l in 0..d {
                    s += prods[idx[k][l]][i] * Complex64::new(0.0, kunit * m[l] as f64);
                }
                v[k] = s;
            }
            project_mode(grid.dim(), m, &mut v);
            v
        })
        .collect();
    Spectrum {
        grid,
        comps: (0..d).map(|c| out.iter().map(|v| v[c]).collect()).collect(),
    }
}

/// Shared state of a solve on one grid and slicing.
pub struct Duhamel {
    pub tr: Transform,
    pub tables: ModeTables,
    pub weights: SliceWeights,
    pub intervals: usize,
    pub dt: f64,
}

impl Duhamel {
    pub fn new(grid: BoxGrid, horizon: f64, slices_per_unit: usize) -> Result<Self> {
        let (intervals, dt) = slice_count(horizon, slices_per_unit)?;
        Ok(Duhamel {
            tr: Transform::new(grid),
            tables: ModeTables::new(grid),
            weights: SliceWeights::new(&grid, dt),
            intervals,
            dt,
        })
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.intervals).map(|m| m as f64 * self.dt).collect()
    }

    /// `B̂(u,u)` at every slice of a history, visited in order. The visitor
    /// may overwrite slice `m` of the history: its nonlinear term is formed
    /// before the visit and never recomputed.
    pub fn bilinear_pass<F>(&self, history: &mut [VectorFieldGrid], mut visit: F) -> Result<()>
    where
        F: FnMut(usize, &Spectrum, &mut VectorFieldGrid) -> Result<()>,
    {
        let grid = *self.tr.grid();
        if history.len() != self.intervals + 1 {
            return Err(FfnsError::State(format!(
                "history has {} slices, expected {}",
                history.len(),
                self.intervals + 1
            )));
        }
        let mut window: Vec<Option<Spectrum>> = vec![None; self.intervals + 1];
        let mut acc = zero_spectrum(grid);
        for m in 0..self.intervals {
            let (_, start) = stencil_for(m, self.intervals);
            for j in start..start + 4 {
                if window[j].is_none() {
                    window[j] = Some(nonlinear_term(&self.tr, &self.tables, &history[j]));
                }
            }
            if start > 0 {
                window[start - 1] = None;
            }
            if m == 0 {
                visit(0, &acc, &mut history[0])?;
            }
            advance(
                &self.weights,
                &self.tables,
                &mut acc,
                m,
                self.intervals,
                |j| window[j].as_ref().expect("stencil slice computed"),
            );
            visit(m + 1, &acc, &mut history[m + 1])?;
        }
        Ok(())
    }

    /// Grid-mode `B(u,u)` at every slice.
    pub fn bilinear_fields(&self, history: &[VectorFieldGrid]) -> Result<Vec<VectorFieldGrid>> {
        let mut out = Vec::with_capacity(history.len());
        let mut h = history.to_vec();
        self.bilinear_pass(&mut h, |_, b, _| {
            out.push(b.to_field(&self.tr).with_divergence_free(true));
            Ok(())
        })?;
        Ok(out)
    }
}

/// Discrete `L²` norm of `a − b`.
pub fn l2_diff(a: &VectorFieldGrid, b: &VectorFieldGrid) -> f64 {
    let w = a.grid().cell_volume();
    let s: f64 = a
        .components()
        .iter()
        .zip(b.components())
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum::<f64>())
        .sum();
    (s * w).sqrt()
}

/// A solved trajectory: snapshots at every slice plus diagnostics.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: BoxGrid,
    pub times: Vec<f64>,
    pub snapshots: Vec<VectorFieldGrid>,
    /// Sup over slices of the `L²` update norm, per sweep.
    pub iteration_log: Vec<f64>,
    /// `L²` residual of the integral equation at every slice.
    pub residuals: Vec<f64>,
    pub contractive: bool,
    pub max_divergence_residual: f64,
    pub scenario_hash: String,
    linear: Option<Arc<LinearPart>>,
}

impl Trajectory {
    pub fn new(
        grid: BoxGrid,
        times: Vec<f64>,
        snapshots: Vec<VectorFieldGrid>,
        iteration_log: Vec<f64>,
        residuals: Vec<f64>,
        scenario_hash: String,
    ) -> Self {
        let contractive = is_contractive(&iteration_log, 0.0);
        Trajectory {
            grid,
            times,
            snapshots,
            iteration_log,
            residuals,
            contractive,
            max_divergence_residual: 0.0,
            scenario_hash,
            linear: None,
        }
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }

    pub fn dt(&self) -> f64 {
        if self.times.len() > 1 {
            self.times[1] - self.times[0]
        } else {
            0.0
        }
    }

    /// Index of the slice at time `t`, if `t` is a slice time.
    pub fn slice_index(&self, t: f64) -> Option<usize> {
        let dt = self.dt();
        if dt == 0.0 {
            return None;
        }
        let m = (t / dt).round();
        if m < 0.0 || (m * dt - t).abs() > 1e-9 * dt || m as usize >= self.times.len() {
            return None;
        }
        Some(m as usize)
    }

    pub fn snapshot_at(&self, t: f64) -> Result<&VectorFieldGrid> {
        self.slice_index(t)
            .map(|m| &self.snapshots[m])
            .ok_or_else(|| FfnsError::State(format!("t = {t} is not a stored slice time")))
    }

    pub fn linear_part(&self) -> Option<&LinearPart> {
        self.linear.as_deref()
    }

    /// The stored linear part, or one rebuilt from the inputs for a
    /// trajectory loaded from disk.
    pub fn linear_or_rebuild(
        &self,
        tr: &Transform,
        tables: &ModeTables,
        a: &InitialData,
        f: &ForceModel,
    ) -> Result<Arc<LinearPart>> {
        if let Some(l) = &self.linear {
            return Ok(l.clone());
        }
        let intervals = self.times.len().saturating_sub(1);
        Ok(Arc::new(LinearPart::build(
            tr,
            tables,
            a,
            f,
            intervals,
            self.dt(),
        )?))
    }
}

/// Update norms strictly decrease from the third sweep on, ignoring
/// updates already below `floor`.
pub fn is_contractive(log: &[f64], floor: f64) -> bool {
    log.windows(2)
        .enumerate()
        .all(|(k, w)| k == 0 || w[1] < w[0] || w[1] < floor)
}

/// Admission constant: data decay constant plus the force's pointwise and
/// `L¹` constants.
pub fn admission_epsilon(a: &InitialData, report: &AssumptionReport) -> f64 {
    a.decay_sup() + report.pointwise_sup + report.l1_norm
}

pub fn picard_solve(
    duhamel: &Duhamel,
    a: &InitialData,
    f: &ForceModel,
    settings: &SolverSettings,
    scenario_hash: &str,
) -> Result<Trajectory> {
    let grid = *duhamel.tr.grid();
    if settings.horizon.sqrt() > grid.half_width() / 8.0 {
        return Err(FfnsError::Core(ffns_core::Error::Validation(format!(
            "truncation guard √T ≤ L/8 violated: √{} > {}/8",
            settings.horizon,
            grid.half_width()
        ))));
    }
    let report = validate_assumptions(f, ADMISSION_EPSILON)?;
    let eps = admission_epsilon(a, &report);
    if eps > ADMISSION_EPSILON {
        return Err(FfnsError::Core(ffns_core::Error::Validation(format!(
            "admission constant {eps:.3e} exceeds {ADMISSION_EPSILON:e}"
        ))));
    }
    let linear = Arc::new(LinearPart::build(
        &duhamel.tr,
        &duhamel.tables,
        a,
        f,
        duhamel.intervals,
        duhamel.dt,
    )?);
    let mut u: Vec<VectorFieldGrid> = (0..=duhamel.intervals)
        .map(|m| {
            linear
                .spectrum_at(&duhamel.tables, m, true)
                .to_field(&duhamel.tr)
        })
        .collect();
    let mut log = Vec::new();
    let mut converged = false;
    for _ in 0..settings.max_sweeps {
        let update = sweep(duhamel, &linear, &mut u, true)?;
        let sup = update.iter().copied().fold(0.0, f64::max);
        log.push(sup);
        if !is_contractive(&log, settings.tol) {
            return Err(FfnsError::ContractionFailure { log });
        }
        if sup < settings.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(FfnsError::ConvergenceFailure {
            tol: settings.tol,
            sweeps: settings.max_sweeps,
            log,
        });
    }
    let residuals = sweep(duhamel, &linear, &mut u, false)?;
    if residuals.iter().any(|r| !(*r < 2.0 * settings.tol)) {
        return Err(FfnsError::ConvergenceFailure {
            tol: settings.tol,
            sweeps: log.len(),
            log,
        });
    }
    let mut max_div: f64 = 0.0;
    let snapshots: Vec<VectorFieldGrid> = u
        .into_iter()
        .map(|s| {
            let (s, r) = crate::spectral::verify_divergence_free(&duhamel.tr, s, DIVERGENCE_TOL);
            max_div = max_div.max(r);
            s
        })
        .collect();
    let mut traj = Trajectory::new(
        grid,
        duhamel.times(),
        snapshots,
        log,
        residuals,
        scenario_hash.to_string(),
    );
    traj.max_divergence_residual = max_div;
    traj.linear = Some(linear);
    Ok(traj)
}

/// One application of the mild map. With `write` the history is replaced by
/// the new iterate; returns the per-slice `L²` change.
fn sweep(
    duhamel: &Duhamel,
    linear: &LinearPart,
    u: &mut [VectorFieldGrid],
    write: bool,
) -> Result<Vec<f64>> {
    let mut norms = vec![0.0; u.len()];
    duhamel.bilinear_pass(u, |m, b, slot| {
        let mut s = linear.spectrum_at(&duhamel.tables, m, true);
        for (c, comp) in s.comps.iter_mut().enumerate() {
            for (v, bv) in comp.iter_mut().zip(&b.comps[c]) {
                *v -= *bv;
            }
        }
        let new = s.to_field(&duhamel.tr);
        norms[m] = l2_diff(&new, slot);
        if write {
            *slot = new;
        }
        Ok(())
    })?;
    Ok(norms)
}
