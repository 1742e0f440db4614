//! Multi-dimensional FFTs on a [`BoxGrid`] and the spectral operators built
//! on them: Leray projection, heat propagation, divergence residual.

use std::sync::Arc;

use ffns_core::grid::{BoxGrid, VectorFieldGrid};
use ffns_core::Dim;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{FfnsError, Result};

/// Modes with `|m_i| > N/3` on any axis are zeroed by the 2/3 rule.
pub fn dealias_keep(grid: &BoxGrid, m: i64) -> bool {
    3 * m.unsigned_abs() as usize <= grid.n()
}

/// Forward and inverse plans of length `N`, applied axis by axis.
#[derive(Clone)]
pub struct Transform {
    grid: BoxGrid,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Transform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Transform")
            .field("grid", &self.grid)
            .finish()
    }
}

impl Transform {
    pub fn new(grid: BoxGrid) -> Self {
        let mut planner = FftPlanner::new();
        Transform {
            grid,
            fwd: planner.plan_fft_forward(grid.n()),
            inv: planner.plan_fft_inverse(grid.n()),
        }
    }

    pub fn grid(&self) -> &BoxGrid {
        &self.grid
    }

    fn run(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.grid.n();
        let plan = if inverse { &self.inv } else { &self.fwd };
        let d = self.grid.dim().n();
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        // last axis: contiguous lines
        plan.process_with_scratch(data, &mut scratch);
        // remaining axes: gather strided lines
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        for axis in 0..d - 1 {
            let stride = n.pow((d - 1 - axis) as u32);
            let block = stride * n;
            for base in (0..data.len()).step_by(block) {
                for off in 0..stride {
                    let start = base + off;
                    for (i, slot) in line.iter_mut().enumerate() {
                        *slot = data[start + i * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (i, v) in line.iter().enumerate() {
                        data[start + i * stride] = *v;
                    }
                }
            }
        }
        if inverse {
            let s = 1.0 / data.len() as f64;
            for v in data.iter_mut() {
                *v *= s;
            }
        }
    }

    pub fn forward_real(&self, samples: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.run(&mut data, false);
        data
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, false);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, true);
    }

    /// Inverse transform keeping the real part.
    pub fn inverse_real(&self, mut data: Vec<Complex64>) -> Vec<f64> {
        self.run(&mut data, true);
        data.into_iter().map(|c| c.re).collect()
    }
}

/// Spectral representation of a vector field: one transform per component.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub grid: BoxGrid,
    pub comps: Vec<Vec<Complex64>>,
}

impl Spectrum {
    pub fn of(t: &Transform, v: &VectorFieldGrid) -> Self {
        let comps = v
            .components()
            .par_iter()
            .map(|c| t.forward_real(c))
            .collect();
        Spectrum {
            grid: *v.grid(),
            comps,
        }
    }

    pub fn to_field(&self, t: &Transform) -> VectorFieldGrid {
        let comps: Vec<Vec<f64>> = self
            .comps
            .par_iter()
            .map(|c| t.inverse_real(c.clone()))
            .collect();
        VectorFieldGrid::new(self.grid, comps).expect("spectrum has grid-consistent shape")
    }
}

/// Integer wave vector of a flat spectral index.
#[inline]
pub fn mode(grid: &BoxGrid, flat: usize) -> [i64; 3] {
    let idx = grid.multi_index(flat);
    let mut m = [0i64; 3];
    for a in 0..grid.dim().n() {
        m[a] = grid.frequency_index(idx[a]);
    }
    m
}

/// `Σ m_i²`, the integer key of `|k|² = (π/L)² n`.
#[inline]
pub fn mode_norm2(m: &[i64; 3]) -> usize {
    (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]) as usize
}

/// `(π/L)²`.
#[inline]
pub fn kappa_unit(grid: &BoxGrid) -> f64 {
    let k = std::f64::consts::PI / grid.half_width();
    k * k
}

/// Applies `δ − ξξ/|ξ|²` in place to one mode's components.
#[inline]
pub fn project_mode(dim: Dim, m: &[i64; 3], v: &mut [Complex64; 3]) {
    let n2 = mode_norm2(m) as f64;
    if n2 == 0.0 {
        return;
    }
    let d = dim.n();
    let mut dot = Complex64::new(0.0, 0.0);
    for a in 0..d {
        dot += v[a] * m[a] as f64;
    }
    for a in 0..d {
        v[a] -= dot * (m[a] as f64 / n2);
    }
}

fn map_modes<F: Fn(usize, &[i64; 3], &mut [Complex64; 3]) + Sync>(s: &mut Spectrum, f: F) {
    let grid = s.grid;
    let d = grid.dim().n();
    let len = grid.len();
    let mut flat: Vec<[Complex64; 3]> = (0..len)
        .map(|i| {
            let mut v = [Complex64::new(0.0, 0.0); 3];
            for a in 0..d {
                v[a] = s.comps[a][i];
            }
            v
        })
        .collect();
    flat.par_iter_mut().enumerate().for_each(|(i, v)| {
        let m = mode(&grid, i);
        f(i, &m, v);
    });
    for (i, v) in flat.iter().enumerate() {
        for a in 0..d {
            s.comps[a][i] = v[a];
        }
    }
}

/// Leray projection; the `ξ = 0` mode passes through unchanged.
pub fn leray_project(t: &Transform, v: &VectorFieldGrid) -> VectorFieldGrid {
    let dim = v.dim();
    let mut s = Spectrum::of(t, v);
    map_modes(&mut s, |_, m, c| project_mode(dim, m, c));
    s.to_field(t).with_divergence_free(true)
}

/// `e^{tΔ}` as the multiplier `e^{−t|ξ|²}`.
pub fn heat_evolve(tr: &Transform, v: &VectorFieldGrid, t: f64) -> Result<VectorFieldGrid> {
    if !(t >= 0.0) {
        return Err(FfnsError::Core(ffns_core::Error::Domain(format!(
            "heat evolution needs t ≥ 0, got {t}"
        ))));
    }
    if t == 0.0 {
        return Ok(v.clone());
    }
    let ku = kappa_unit(v.grid());
    let mut s = Spectrum::of(tr, v);
    map_modes(&mut s, |_, m, c| {
        let f = (-t * ku * mode_norm2(m) as f64).exp();
        for x in c.iter_mut() {
            *x *= f;
        }
    });
    Ok(s.to_field(tr).with_divergence_free(v.is_divergence_free()))
}

/// `max_ξ |ξ·v̂(ξ)| / max_ξ |v̂(ξ)|` over nonzero modes, excluding Nyquist
/// bins where the discrete derivative is not defined.
pub fn divergence_residual(t: &Transform, v: &VectorFieldGrid) -> f64 {
    let grid = *v.grid();
    let d = grid.dim().n();
    let s = Spectrum::of(t, v);
    let nyq = -(grid.n() as i64) / 2;
    let mut top: f64 = 0.0;
    let mut div: f64 = 0.0;
    for i in 0..grid.len() {
        let m = mode(&grid, i);
        let n2 = mode_norm2(&m);
        if n2 == 0 || m[..d].contains(&nyq) {
            continue;
        }
        let mut amp = 0.0;
        let mut dot = Complex64::new(0.0, 0.0);
        for a in 0..d {
            amp += s.comps[a][i].norm_sqr();
            dot += s.comps[a][i] * m[a] as f64;
        }
        top = top.max(amp.sqrt() * (n2 as f64).sqrt());
        div = div.max(dot.norm());
    }
    if top == 0.0 {
        0.0
    } else {
        div / top
    }
}

/// Flags the field divergence-free when the residual is below `tol`.
pub fn verify_divergence_free(
    t: &Transform,
    v: VectorFieldGrid,
    tol: f64,
) -> (VectorFieldGrid, f64) {
    let r = divergence_residual(t, &v);
    (v.with_divergence_free(r < tol), r)
}
