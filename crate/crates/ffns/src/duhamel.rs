//! Exponential weights for Duhamel integrals on uniform time slices.
//!
//! On an interval `[t_m, t_m + Δt]` the integrand `G(s)` is replaced by its
//! cubic Lagrange interpolant through four neighbouring slices, and
//! `∫ e^{−κ(t_{m+1}−s)} G(s) ds = Σ_q W_q(κ) G_q` with weights that depend
//! only on `κ = |k|²` and the stencil shape. `κ = (π/L)² n` with integer
//! `n = Σ m_i²`, so every table is indexed by `n`.

use ffns_core::forcing::TemporalProfile;
use ffns_core::grid::BoxGrid;
use ffns_core::quad::GaussLegendre;
use rayon::prelude::*;

use crate::error::{FfnsError, Result};
use crate::spectral::kappa_unit;

/// Node offsets (in slices, relative to the interval start) of the three
/// stencil shapes: first interval, interior, last interval.
pub const STENCILS: [[i32; 4]; 3] = [[0, 1, 2, 3], [-1, 0, 1, 2], [-2, -1, 0, 1]];

/// Stencil shape and first node index for interval `m` of `intervals`.
pub fn stencil_for(m: usize, intervals: usize) -> (usize, usize) {
    if m == 0 {
        (0, 0)
    } else if m + 1 == intervals {
        (2, intervals - 3)
    } else {
        (1, m - 1)
    }
}

/// Lagrange basis polynomial `q` of a stencil, at `u` measured in slices.
#[inline]
pub fn lagrange(offsets: &[i32; 4], q: usize, u: f64) -> f64 {
    let mut v = 1.0;
    for (j, &o) in offsets.iter().enumerate() {
        if j != q {
            v *= (u - o as f64) / (offsets[q] - o) as f64;
        }
    }
    v
}

/// `∫₀¹ e^{−β(1−u)} f(u) du` for smooth `f`, split so each panel has
/// `β·width ≤ 1/4`, with a 4-point rule on every panel.
pub fn exp_integral<F: Fn(f64) -> f64>(
    rule: &GaussLegendre,
    beta: f64,
    lo: f64,
    hi: f64,
    f: F,
) -> f64 {
    let panels = ((4.0 * beta * (hi - lo)).ceil() as usize).max(1);
    rule.composite(lo, hi, panels, |u| (-beta * (1.0 - u)).exp() * f(u))
}

/// Largest `n = Σ m_i²` on a grid.
pub fn max_mode_norm2(grid: &BoxGrid) -> usize {
    let h = grid.n() / 2;
    grid.dim().n() * h * h
}

/// Precomputed `e^{−Δtκ}` and the stencil weights for every `n`.
#[derive(Debug, Clone)]
pub struct SliceWeights {
    pub dt: f64,
    pub decay: Vec<f64>,
    pub weights: [Vec<[f64; 4]>; 3],
}

impl SliceWeights {
    pub fn new(grid: &BoxGrid, dt: f64) -> Self {
        let ku = kappa_unit(grid);
        let nmax = max_mode_norm2(grid);
        let rule = GaussLegendre::new(4);
        let decay: Vec<f64> = (0..=nmax).map(|n| (-dt * ku * n as f64).exp()).collect();
        let table = |shape: usize| -> Vec<[f64; 4]> {
            (0..=nmax)
                .into_par_iter()
                .map(|n| {
                    let beta = dt * ku * n as f64;
                    let mut w = [0.0; 4];
                    for (q, slot) in w.iter_mut().enumerate() {
                        *slot = dt
                            * exp_integral(&rule, beta, 0.0, 1.0, |u| {
                                lagrange(&STENCILS[shape], q, u)
                            });
                    }
                    w
                })
                .collect()
        };
        SliceWeights {
            dt,
            decay,
            weights: [table(0), table(1), table(2)],
        }
    }
}

/// `W_τ(κ, t_m) = ∫₀^{t_m} e^{−κ(t_m−s)} τ(s) ds` for all slices `m` and all
/// `n`, stored as `[m][n]`.
pub fn forced_weights(
    grid: &BoxGrid,
    dt: f64,
    intervals: usize,
    temporal: &TemporalProfile,
) -> Vec<Vec<f64>> {
    let ku = kappa_unit(grid);
    let nmax = max_mode_norm2(grid);
    let rule = GaussLegendre::new(4);
    // per-interval increments, then the recursion W_{m+1} = e^{−Δtκ}W_m + I_m
    let columns: Vec<Vec<f64>> = (0..=nmax)
        .into_par_iter()
        .map(|n| {
            let kappa = ku * n as f64;
            let beta = dt * kappa;
            let decay = (-beta).exp();
            let mut w = Vec::with_capacity(intervals + 1);
            let mut acc = 0.0;
            w.push(0.0);
            for m in 0..intervals {
                let t0 = m as f64 * dt;
                let t1 = t0 + dt;
                let lo = temporal.start().max(t0);
                let hi = temporal.end().min(t1);
                let inc = if hi > lo {
                    let (ulo, uhi) = ((lo - t0) / dt, (hi - t0) / dt);
                    dt * exp_integral(&rule, beta, ulo, uhi, |u| temporal.value(t0 + u * dt))
                } else {
                    0.0
                };
                acc = decay * acc + inc;
                w.push(acc);
            }
            w
        })
        .collect();
    (0..=intervals)
        .map(|m| columns.iter().map(|c| c[m]).collect())
        .collect()
}

/// Checks that a horizon splits into at least three uniform slices.
pub fn slice_count(horizon: f64, per_unit: usize) -> Result<(usize, f64)> {
    let m = (horizon * per_unit as f64).round() as usize;
    if m < 3 {
        return Err(FfnsError::State(format!(
            "horizon {horizon} with {per_unit} slices per unit gives {m} < 3 intervals"
        )));
    }
    Ok((m, horizon / m as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ffns_core::forcing::TemporalKind;
    use ffns_core::Dim;

    #[test]
    fn weights_reproduce_cubics() {
        // Σ_q W_q p(node_q) equals ∫ e^{−κ(Δt−σ)} p(σ) dσ for cubic p
        let g = BoxGrid::new(Dim::Two, 8.0, 16).unwrap();
        let dt = 0.05;
        let w = SliceWeights::new(&g, dt);
        let ku = kappa_unit(&g);
        let p = |s: f64| 1.0 - 2.0 * s + 3.0 * s * s - 0.5 * s * s * s;
        let rule = GaussLegendre::new(12);
        for n in [0usize, 1, 5, 40, 128] {
            let kappa = ku * n as f64;
            for (shape, offs) in STENCILS.iter().enumerate() {
                let got: f64 = (0..4)
                    .map(|q| w.weights[shape][n][q] * p(offs[q] as f64 * dt))
                    .sum();
                let want = rule.composite(0.0, dt, 8, |s| (-kappa * (dt - s)).exp() * p(s));
                assert!(
                    (got - want).abs() < 1e-14 * want.abs().max(1e-3),
                    "n={n} shape={shape} {got} {want}"
                );
            }
        }
    }

    #[test]
    fn forced_weights_at_zero_mode_are_cumulative() {
        let g = BoxGrid::new(Dim::Two, 8.0, 16).unwrap();
        let tau = TemporalProfile::new(TemporalKind::Ramp, 0.0, 1.0).unwrap();
        let w = forced_weights(&g, 1.0 / 16.0, 32, &tau);
        for m in [0, 5, 16, 32] {
            assert!((w[m][0] - tau.cumulative(m as f64 / 16.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn stencils_cover_every_interval() {
        let m = 10;
        for i in 0..m {
            let (shape, start) = stencil_for(i, m);
            let nodes: Vec<i64> = STENCILS[shape]
                .iter()
                .map(|o| i as i64 + *o as i64)
                .collect();
            assert_eq!(nodes[0], start as i64);
            assert!(nodes.contains(&(i as i64)) && nodes.contains(&(i as i64 + 1)));
            assert!(nodes[0] >= 0 && nodes[3] <= m as i64);
        }
    }
}
