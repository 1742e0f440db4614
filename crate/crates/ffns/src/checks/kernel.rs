//! Kernel invariants, the self-similar decomposition and the logarithmic
//! space-time mass bound.

use std::f64::consts::E;

use ffns_core::fit::fit_gaussian_rate;
use ffns_core::grid::BoxGrid;
use ffns_core::kernel::{
    heat_kernel, leading_tensor, oseen_grad_kernel, oseen_kernel, psi_residual,
};
use ffns_core::log_bound::log_bound_check;
use ffns_core::quad::GaussLegendre;
use ffns_core::verdict::variation_ratio;
use ffns_core::{Dim, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;

use super::{guarded, CheckResult, Row};
use crate::error::Result;
use crate::spectral::{mode, mode_norm2, Transform};

pub const KERNEL: &str = "kernel";
pub const DECOMPOSITION: &str = "decomposition";
pub const LOG_BOUND: &str = "log-bound";

fn random_unit(dim: Dim, rng: &mut ChaCha8Rng) -> Vector {
    loop {
        let mut v = [0.0; 3];
        for c in v.iter_mut().take(dim.n()) {
            *c = rng.random_range(-1.0..1.0);
        }
        let x = Vector::from_array(dim, v);
        let n = x.norm();
        if n > 0.1 && n <= 1.0 {
            return x.scale(1.0 / n);
        }
    }
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

/// Closed-form `K(·,t)` against the inverse DFT of its symbol on a 2-D box;
/// returns rows `(|x|, error)` for nodes with `|x| ≤ r_max`.
pub fn fourier_inversion(half_width: f64, n: usize, t: f64, r_max: f64) -> Result<Vec<(f64, f64)>> {
    let grid = BoxGrid::new(Dim::Two, half_width, n)?;
    let tr = Transform::new(grid);
    let k = std::f64::consts::PI / half_width;
    let h2 = grid.cell_volume();
    // symbol entries (0,0), (0,1), (1,1); sample (−1)^{Σm} shifts the
    // origin to the box centre node
    let mut comps: Vec<Vec<Complex64>> = vec![vec![Complex64::new(0.0, 0.0); grid.len()]; 3];
    for i in 0..grid.len() {
        let m = mode(&grid, i);
        let n2 = mode_norm2(&m) as f64;
        let sign = if (m[0] + m[1]).rem_euclid(2) == 0 {
            1.0
        } else {
            -1.0
        };
        let (s00, s01, s11) = if n2 == 0.0 {
            (0.5, 0.0, 0.5)
        } else {
            let (a, b) = (m[0] as f64, m[1] as f64);
            (1.0 - a * a / n2, -a * b / n2, 1.0 - b * b / n2)
        };
        let g = sign * (-t * k * k * n2).exp() / h2 / grid.len() as f64;
        comps[0][i] = Complex64::new(g * s00, 0.0);
        comps[1][i] = Complex64::new(g * s01, 0.0);
        comps[2][i] = Complex64::new(g * s11, 0.0);
    }
    let vals: Vec<Vec<f64>> = comps
        .into_iter()
        .map(|c| {
            tr.inverse_real(c)
                .into_iter()
                .map(|v| v * grid.len() as f64)
                .collect()
        })
        .collect();
    let mut rows = Vec::new();
    for i in 0..grid.len() {
        let x = grid.point(i);
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        if r > r_max {
            continue;
        }
        let kx = oseen_kernel(&Vector::from_array(Dim::Two, x), t)?;
        let err = (vals[0][i] - kx.get(0, 0))
            .abs()
            .max((vals[1][i] - kx.get(0, 1)).abs())
            .max((vals[2][i] - kx.get(1, 1)).abs());
        rows.push((r, err));
    }
    Ok(rows)
}

/// `‖F(·,t)‖₁` by radial quadrature of the rotation-invariant Frobenius norm,
/// with the `r^{−d−1}` tail beyond `40√t` added analytically.
pub fn grad_kernel_l1_at(dim: Dim, t: f64) -> Result<f64> {
    let rule = GaussLegendre::new(16);
    let edge = 40.0 * t.sqrt();
    let radial = |r: f64| -> f64 {
        oseen_grad_kernel(&Vector::unit(dim, 0).scale(r), t)
            .map(|f| f.norm())
            .unwrap_or(0.0)
    };
    let body = rule.composite(0.0, edge, 400, |r| {
        dim.sphere_area() * dim.pow_d(r) / r.max(1e-300) * radial(r)
    });
    // the tail beyond the edge is ∇𝔎 with ∫_R^∞ |F| r^{d−1} dr = |F(R)| R^d
    Ok(body + dim.sphere_area() * radial(edge) * dim.pow_d(edge))
}

/// Envelopes, scaling, trace, Fourier inversion, solenoidality and the
/// `t^{−1/2}` law of `‖F‖₁`.
pub fn kernel_check(dim: Dim, seed: u64) -> CheckResult {
    guarded(KERNEL, |r| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = dim.n() as i32;
        let df = dim.as_f64();
        let (mut c_k, mut c_f, mut trace_err, mut lead_trace, mut scale_err, mut sym_err) =
            (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
        let mut rows = Vec::with_capacity(1000);
        let mut grad_rows = Vec::with_capacity(1000);
        for _ in 0..1000 {
            let rad = log_uniform(&mut rng, 1e-2, 1e2);
            let t = log_uniform(&mut rng, 1e-2, 1e2);
            let w = random_unit(dim, &mut rng);
            let x = w.scale(rad);
            let k = oseen_kernel(&x, t)?;
            let f = oseen_grad_kernel(&x, t)?;
            let env_k = rad.powi(-d).min(t.powf(-df / 2.0));
            let env_f = rad.powi(-d - 1).min(t.powf(-(df + 1.0) / 2.0));
            let vk = k.norm() / env_k;
            let vf = f.norm() / env_f;
            c_k = c_k.max(vk);
            c_f = c_f.max(vf);
            let g = heat_kernel(&x, t)?;
            trace_err =
                trace_err.max((k.trace() - (df - 1.0) * g).abs() / ((df - 1.0) * g).max(k.norm()));
            sym_err = sym_err.max(k.asymmetry());
            let kk = leading_tensor(&x)?;
            lead_trace = lead_trace.max(kk.trace().abs() / kk.norm());
            let st = t.sqrt();
            let ks = oseen_kernel(&x.scale(1.0 / st), 1.0)?.scale(t.powf(-df / 2.0));
            let fs = oseen_grad_kernel(&x.scale(1.0 / st), 1.0)?;
            let fscale = t.powf(-(df + 1.0) / 2.0);
            let mut ferr: f64 = 0.0;
            for j in 0..dim.n() {
                for a in 0..dim.n() {
                    for b in 0..dim.n() {
                        ferr = ferr.max((fs.get(j, a, b) * fscale - f.get(j, a, b)).abs());
                    }
                }
            }
            scale_err = scale_err
                .max(ks.max_abs_diff(&k) / k.norm())
                .max(ferr / f.norm().max(1e-300));
            rows.push((rad / st, vk));
            grad_rows.push((rad / st, vf));
        }
        let to_rows = |v: &[(f64, f64)], c: f64| -> Vec<Row> {
            v.iter()
                .map(|&(a, val)| Row {
                    abscissa: a,
                    value: val,
                    prediction: c,
                    residual: (val / c).ln(),
                })
                .collect()
        };
        r.table("", to_rows(&rows, c_k));
        r.table("grad", to_rows(&grad_rows, c_f));
        r.metric("envelope_constant_k", c_k)
            .metric("envelope_constant_f", c_f)
            .metric("trace_rel_error", trace_err)
            .metric("leading_trace_rel", lead_trace)
            .metric("scaling_rel_error", scale_err)
            .metric("asymmetry", sym_err);
        r.require(
            c_k.is_finite() && c_k < 10.0,
            format!("K envelope constant {c_k} < 10"),
        );
        r.require(c_f.is_finite(), "F envelope constant finite");
        r.require(
            trace_err < 1e-10,
            format!("trace K = (d−1)g to 1e-10 (got {trace_err:e})"),
        );
        r.require(
            lead_trace < 1e-14,
            format!("trace of leading tensor vanishes (got {lead_trace:e})"),
        );
        r.require(
            scale_err < 1e-12,
            format!("scaling relations to 1e-12 (got {scale_err:e})"),
        );
        r.require(sym_err == 0.0, "K symmetric");

        // solenoidality by central differences
        let hstep = 1e-4;
        let mut div_err: f64 = 0.0;
        for _ in 0..20 {
            let x = random_unit(dim, &mut rng).scale(rng.random_range(0.5..2.0));
            let t = rng.random_range(0.5..2.0);
            for k in 0..dim.n() {
                let mut s = 0.0;
                for j in 0..dim.n() {
                    let e = Vector::unit(dim, j).scale(hstep);
                    let kp = oseen_kernel(&(x + e), t)?.get(j, k);
                    let km = oseen_kernel(&(x - e), t)?.get(j, k);
                    s += (kp - km) / (2.0 * hstep);
                }
                div_err = div_err.max(s.abs());
            }
        }
        r.metric("divergence_abs_error", div_err);
        r.require(
            div_err < 1e-6,
            format!("Σ_j ∂_j K_jk = 0 to 1e-6 (got {div_err:e})"),
        );

        // ‖F(·,t)‖₁ = c t^{−1/2}
        let c1 = grad_kernel_l1_at(dim, 1.0)?;
        r.metric("grad_l1_constant", c1);
        for t in [0.25, 4.0] {
            let ct = grad_kernel_l1_at(dim, t)? * t.sqrt();
            let rel = (ct / c1 - 1.0).abs();
            r.metric(&format!("grad_l1_rel_change_t{t}"), rel);
            r.require(
                rel < 1e-2,
                format!("‖F(·,{t})‖₁√t within 1% of the t = 1 value"),
            );
        }

        if dim == Dim::Two {
            let fr = fourier_inversion(64.0, 512, 1.0, 8.0)?;
            let worst = fr.iter().map(|p| p.1).fold(0.0, f64::max);
            r.metric("fourier_max_abs_error", worst);
            r.require(
                worst < 1e-6,
                format!("Fourier inversion to 1e-6 (got {worst:e})"),
            );
            let mut binned: Vec<Row> = Vec::new();
            for &(rad, e) in &fr {
                let b = rad.floor();
                match binned.iter_mut().find(|row| row.abscissa == b) {
                    Some(row) => row.value = row.value.max(e),
                    None => binned.push(Row {
                        abscissa: b,
                        value: e,
                        prediction: 1e-6,
                        residual: 0.0,
                    }),
                }
            }
            binned.sort_by(|a, b| a.abscissa.total_cmp(&b.abscissa));
            for row in &mut binned {
                row.residual = row.value - row.prediction;
            }
            r.table("fourier", binned);
        } else {
            r.note("Fourier inversion is run on the 2-D box only");
        }
        Ok(())
    })
}

/// Gaussian decay of `Ψ` and the identity `K = 𝔎 + |x|^{−d}Ψ(x/√t)`.
pub fn decomposition_check(dim: Dim, seed: u64) -> CheckResult {
    guarded(DECOMPOSITION, |r| {
        let w = match dim {
            Dim::Two => Vector::from_array(dim, [0.6, 0.8, 0.0]),
            Dim::Three => Vector::from_array(dim, [0.48, 0.6, 0.64]),
        };
        let xs: Vec<f64> = (0..=28).map(|i| 1.0 + 0.25 * i as f64).collect();
        let mut samples = Vec::with_capacity(xs.len());
        for &x in &xs {
            samples.push((x, psi_residual(&w.scale(x))?.norm()));
        }
        let (rate, lc, resid) = fit_gaussian_rate(&samples)?;
        r.table(
            "",
            samples
                .iter()
                .map(|&(x, v)| {
                    let p = (lc - rate * x * x).exp();
                    Row {
                        abscissa: x,
                        value: v,
                        prediction: p,
                        residual: (v / p).ln(),
                    }
                })
                .collect(),
        );
        r.metric("psi_gaussian_rate", rate)
            .metric("psi_log_prefactor", lc)
            .metric("psi_fit_residual", resid)
            .metric("psi_at_8", samples.last().map(|s| s.1).unwrap_or(0.0));
        r.require(rate > 0.1, format!("Gaussian rate {rate} > 0.1"));

        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let mut worst: f64 = 0.0;
        let df = dim.as_f64();
        for _ in 0..100 {
            let x = random_unit(dim, &mut rng).scale(log_uniform(&mut rng, 0.1, 10.0));
            let t = log_uniform(&mut rng, 0.1, 10.0);
            let k = oseen_kernel(&x, t)?;
            let rebuilt = leading_tensor(&x)?
                .add(&psi_residual(&x.scale(1.0 / t.sqrt()))?.scale(x.norm().powf(-df)));
            worst = worst.max(k.max_abs_diff(&rebuilt) / k.norm());
        }
        r.metric("identity_rel_error", worst);
        r.require(
            worst < 1e-10,
            format!("decomposition identity to 1e-10 (got {worst:e})"),
        );
        Ok(())
    })
}

/// The mass ratio under `t`-halving at fixed `|x|` and `|x|`-doubling at
/// fixed `t`.
pub fn log_bound(dim: Dim) -> CheckResult {
    guarded(LOG_BOUND, |r| {
        let halving: Vec<(f64, f64)> = (0..5).map(|i| (4.0, 0.5f64.powi(i))).collect();
        let doubling: Vec<(f64, f64)> = (0..6).map(|i| (E * 2f64.powi(i), 1.0)).collect();
        let h = log_bound_check(dim, &halving)?;
        let g = log_bound_check(dim, &doubling)?;
        let row = |abscissa: f64, lr: &ffns_core::log_bound::LogBoundRow, sup: f64| Row {
            abscissa,
            value: lr.ratio,
            prediction: sup,
            residual: lr.refinement_change,
        };
        r.table(
            "",
            h.rows.iter().map(|x| row(x.t, x, h.sup_ratio)).collect(),
        );
        r.table(
            "doubling",
            g.rows.iter().map(|x| row(x.x, x, g.sup_ratio)).collect(),
        );
        r.metric("halving_variation", h.variation)
            .metric("halving_sup_ratio", h.sup_ratio)
            .metric("doubling_variation", g.variation)
            .metric("doubling_sup_ratio", g.sup_ratio)
            .metric(
                "max_refinement_change",
                h.max_refinement_change.max(g.max_refinement_change),
            );
        // successive differences of the mass under doubling
        let lhs: Vec<f64> = g.rows.iter().map(|x| x.lhs).collect();
        let diffs: Vec<f64> = lhs.windows(2).map(|w| w[1] - w[0]).collect();
        let diff_var = variation_ratio(&diffs);
        r.metric("doubling_difference_variation", diff_var);
        r.require(
            h.pass,
            format!("ratio variation under t-halving {} < 2", h.variation),
        );
        r.require(
            g.pass,
            format!("ratio variation under x-doubling {} < 2", g.variation),
        );
        r.require(
            diff_var < 2.0,
            format!("doubling differences nearly constant ({diff_var})"),
        );
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grad_l1_matches_cached_constant() {
        let c = grad_kernel_l1_at(Dim::Two, 1.0).unwrap();
        let cached = crate::farfield::grad_kernel_l1(Dim::Two);
        assert!((c - cached).abs() < 1e-9 * c, "{c} vs {cached}");
    }

    #[test]
    fn fourier_inversion_small_box_is_accurate_near_centre() {
        let rows = fourier_inversion(32.0, 256, 1.0, 4.0).unwrap();
        let worst = rows.iter().map(|p| p.1).fold(0.0, f64::max);
        assert!(worst < 1e-5, "{worst}");
    }
}
