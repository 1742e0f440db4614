//! Free-space kernels of `e^{tΔ}`, `e^{tΔ}ℙ` and `e^{tΔ}ℙ∇`, the homogeneous
//! far-field tensor `𝔎` and the self-similar residual `Ψ`.
//!
//! The Oseen kernel is radial-tensorial, `K(x,t) = A(r,t) δ + B(r,t) x̂x̂`,
//! with `A = g − h`, `B = d·h − g`, where `g` is the heat kernel and
//! `h = P(d/2, r²/4t) / (ω r^d)`, `P` being the fraction of the mass of `g`
//! inside the ball of radius `r` and `ω` the area of `S^{d−1}`.
//! Near the origin `h` and `B` come from power series; elsewhere from the
//! complementary mass `Q = 1 − P`, so no formula loses digits.

use crate::dim::Dim;
use crate::error::{Error, Result};
use crate::math;
use crate::special::{self, SERIES_SWITCH};
use crate::sphere;
use crate::tensor::{GradKernelTensor, KernelTensor, Vector};

/// Radial coefficients of `K` and of its radial derivatives at `(r, t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Radial {
    pub g: f64,
    pub a: f64,
    pub b: f64,
    /// `∂_r A`.
    pub da: f64,
    /// `∂_r B`.
    pub db: f64,
    /// `B / r`, finite at `r = 0`.
    pub b_over_r: f64,
}

/// `(g, A, B)` at radius `r ≥ 0`, time `t > 0`. No argument checks.
#[inline]
pub fn radial(dim: Dim, r: f64, t: f64) -> (f64, f64, f64) {
    let s = r * r / (4.0 * t);
    let g = dim.heat_prefactor(t) * math::exp(-s);
    let d = dim.as_f64();
    if s < SERIES_SWITCH {
        let (series, tail) = special::mass_series(dim, s);
        (g, g * (1.0 - series / d), g * s * tail)
    } else {
        let h = (1.0 - special::gaussian_tail(dim, s)) / (dim.sphere_area() * dim.pow_d(r));
        (g, g - h, d * h - g)
    }
}

/// Radial coefficients with first derivatives. No argument checks.
#[inline]
pub fn radial_derivs(dim: Dim, r: f64, t: f64) -> Radial {
    if r * r / (4.0 * t) < SERIES_SWITCH {
        derivs_series(dim, r, t)
    } else {
        derivs_tail(dim, r, t)
    }
}

#[inline]
fn derivs_series(dim: Dim, r: f64, t: f64) -> Radial {
    let s = r * r / (4.0 * t);
    let g = dim.heat_prefactor(t) * math::exp(-s);
    let d = dim.as_f64();
    let dg = -r / (2.0 * t) * g;
    let (series, tail) = special::mass_series(dim, s);
    let dh = -g * r * tail / (4.0 * t);
    Radial {
        g,
        a: g - g * series / d,
        b: g * s * tail,
        da: dg - dh,
        db: d * dh - dg,
        b_over_r: g * r * tail / (4.0 * t),
    }
}

#[inline]
fn derivs_tail(dim: Dim, r: f64, t: f64) -> Radial {
    let s = r * r / (4.0 * t);
    let g = dim.heat_prefactor(t) * math::exp(-s);
    let d = dim.as_f64();
    let dg = -r / (2.0 * t) * g;
    let h = (1.0 - special::gaussian_tail(dim, s)) / (dim.sphere_area() * dim.pow_d(r));
    let dh = (g - d * h) / r;
    let b = d * h - g;
    Radial {
        g,
        a: g - h,
        b,
        da: dg - dh,
        db: d * dh - dg,
        b_over_r: b / r,
    }
}

#[inline]
fn unit_and_norm(dim: Dim, x: &[f64; 3]) -> ([f64; 3], f64) {
    let d = dim.n();
    let r = math::sqrt((0..d).map(|i| x[i] * x[i]).sum::<f64>());
    if r == 0.0 {
        return ([0.0; 3], 0.0);
    }
    let mut e = [0.0; 3];
    for i in 0..d {
        e[i] = x[i] / r;
    }
    (e, r)
}

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(alloc::format!(
            "time must be positive and finite, got {t}"
        )));
    }
    Ok(())
}

fn check_nonzero(x: &Vector, what: &'static str) -> Result<()> {
    if x.is_zero() {
        return Err(Error::Singularity(what));
    }
    Ok(())
}

/// `g_t(x) = (4πt)^{-d/2} e^{-|x|²/4t}`.
pub fn heat_kernel(x: &Vector, t: f64) -> Result<f64> {
    check_time(t)?;
    let r2 = x.dot(x);
    Ok(x.dim().heat_prefactor(t) * math::exp(-r2 / (4.0 * t)))
}

/// `𝔎(x) = (−δ|x|² + d x⊗x) / (ω |x|^{d+2})`.
pub fn leading_tensor(x: &Vector) -> Result<KernelTensor> {
    check_nonzero(x, "leading tensor")?;
    let dim = x.dim();
    let d = dim.n();
    let r2 = x.dot(x);
    let scale = 1.0 / (dim.sphere_area() * dim.pow_d(math::sqrt(r2)) * r2);
    let mut e = [[0.0; 3]; 3];
    for j in 0..d {
        for k in 0..d {
            let delta = if j == k { r2 } else { 0.0 };
            e[j][k] = scale * (dim.as_f64() * (x[j] * x[k]) - delta);
        }
    }
    Ok(KernelTensor::from_raw(dim, e))
}

/// Oseen kernel `K(x,t)`, the kernel of `e^{tΔ}ℙ`. Finite at `x = 0`.
pub fn oseen_kernel(x: &Vector, t: f64) -> Result<KernelTensor> {
    check_time(t)?;
    let dim = x.dim();
    let (e, r) = unit_and_norm(dim, &x.raw());
    let (_, a, b) = radial(dim, r, t);
    Ok(KernelTensor::from_raw(dim, assemble(dim, &e, a, b)))
}

fn assemble(dim: Dim, e: &[f64; 3], a: f64, b: f64) -> [[f64; 3]; 3] {
    let d = dim.n();
    let mut m = [[0.0; 3]; 3];
    for j in 0..d {
        for k in 0..d {
            m[j][k] = b * (e[j] * e[k]) + if j == k { a } else { 0.0 };
        }
    }
    m
}

/// `Ψ(ξ) = |ξ|^d (K(ξ,1) − 𝔎(ξ))`.
pub fn psi_residual(xi: &Vector) -> Result<KernelTensor> {
    check_nonzero(xi, "residual Ψ")?;
    let dim = xi.dim();
    let (e, r) = unit_and_norm(dim, &xi.raw());
    let s = r * r / 4.0;
    let rd = dim.pow_d(r);
    let (diag, radial_part) = if s < SERIES_SWITCH {
        let (_, a, b) = radial(dim, r, 1.0);
        let w = 1.0 / dim.sphere_area();
        (rd * a + w, rd * b - dim.as_f64() * w)
    } else {
        let g = dim.heat_prefactor(1.0) * math::exp(-s);
        let q = special::gaussian_tail(dim, s) / dim.sphere_area();
        (rd * g + q, -(rd * g + dim.as_f64() * q))
    };
    Ok(KernelTensor::from_raw(
        dim,
        assemble(dim, &e, diag, radial_part),
    ))
}

/// Kernel `F(x,t)` of `e^{tΔ}ℙ∇`: `F_{jkl} = ∂_l K_{jk}`; zero at `x = 0`.
pub fn oseen_grad_kernel(x: &Vector, t: f64) -> Result<GradKernelTensor> {
    check_time(t)?;
    let dim = x.dim();
    let d = dim.n();
    let (e, r) = unit_and_norm(dim, &x.raw());
    let mut out = [[[0.0; 3]; 3]; 3];
    if r == 0.0 {
        return Ok(GradKernelTensor::from_raw(dim, out));
    }
    let c = radial_derivs(dim, r, t);
    let cubic = c.db - 2.0 * c.b_over_r;
    for j in 0..d {
        for k in 0..d {
            for l in 0..d {
                let mut v = cubic * e[j] * e[k] * e[l];
                if j == k {
                    v += c.da * e[l];
                }
                if j == l {
                    v += c.b_over_r * e[k];
                }
                if k == l {
                    v += c.b_over_r * e[j];
                }
                out[j][k][l] = v;
            }
        }
    }
    Ok(GradKernelTensor::from_raw(dim, out))
}

/// `K(x,t) c` on raw arrays; `t > 0` is the caller's responsibility.
#[inline]
pub fn oseen_apply(dim: Dim, x: &[f64; 3], t: f64, c: &[f64; 3]) -> [f64; 3] {
    let (e, r) = unit_and_norm(dim, x);
    let (_, a, b) = radial(dim, r, t);
    let ec = e[0] * c[0] + e[1] * c[1] + e[2] * c[2];
    [
        a * c[0] + b * ec * e[0],
        a * c[1] + b * ec * e[1],
        a * c[2] + b * ec * e[2],
    ]
}

/// `Σ_{kl} F_{jkl}(x,t) n_{kl}` for symmetric `n`, without forming `F`.
/// `t > 0` is the caller's responsibility.
#[inline]
pub fn grad_contract_sym(dim: Dim, x: &[f64; 3], t: f64, n: &[[f64; 3]; 3]) -> [f64; 3] {
    let (e, r) = unit_and_norm(dim, x);
    if r == 0.0 {
        return [0.0; 3];
    }
    contract_sym(dim, &e, &radial_derivs(dim, r, t), n)
}

/// `Σ_{kl} ∂_l 𝔎_{jk}(x) n_{kl}` for symmetric `n`; zero at `x = 0`.
#[inline]
pub fn leading_grad_contract_sym(dim: Dim, x: &[f64; 3], n: &[[f64; 3]; 3]) -> [f64; 3] {
    let (e, r) = unit_and_norm(dim, x);
    if r == 0.0 {
        return [0.0; 3];
    }
    let d = dim.as_f64();
    let c = 1.0 / (dim.sphere_area() * dim.pow_d(r));
    let q = c / r;
    let rad = Radial {
        g: 0.0,
        a: -c,
        b: d * c,
        da: d * q,
        db: -d * d * q,
        b_over_r: d * q,
    };
    contract_sym(dim, &e, &rad, n)
}

#[inline]
fn contract_sym(dim: Dim, e: &[f64; 3], c: &Radial, n: &[[f64; 3]; 3]) -> [f64; 3] {
    let ne = [
        n[0][0] * e[0] + n[0][1] * e[1] + n[0][2] * e[2],
        n[1][0] * e[0] + n[1][1] * e[1] + n[1][2] * e[2],
        n[2][0] * e[0] + n[2][1] * e[1] + n[2][2] * e[2],
    ];
    let ene = e[0] * ne[0] + e[1] * ne[1] + e[2] * ne[2];
    let tr: f64 = (0..dim.n()).map(|i| n[i][i]).sum();
    let lin = c.da + c.b_over_r;
    let rad = (c.db - 2.0 * c.b_over_r) * ene + c.b_over_r * tr;
    [
        lin * ne[0] + rad * e[0],
        lin * ne[1] + rad * e[1],
        lin * ne[2] + rad * e[2],
    ]
}

/// `Σ_{kl} F_{jkl}(x,t) v_k` in the slot `l = axis`: the kernel of
/// `e^{tΔ}ℙ ∂_axis` applied to a vector `v`.
#[inline]
pub fn grad_apply_axis(dim: Dim, x: &[f64; 3], t: f64, v: &[f64; 3], axis: usize) -> [f64; 3] {
    let (e, r) = unit_and_norm(dim, x);
    if r == 0.0 {
        return [0.0; 3];
    }
    let c = radial_derivs(dim, r, t);
    let ev = e[0] * v[0] + e[1] * v[1] + e[2] * v[2];
    let el = e[axis];
    let cubic = c.db - 2.0 * c.b_over_r;
    let mut out = [0.0; 3];
    for j in 0..dim.n() {
        let mut s = cubic * e[j] * ev * el + c.da * el * v[j] + c.b_over_r * e[j] * v[axis];
        if j == axis {
            s += c.b_over_r * ev;
        }
        out[j] = s;
    }
    out
}

/// `m(x) = 𝔎(x) c`.
pub fn profile_field(x: &Vector, c: &Vector) -> Result<Vector> {
    if x.dim() != c.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim().n(),
            got: c.dim().n(),
        });
    }
    Ok(leading_tensor(x)?.apply(c))
}

/// Minimum of `|𝔎(ω)c|` over the default quasi-uniform sphere sample.
pub fn sphere_min(c: &Vector) -> f64 {
    let dim = c.dim();
    if c.is_zero() {
        return 0.0;
    }
    sphere::default_directions(dim)
        .iter()
        .map(|w| leading_tensor(w).map(|k| k.apply(c).norm()).unwrap_or(0.0))
        .fold(f64::INFINITY, f64::min)
}

/// Maximum of `|𝔎(ω)c|` over the same sample.
pub fn sphere_max(c: &Vector) -> f64 {
    let dim = c.dim();
    sphere::default_directions(dim)
        .iter()
        .map(|w| leading_tensor(w).map(|k| k.apply(c).norm()).unwrap_or(0.0))
        .fold(0.0, f64::max)
}

/// `∂_h 𝔎_{jk}(x)`, indexed `[j][k][h]`.
pub fn leading_tensor_grad(x: &Vector) -> Result<GradKernelTensor> {
    check_nonzero(x, "leading tensor gradient")?;
    let dim = x.dim();
    let d = dim.n();
    let df = dim.as_f64();
    let r2 = x.dot(x);
    let w = 1.0 / dim.sphere_area();
    let rd = dim.pow_d(math::sqrt(r2));
    let p1 = w / (rd * r2);
    let p2 = w * (df + 2.0) / (rd * r2 * r2);
    let mut out = [[[0.0; 3]; 3]; 3];
    for j in 0..d {
        for k in 0..d {
            let djk = if j == k { 1.0 } else { 0.0 };
            for h in 0..d {
                let djh = if j == h { 1.0 } else { 0.0 };
                let dkh = if k == h { 1.0 } else { 0.0 };
                let first = -2.0 * djk * x[h] + df * (djh * x[k] + dkh * x[j]);
                let second = x[h] * (-djk * r2 + df * x[j] * x[k]);
                out[j][k][h] = p1 * first - p2 * second;
            }
        }
    }
    Ok(GradKernelTensor::from_raw(dim, out))
}

/// `Σ_{h,k} ∂_h 𝔎_{jk}(x) M1_{hk}`.
pub fn next_order_profile(x: &Vector, m1: &KernelTensor) -> Result<Vector> {
    let grad = leading_tensor_grad(x)?;
    let dim = x.dim();
    let d = dim.n();
    let mut out = [0.0; 3];
    for (j, slot) in out.iter_mut().enumerate().take(d) {
        let mut s = 0.0;
        for h in 0..d {
            for k in 0..d {
                s += grad.get(j, k, h) * m1.get(h, k);
            }
        }
        *slot = s;
    }
    Ok(Vector::from_array(dim, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn v2(a: f64, b: f64) -> Vector {
        Vector::from_slice(Dim::Two, &[a, b]).unwrap()
    }

    fn v3(a: f64, b: f64, c: f64) -> Vector {
        Vector::from_slice(Dim::Three, &[a, b, c]).unwrap()
    }

    #[test]
    fn heat_kernel_peak_and_offset() {
        let g0 = heat_kernel(&v2(0.0, 0.0), 1.0).unwrap();
        assert!((g0 - 1.0 / (4.0 * PI)).abs() < 1e-16);
        let g2 = heat_kernel(&v2(2.0, 0.0), 1.0).unwrap();
        assert!((g2 - math::exp(-1.0) / (4.0 * PI)).abs() < 1e-16);
        assert!((g2 - 0.0292749).abs() < 1e-7);
        assert!(heat_kernel(&v2(1.0, 0.0), 0.0).is_err());
        assert!(heat_kernel(&v2(1.0, 0.0), -1.0).is_err());
    }

    #[test]
    fn leading_tensor_on_axis() {
        let k = leading_tensor(&v2(1.0, 0.0)).unwrap();
        let c = 1.0 / (2.0 * PI);
        assert!((k.get(0, 0) - c).abs() < 1e-16);
        assert!((k.get(1, 1) + c).abs() < 1e-16);
        assert_eq!(k.get(0, 1), 0.0);
        assert_eq!(
            leading_tensor(&v2(0.0, 0.0)),
            Err(Error::Singularity("leading tensor"))
        );
    }

    #[test]
    fn kernel_at_origin_is_isotropic() {
        for (x, d) in [(v2(0.0, 0.0), 2.0), (v3(0.0, 0.0, 0.0), 3.0)] {
            let k = oseen_kernel(&x, 0.7).unwrap();
            let g = heat_kernel(&x, 0.7).unwrap();
            for j in 0..x.dim().n() {
                assert!((k.get(j, j) - g * (1.0 - 1.0 / d)).abs() < 1e-16);
            }
            let f = oseen_grad_kernel(&x, 0.7).unwrap();
            assert_eq!(f.norm(), 0.0);
        }
    }

    #[test]
    fn series_and_tail_branches_agree_near_switch() {
        for dim in [Dim::Two, Dim::Three] {
            for r0 in [1.8, 2.0, 2.2] {
                let lo = derivs_series(dim, r0, 1.0);
                let hi = derivs_tail(dim, r0, 1.0);
                for (p, q) in [
                    (lo.a, hi.a),
                    (lo.b, hi.b),
                    (lo.da, hi.da),
                    (lo.db, hi.db),
                    (lo.b_over_r, hi.b_over_r),
                ] {
                    assert!(
                        (p - q).abs() < 1e-13 * p.abs().max(lo.g),
                        "{dim:?}: {p} vs {q}"
                    );
                }
            }
        }
    }

    #[test]
    fn three_dimensional_kernel_matches_erf_potential() {
        // Φ(r) = erf(r/2√t)/(4πr); K = δg + ∂_j∂_kΦ; differentiate by central differences
        let t = 0.8;
        let phi = |r: f64| libm::erf(r / (2.0 * math::sqrt(t))) / (4.0 * PI * r);
        for r in [0.5, 1.5, 3.0, 6.0] {
            let hstep = 1e-4;
            let d1 = (phi(r + hstep) - phi(r - hstep)) / (2.0 * hstep);
            let d2 = (phi(r + hstep) - 2.0 * phi(r) + phi(r - hstep)) / (hstep * hstep);
            let (g, a, b) = radial(Dim::Three, r, t);
            // ∂_j∂_kΦ = Φ'' x̂x̂ + Φ'/r (δ − x̂x̂)
            assert!(
                (a - (g + d1 / r)).abs() < 1e-7 * (1.0 + a.abs()),
                "A at r={r}"
            );
            assert!((b - (d2 - d1 / r)).abs() < 1e-6, "B at r={r}");
        }
    }

    #[test]
    fn psi_at_radius_eight_two_dimensional() {
        let p = psi_residual(&v2(8.0, 0.0)).unwrap();
        // entries are r^d g ± Q/ω with g = e^{-16}/(4π), Q = e^{-16}
        let g = 64.0 * math::exp(-16.0) / (4.0 * PI);
        let q = math::exp(-16.0) / (2.0 * PI);
        assert!((p.get(0, 0) - (g + q - (g + 2.0 * q))).abs() < 1e-20);
        assert!((p.get(1, 1) - (g + q)).abs() < 1e-20);
        assert!(p.norm() > 1e-7 && p.norm() < 1e-6);
    }

    #[test]
    fn grad_contraction_matches_full_tensor() {
        let x = [0.7, -1.1, 0.4];
        let n = [[1.0, 0.3, -0.2], [0.3, -0.5, 0.8], [-0.2, 0.8, 0.25]];
        for dim in [Dim::Two, Dim::Three] {
            let xv = Vector::from_array(dim, x);
            let f = oseen_grad_kernel(&xv, 0.9).unwrap();
            let mut nm = KernelTensor::zero(dim);
            let mut nraw = [[0.0; 3]; 3];
            for j in 0..dim.n() {
                for k in 0..dim.n() {
                    nm.set(j, k, n[j][k]);
                    nraw[j][k] = n[j][k];
                }
            }
            let full = f.contract(&nm);
            let fast = grad_contract_sym(dim, &xv.raw(), 0.9, &nraw);
            for j in 0..dim.n() {
                assert!((full[j] - fast[j]).abs() < 1e-15);
            }
            for axis in 0..dim.n() {
                let v = [0.3, -0.9, 0.6];
                let vv = Vector::from_array(dim, v).raw();
                let got = grad_apply_axis(dim, &xv.raw(), 0.9, &vv, axis);
                for j in 0..dim.n() {
                    let want: f64 = (0..dim.n()).map(|k| f.get(j, k, axis) * vv[k]).sum();
                    assert!((got[j] - want).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn sphere_extremes_three_dimensional() {
        let c = v3(1.0, 0.0, 0.0);
        assert!((sphere_min(&c) - 1.0 / (4.0 * PI)).abs() < 1e-4);
        assert!((sphere_max(&c) - 1.0 / (2.0 * PI)).abs() < 1e-4);
        assert_eq!(sphere_min(&Vector::zero(Dim::Three)), 0.0);
    }

    #[test]
    fn leading_contraction_matches_analytic_gradient() {
        let n = [[0.3, -0.7, 0.2], [-0.7, 1.1, 0.4], [0.2, 0.4, -0.5]];
        for x in [[1.3, -0.4, 0.0], [0.2, 2.0, 0.0]] {
            let v = v2(x[0], x[1]);
            let g = leading_tensor_grad(&v).unwrap();
            let got = leading_grad_contract_sym(Dim::Two, &x, &n);
            for j in 0..2 {
                let want: f64 = (0..2)
                    .flat_map(|k| (0..2).map(move |l| (k, l)))
                    .map(|(k, l)| g.get(j, k, l) * n[k][l])
                    .sum();
                assert!((got[j] - want).abs() < 1e-14, "{j}");
            }
        }
        let x = [0.5, -1.0, 0.7];
        let g = leading_tensor_grad(&v3(x[0], x[1], x[2])).unwrap();
        let got = leading_grad_contract_sym(Dim::Three, &x, &n);
        for j in 0..3 {
            let mut want = 0.0;
            for k in 0..3 {
                for l in 0..3 {
                    want += g.get(j, k, l) * n[k][l];
                }
            }
            assert!((got[j] - want).abs() < 1e-13, "{j}");
        }
    }
}
