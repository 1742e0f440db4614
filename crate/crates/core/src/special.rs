//! Mass of the Gaussian heat kernel inside a ball, in both its lower
//! (series) and upper (complementary) forms.
//!
//! With `s = r²/(4t)` the fraction of the mass of `g_t` inside `|x| ≤ r` is
//! the regularized lower incomplete gamma function `P(d/2, s)`.

use core::f64::consts::PI;

use crate::dim::Dim;
use crate::math;

/// Largest `s` for which the power series is used.
pub const SERIES_SWITCH: f64 = 1.0;

/// Series `S(s) = Σ_{n≥0} s^n / ((a+1)(a+2)…(a+n))` and
/// `T(s) = (S(s) − 1)/s`, with `a = d/2`.
///
/// `P(a, s) = s^a e^{-s} S(s) / Γ(a+1)`. Valid for every `s ≥ 0`; converges
/// fast for `s` of order one.
pub fn mass_series(dim: Dim, s: f64) -> (f64, f64) {
    let a = 0.5 * dim.as_f64();
    let mut r = 1.0 / (a + 1.0);
    let mut tail = r;
    let mut n = 1.0;
    while n < 300.0 {
        r *= s / (a + n + 1.0);
        tail += r;
        if r < 1e-17 * tail {
            break;
        }
        n += 1.0;
    }
    (1.0 + s * tail, tail)
}

/// Complementary mass `Q(d/2, s) = 1 − P(d/2, s)`, accurate for large `s`.
pub fn gaussian_tail(dim: Dim, s: f64) -> f64 {
    match dim {
        Dim::Two => math::exp(-s),
        Dim::Three => {
            let z = math::sqrt(s);
            libm::erfc(z) + 2.0 * z / math::sqrt(PI) * math::exp(-s)
        }
    }
}

/// Lower mass `P(d/2, s)`.
pub fn gaussian_mass(dim: Dim, s: f64) -> f64 {
    if s < SERIES_SWITCH {
        let (series, _) = mass_series(dim, s);
        let a = 0.5 * dim.as_f64();
        // Γ(a+1): 1 for d=2, 3√π/4 for d=3
        let gamma = match dim {
            Dim::Two => 1.0,
            Dim::Three => 0.75 * math::sqrt(PI),
        };
        math::powf(s, a) * math::exp(-s) * series / gamma
    } else {
        1.0 - gaussian_tail(dim, s)
    }
}

/// `∫_{|z|>R} |z| e^{−|z|²/w²} dz` with `x = R²/w²`, divided by `w^{d+1}`:
/// `(ω/2) Γ((d+1)/2, x)`.
pub fn radial_moment_tail(dim: Dim, x: f64) -> f64 {
    let upper = match dim {
        Dim::Two => {
            math::sqrt(x) * math::exp(-x) + 0.5 * math::sqrt(PI) * libm::erfc(math::sqrt(x))
        }
        Dim::Three => (1.0 + x) * math::exp(-x),
    };
    0.5 * dim.sphere_area() * upper
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_and_tail_agree_at_switch() {
        for dim in [Dim::Two, Dim::Three] {
            for s in [0.5, 0.9, 1.0, 1.5, 3.0] {
                let a = 0.5 * dim.as_f64();
                let (series, _) = mass_series(dim, s);
                let gamma = match dim {
                    Dim::Two => 1.0,
                    Dim::Three => 0.75 * math::sqrt(PI),
                };
                let p = math::powf(s, a) * math::exp(-s) * series / gamma;
                let q = gaussian_tail(dim, s);
                assert!((p + q - 1.0).abs() < 1e-14, "{dim:?} s={s}: {}", p + q);
            }
        }
    }

    #[test]
    fn two_dimensional_series_is_expm1_over_s() {
        for s in [1e-3, 0.3, 0.99] {
            let (series, tail) = mass_series(Dim::Two, s);
            let exact = libm::expm1(s) / s;
            assert!((series - exact).abs() < 1e-15 * exact);
            let exact_tail = (libm::expm1(s) - s) / (s * s);
            assert!((tail - exact_tail).abs() < 1e-12 * exact_tail);
        }
        let (series, tail) = mass_series(Dim::Two, 0.0);
        assert_eq!((series, tail), (1.0, 0.5));
    }
}
