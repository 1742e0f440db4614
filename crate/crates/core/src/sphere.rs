//! Quasi-uniform direction samples on `S^{d−1}`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::dim::Dim;
use crate::math;
use crate::tensor::Vector;

pub const CIRCLE_POINTS: usize = 4096;
pub const SPHERE_POINTS: usize = 8192;

/// `n` equispaced angles on the unit circle, starting at angle `phase`.
pub fn circle(n: usize, phase: f64) -> Vec<Vector> {
    (0..n)
        .map(|i| {
            let a = phase + 2.0 * PI * i as f64 / n as f64;
            Vector::from_array(Dim::Two, [math::cos(a), math::sin(a), 0.0])
        })
        .collect()
}

/// Fibonacci lattice with `n` points on the unit sphere.
pub fn fibonacci(n: usize) -> Vec<Vector> {
    let golden = PI * (3.0 - math::sqrt(5.0));
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let rho = math::sqrt((1.0 - z * z).max(0.0));
            let a = golden * i as f64;
            Vector::from_array(Dim::Three, [rho * math::cos(a), rho * math::sin(a), z])
        })
        .collect()
}

/// `n` directions appropriate to the dimension.
pub fn directions(dim: Dim, n: usize) -> Vec<Vector> {
    match dim {
        Dim::Two => circle(n, 0.0),
        Dim::Three => fibonacci(n),
    }
}

/// 4096 angles in 2-D, 8192 Fibonacci points in 3-D.
pub fn default_directions(dim: Dim) -> Vec<Vector> {
    match dim {
        Dim::Two => circle(CIRCLE_POINTS, 0.0),
        Dim::Three => fibonacci(SPHERE_POINTS),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_are_unit_and_balanced() {
        for dim in [Dim::Two, Dim::Three] {
            let pts = directions(dim, 1000);
            let mut mean = [0.0; 3];
            for p in &pts {
                assert!((p.norm() - 1.0).abs() < 1e-14);
                for i in 0..3 {
                    mean[i] += p.raw()[i] / 1000.0;
                }
            }
            for m in mean {
                assert!(m.abs() < 1e-2);
            }
        }
    }
}
