//! Gauss–Legendre rules, composite panels and geometric grading.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::math;

/// An n-point Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes by Newton iteration on the Legendre recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss–Legendre rule needs at least one node");
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        let nf = n as f64;
        for i in 0..n {
            let mut x = math::cos(PI * (i as f64 + 0.75) / (nf + 0.5));
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if math::abs(dx) < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            nodes.push(x);
            weights.push(2.0 / ((1.0 - x * x) * dp * dp));
        }
        // ascending order
        nodes.reverse();
        weights.reverse();
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(self.weights.iter())
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }

    /// Composite rule over `panels` equal panels.
    pub fn composite<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, panels: usize, mut f: F) -> f64 {
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|p| {
                let lo = a + p as f64 * h;
                self.integrate(lo, lo + h, &mut f)
            })
            .sum()
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Splits `[a, b]` into panels shrinking geometrically towards `b`:
/// `[a, b−q·w], [b−q·w, b−q²·w], …` for `levels` levels (w = b − a),
/// with the final panel ending at `b`.
pub fn graded_towards_end(a: f64, b: f64, ratio: f64, levels: usize) -> Vec<(f64, f64)> {
    let w = b - a;
    let mut out = Vec::with_capacity(levels + 1);
    let mut lo = a;
    let mut gap = w;
    for _ in 0..levels {
        gap *= ratio;
        let hi = b - gap;
        out.push((lo, hi));
        lo = hi;
    }
    out.push((lo, b));
    out
}

/// Uniform composite panels of `[a, b]`.
pub fn uniform(a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|p| {
            (
                a + p as f64 * h,
                if p + 1 == panels {
                    b
                } else {
                    a + (p + 1) as f64 * h
                },
            )
        })
        .collect()
}

/// Integrates over the given panels with `rule`.
pub fn over_panels<F: FnMut(f64) -> f64>(
    rule: &GaussLegendre,
    panels: &[(f64, f64)],
    mut f: F,
) -> f64 {
    panels
        .iter()
        .map(|&(lo, hi)| rule.integrate(lo, hi, &mut f))
        .sum()
}

/// Composite integration with panel doubling until two successive results
/// agree to `rel_tol` (relative to the larger magnitude) or `abs_tol`.
/// Returns the finer value and the last difference as an error estimate.
pub fn doubling<F: FnMut(f64) -> f64>(
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    start_panels: usize,
    rel_tol: f64,
    abs_tol: f64,
    max_panels: usize,
    mut f: F,
) -> Option<(f64, f64)> {
    let mut panels = start_panels.max(1);
    let mut prev = rule.composite(a, b, panels, &mut f);
    while panels < max_panels {
        panels *= 2;
        let next = rule.composite(a, b, panels, &mut f);
        let err = math::abs(next - prev);
        if err <= abs_tol || err <= rel_tol * math::abs(next).max(math::abs(prev)) {
            return Some((next, err));
        }
        prev = next;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_point_rule_matches_tabulated_values() {
        let g = GaussLegendre::new(4);
        let expect = [0.8611363115940526, 0.3399810435848563];
        assert!((g.nodes()[3] - expect[0]).abs() < 1e-15);
        assert!((g.nodes()[2] - expect[1]).abs() < 1e-15);
        assert!((g.weights()[3] - 0.3478548451374538).abs() < 1e-15);
        assert!((g.weights()[2] - 0.6521451548625461).abs() < 1e-15);
    }

    #[test]
    fn rule_is_exact_for_degree_2n_minus_1() {
        for n in 1..12 {
            let g = GaussLegendre::new(n);
            let deg = 2 * n - 1;
            let got = g.integrate(0.0, 2.0, |x| math::powi(x, deg as i32));
            let exact = math::powi(2.0, deg as i32 + 1) / (deg as f64 + 1.0);
            assert!((got - exact).abs() < 1e-12 * exact, "n={n}");
        }
    }

    #[test]
    fn graded_panels_tile_the_interval() {
        let p = graded_towards_end(1.0, 2.0, 0.5, 6);
        assert_eq!(p.len(), 7);
        assert_eq!(p[0].0, 1.0);
        assert_eq!(p.last().unwrap().1, 2.0);
        for w in p.windows(2) {
            assert_eq!(w[0].1, w[1].0);
        }
        assert!((p[0].1 - 1.5).abs() < 1e-15);
    }

    #[test]
    fn doubling_converges_and_reports_failure() {
        let g = GaussLegendre::new(4);
        let (v, err) =
            doubling(&g, 0.0, 3.0, 1, 1e-13, 0.0, 1 << 10, |x| math::exp(-x * x)).unwrap();
        assert!((v - 0.5 * math::sqrt(PI) * libm::erf(3.0)).abs() < 1e-13);
        assert!(err < 1e-12);
        assert!(doubling(&g, 0.0, 1.0, 1, 1e-14, 0.0, 8, |x| 1.0 / math::sqrt(x)).is_none());
    }
}
