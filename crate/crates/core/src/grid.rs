//! Uniform periodic boxes `[−L, L)^d` and vector fields sampled on them.
//!
//! Samples are stored row-major with axis 0 slowest; node `i` on an axis
//! sits at `−L + i·h`, `h = 2L/N`, so the origin is node `N/2`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::dim::Dim;
use crate::error::{Error, Result};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxGrid {
    dim: Dim,
    n: usize,
    half_width: f64,
}

impl BoxGrid {
    pub fn new(dim: Dim, half_width: f64, n: usize) -> Result<Self> {
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::Validation(alloc::format!(
                "box half-width must be positive, got {half_width}"
            )));
        }
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::Validation(alloc::format!(
                "points per axis must be a power of two ≥ 16, got {n}"
            )));
        }
        Ok(BoxGrid { dim, n, half_width })
    }

    #[inline]
    pub fn dim(&self) -> Dim {
        self.dim
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    /// `h^d`, the midpoint-rule weight.
    #[inline]
    pub fn cell_volume(&self) -> f64 {
        self.dim.pow_d(self.spacing())
    }

    /// Total number of nodes, `N^d`.
    #[inline]
    pub fn len(&self) -> usize {
        self.n.pow(self.dim.n() as u32)
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing()
    }

    /// Per-axis node indices of a flat index.
    #[inline]
    pub fn multi_index(&self, flat: usize) -> [usize; 3] {
        let n = self.n;
        match self.dim {
            Dim::Two => [flat / n, flat % n, 0],
            Dim::Three => [flat / (n * n), (flat / n) % n, flat % n],
        }
    }

    #[inline]
    pub fn flat_index(&self, idx: [usize; 3]) -> usize {
        let n = self.n;
        match self.dim {
            Dim::Two => idx[0] * n + idx[1],
            Dim::Three => (idx[0] * n + idx[1]) * n + idx[2],
        }
    }

    /// Physical position of a node.
    #[inline]
    pub fn point(&self, flat: usize) -> [f64; 3] {
        let m = self.multi_index(flat);
        let mut x = [0.0; 3];
        for (a, slot) in x.iter_mut().enumerate().take(self.dim.n()) {
            *slot = self.coord(m[a]);
        }
        x
    }

    /// Flat index of the node at (or nearest below) a position inside the box.
    pub fn nearest_node(&self, x: &[f64; 3]) -> Option<usize> {
        let h = self.spacing();
        let mut idx = [0usize; 3];
        for a in 0..self.dim.n() {
            let f = (x[a] + self.half_width) / h;
            let i = math::floor(f + 0.5);
            if i < 0.0 || i >= self.n as f64 {
                return None;
            }
            idx[a] = i as usize;
        }
        Some(self.flat_index(idx))
    }

    /// Signed integer frequency of FFT bin `i`; Nyquist maps to `−N/2`.
    #[inline]
    pub fn frequency_index(&self, i: usize) -> i64 {
        if i < self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Angular wavenumber `π m / L` of FFT bin `i`.
    #[inline]
    pub fn wavenumber(&self, i: usize) -> f64 {
        PI * self.frequency_index(i) as f64 / self.half_width
    }
}

/// A vector field sampled on a [`BoxGrid`], one array per component.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorFieldGrid {
    grid: BoxGrid,
    comps: Vec<Vec<f64>>,
    divergence_free: bool,
}

impl VectorFieldGrid {
    pub fn new(grid: BoxGrid, comps: Vec<Vec<f64>>) -> Result<Self> {
        grid.dim().check_len(comps.len())?;
        for c in &comps {
            if c.len() != grid.len() {
                return Err(Error::DimensionMismatch {
                    expected: grid.len(),
                    got: c.len(),
                });
            }
        }
        Ok(VectorFieldGrid {
            grid,
            comps,
            divergence_free: false,
        })
    }

    pub fn zeros(grid: BoxGrid) -> Self {
        VectorFieldGrid {
            grid,
            comps: vec![vec![0.0; grid.len()]; grid.dim().n()],
            divergence_free: true,
        }
    }

    /// Samples `f` at every node.
    pub fn from_fn<F: FnMut(&[f64; 3]) -> [f64; 3]>(grid: BoxGrid, mut f: F) -> Self {
        let d = grid.dim().n();
        let mut comps = vec![vec![0.0; grid.len()]; d];
        for i in 0..grid.len() {
            let v = f(&grid.point(i));
            for (c, comp) in comps.iter_mut().enumerate() {
                comp[i] = v[c];
            }
        }
        VectorFieldGrid {
            grid,
            comps,
            divergence_free: false,
        }
    }

    /// Sets the divergence-free flag. Callers are expected to have checked
    /// the spectral divergence residual first.
    pub fn with_divergence_free(mut self, flag: bool) -> Self {
        self.divergence_free = flag;
        self
    }

    #[inline]
    pub fn is_divergence_free(&self) -> bool {
        self.divergence_free
    }

    #[inline]
    pub fn grid(&self) -> &BoxGrid {
        &self.grid
    }

    #[inline]
    pub fn dim(&self) -> Dim {
        self.grid.dim()
    }

    #[inline]
    pub fn component(&self, c: usize) -> &[f64] {
        &self.comps[c]
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.comps
    }

    pub fn into_components(self) -> Vec<Vec<f64>> {
        self.comps
    }

    #[inline]
    pub fn value(&self, flat: usize) -> [f64; 3] {
        let mut v = [0.0; 3];
        for (c, comp) in self.comps.iter().enumerate() {
            v[c] = comp[flat];
        }
        v
    }

    #[inline]
    pub fn magnitude(&self, flat: usize) -> f64 {
        math::sqrt(self.comps.iter().map(|c| c[flat] * c[flat]).sum())
    }

    pub fn max_magnitude(&self) -> f64 {
        (0..self.grid.len())
            .map(|i| self.magnitude(i))
            .fold(0.0, f64::max)
    }

    /// `s·self`; the divergence-free flag is kept.
    pub fn scale(&self, s: f64) -> Self {
        VectorFieldGrid {
            grid: self.grid,
            comps: self
                .comps
                .iter()
                .map(|c| c.iter().map(|v| v * s).collect())
                .collect(),
            divergence_free: self.divergence_free,
        }
    }

    /// `self + s·other`; divergence-free iff both are.
    pub fn axpy(&self, s: f64, other: &VectorFieldGrid) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::Validation("fields live on different grids".into()));
        }
        Ok(VectorFieldGrid {
            grid: self.grid,
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + s * y).collect())
                .collect(),
            divergence_free: self.divergence_free && other.divergence_free,
        })
    }

    /// Largest componentwise difference.
    pub fn max_abs_diff(&self, other: &VectorFieldGrid) -> f64 {
        self.comps
            .iter()
            .zip(&other.comps)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| math::abs(x - y)))
            .fold(0.0, f64::max)
    }

    /// Midpoint-rule integral of each component.
    pub fn integral(&self) -> [f64; 3] {
        let w = self.grid.cell_volume();
        let mut out = [0.0; 3];
        for (c, comp) in self.comps.iter().enumerate() {
            out[c] = comp.iter().sum::<f64>() * w;
        }
        out
    }

    /// Discrete inner product `Σ u·v h^d`.
    pub fn inner(&self, other: &VectorFieldGrid) -> f64 {
        let w = self.grid.cell_volume();
        self.comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>())
            .sum::<f64>()
            * w
    }
}

fn check_exponents(alpha: f64, p: f64) -> Result<()> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::Domain(alloc::format!(
            "weight exponent must be ≥ 0, got {alpha}"
        )));
    }
    if !(p >= 1.0) {
        return Err(Error::Domain(alloc::format!(
            "integrability exponent must be ≥ 1, got {p}"
        )));
    }
    Ok(())
}

fn norm_where<F: Fn(f64) -> bool>(v: &VectorFieldGrid, alpha: f64, p: f64, keep: F) -> f64 {
    let grid = v.grid();
    let d = grid.dim().n();
    if p.is_infinite() {
        let mut m: f64 = 0.0;
        for i in 0..grid.len() {
            let x = grid.point(i);
            let r = math::sqrt((0..d).map(|a| x[a] * x[a]).sum());
            if keep(r) {
                m = m.max(math::powf(1.0 + r, alpha) * v.magnitude(i));
            }
        }
        return m;
    }
    let mut s = 0.0;
    for i in 0..grid.len() {
        let x = grid.point(i);
        let r = math::sqrt((0..d).map(|a| x[a] * x[a]).sum());
        if keep(r) {
            let m = v.magnitude(i);
            if m != 0.0 {
                s += math::powf(math::powf(1.0 + r, alpha) * m, p);
            }
        }
    }
    math::powf(s * grid.cell_volume(), 1.0 / p)
}

/// `‖(1+|x|)^α v‖_p` over the box by the midpoint rule; `p = ∞` is the
/// sample maximum.
pub fn weighted_lp_norm(v: &VectorFieldGrid, alpha: f64, p: f64) -> Result<f64> {
    check_exponents(alpha, p)?;
    Ok(norm_where(v, alpha, p, |_| true))
}

/// Same quadrature restricted to `r_in ≤ |x| < r_out`.
pub fn restrict_annulus_norm(
    v: &VectorFieldGrid,
    r_in: f64,
    r_out: f64,
    alpha: f64,
    p: f64,
) -> Result<f64> {
    check_exponents(alpha, p)?;
    let l = v.grid().half_width();
    if !(r_in >= 0.0 && r_in < r_out && r_out <= l) {
        return Err(Error::Domain(alloc::format!(
            "annulus [{r_in}, {r_out}) must satisfy 0 ≤ r_in < r_out ≤ {l}"
        )));
    }
    Ok(norm_where(v, alpha, p, |r| r >= r_in && r < r_out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(BoxGrid::new(Dim::Two, 1.0, 8).is_err());
        assert!(BoxGrid::new(Dim::Two, 1.0, 48).is_err());
        assert!(BoxGrid::new(Dim::Two, 0.0, 16).is_err());
        assert!(BoxGrid::new(Dim::Two, 1.0, 16).is_ok());
    }

    #[test]
    fn origin_is_centre_node() {
        let g = BoxGrid::new(Dim::Three, 4.0, 16).unwrap();
        let o = g.flat_index([8, 8, 8]);
        assert_eq!(g.point(o), [0.0, 0.0, 0.0]);
        assert_eq!(g.multi_index(o), [8, 8, 8]);
        assert_eq!(g.nearest_node(&[0.01, -0.01, 0.0]), Some(o));
        assert_eq!(g.frequency_index(8), -8);
        assert_eq!(g.frequency_index(7), 7);
    }

    #[test]
    fn zero_field_has_zero_norms() {
        let g = BoxGrid::new(Dim::Two, 4.0, 16).unwrap();
        let z = VectorFieldGrid::zeros(g);
        for (a, p) in [(0.0, 1.0), (1.5, 2.0), (2.0, f64::INFINITY)] {
            assert_eq!(weighted_lp_norm(&z, a, p).unwrap(), 0.0);
        }
    }

    #[test]
    fn annulus_bounds_checked() {
        let g = BoxGrid::new(Dim::Two, 4.0, 16).unwrap();
        let z = VectorFieldGrid::zeros(g);
        assert!(restrict_annulus_norm(&z, 2.0, 1.0, 0.0, 1.0).is_err());
        assert!(restrict_annulus_norm(&z, 0.0, 5.0, 0.0, 1.0).is_err());
        assert!(weighted_lp_norm(&z, -1.0, 1.0).is_err());
        assert!(weighted_lp_norm(&z, 0.0, 0.5).is_err());
    }
}
