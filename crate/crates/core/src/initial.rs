//! Initial velocity data with the decay metadata the solver admits on.

use alloc::vec::Vec;

use crate::dim::Dim;
use crate::error::{Error, Result};
use crate::grid::{BoxGrid, VectorFieldGrid};
use crate::math;
use crate::tensor::Vector;

/// Gaussian stream function `amplitude · e^{−|x−c|²/w²}` whose curl gives a
/// compactly supported divergence-free field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurlBump {
    pub amplitude: f64,
    pub center: [f64; 3],
    pub width: f64,
    /// Direction of the vector potential in 3-D; ignored in 2-D.
    pub axis: usize,
}

impl CurlBump {
    /// `∇^⊥ψ = (−∂₂ψ, ∂₁ψ)` in 2-D, `∇ψ × e_axis` in 3-D, at `x`.
    pub fn velocity(&self, dim: Dim, x: &[f64; 3]) -> [f64; 3] {
        let mut z = [0.0; 3];
        let mut r2 = 0.0;
        for a in 0..dim.n() {
            z[a] = x[a] - self.center[a];
            r2 += z[a] * z[a];
        }
        let w2 = self.width * self.width;
        let psi = self.amplitude * math::exp(-r2 / w2);
        let grad = [
            -2.0 * z[0] / w2 * psi,
            -2.0 * z[1] / w2 * psi,
            -2.0 * z[2] / w2 * psi,
        ];
        match dim {
            Dim::Two => [-grad[1], grad[0], 0.0],
            Dim::Three => {
                let mut e = [0.0; 3];
                e[self.axis] = 1.0;
                [
                    grad[1] * e[2] - grad[2] * e[1],
                    grad[2] * e[0] - grad[0] * e[2],
                    grad[0] * e[1] - grad[1] * e[0],
                ]
            }
        }
    }

    /// Samples the field; divergence-free up to spectral truncation.
    pub fn sample(&self, grid: &BoxGrid) -> VectorFieldGrid {
        let dim = grid.dim();
        VectorFieldGrid::from_fn(*grid, |x| self.velocity(dim, x))
    }
}

/// The datum `a` of the mild formulation.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    Zero(Dim),
    Field {
        field: VectorFieldGrid,
        /// `‖a‖₁` by the midpoint rule.
        l1_norm: f64,
        /// `sup (1+|x|)^d |a(x)|` over the samples.
        decay_sup: f64,
    },
}

impl InitialData {
    /// Wraps a field already flagged divergence-free and measures its decay.
    pub fn from_field(field: VectorFieldGrid) -> Result<Self> {
        if !field.is_divergence_free() {
            return Err(Error::Validation(
                "initial datum must be flagged divergence-free".into(),
            ));
        }
        let grid = *field.grid();
        let dim = grid.dim();
        let mut l1 = 0.0;
        let mut sup: f64 = 0.0;
        for i in 0..grid.len() {
            let m = field.magnitude(i);
            let x = grid.point(i);
            let r = math::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
            l1 += m;
            sup = sup.max(dim.pow_d(1.0 + r) * m);
        }
        let l1 = l1 * grid.cell_volume();
        if !l1.is_finite() || !sup.is_finite() {
            return Err(Error::Validation("initial datum is not integrable".into()));
        }
        Ok(InitialData::Field {
            field,
            l1_norm: l1,
            decay_sup: sup,
        })
    }

    pub fn dim(&self) -> Dim {
        match self {
            InitialData::Zero(d) => *d,
            InitialData::Field { field, .. } => field.dim(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            InitialData::Zero(_) => true,
            InitialData::Field { l1_norm, .. } => *l1_norm == 0.0,
        }
    }

    pub fn field(&self) -> Option<&VectorFieldGrid> {
        match self {
            InitialData::Zero(_) => None,
            InitialData::Field { field, .. } => Some(field),
        }
    }

    pub fn l1_norm(&self) -> f64 {
        match self {
            InitialData::Zero(_) => 0.0,
            InitialData::Field { l1_norm, .. } => *l1_norm,
        }
    }

    pub fn decay_sup(&self) -> f64 {
        match self {
            InitialData::Zero(_) => 0.0,
            InitialData::Field { decay_sup, .. } => *decay_sup,
        }
    }

    /// Nodes carrying non-negligible data, as (position, value) pairs.
    pub fn support(&self, rel_cut: f64) -> Vec<([f64; 3], [f64; 3])> {
        match self {
            InitialData::Zero(_) => Vec::new(),
            InitialData::Field { field, .. } => {
                let grid = field.grid();
                let cut = rel_cut * field.max_magnitude();
                (0..grid.len())
                    .filter(|&i| field.magnitude(i) > cut)
                    .map(|i| (grid.point(i), field.value(i)))
                    .collect()
            }
        }
    }

    /// `e^{tΔ}a(x) = Σ_y g_t(x−y) a(y) h^d` over the sampled datum.
    pub fn heat_at(&self, x: &[f64; 3], t: f64) -> Result<Vector> {
        let dim = self.dim();
        if !(t > 0.0) {
            return Err(Error::Domain(alloc::format!(
                "heat evaluation needs t > 0, got {t}"
            )));
        }
        let field = match self {
            InitialData::Zero(_) => return Ok(Vector::zero(dim)),
            InitialData::Field { field, .. } => field,
        };
        let grid = field.grid();
        let pre = dim.heat_prefactor(t) * grid.cell_volume();
        let mut out = [0.0; 3];
        for i in 0..grid.len() {
            let y = grid.point(i);
            let mut r2 = 0.0;
            for a in 0..dim.n() {
                r2 += (x[a] - y[a]) * (x[a] - y[a]);
            }
            let g = pre * math::exp(-r2 / (4.0 * t));
            if g == 0.0 {
                continue;
            }
            for (c, slot) in out.iter_mut().enumerate().take(dim.n()) {
                *slot += g * field.component(c)[i];
            }
        }
        Ok(Vector::from_array(dim, out))
    }
}
