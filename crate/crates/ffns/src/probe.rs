//! Uniform access to velocity fields for the checks: a solved trajectory
//! evaluated through [`FarField`], or a closed-form synthetic field.

use ffns_core::grid::{BoxGrid, VectorFieldGrid};
use ffns_core::{Dim, Vector};
use rayon::prelude::*;

use crate::error::Result;
use crate::farfield::FarField;
use crate::solver::Trajectory;

/// A velocity field that can be evaluated at arbitrary points.
pub trait FieldProbe: Sync {
    fn dim(&self) -> Dim;

    /// Velocity at `(x, t)` and a nonnegative error estimate.
    fn velocity(&self, x: &Vector, t: f64) -> Result<(Vector, f64)>;

    /// Batch evaluation; order follows the input.
    fn velocities(&self, xs: &[Vector], t: f64) -> Result<Vec<(Vector, f64)>> {
        xs.par_iter().map(|x| self.velocity(x, t)).collect()
    }

    /// Grid samples of the field at `t`, when the probe has them.
    fn snapshot(&self, t: f64) -> Option<VectorFieldGrid>;

    /// Times at which the field is defined; `None` means any `t > 0`.
    fn slice_times(&self) -> Option<&[f64]> {
        None
    }
}

/// A solved trajectory: grid snapshots inside the box, Duhamel quadrature
/// everywhere.
pub struct SolutionProbe<'a> {
    pub traj: &'a Trajectory,
    pub far: FarField<'a>,
}

impl<'a> SolutionProbe<'a> {
    pub fn new(traj: &'a Trajectory, far: FarField<'a>) -> Self {
        SolutionProbe { traj, far }
    }
}

impl FieldProbe for SolutionProbe<'_> {
    fn dim(&self) -> Dim {
        self.traj.grid.dim()
    }

    fn velocity(&self, x: &Vector, t: f64) -> Result<(Vector, f64)> {
        let s = self.far.eval(x, t)?;
        Ok((s.velocity, s.budget.total()))
    }

    fn snapshot(&self, t: f64) -> Option<VectorFieldGrid> {
        self.traj.snapshot_at(t).ok().cloned()
    }

    fn slice_times(&self) -> Option<&[f64]> {
        Some(&self.traj.times)
    }
}

type FieldFn = dyn Fn(&[f64; 3], f64) -> [f64; 3] + Sync;
type GridFn = dyn Fn(f64) -> Option<BoxGrid> + Sync;

/// A closed-form field `u(x,t)`, sampled on a time-dependent grid on demand.
pub struct SyntheticProbe {
    dim: Dim,
    field: Box<FieldFn>,
    grid: Box<GridFn>,
}

impl SyntheticProbe {
    pub fn new<F, G>(dim: Dim, field: F, grid: G) -> Self
    where
        F: Fn(&[f64; 3], f64) -> [f64; 3] + Sync + 'static,
        G: Fn(f64) -> Option<BoxGrid> + Sync + 'static,
    {
        SyntheticProbe {
            dim,
            field: Box::new(field),
            grid: Box::new(grid),
        }
    }

    /// A time-independent field with a fixed sampling grid.
    pub fn steady<F>(dim: Dim, field: F, grid: Option<BoxGrid>) -> Self
    where
        F: Fn(&[f64; 3]) -> [f64; 3] + Sync + 'static,
    {
        SyntheticProbe::new(dim, move |x, _| field(x), move |_| grid)
    }
}

impl FieldProbe for SyntheticProbe {
    fn dim(&self) -> Dim {
        self.dim
    }

    fn velocity(&self, x: &Vector, t: f64) -> Result<(Vector, f64)> {
        Ok((Vector::from_array(self.dim, (self.field)(&x.raw(), t)), 0.0))
    }

    fn snapshot(&self, t: f64) -> Option<VectorFieldGrid> {
        let grid = (self.grid)(t)?;
        let f = &self.field;
        Some(VectorFieldGrid::from_fn(grid, |x| f(x, t)))
    }
}
