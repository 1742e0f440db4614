use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::math;

/// Spatial dimension. Closed radial forms of the kernels exist for 2 and 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dim {
    Two,
    Three,
}

impl Dim {
    pub fn new(d: usize) -> Result<Self> {
        match d {
            2 => Ok(Dim::Two),
            3 => Ok(Dim::Three),
            other => Err(Error::Domain(alloc::format!(
                "dimension {other} unsupported (2 or 3)"
            ))),
        }
    }

    #[inline]
    pub const fn n(self) -> usize {
        match self {
            Dim::Two => 2,
            Dim::Three => 3,
        }
    }

    #[inline]
    pub fn as_f64(self) -> f64 {
        self.n() as f64
    }

    /// Surface area of the unit sphere S^{d-1}, i.e. 2π^{d/2}/Γ(d/2).
    #[inline]
    pub fn sphere_area(self) -> f64 {
        match self {
            Dim::Two => 2.0 * PI,
            Dim::Three => 4.0 * PI,
        }
    }

    /// `|x|^d`.
    #[inline]
    pub fn pow_d(self, r: f64) -> f64 {
        match self {
            Dim::Two => r * r,
            Dim::Three => r * r * r,
        }
    }

    /// `(4πt)^{-d/2}`.
    #[inline]
    pub fn heat_prefactor(self, t: f64) -> f64 {
        let q = 4.0 * PI * t;
        match self {
            Dim::Two => 1.0 / q,
            Dim::Three => 1.0 / (q * math::sqrt(q)),
        }
    }

    pub(crate) fn check_len(self, len: usize) -> Result<()> {
        if len != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                got: len,
            });
        }
        Ok(())
    }
}
