//! Small fixed-capacity vectors and tensors with a runtime dimension.

use core::ops::{Add, Index, Mul, Neg, Sub};

use crate::dim::Dim;
use crate::error::Result;
use crate::math;

/// A d-vector stored in a 3-slot array; unused slots are zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vector {
    dim: Dim,
    c: [f64; 3],
}

impl Vector {
    pub fn zero(dim: Dim) -> Self {
        Vector { dim, c: [0.0; 3] }
    }

    pub fn from_slice(dim: Dim, v: &[f64]) -> Result<Self> {
        dim.check_len(v.len())?;
        let mut c = [0.0; 3];
        c[..v.len()].copy_from_slice(v);
        Ok(Vector { dim, c })
    }

    /// Builds from the first `dim.n()` entries of a raw array.
    pub fn from_array(dim: Dim, raw: [f64; 3]) -> Self {
        let mut c = raw;
        for slot in c.iter_mut().skip(dim.n()) {
            *slot = 0.0;
        }
        Vector { dim, c }
    }

    pub fn unit(dim: Dim, axis: usize) -> Self {
        let mut v = Vector::zero(dim);
        v.c[axis] = 1.0;
        v
    }

    #[inline]
    pub fn dim(&self) -> Dim {
        self.dim
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.c[..self.dim.n()]
    }

    #[inline]
    pub fn raw(&self) -> [f64; 3] {
        self.c
    }

    #[inline]
    pub fn dot(&self, other: &Vector) -> f64 {
        self.c[0] * other.c[0] + self.c[1] * other.c[1] + self.c[2] * other.c[2]
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        math::sqrt(self.dot(self))
    }

    pub fn scale(&self, s: f64) -> Vector {
        Vector {
            dim: self.dim,
            c: [self.c[0] * s, self.c[1] * s, self.c[2] * s],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|&x| x == 0.0)
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.as_slice()[i]
    }
}

impl Add for Vector {
    type Output = Vector;
    fn add(self, o: Vector) -> Vector {
        Vector {
            dim: self.dim,
            c: [self.c[0] + o.c[0], self.c[1] + o.c[1], self.c[2] + o.c[2]],
        }
    }
}

impl Sub for Vector {
    type Output = Vector;
    fn sub(self, o: Vector) -> Vector {
        Vector {
            dim: self.dim,
            c: [self.c[0] - o.c[0], self.c[1] - o.c[1], self.c[2] - o.c[2]],
        }
    }
}

impl Neg for Vector {
    type Output = Vector;
    fn neg(self) -> Vector {
        self.scale(-1.0)
    }
}

impl Mul<f64> for Vector {
    type Output = Vector;
    fn mul(self, s: f64) -> Vector {
        self.scale(s)
    }
}

/// A d×d matrix value of a convolution kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelTensor {
    dim: Dim,
    e: [[f64; 3]; 3],
}

impl KernelTensor {
    pub fn zero(dim: Dim) -> Self {
        KernelTensor {
            dim,
            e: [[0.0; 3]; 3],
        }
    }

    pub(crate) fn from_raw(dim: Dim, e: [[f64; 3]; 3]) -> Self {
        KernelTensor { dim, e }
    }

    pub fn identity(dim: Dim) -> Self {
        let mut m = KernelTensor::zero(dim);
        for i in 0..dim.n() {
            m.e[i][i] = 1.0;
        }
        m
    }

    /// Builds from a row-major slice of `d*d` entries.
    pub fn from_rows(dim: Dim, rows: &[f64]) -> Result<Self> {
        let d = dim.n();
        if rows.len() != d * d {
            return Err(crate::Error::DimensionMismatch {
                expected: d * d,
                got: rows.len(),
            });
        }
        let mut m = KernelTensor::zero(dim);
        for j in 0..d {
            for k in 0..d {
                m.e[j][k] = rows[j * d + k];
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn dim(&self) -> Dim {
        self.dim
    }

    #[inline]
    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.e[j][k]
    }

    #[inline]
    pub fn set(&mut self, j: usize, k: usize, v: f64) {
        self.e[j][k] = v;
    }

    pub fn raw(&self) -> [[f64; 3]; 3] {
        self.e
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim.n()).map(|i| self.e[i][i]).sum()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        let d = self.dim.n();
        let mut s = 0.0;
        for j in 0..d {
            for k in 0..d {
                s += self.e[j][k] * self.e[j][k];
            }
        }
        math::sqrt(s)
    }

    /// Largest |entry[j][k] − entry[k][j]|.
    pub fn asymmetry(&self) -> f64 {
        let d = self.dim.n();
        let mut m: f64 = 0.0;
        for j in 0..d {
            for k in 0..d {
                m = m.max(math::abs(self.e[j][k] - self.e[k][j]));
            }
        }
        m
    }

    pub fn apply(&self, c: &Vector) -> Vector {
        let d = self.dim.n();
        let mut out = [0.0; 3];
        for (j, slot) in out.iter_mut().enumerate().take(d) {
            *slot = (0..d).map(|k| self.e[j][k] * c.raw()[k]).sum();
        }
        Vector::from_array(self.dim, out)
    }

    pub fn scale(&self, s: f64) -> KernelTensor {
        let mut m = *self;
        for row in m.e.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        m
    }

    pub fn sub(&self, o: &KernelTensor) -> KernelTensor {
        let mut m = *self;
        for j in 0..3 {
            for k in 0..3 {
                m.e[j][k] -= o.e[j][k];
            }
        }
        m
    }

    pub fn add(&self, o: &KernelTensor) -> KernelTensor {
        let mut m = *self;
        for j in 0..3 {
            for k in 0..3 {
                m.e[j][k] += o.e[j][k];
            }
        }
        m
    }

    /// Largest absolute entry difference.
    pub fn max_abs_diff(&self, o: &KernelTensor) -> f64 {
        let mut m: f64 = 0.0;
        for j in 0..3 {
            for k in 0..3 {
                m = m.max(math::abs(self.e[j][k] - o.e[j][k]));
            }
        }
        m
    }
}

/// Component (j,k,l) maps the (k,l) entry of u⊗u to output component j.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradKernelTensor {
    dim: Dim,
    e: [[[f64; 3]; 3]; 3],
}

impl GradKernelTensor {
    pub(crate) fn from_raw(dim: Dim, e: [[[f64; 3]; 3]; 3]) -> Self {
        GradKernelTensor { dim, e }
    }

    #[inline]
    pub fn dim(&self) -> Dim {
        self.dim
    }

    #[inline]
    pub fn get(&self, j: usize, k: usize, l: usize) -> f64 {
        self.e[j][k][l]
    }

    pub fn norm(&self) -> f64 {
        let d = self.dim.n();
        let mut s = 0.0;
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    s += self.e[j][k][l] * self.e[j][k][l];
                }
            }
        }
        math::sqrt(s)
    }

    /// Contraction Σ_{k,l} F_{jkl} m_{kl}.
    pub fn contract(&self, m: &KernelTensor) -> Vector {
        let d = self.dim.n();
        let mut out = [0.0; 3];
        for (j, slot) in out.iter_mut().enumerate().take(d) {
            let mut s = 0.0;
            for k in 0..d {
                for l in 0..d {
                    s += self.e[j][k][l] * m.get(k, l);
                }
            }
            *slot = s;
        }
        Vector::from_array(self.dim, out)
    }

    pub fn max_abs_diff(&self, o: &GradKernelTensor) -> f64 {
        let mut m: f64 = 0.0;
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    m = m.max(math::abs(self.e[j][k][l] - o.e[j][k][l]));
                }
            }
        }
        m
    }
}
