//! External forces: separable Gaussian-bump forces with closed-form
//! integrals, and forces sampled on a grid at a list of times.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::dim::Dim;
use crate::error::{Error, Result};
use crate::grid::{BoxGrid, VectorFieldGrid};
use crate::math;
use crate::special;
use crate::tensor::{KernelTensor, Vector};

/// Radius, in widths, beyond which a Gaussian term is treated as zero.
pub const TRUNCATION_WIDTHS: f64 = 8.0;

/// One term `weight · [(x−c)_axis] · e^{−|x−c|²/w²}` of a spatial profile;
/// the bracketed factor is present only when `linear_axis` is set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianTerm {
    pub weight: f64,
    pub center: [f64; 3],
    pub width: f64,
    pub linear_axis: Option<usize>,
}

impl GaussianTerm {
    /// `(πw²)^{d/2}`, the integral of `e^{−|x|²/w²}`.
    pub fn volume(&self, dim: Dim) -> f64 {
        let v = PI * self.width * self.width;
        match dim {
            Dim::Two => v,
            Dim::Three => v * math::sqrt(v),
        }
    }

    #[inline]
    pub fn value(&self, dim: Dim, x: &[f64; 3]) -> f64 {
        let mut r2 = 0.0;
        for a in 0..dim.n() {
            let z = x[a] - self.center[a];
            r2 += z * z;
        }
        let q = r2 / (self.width * self.width);
        if q > TRUNCATION_WIDTHS * TRUNCATION_WIDTHS {
            return 0.0;
        }
        let lin = match self.linear_axis {
            Some(a) => x[a] - self.center[a],
            None => 1.0,
        };
        self.weight * lin * math::exp(-q)
    }
}

/// A finite sum of Gaussian terms.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialProfile {
    dim: Dim,
    terms: Vec<GaussianTerm>,
}

impl SpatialProfile {
    pub fn new(dim: Dim, terms: Vec<GaussianTerm>) -> Result<Self> {
        for t in &terms {
            if !(t.width > 0.0) {
                return Err(Error::Validation(alloc::format!(
                    "bump width must be positive, got {}",
                    t.width
                )));
            }
            if let Some(a) = t.linear_axis {
                if a >= dim.n() {
                    return Err(Error::Validation(alloc::format!(
                        "linear axis {a} out of range"
                    )));
                }
            }
        }
        Ok(SpatialProfile { dim, terms })
    }

    /// `e^{−|x|²/w²}` centred at the origin.
    pub fn gaussian(dim: Dim, width: f64) -> Result<Self> {
        Self::new(
            dim,
            vec![GaussianTerm {
                weight: 1.0,
                center: [0.0; 3],
                width,
                linear_axis: None,
            }],
        )
    }

    /// Two opposite bumps at `±offset·e_axis`: the positive one at `+`.
    pub fn dipole(dim: Dim, width: f64, offset: f64, axis: usize) -> Result<Self> {
        let mut c = [0.0; 3];
        c[axis] = offset;
        let mut m = [0.0; 3];
        m[axis] = -offset;
        Self::new(
            dim,
            vec![
                GaussianTerm {
                    weight: 1.0,
                    center: c,
                    width,
                    linear_axis: None,
                },
                GaussianTerm {
                    weight: -1.0,
                    center: m,
                    width,
                    linear_axis: None,
                },
            ],
        )
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn terms(&self) -> &[GaussianTerm] {
        &self.terms
    }

    #[inline]
    pub fn value(&self, x: &[f64; 3]) -> f64 {
        self.terms.iter().map(|t| t.value(self.dim, x)).sum()
    }

    /// `∫ρ`.
    pub fn integral(&self) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.linear_axis.is_none())
            .map(|t| t.weight * t.volume(self.dim))
            .sum()
    }

    /// `∫ y ρ(y) dy`.
    pub fn first_moment(&self) -> [f64; 3] {
        let mut m = [0.0; 3];
        for t in &self.terms {
            let v = t.weight * t.volume(self.dim);
            match t.linear_axis {
                None => {
                    for (a, slot) in m.iter_mut().enumerate().take(self.dim.n()) {
                        *slot += v * t.center[a];
                    }
                }
                Some(a) => m[a] += v * 0.5 * t.width * t.width,
            }
        }
        m
    }

    fn single_centred_positive(&self) -> Option<&GaussianTerm> {
        match self.terms.as_slice() {
            [t] if t.linear_axis.is_none() && t.weight >= 0.0 && t.center == [0.0; 3] => Some(t),
            _ => None,
        }
    }

    /// Radius of the ball around the origin containing every truncated term.
    pub fn support_radius(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let c = math::sqrt(t.center.iter().map(|v| v * v).sum());
                c + TRUNCATION_WIDTHS * t.width
            })
            .fold(0.0, f64::max)
    }

    /// Bound on the mass discarded by truncation, `Σ ∫_{outside} |term|`.
    pub fn truncation_error(&self) -> f64 {
        let x = TRUNCATION_WIDTHS * TRUNCATION_WIDTHS;
        self.terms
            .iter()
            .map(|t| match t.linear_axis {
                None => {
                    math::abs(t.weight) * t.volume(self.dim) * special::gaussian_tail(self.dim, x)
                }
                Some(_) => {
                    math::abs(t.weight)
                        * math::powi(t.width, self.dim.n() as i32 + 1)
                        * special::radial_moment_tail(self.dim, x)
                }
            })
            .sum()
    }

    fn lattice<F: FnMut(&[f64; 3], f64)>(&self, per_axis: usize, mut f: F) {
        let r = self.support_radius();
        let h = 2.0 * r / per_axis as f64;
        let w = self.dim.pow_d(h);
        let node = |i: usize| -r + (i as f64 + 0.5) * h;
        match self.dim {
            Dim::Two => {
                for i in 0..per_axis {
                    for j in 0..per_axis {
                        f(&[node(i), node(j), 0.0], w);
                    }
                }
            }
            Dim::Three => {
                for i in 0..per_axis {
                    for j in 0..per_axis {
                        for k in 0..per_axis {
                            f(&[node(i), node(j), node(k)], w);
                        }
                    }
                }
            }
        }
    }

    fn lattice_points(&self) -> usize {
        match self.dim {
            Dim::Two => 800,
            Dim::Three => 120,
        }
    }

    /// `∫|ρ|`: closed form for a single centred bump, lattice quadrature otherwise.
    pub fn abs_integral(&self) -> f64 {
        if let Some(t) = self.single_centred_positive() {
            return t.weight * t.volume(self.dim);
        }
        let mut s = 0.0;
        self.lattice(self.lattice_points(), |x, w| {
            s += math::abs(self.value(x)) * w
        });
        s
    }

    /// `∫|y||ρ(y)| dy`.
    pub fn abs_radial_moment(&self) -> f64 {
        if let Some(t) = self.single_centred_positive() {
            // (ω/2) w^{d+1} Γ((d+1)/2)
            let gamma = match self.dim {
                Dim::Two => 0.5 * math::sqrt(PI),
                Dim::Three => 1.0,
            };
            return t.weight
                * 0.5
                * self.dim.sphere_area()
                * math::powi(t.width, self.dim.n() as i32 + 1)
                * gamma;
        }
        let mut s = 0.0;
        self.lattice(self.lattice_points(), |x, w| {
            let r = math::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
            s += r * math::abs(self.value(x)) * w;
        });
        s
    }

    /// Sampled `sup |ρ(x)| (1+|x|)^β`.
    pub fn weighted_sup(&self, beta: f64) -> f64 {
        let mut m: f64 = 0.0;
        self.lattice(self.lattice_points(), |x, _| {
            let r = math::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
            m = m.max(math::abs(self.value(x)) * math::powf(1.0 + r, beta));
        });
        m
    }

    /// Samples `ρ` on every node of a grid.
    pub fn sample(&self, grid: &BoxGrid) -> Vec<f64> {
        (0..grid.len())
            .map(|i| self.value(&grid.point(i)))
            .collect()
    }
}

/// Shape of a temporal profile on its window `[start, end]`, normalized to
/// unit integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TemporalKind {
    /// `1/T` on the window.
    Indicator,
    /// `(4/T)(1 − u)³`, `u = (t − start)/T`.
    Ramp,
    /// `(140/T) u³(1 − u)³`.
    Bump,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemporalProfile {
    kind: TemporalKind,
    start: f64,
    end: f64,
}

impl TemporalProfile {
    pub fn new(kind: TemporalKind, start: f64, end: f64) -> Result<Self> {
        if !(start >= 0.0 && end > start && end.is_finite()) {
            return Err(Error::Validation(alloc::format!(
                "time window [{start}, {end}] must satisfy 0 ≤ start < end"
            )));
        }
        Ok(TemporalProfile { kind, start, end })
    }

    pub fn kind(&self) -> TemporalKind {
        self.kind
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    /// Polynomial degree on the window.
    pub fn degree(&self) -> usize {
        match self.kind {
            TemporalKind::Indicator => 0,
            TemporalKind::Ramp => 3,
            TemporalKind::Bump => 6,
        }
    }

    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        let w = self.end - self.start;
        let inside = match self.kind {
            TemporalKind::Indicator => t >= self.start && t < self.end,
            _ => t >= self.start && t <= self.end,
        };
        if !inside {
            return 0.0;
        }
        let u = (t - self.start) / w;
        match self.kind {
            TemporalKind::Indicator => 1.0 / w,
            TemporalKind::Ramp => 4.0 * math::powi(1.0 - u, 3) / w,
            TemporalKind::Bump => 140.0 * math::powi(u * (1.0 - u), 3) / w,
        }
    }

    /// `∫₀ᵗ τ`.
    pub fn cumulative(&self, t: f64) -> f64 {
        let u = ((t - self.start) / (self.end - self.start)).clamp(0.0, 1.0);
        match self.kind {
            TemporalKind::Indicator => u,
            TemporalKind::Ramp => 1.0 - math::powi(1.0 - u, 4),
            TemporalKind::Bump => {
                let u4 = math::powi(u, 4);
                u4 * (35.0 - 84.0 * u + 70.0 * u * u - 20.0 * u * u * u)
            }
        }
    }

    /// Sampled `sup |τ(t)| (1+t)^β` over the window.
    pub fn weighted_sup(&self, beta: f64) -> f64 {
        let n = 4000;
        let w = self.end - self.start;
        (0..=n)
            .map(|i| {
                let t = self.start + w * i as f64 / n as f64;
                let t = if i == n && self.kind == TemporalKind::Indicator {
                    self.end - 1e-12 * w
                } else {
                    t
                };
                math::abs(self.value(t)) * math::powf(1.0 + t, beta)
            })
            .fold(0.0, f64::max)
    }
}

/// A force given by samples on a grid at increasing times, linear in time
/// between samples and zero outside the sampled interval.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledForce {
    times: Vec<f64>,
    slices: Vec<VectorFieldGrid>,
}

impl SampledForce {
    pub fn new(times: Vec<f64>, slices: Vec<VectorFieldGrid>) -> Result<Self> {
        if times.is_empty() || times.len() != slices.len() {
            return Err(Error::Validation(
                "sampled force needs one slice per time".into(),
            ));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) || times[0] < 0.0 {
            return Err(Error::Validation(
                "sampled force times must increase from t ≥ 0".into(),
            ));
        }
        let grid = *slices[0].grid();
        if slices.iter().any(|s| *s.grid() != grid) {
            return Err(Error::Validation(
                "sampled force slices must share a grid".into(),
            ));
        }
        Ok(SampledForce { times, slices })
    }

    pub fn grid(&self) -> &BoxGrid {
        self.slices[0].grid()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn slices(&self) -> &[VectorFieldGrid] {
        &self.slices
    }

    /// Interpolation weights `(i, θ)` so that `f(t) = (1−θ) f_i + θ f_{i+1}`.
    fn bracket(&self, t: f64) -> Option<(usize, f64)> {
        let n = self.times.len();
        if t < self.times[0] || t > self.times[n - 1] {
            return None;
        }
        if n == 1 {
            return Some((0, 0.0));
        }
        let i = match self.times.iter().position(|&s| s > t) {
            Some(p) => p - 1,
            None => n - 2,
        };
        let theta = (t - self.times[i]) / (self.times[i + 1] - self.times[i]);
        Some((i, theta))
    }

    /// Interpolated slice at time `t`.
    pub fn slice(&self, t: f64) -> VectorFieldGrid {
        match self.bracket(t) {
            None => VectorFieldGrid::zeros(*self.grid()),
            Some((i, theta)) if theta == 0.0 || i + 1 == self.slices.len() => {
                self.slices[i].clone()
            }
            Some((i, theta)) => self.slices[i]
                .scale(1.0 - theta)
                .axpy(theta, &self.slices[i + 1])
                .unwrap_or_else(|_| VectorFieldGrid::zeros(*self.grid())),
        }
    }

    /// Exact time integral of the piecewise-linear interpolant of a scalar
    /// sequence over `[times[0], t]`.
    fn time_integral(&self, values: &[f64], t: f64) -> f64 {
        let mut s = 0.0;
        for i in 0..self.times.len().saturating_sub(1) {
            let (a, b) = (self.times[i], self.times[i + 1]);
            if t <= a {
                break;
            }
            let hi = t.min(b);
            let theta = (hi - a) / (b - a);
            let vhi = values[i] + theta * (values[i + 1] - values[i]);
            s += 0.5 * (hi - a) * (values[i] + vhi);
        }
        s
    }

    /// Largest sample magnitude on the outermost layer of nodes, relative to
    /// the overall maximum.
    pub fn boundary_fraction(&self) -> f64 {
        let grid = self.grid();
        let n = grid.n();
        let mut edge: f64 = 0.0;
        let mut all: f64 = 0.0;
        for s in &self.slices {
            for i in 0..grid.len() {
                let m = s.magnitude(i);
                all = all.max(m);
                let idx = grid.multi_index(i);
                if idx[..grid.dim().n()].iter().any(|&k| k == 0 || k == n - 1) {
                    edge = edge.max(m);
                }
            }
        }
        if all == 0.0 {
            0.0
        } else {
            edge / all
        }
    }
}

/// An external force `f(x,t)`.
#[derive(Debug, Clone, PartialEq)]
pub enum ForceModel {
    /// `f(x,t) = c_f ρ(x) τ(t)`.
    Separable {
        spatial: SpatialProfile,
        temporal: TemporalProfile,
        amplitude: Vector,
    },
    Sampled(SampledForce),
}

impl ForceModel {
    pub fn separable(
        spatial: SpatialProfile,
        temporal: TemporalProfile,
        amplitude: Vector,
    ) -> Result<Self> {
        if spatial.dim() != amplitude.dim() {
            return Err(Error::DimensionMismatch {
                expected: spatial.dim().n(),
                got: amplitude.dim().n(),
            });
        }
        Ok(ForceModel::Separable {
            spatial,
            temporal,
            amplitude,
        })
    }

    /// The identically zero force.
    pub fn zero(dim: Dim) -> Self {
        ForceModel::Separable {
            spatial: SpatialProfile {
                dim,
                terms: Vec::new(),
            },
            temporal: TemporalProfile {
                kind: TemporalKind::Indicator,
                start: 0.0,
                end: 1.0,
            },
            amplitude: Vector::zero(dim),
        }
    }

    pub fn dim(&self) -> Dim {
        match self {
            ForceModel::Separable { spatial, .. } => spatial.dim(),
            ForceModel::Sampled(s) => s.grid().dim(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            ForceModel::Separable {
                spatial, amplitude, ..
            } => amplitude.is_zero() || spatial.terms().iter().all(|t| t.weight == 0.0),
            ForceModel::Sampled(s) => s.slices().iter().all(|f| f.max_magnitude() == 0.0),
        }
    }

    /// End of the time support.
    pub fn support_end(&self) -> f64 {
        match self {
            ForceModel::Separable { temporal, .. } => temporal.end(),
            ForceModel::Sampled(s) => *s.times().last().unwrap_or(&0.0),
        }
    }

    /// Radius of a ball containing the spatial support.
    pub fn support_radius(&self) -> f64 {
        match self {
            ForceModel::Separable { spatial, .. } => spatial.support_radius(),
            ForceModel::Sampled(s) => {
                let grid = s.grid();
                let mut r: f64 = 0.0;
                for slice in s.slices() {
                    for i in 0..grid.len() {
                        if slice.magnitude(i) != 0.0 {
                            let x = grid.point(i);
                            r = r.max(math::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]));
                        }
                    }
                }
                r
            }
        }
    }

    /// `f(·,t)` sampled on `grid`. Sampled forces must live on `grid`.
    pub fn slice_on(&self, grid: &BoxGrid, t: f64) -> Result<VectorFieldGrid> {
        match self {
            ForceModel::Separable {
                spatial,
                temporal,
                amplitude,
            } => {
                let tau = temporal.value(t);
                let c = amplitude.raw();
                if tau == 0.0 || amplitude.is_zero() {
                    return Ok(VectorFieldGrid::zeros(*grid));
                }
                Ok(VectorFieldGrid::from_fn(*grid, |x| {
                    let v = spatial.value(x) * tau;
                    [c[0] * v, c[1] * v, c[2] * v]
                }))
            }
            ForceModel::Sampled(s) => {
                if s.grid() != grid {
                    return Err(Error::Coverage(
                        "sampled force lives on a different grid".into(),
                    ));
                }
                Ok(s.slice(t))
            }
        }
    }
}

/// `M(t) = ∫₀ᵗ∫ f(y,s) dy ds`.
pub fn force_integral(f: &ForceModel, t: f64) -> Vector {
    let t = t.max(0.0);
    match f {
        ForceModel::Separable {
            spatial,
            temporal,
            amplitude,
        } => amplitude.scale(spatial.integral() * temporal.cumulative(t)),
        ForceModel::Sampled(s) => {
            let dim = s.grid().dim();
            let mut out = [0.0; 3];
            for (c, slot) in out.iter_mut().enumerate().take(dim.n()) {
                let ints: Vec<f64> = s.slices().iter().map(|f| f.integral()[c]).collect();
                *slot = s.time_integral(&ints, t);
            }
            Vector::from_array(dim, out)
        }
    }
}

/// `M1(t)_{hk} = ∫₀ᵗ∫ y_h f_k(y,s) dy ds`.
pub fn first_moment(f: &ForceModel, t: f64) -> KernelTensor {
    let t = t.max(0.0);
    let dim = f.dim();
    let d = dim.n();
    let mut m = KernelTensor::zero(dim);
    match f {
        ForceModel::Separable {
            spatial,
            temporal,
            amplitude,
        } => {
            let y = spatial.first_moment();
            let tau = temporal.cumulative(t);
            for h in 0..d {
                for k in 0..d {
                    m.set(h, k, y[h] * amplitude[k] * tau);
                }
            }
        }
        ForceModel::Sampled(s) => {
            let grid = s.grid();
            let w = grid.cell_volume();
            for h in 0..d {
                for k in 0..d {
                    let vals: Vec<f64> = s
                        .slices()
                        .iter()
                        .map(|f| {
                            let comp = f.component(k);
                            (0..grid.len())
                                .map(|i| grid.point(i)[h] * comp[i])
                                .sum::<f64>()
                                * w
                        })
                        .collect();
                    m.set(h, k, s.time_integral(&vals, t));
                }
            }
        }
    }
    m
}

/// Splits a slice as `f(·,t) = (∫f(y,t)dy) g₁ + φ(·,t)` on `grid`.
pub fn mean_zero_split(
    f: &ForceModel,
    t: f64,
    grid: &BoxGrid,
) -> Result<(Vector, VectorFieldGrid)> {
    let slice = f.slice_on(grid, t)?;
    let dim = grid.dim();
    let weight = match f {
        ForceModel::Separable {
            spatial,
            temporal,
            amplitude,
        } => amplitude.scale(spatial.integral() * temporal.value(t)),
        ForceModel::Sampled(_) => Vector::from_array(dim, slice.integral()),
    };
    let w = weight.raw();
    let gauss = VectorFieldGrid::from_fn(*grid, |x| {
        let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        let g = dim.heat_prefactor(1.0) * math::exp(-r2 / 4.0);
        [w[0] * g, w[1] * g, w[2] * g]
    });
    Ok((weight, slice.axpy(-1.0, &gauss)?))
}

/// Measured constants of the standing force assumptions.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    /// `sup |f| / [(1+|x|)^{−d−2} ∧ (1+t)^{−(d+2)/2}]`.
    pub pointwise_sup: f64,
    /// `‖f‖_{L¹(R^d×R⁺)}` with `|f|` the Euclidean norm of the force vector.
    pub l1_norm: f64,
    /// `sup_t (1+t)^{1/2} ‖|x| f(·,t)‖₁`.
    pub moment_constant: f64,
    pub target: f64,
    pub pass_pointwise: bool,
    pub pass_l1: bool,
    pub pass_moment: bool,
    /// Mass discarded by truncating the Gaussian bumps.
    pub truncation_error: f64,
    pub convention: String,
}

impl AssumptionReport {
    pub fn passed(&self) -> bool {
        self.pass_pointwise && self.pass_l1 && self.pass_moment
    }
}

/// Measures the pointwise, `L¹` and first-moment constants of `f`.
pub fn validate_assumptions(f: &ForceModel, epsilon: f64) -> Result<AssumptionReport> {
    let dim = f.dim();
    let beta_x = dim.as_f64() + 2.0;
    let beta_t = 0.5 * (dim.as_f64() + 2.0);
    let (e1, l1, c3, trunc) = match f {
        ForceModel::Separable {
            spatial,
            temporal,
            amplitude,
        } => {
            if f.is_zero() {
                (0.0, 0.0, 0.0, 0.0)
            } else {
                let c = amplitude.norm();
                let rho_x = spatial.weighted_sup(beta_x);
                let rho_0 = spatial.weighted_sup(0.0);
                let tau_t = temporal.weighted_sup(beta_t);
                let tau_0 = temporal.weighted_sup(0.0);
                // max over the two branches of the minimum in the envelope
                let e1 = c * (rho_x * tau_0).max(rho_0 * tau_t);
                let l1 = c * spatial.abs_integral();
                let c3 = c * spatial.abs_radial_moment() * temporal.weighted_sup(0.5);
                (e1, l1, c3, c * spatial.truncation_error())
            }
        }
        ForceModel::Sampled(s) => {
            if s.boundary_fraction() > 1e-8 {
                return Err(Error::Coverage(alloc::format!(
                    "sampled force reaches the box edge (edge/max = {:.3e})",
                    s.boundary_fraction()
                )));
            }
            let grid = s.grid();
            let w = grid.cell_volume();
            let mut e1: f64 = 0.0;
            let mut c3: f64 = 0.0;
            let mut l1_slices = Vec::with_capacity(s.times().len());
            for (slice, &t) in s.slices().iter().zip(s.times()) {
                let tw = math::powf(1.0 + t, beta_t);
                let mut l1 = 0.0;
                let mut m1 = 0.0;
                for i in 0..grid.len() {
                    let m = slice.magnitude(i);
                    if m == 0.0 {
                        continue;
                    }
                    let x = grid.point(i);
                    let r = math::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
                    e1 = e1.max(m * math::powf(1.0 + r, beta_x).max(tw));
                    l1 += m * w;
                    m1 += r * m * w;
                }
                l1_slices.push(l1);
                c3 = c3.max(math::sqrt(1.0 + t) * m1);
            }
            let l1 = s.time_integral(&l1_slices, *s.times().last().unwrap_or(&0.0));
            (e1, l1, c3, 0.0)
        }
    };
    Ok(AssumptionReport {
        pointwise_sup: e1,
        l1_norm: l1,
        moment_constant: c3,
        target: epsilon,
        pass_pointwise: e1 <= epsilon,
        pass_l1: l1 <= epsilon,
        pass_moment: c3.is_finite(),
        truncation_error: trunc,
        convention: "|f| is the Euclidean norm of the force vector".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_force(width: f64) -> ForceModel {
        ForceModel::separable(
            SpatialProfile::gaussian(Dim::Two, width).unwrap(),
            TemporalProfile::new(TemporalKind::Indicator, 0.0, 1.0).unwrap(),
            Vector::unit(Dim::Two, 0),
        )
        .unwrap()
    }

    #[test]
    fn cumulative_profiles_reach_one() {
        for kind in [
            TemporalKind::Indicator,
            TemporalKind::Ramp,
            TemporalKind::Bump,
        ] {
            let p = TemporalProfile::new(kind, 0.5, 2.0).unwrap();
            assert_eq!(p.cumulative(0.0), 0.0);
            assert!((p.cumulative(2.0) - 1.0).abs() < 1e-15);
            assert!((p.cumulative(7.0) - 1.0).abs() < 1e-15);
            // derivative of the cumulative is the profile
            let t = 1.3;
            let h = 1e-6;
            let fd = (p.cumulative(t + h) - p.cumulative(t - h)) / (2.0 * h);
            assert!((fd - p.value(t)).abs() < 1e-7, "{kind:?}");
        }
    }

    #[test]
    fn unit_bump_integrals() {
        let f = unit_force(1.0);
        let m = force_integral(&f, 1.0);
        assert!((m[0] - PI).abs() < 1e-14);
        assert_eq!(m[1], 0.0);
        assert_eq!(force_integral(&f, 0.0), Vector::zero(Dim::Two));
        let r = validate_assumptions(&f, 10.0).unwrap();
        assert!((r.l1_norm - PI).abs() < 1e-14);
        assert!(r.passed());
    }

    #[test]
    fn linear_profile_first_moment() {
        let spatial = SpatialProfile::new(
            Dim::Two,
            vec![GaussianTerm {
                weight: 1.0,
                center: [0.0; 3],
                width: 1.0,
                linear_axis: Some(0),
            }],
        )
        .unwrap();
        let f = ForceModel::separable(
            spatial,
            TemporalProfile::new(TemporalKind::Indicator, 0.0, 1.0).unwrap(),
            Vector::unit(Dim::Two, 1),
        )
        .unwrap();
        let m1 = first_moment(&f, 1.0);
        assert!((m1.get(0, 1) - PI / 2.0).abs() < 1e-14);
        assert_eq!(m1.get(1, 0), 0.0);
        assert_eq!(m1.get(0, 0), 0.0);
        assert_eq!(m1.get(1, 1), 0.0);
        assert_eq!(force_integral(&f, 1.0), Vector::zero(Dim::Two));
    }

    #[test]
    fn dipole_has_zero_mean_and_axial_moment() {
        let f = ForceModel::separable(
            SpatialProfile::dipole(Dim::Two, 1.0, 1.0, 0).unwrap(),
            TemporalProfile::new(TemporalKind::Ramp, 0.0, 1.0).unwrap(),
            Vector::unit(Dim::Two, 0),
        )
        .unwrap();
        assert!(force_integral(&f, 2.0).norm() < 1e-15);
        let m1 = first_moment(&f, 2.0);
        assert!((m1.get(0, 0) - 2.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn truncation_is_negligible() {
        let f = SpatialProfile::gaussian(Dim::Two, 1.0).unwrap();
        assert!(f.truncation_error() < 1e-26);
        assert_eq!(f.value(&[8.01, 0.0, 0.0]), 0.0);
    }
}
