//! The far-field profile `e^{tΔ}a(x) + 𝔎(x)M(t)` and its next-order term.

use crate::error::Result;
use crate::forcing::{first_moment, force_integral, ForceModel};
use crate::initial::InitialData;
use crate::kernel;
use crate::math;
use crate::tensor::Vector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePrediction {
    pub x: Vector,
    pub t: f64,
    /// `e^{tΔ}a(x)`.
    pub heat: Vector,
    /// `𝔎(x) M(t)`.
    pub leading: Vector,
    /// `Σ_{h,k} ∂_h𝔎_{jk}(x) M1_{hk}(t)`.
    pub next_order: Vector,
    /// Measured `C` of the remainder envelope `C|x|^{−d−1}√t`, once known.
    pub envelope_constant: Option<f64>,
}

impl ProfilePrediction {
    /// `e^{tΔ}a + 𝔎M`.
    pub fn total(&self) -> Vector {
        self.heat + self.leading
    }

    /// The remainder envelope at this point, if the constant is known.
    pub fn envelope(&self) -> Option<f64> {
        let r = self.x.norm();
        let d = self.x.dim().n() as i32;
        self.envelope_constant
            .map(|c| c * math::powi(r, -d - 1) * math::sqrt(self.t))
    }
}

pub fn profile_predict(
    a: &InitialData,
    f: &ForceModel,
    x: &Vector,
    t: f64,
) -> Result<ProfilePrediction> {
    let m = force_integral(f, t);
    let leading = kernel::profile_field(x, &m)?;
    let next_order = kernel::next_order_profile(x, &first_moment(f, t))?;
    let heat = if t > 0.0 {
        a.heat_at(&x.raw(), t)?
    } else {
        Vector::zero(x.dim())
    };
    Ok(ProfilePrediction {
        x: *x,
        t,
        heat,
        leading,
        next_order,
        envelope_constant: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dim::Dim;

    #[test]
    fn zero_inputs_give_zero_profile() {
        let x = Vector::from_slice(Dim::Two, &[3.0, 1.0]).unwrap();
        let p = profile_predict(
            &InitialData::Zero(Dim::Two),
            &ForceModel::zero(Dim::Two),
            &x,
            1.0,
        )
        .unwrap();
        assert!(p.total().is_zero());
        assert!(p.next_order.is_zero());
        let origin = Vector::zero(Dim::Two);
        assert!(profile_predict(
            &InitialData::Zero(Dim::Two),
            &ForceModel::zero(Dim::Two),
            &origin,
            1.0
        )
        .is_err());
    }
}
