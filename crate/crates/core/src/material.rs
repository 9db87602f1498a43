//! Small-strain von-Mises material with nonlinear isotropic hardening.

use crate::tensor::{SymTensor2, SymTensor4};
use serde::{Deserialize, Serialize};

/// sqrt(2/3), the factor relating the deviatoric flow rate to the
/// accumulated plastic strain rate.
pub const SQRT_2_3: f64 = 0.816496580927726;

/// Material parameters: linear isotropic elasticity plus von-Mises plasticity
/// with combined linear/saturation (Voce) isotropic hardening.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Material {
    /// Young's modulus.
    pub youngs: f64,
    /// Poisson's ratio.
    pub poisson: f64,
    /// Initial yield stress.
    pub sigma_y: f64,
    /// Saturation stress increment (sigma_inf - sigma_y).
    pub sigma_sat: f64,
    /// Linear hardening modulus.
    pub hardening_h: f64,
    /// Saturation exponent.
    pub delta: f64,
}

impl Material {
    pub fn shear_modulus(&self) -> f64 {
        self.youngs / (2.0 * (1.0 + self.poisson))
    }

    pub fn bulk_modulus(&self) -> f64 {
        self.youngs / (3.0 * (1.0 - 2.0 * self.poisson))
    }

    /// Isotropic hardening stress K'(alpha) = H alpha + sigma_sat (1 - e^(-delta alpha)).
    pub fn hardening(&self, alpha: f64) -> f64 {
        self.hardening_h * alpha + self.sigma_sat * (1.0 - (-self.delta * alpha).exp())
    }

    /// Hardening modulus K''(alpha) = H + sigma_sat delta e^(-delta alpha).
    pub fn hardening_slope(&self, alpha: f64) -> f64 {
        self.hardening_h + self.sigma_sat * self.delta * (-self.delta * alpha).exp()
    }

    /// Current radius of the yield surface in deviatoric stress space,
    /// sqrt(2/3) (sigma_y + K'(alpha)).
    pub fn yield_radius(&self, alpha: f64) -> f64 {
        SQRT_2_3 * (self.sigma_y + self.hardening(alpha))
    }

    /// Yield function f = 2 mu ||dev(E) - Ep|| - sqrt(2/3)(sigma_y + K'(alpha)).
    pub fn yield_function(&self, strain: &SymTensor2, ep: &SymTensor2, alpha: f64) -> f64 {
        let x = strain.deviator() - *ep;
        2.0 * self.shear_modulus() * x.norm() - self.yield_radius(alpha)
    }

    /// Second Piola-Kirchhoff stress S = kappa tr(E) 1 + 2 mu (dev(E) - Ep).
    pub fn stress(&self, strain: &SymTensor2, ep: &SymTensor2) -> SymTensor2 {
        let vol = SymTensor2::identity().scale(self.bulk_modulus() * strain.trace());
        vol + (strain.deviator() - *ep).scale(2.0 * self.shear_modulus())
    }

    /// Elasticity tensor C = kappa 1 (x) 1 + 2 mu P.
    pub fn elasticity(&self) -> SymTensor4 {
        let one = SymTensor2::identity();
        SymTensor4::dyad(&one, &one).scale(self.bulk_modulus())
            + SymTensor4::dev_projector().scale(2.0 * self.shear_modulus())
    }
}

/// Internal variables at one material point.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct PlasticState {
    /// Plastic strain tensor (deviatoric).
    pub ep: SymTensor2,
    /// Accumulated plastic strain.
    pub alpha: f64,
}
