//! Asymmetric elastic layer between the domain and the flyer: stiff in
//! volumetric compression, nearly free in shear and volumetric tension.

use serde::{Deserialize, Serialize};

use crate::constitutive::Elastic;
use crate::tensor::Sym3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContactParams {
    /// Compressive bulk modulus `K_c`.
    pub bulk: f64,
    /// Shear modulus `mu_c` before softening.
    pub shear: f64,
    /// Softening fraction applied to shear and tension.
    pub soft: f64,
    pub rho: f64,
}

impl ContactParams {
    fn elastic(&self) -> Elastic {
        Elastic { k: self.bulk, mu: self.shear }
    }

    /// `K_c tr- I + soft (K_c tr+ I + 2 mu_c dev eps)`.
    #[inline]
    pub fn stress(&self, eps: &Sym3) -> Sym3 {
        self.elastic().stress(eps, self.soft)
    }

    #[inline]
    pub fn tangent_apply(&self, eps: &Sym3, delta: &Sym3) -> Sym3 {
        self.elastic().tangent_apply(eps, self.soft, delta)
    }

    #[inline]
    pub fn energy(&self, eps: &Sym3) -> f64 {
        self.elastic().energy(eps, self.soft)
    }

    /// Compressive wave speed used for the time-step limit.
    pub fn wave_speed(&self) -> f64 {
        ((self.bulk + 4.0 / 3.0 * self.soft * self.shear) / self.rho).sqrt()
    }
}

/// Stress of a contact-layer element at strain `eps`.
pub fn contact_layer_force(eps: &Sym3, p: &ContactParams) -> Sym3 {
    p.stress(eps)
}
