//! Pointwise material functions: degraded elastic energy with a volumetric
//! tension/compression split, J2 viscoplastic hardening and rate terms,
//! damage hardening, and the derivatives needed by the adjoint.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Sym3;

/// Material constants of the fully solid (reference) material.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialParams {
    /// Young's modulus.
    pub e: f64,
    pub nu: f64,
    pub rho: f64,
    /// Initial yield stress.
    pub sigma_y: f64,
    /// Reference plastic strain.
    pub eps_p0: f64,
    /// Hardening power.
    pub n: f64,
    /// Reference plastic strain rate.
    pub eps_dot_p0: f64,
    /// Rate-sensitivity power.
    pub m: f64,
    /// Toughness.
    pub gc: f64,
    /// Damage length scale.
    pub ell: f64,
    /// Residual stiffness fraction when fully damaged.
    pub d1: f64,
    /// Damage hardening parameter.
    pub w1: f64,
    /// Phase-field normalization; computed from `w1` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_w: Option<f64>,
}

impl MaterialParams {
    /// Solid-void blast material.
    pub fn blast_solid() -> Self {
        MaterialParams {
            e: 0.5,
            nu: 0.3,
            rho: 0.05,
            sigma_y: 0.005,
            eps_p0: 0.1,
            n: 10.0,
            eps_dot_p0: 1.0,
            m: 6.0,
            gc: 1.5e-4,
            ell: 0.02,
            d1: 0.01,
            w1: 0.95,
            c_w: None,
        }
    }

    pub fn bulk(&self) -> f64 {
        self.e / (3.0 * (1.0 - 2.0 * self.nu))
    }

    pub fn shear(&self) -> f64 {
        self.e / (2.0 * (1.0 + self.nu))
    }

    /// `(E, nu)` from bulk and shear moduli.
    pub fn from_moduli(k: f64, mu: f64) -> (f64, f64) {
        (9.0 * k * mu / (3.0 * k + mu), (3.0 * k - 2.0 * mu) / (2.0 * (3.0 * k + mu)))
    }

    pub fn elastic(&self) -> Elastic {
        Elastic { k: self.bulk(), mu: self.shear() }
    }

    /// Plane-strain longitudinal wave speed `sqrt((K + 4mu/3)/rho)`.
    pub fn wave_speed(&self) -> f64 {
        ((self.bulk() + 4.0 * self.shear() / 3.0) / self.rho).sqrt()
    }

    pub fn cw(&self) -> f64 {
        self.c_w.unwrap_or_else(|| cw_default(self.w1))
    }

    /// Local damage coefficient `Gc / (4 c_w ell)`.
    pub fn damage_coef(&self) -> f64 {
        self.gc / (4.0 * self.cw() * self.ell)
    }

    /// Gradient damage coefficient `Gc ell / (2 c_w)`.
    pub fn gradient_coef(&self) -> f64 {
        self.gc * self.ell / (2.0 * self.cw())
    }

    pub fn validate(&self, prefix: &str) -> Vec<String> {
        let mut errs = Vec::new();
        let positive = [
            ("e", self.e),
            ("rho", self.rho),
            ("sigma_y", self.sigma_y),
            ("eps_p0", self.eps_p0),
            ("n", self.n),
            ("eps_dot_p0", self.eps_dot_p0),
            ("m", self.m),
            ("gc", self.gc),
            ("ell", self.ell),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                errs.push(format!("{prefix}.{name} must be positive and finite (got {v})"));
            }
        }
        if !(self.nu > -1.0 && self.nu < 0.5) {
            errs.push(format!("{prefix}.nu must lie in (-1, 0.5) (got {})", self.nu));
        }
        if !(self.d1 > 0.0 && self.d1 < 1.0) {
            errs.push(format!("{prefix}.d1 must lie in (0, 1) (got {})", self.d1));
        }
        if !(0.0..=1.0).contains(&self.w1) {
            errs.push(format!("{prefix}.w1 must lie in [0, 1] (got {})", self.w1));
        }
        if let Some(c) = self.c_w {
            if !(c > 0.0 && c.is_finite()) {
                errs.push(format!("{prefix}.c_w must be positive (got {c})"));
            }
        }
        errs
    }

    /// Hardening stress `sigma_0(q) = dW^p/dq` and its derivative.
    #[inline]
    pub fn sigma0(&self, q: f64) -> (f64, f64) {
        let x = q / self.eps_p0;
        let p = x.powf(1.0 / self.n);
        let dp = if q > 0.0 { p / (self.n * q) } else { f64::INFINITY };
        (self.sigma_y * (1.0 + p), self.sigma_y * dp)
    }

    /// Plastic stored energy `W^p(q)`.
    #[inline]
    pub fn wp(&self, q: f64) -> f64 {
        let x = q / self.eps_p0;
        self.sigma_y * (q + self.n * self.eps_p0 / (self.n + 1.0) * x.powf((self.n + 1.0) / self.n))
    }

    /// Rate potential `g*(qdot)` for `qdot >= 0`.
    #[inline]
    pub fn gbar(&self, qd: f64) -> f64 {
        let x = qd / self.eps_dot_p0;
        self.m * self.sigma_y * self.eps_dot_p0 / (self.m + 1.0) * x.powf((self.m + 1.0) / self.m)
    }

    /// `dg*/dqdot`.
    #[inline]
    pub fn gbar_prime(&self, qd: f64) -> f64 {
        self.sigma_y * (qd / self.eps_dot_p0).powf(1.0 / self.m)
    }

    /// `d2g*/dqdot2`; infinite at `qdot = 0` when `m > 1`.
    #[inline]
    pub fn gbar_second(&self, qd: f64) -> f64 {
        let x = qd / self.eps_dot_p0;
        if qd <= 0.0 {
            return if self.m > 1.0 { f64::INFINITY } else { self.sigma_y / self.eps_dot_p0 };
        }
        self.sigma_y / (self.m * self.eps_dot_p0) * x.powf(1.0 / self.m - 1.0)
    }
}

/// `d(a)`, `d'(a)`, `d''(a)`. Rejects `a` outside `[0, 1]`.
pub fn degradation(a: f64, d1: f64) -> Result<[f64; 3]> {
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::invalid(format!("damage {a} outside [0, 1]")));
    }
    Ok(degr(a, d1))
}

#[inline]
pub(crate) fn degr(a: f64, d1: f64) -> [f64; 3] {
    [(1.0 - a) * (1.0 - a) + d1 * a * a, -2.0 * (1.0 - a) + 2.0 * d1 * a, 2.0 + 2.0 * d1]
}

/// `w^a(a)`, `w^a'(a)`, `w^a''(a)`. Rejects `a` outside `[0, 1]`.
pub fn damage_hardening(a: f64, w1: f64) -> Result<[f64; 3]> {
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::invalid(format!("damage {a} outside [0, 1]")));
    }
    Ok(wa(a, w1))
}

#[inline]
pub(crate) fn wa(a: f64, w1: f64) -> [f64; 3] {
    [w1 * a + (1.0 - w1) * a * a, w1 + 2.0 * (1.0 - w1) * a, 2.0 * (1.0 - w1)]
}

/// `c_w = int_0^1 sqrt(w^a(a)) da` by adaptive Simpson quadrature.
pub fn cw_default(w1: f64) -> f64 {
    let f = |a: f64| (w1 * a + (1.0 - w1) * a * a).max(0.0).sqrt();
    adaptive_simpson(&f, 0.0, 1.0, 1e-13, 60)
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, depth)
}

/// Isotropic elastic moduli of an undegraded material.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Elastic {
    pub k: f64,
    pub mu: f64,
}

impl Elastic {
    /// Degradable part `K/2 tr+^2 + mu e:e` of the energy.
    #[inline]
    pub fn psi_plus(&self, ee: &Sym3) -> f64 {
        let tr = ee.trace();
        let tp = if tr > 0.0 { tr } else { 0.0 };
        let e = ee.dev();
        0.5 * self.k * tp * tp + self.mu * e.dot(&e)
    }

    /// Undegradable part `K/2 tr-^2`.
    #[inline]
    pub fn psi_minus(&self, ee: &Sym3) -> f64 {
        let tr = ee.trace();
        let tm = if tr <= 0.0 { tr } else { 0.0 };
        0.5 * self.k * tm * tm
    }

    /// `W = psi_minus + d psi_plus`.
    #[inline]
    pub fn energy(&self, ee: &Sym3, d: f64) -> f64 {
        self.psi_minus(ee) + d * self.psi_plus(ee)
    }

    /// Derivative of `psi_plus`: `K tr+ I + 2 mu e`.
    #[inline]
    pub fn tension_stress(&self, ee: &Sym3) -> Sym3 {
        let tr = ee.trace();
        let tp = if tr > 0.0 { tr } else { 0.0 };
        Sym3::identity().scale(self.k * tp) + ee.dev().scale(2.0 * self.mu)
    }

    /// `dW/d eps = K tr- I + d (K tr+ I + 2 mu e)`.
    #[inline]
    pub fn stress(&self, ee: &Sym3, d: f64) -> Sym3 {
        let tr = ee.trace();
        let (tp, tm) = if tr > 0.0 { (tr, 0.0) } else { (0.0, tr) };
        Sym3::identity().scale(self.k * (tm + d * tp)) + ee.dev().scale(2.0 * self.mu * d)
    }

    /// Tangent `d2W/d eps2` applied to `delta`. At `tr = 0` the state counts
    /// as compressive.
    #[inline]
    pub fn tangent_apply(&self, ee: &Sym3, d: f64, delta: &Sym3) -> Sym3 {
        let kv = if ee.trace() > 0.0 { d * self.k } else { self.k };
        Sym3::identity().scale(kv * delta.trace()) + delta.dev().scale(2.0 * self.mu * d)
    }
}

/// Elastic energy density at strain `eps`, plastic strain `eps_p` and damage `a`.
pub fn elastic_energy(eps: &Sym3, eps_p: &Sym3, a: f64, p: &MaterialParams) -> Result<f64> {
    let d = degradation(a, p.d1)?[0];
    Ok(p.elastic().energy(&(*eps - *eps_p), d))
}

/// Stress and the mixed second derivatives of the elastic energy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StressResponse {
    /// `dW/d eps`.
    pub stress: Sym3,
    /// `d2W/(da d eps)`; `d2W/(da d eps_p)` is its negative.
    pub d2_a_eps: Sym3,
    /// `d2W/da2`.
    pub d2_aa: f64,
}

pub fn stress(eps: &Sym3, eps_p: &Sym3, a: f64, p: &MaterialParams) -> Result<StressResponse> {
    let dd = degradation(a, p.d1)?;
    let el = p.elastic();
    let ee = *eps - *eps_p;
    Ok(StressResponse {
        stress: el.stress(&ee, dd[0]),
        d2_a_eps: el.tension_stress(&ee).scale(dd[1]),
        d2_aa: dd[2] * el.psi_plus(&ee),
    })
}

/// `d2W/d eps2` applied to `delta`; `d2W/(d eps d eps_p)` is its negative.
pub fn stress_tangent(eps: &Sym3, eps_p: &Sym3, a: f64, p: &MaterialParams, delta: &Sym3) -> Result<Sym3> {
    let d = degradation(a, p.d1)?[0];
    Ok(p.elastic().tangent_apply(&(*eps - *eps_p), d, delta))
}

/// Undegraded Mises stress and flow direction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mises {
    pub sigma_m: f64,
    /// `3/2 s/sigma_m`, so that `M:M = 3/2`. Zero when `sigma_m = 0`.
    pub m: Sym3,
    /// Set when the deviatoric stress vanishes and `M` is undefined.
    pub degenerate: bool,
}

pub fn mises_normalized(eps: &Sym3, eps_p: &Sym3, be: f64, mu: f64) -> Mises {
    let s = (*eps - *eps_p).dev().scale(2.0 * mu * be);
    let sigma_m = (1.5f64).sqrt() * s.norm();
    if sigma_m > 0.0 {
        Mises { sigma_m, m: s.scale(1.5 / sigma_m), degenerate: false }
    } else {
        Mises { sigma_m: 0.0, m: Sym3::ZERO, degenerate: true }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn degradation_values() {
        assert_eq!(degradation(0.0, 0.01).unwrap()[0], 1.0);
        assert!(close(degradation(1.0, 0.01).unwrap()[0], 0.01, 1e-15));
        assert!(close(degradation(0.5, 0.01).unwrap()[0], 0.2525, 1e-15));
        assert!(degradation(1.2, 0.01).is_err());
        assert!(degradation(-0.1, 0.01).is_err());
    }

    #[test]
    fn hardening_values() {
        assert_eq!(damage_hardening(0.0, 0.95).unwrap()[0], 0.0);
        assert!(close(damage_hardening(1.0, 0.3).unwrap()[0], 1.0, 1e-15));
        assert!(close(damage_hardening(0.5, 0.95).unwrap()[0], 0.4875, 1e-15));
    }

    #[test]
    fn cw_limits() {
        assert!((cw_default(1.0) - 2.0 / 3.0).abs() < 1e-10);
        assert!((cw_default(0.0) - 0.5).abs() < 1e-10);
    }

    #[test]
    fn moduli_round_trip() {
        let p = MaterialParams::blast_solid();
        let (e, nu) = MaterialParams::from_moduli(p.bulk(), p.shear());
        assert!(close(e, p.e, 1e-12) && close(nu, p.nu, 1e-12));
    }

    #[test]
    fn yield_values() {
        let p = MaterialParams::blast_solid();
        assert!(close(p.sigma0(0.0).0, p.sigma_y, 1e-15));
        assert!(close(p.sigma0(p.eps_p0).0, 2.0 * p.sigma_y, 1e-14));
        assert!(close(p.gbar_prime(p.eps_dot_p0), p.sigma_y, 1e-15));
        assert_eq!(p.gbar_prime(0.0), 0.0);
        assert!(p.gbar_second(0.0).is_infinite());
    }

    #[test]
    fn mises_simple_shear() {
        let mu = 0.7;
        let gamma = 0.01;
        let eps = Sym3::new(0.0, 0.0, 0.0, gamma / 2.0);
        let r = mises_normalized(&eps, &Sym3::ZERO, 1.0, mu);
        assert!(close(r.sigma_m, 3f64.sqrt() * mu * gamma, 1e-14));
        assert!(close(r.m.dot(&r.m), 1.5, 1e-14));
        let z = mises_normalized(&Sym3::identity().scale(0.25), &Sym3::ZERO, 1.0, mu);
        assert!(z.degenerate && z.sigma_m == 0.0);
    }

    #[test]
    fn compression_ignores_damage() {
        let p = MaterialParams::blast_solid();
        let eps = Sym3::new(-1e-3, -1e-3, 0.0, 0.0);
        let w0 = elastic_energy(&eps, &Sym3::ZERO, 0.0, &p).unwrap();
        let w1 = elastic_energy(&eps, &Sym3::ZERO, 1.0, &p).unwrap();
        // plane strain hydrostatic compression still has a deviatoric part
        let e = eps.dev();
        let expect = w0 - (1.0 - p.d1) * p.shear() * e.dot(&e);
        assert!(close(w1, expect, 1e-12));
    }
}
