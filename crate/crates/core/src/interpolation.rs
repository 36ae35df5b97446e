//! Maps the element design variable to material scale factors.
//!
//! Every scheme is expressed as dimensionless factors relative to a reference
//! material: density `rho`, elastic energy `be`, plastic potentials `bp`,
//! toughness `ba`, and the objective-only factors `pp` and `pa` used in the
//! dissipation measures. Each factor carries its derivative in `eta`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A factor value and its derivative with respect to `eta`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Fd {
    pub v: f64,
    pub d: f64,
}

impl Fd {
    pub const fn new(v: f64, d: f64) -> Self {
        Fd { v, d }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ElemFactors {
    pub rho: Fd,
    pub be: Fd,
    pub bp: Fd,
    pub ba: Fd,
    pub pp: Fd,
    pub pa: Fd,
}

impl ElemFactors {
    /// All factors one, all derivatives zero.
    pub fn solid() -> Self {
        let one = Fd::new(1.0, 0.0);
        ElemFactors { rho: one, be: one, bp: one, ba: one, pp: one, pa: one }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolidVoidScheme {
    /// Slope `dB_e/d eta` at `eta = 0`.
    pub k1: f64,
    /// Slope `dB_e/d eta` at `eta = 1`.
    pub k2: f64,
    pub eta_min: f64,
    /// Plastic shift; defaults to `k1 eta_min`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_p: Option<f64>,
    /// Damage shift; defaults to `9 k1 eta_min`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_a: Option<f64>,
    /// Power of the concave objective interpolation.
    #[serde(default = "default_p_obj")]
    pub p_obj: f64,
}

fn default_p_obj() -> f64 {
    3.0
}

impl SolidVoidScheme {
    pub fn new(k1: f64, k2: f64, eta_min: f64) -> Self {
        SolidVoidScheme { k1, k2, eta_min, delta_p: None, delta_a: None, p_obj: default_p_obj() }
    }

    pub fn dp(&self) -> f64 {
        self.delta_p.unwrap_or(self.k1 * self.eta_min)
    }

    pub fn da(&self) -> f64 {
        self.delta_a.unwrap_or(9.0 * self.k1 * self.eta_min)
    }

    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if !(self.k1 > 0.0 && self.k1 < 1.0 && self.k2 > 1.0 && self.k2.is_finite()) {
            errs.push(format!(
                "interpolation requires 0 < k1 < 1 < k2 (got k1 = {}, k2 = {})",
                self.k1, self.k2
            ));
        }
        if !(self.eta_min > 0.0 && self.eta_min < 0.5) {
            errs.push(format!("interpolation.eta_min must lie in (0, 0.5) (got {})", self.eta_min));
        }
        if !(self.dp() > 0.0 && self.dp() < self.da() && self.da() < 1.0) {
            errs.push(format!(
                "interpolation shifts must satisfy 0 < delta_p < delta_a < 1 (got {}, {})",
                self.dp(),
                self.da()
            ));
        }
        if !(self.p_obj >= 1.0) {
            errs.push(format!("interpolation.p_obj must be >= 1 (got {})", self.p_obj));
        }
        errs
    }

    pub fn factors(&self, eta: f64) -> Result<ElemFactors> {
        if !(eta >= self.eta_min && eta <= 1.0) {
            return Err(Error::invalid(format!(
                "design value {eta} outside [{}, 1]",
                self.eta_min
            )));
        }
        let (b, db) = bezier_be(eta, self.k1, self.k2)?;
        let (dp, da) = (self.dp(), self.da());
        let (p, dpp) = objective_interp(eta, self.p_obj);
        Ok(ElemFactors {
            rho: Fd::new(eta, 1.0),
            be: Fd::new(b, db),
            bp: Fd::new((b + dp) / (1.0 + dp), db / (1.0 + dp)),
            ba: Fd::new((b + da) / (1.0 + da), db / (1.0 + da)),
            pp: Fd::new(p, dpp),
            pa: Fd::new(p, dpp),
        })
    }
}

/// Bezier stiffness interpolation. Returns `(B_e, dB_e/d eta)`.
pub fn bezier_be(eta: f64, k1: f64, k2: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::invalid(format!("design value {eta} outside [0, 1]")));
    }
    if !(k1 > 0.0 && k1 < 1.0 && k2 > 1.0) {
        return Err(Error::invalid(format!("Bezier slopes need 0 < k1 < 1 < k2 (got {k1}, {k2})")));
    }
    let c = (1.0 - k2) / (k1 - k2);
    let eta_of = |v: f64| c * (3.0 * v - 3.0 * v * v) + v * v * v;
    let deta = |v: f64| c * (3.0 - 6.0 * v) + 3.0 * v * v;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut v = eta;
    for _ in 0..200 {
        let f = eta_of(v) - eta;
        if f == 0.0 {
            break;
        }
        if f < 0.0 {
            lo = v;
        } else {
            hi = v;
        }
        let step = f / deta(v);
        let mut next = v - step;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - v).abs() <= 1e-16 * (1.0 + v.abs()) || hi - lo <= 1e-16 {
            v = next;
            break;
        }
        v = next;
    }
    if (eta_of(v) - eta).abs() > 1e-12 {
        return Err(Error::Internal(format!("Bezier inversion failed at eta = {eta}")));
    }
    let b = k1 * c * (3.0 * v - 3.0 * v * v) + v * v * v;
    let db = (k1 * c * (3.0 - 6.0 * v) + 3.0 * v * v) / deta(v);
    Ok((b, db))
}

/// Concave objective interpolation `P = 1 - (1 - eta)^p` and `dP/d eta`.
pub fn objective_interp(eta: f64, p: f64) -> (f64, f64) {
    let s = 1.0 - eta;
    (1.0 - s.powf(p), p * s.powf(p - 1.0))
}

/// Two-material power laws; index 1 is the tough material (`eta = 0`),
/// index 2 the strong material (`eta = 1`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoMaterialScheme {
    pub e1: f64,
    pub e2: f64,
    pub sy1: f64,
    pub sy2: f64,
    pub gc1: f64,
    pub gc2: f64,
    /// Penalty power.
    pub p: f64,
}

impl TwoMaterialScheme {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if !(self.e1 > 0.0 && self.e1 < self.e2) {
            errs.push(format!("two_material requires 0 < e1 < e2 (got {}, {})", self.e1, self.e2));
        }
        if !(self.sy1 > 0.0 && self.sy1 < self.sy2) {
            errs.push(format!("two_material requires 0 < sy1 < sy2 (got {}, {})", self.sy1, self.sy2));
        }
        if !(self.gc2 > 0.0 && self.gc1 > self.gc2) {
            errs.push(format!("two_material requires gc1 > gc2 > 0 (got {}, {})", self.gc1, self.gc2));
        }
        if !(self.p >= 1.0) {
            errs.push(format!("two_material.p must be >= 1 (got {})", self.p));
        }
        errs
    }

    /// Physical `(E, sigma_y0, G_c)` with their derivatives.
    pub fn maps(&self, eta: f64) -> Result<[Fd; 3]> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::invalid(format!("design value {eta} outside [0, 1]")));
        }
        let p = self.p;
        let up = eta.powf(p);
        let dup = if p == 1.0 { 1.0 } else { p * eta.powf(p - 1.0) };
        let s = 1.0 - eta;
        let dn = s.powf(p);
        let ddn = if p == 1.0 { -1.0 } else { -p * s.powf(p - 1.0) };
        Ok([
            Fd::new(self.e1 + up * (self.e2 - self.e1), dup * (self.e2 - self.e1)),
            Fd::new(self.sy1 + up * (self.sy2 - self.sy1), dup * (self.sy2 - self.sy1)),
            Fd::new(self.gc2 + dn * (self.gc1 - self.gc2), ddn * (self.gc1 - self.gc2)),
        ])
    }

    /// Factors relative to the strong material. The objective uses the
    /// physical interpolation, so `pp = bp` and `pa = ba`. Density is equal
    /// for both phases.
    pub fn factors(&self, eta: f64) -> Result<ElemFactors> {
        let [e, sy, gc] = self.maps(eta)?;
        let be = Fd::new(e.v / self.e2, e.d / self.e2);
        let bp = Fd::new(sy.v / self.sy2, sy.d / self.sy2);
        let ba = Fd::new(gc.v / self.gc2, gc.d / self.gc2);
        Ok(ElemFactors { rho: Fd::new(1.0, 0.0), be, bp, ba, pp: bp, pa: ba })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Interpolation {
    SolidVoid(SolidVoidScheme),
    TwoMaterial(TwoMaterialScheme),
}

impl Interpolation {
    pub fn factors(&self, eta: f64) -> Result<ElemFactors> {
        match self {
            Interpolation::SolidVoid(s) => s.factors(eta),
            Interpolation::TwoMaterial(s) => s.factors(eta),
        }
    }

    pub fn validate(&self) -> Vec<String> {
        match self {
            Interpolation::SolidVoid(s) => s.validate(),
            Interpolation::TwoMaterial(s) => s.validate(),
        }
    }

    pub fn bounds(&self) -> (f64, f64) {
        match self {
            Interpolation::SolidVoid(s) => (s.eta_min, 1.0),
            Interpolation::TwoMaterial(_) => (0.0, 1.0),
        }
    }
}
