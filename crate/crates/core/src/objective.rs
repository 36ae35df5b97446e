//! Composite objective: a time-space norm of the displacement plus weighted
//! plastic and damage dissipation at the final time, and the partial
//! derivatives the adjoint consumes.

use serde::{Deserialize, Serialize};

use crate::constitutive::{degr, wa, MaterialParams};
use crate::error::{Error, Result};
use crate::forward::GaussPointState;
use crate::interpolation::ElemFactors;
use crate::mesh::Mesh2D;
use crate::sparse::Csr;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObjectiveParams {
    /// Power of the time norm.
    pub s: f64,
    /// Weight on plastic dissipation.
    pub c_p: f64,
    /// Weight on damage dissipation.
    pub c_a: f64,
}

impl Default for ObjectiveParams {
    fn default() -> Self {
        ObjectiveParams { s: 4.0, c_p: 5.0, c_a: 50.0 }
    }
}

impl ObjectiveParams {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if !(self.s >= 2.0 && self.s.is_finite()) {
            errs.push(format!("objective.s must be >= 2 (got {})", self.s));
        }
        if !(self.c_p >= 0.0 && self.c_a >= 0.0) {
            errs.push(format!(
                "objective weights must be >= 0 (got c_p = {}, c_a = {})",
                self.c_p, self.c_a
            ));
        }
        errs
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ObjectiveValue {
    pub total: f64,
    pub disp: f64,
    pub dp: f64,
    pub da: f64,
}

/// Gram matrix of the H1 inner product `int u.v + grad u : grad v` over the
/// design domain, on dofs `0..2*n_design_nodes`.
pub fn h1_gram(mesh: &Mesh2D) -> Result<Csr> {
    let n = 2 * mesh.n_design_nodes;
    let mut t = Vec::with_capacity(32 * mesh.n_design_elems);
    for e in 0..mesh.n_design_elems {
        let k = mesh.kernel(e);
        let el = &mesh.elements[e];
        for a in 0..4 {
            for b in 0..4 {
                let v: f64 = (0..4)
                    .map(|g| {
                        k.w[g]
                            * (k.n[g][a] * k.n[g][b]
                                + k.dndx[g][a] * k.dndx[g][b]
                                + k.dndy[g][a] * k.dndy[g][b])
                    })
                    .sum();
                for c in 0..2 {
                    t.push((2 * el[a] + c, 2 * el[b] + c, v));
                }
            }
        }
    }
    Csr::from_triplets(n, &t)
}

/// `|u|_H1^2` over the design domain; `u` may carry extra dofs beyond it.
pub fn h1_norm_sq(h1: &Csr, u: &[f64]) -> f64 {
    let n = h1.n;
    let mut y = vec![0.0; n];
    h1.matvec(&u[..n], &mut y);
    y.iter().zip(&u[..n]).map(|(a, b)| a * b).sum::<f64>().max(0.0)
}

/// Normalization `sigma_y0 L / T^(1/s)`.
pub fn disp_scale(sigma_y: f64, length: f64, final_time: f64, s: f64) -> f64 {
    sigma_y * length / final_time.powf(1.0 / s)
}

/// `O_disp` from the accumulated sum `S = sum dt |u|^s`.
pub fn disp_term(scale: f64, power_sum: f64, s: f64) -> f64 {
    if power_sum > 0.0 {
        scale * power_sum.powf(1.0 / s)
    } else {
        0.0
    }
}

/// `dO_disp/du` for one recorded displacement: the H1 Riesz image of `u`
/// scaled by `C S^(1/s-1) dt |u|^(s-2)`. Zero when `S` or `u` vanishes.
pub fn disp_source(h1: &Csr, u: &[f64], scale: f64, power_sum: f64, s: f64, dt: f64, out: &mut [f64]) {
    if !(power_sum > 0.0) {
        return;
    }
    let n = h1.n;
    let mut au = vec![0.0; n];
    h1.matvec(&u[..n], &mut au);
    let nsq: f64 = au.iter().zip(&u[..n]).map(|(a, b)| a * b).sum::<f64>().max(0.0);
    if nsq == 0.0 {
        return;
    }
    let c = scale * power_sum.powf(1.0 / s - 1.0) * dt * nsq.powf(0.5 * (s - 2.0));
    for (o, a) in out[..n].iter_mut().zip(&au) {
        *o += c * a;
    }
}

/// Final-time plastic and damage dissipation measures `(D_p, D_a)`.
pub fn dissipation(mesh: &Mesh2D, mat: &MaterialParams, f: &[ElemFactors], gp: &[GaussPointState]) -> Result<(f64, f64)> {
    check_sizes(mesh, f, gp)?;
    let c_a0 = mat.damage_coef();
    let (mut dp, mut da) = (0.0, 0.0);
    for e in 0..mesh.n_design_elems {
        let k = mesh.kernel(e);
        for g in 0..4 {
            let s = &gp[4 * e + g];
            let d = degr(s.alpha, mat.d1)[0];
            dp += k.w[g] * d * f[e].pp.v * (mat.wp(s.q) + s.g_accum);
            da += k.w[g] * f[e].pa.v * c_a0 * wa(s.alpha, mat.w1)[0];
        }
    }
    Ok((dp, da))
}

fn check_sizes(mesh: &Mesh2D, f: &[ElemFactors], gp: &[GaussPointState]) -> Result<()> {
    if f.len() < mesh.n_design_elems || gp.len() != 4 * mesh.n_design_elems {
        return Err(Error::invalid("objective inputs do not match the mesh"));
    }
    Ok(())
}

/// Partial derivatives of the weighted final-time dissipation.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TerminalSources {
    pub alpha: Vec<f64>,
    pub q: Vec<f64>,
    pub g_accum: Vec<f64>,
    /// Per design element.
    pub eta: Vec<f64>,
}

pub fn terminal_sources(
    mesh: &Mesh2D,
    mat: &MaterialParams,
    obj: &ObjectiveParams,
    f: &[ElemFactors],
    gp: &[GaussPointState],
) -> Result<TerminalSources> {
    check_sizes(mesh, f, gp)?;
    let ng = gp.len();
    let c_a0 = mat.damage_coef();
    let mut out = TerminalSources {
        alpha: vec![0.0; ng],
        q: vec![0.0; ng],
        g_accum: vec![0.0; ng],
        eta: vec![0.0; mesh.n_design_elems],
    };
    for e in 0..mesh.n_design_elems {
        let k = mesh.kernel(e);
        for g in 0..4 {
            let i = 4 * e + g;
            let s = &gp[i];
            let w = k.w[g];
            let dd = degr(s.alpha, mat.d1);
            let ww = wa(s.alpha, mat.w1);
            let stored = mat.wp(s.q) + s.g_accum;
            let pp = f[e].pp;
            let pa = f[e].pa;
            out.alpha[i] = obj.c_p * w * dd[1] * pp.v * stored + obj.c_a * w * pa.v * c_a0 * ww[1];
            out.q[i] = obj.c_p * w * dd[0] * pp.v * mat.sigma0(s.q).0;
            out.g_accum[i] = obj.c_p * w * dd[0] * pp.v;
            out.eta[e] += obj.c_p * w * dd[0] * pp.d * stored + obj.c_a * w * pa.d * c_a0 * ww[0];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_structured_mesh;

    #[test]
    fn h1_norm_of_rigid_translation_is_area() {
        let m = build_structured_mesh(4, 2, 2.0, 1.0).unwrap();
        let a = h1_gram(&m).unwrap();
        let u: Vec<f64> = (0..m.n_dofs()).map(|i| if i % 2 == 0 { 1.0 } else { 0.0 }).collect();
        assert!((h1_norm_sq(&a, &u) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn zero_sum_gives_zero_source() {
        let m = build_structured_mesh(2, 2, 1.0, 1.0).unwrap();
        let a = h1_gram(&m).unwrap();
        let mut out = vec![0.0; m.n_dofs()];
        disp_source(&a, &vec![1.0; m.n_dofs()], 1.0, 0.0, 4.0, 0.1, &mut out);
        assert!(out.iter().all(|&x| x == 0.0));
        assert_eq!(disp_term(1.0, 0.0, 4.0), 0.0);
    }
}
