//! Damage update by ADMM: a pointwise local problem for the Gauss-point
//! damage `alpha`, a linear global problem for the nodal phase field `a`, and
//! a weak multiplier update enforcing `a = alpha`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::Mesh2D;
use crate::sparse::{Csr, PenaltyOperator};

const NONE: usize = usize::MAX;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdmmSettings {
    pub r0: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub gamma_r: f64,
    pub tau: f64,
    pub tol_abs: f64,
    pub tol_rel: f64,
    pub max_iters: usize,
    /// Adapt the penalty between iterations; when false `r0` is used throughout.
    pub adaptive: bool,
}

impl Default for AdmmSettings {
    fn default() -> Self {
        let r0 = 1e-2;
        AdmmSettings {
            r0,
            r_min: r0 / 4096.0,
            r_max: r0 * 4096.0,
            gamma_r: 2.0,
            tau: 10.0,
            tol_abs: 1e-7,
            tol_rel: 1e-7,
            max_iters: 5000,
            adaptive: true,
        }
    }
}

impl AdmmSettings {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if !(self.r_min > 0.0 && self.r_min <= self.r0 && self.r0 <= self.r_max && self.r_max.is_finite()) {
            errs.push(format!(
                "admm requires 0 < r_min <= r0 <= r_max (got {}, {}, {})",
                self.r_min, self.r0, self.r_max
            ));
        }
        if !(self.gamma_r > 1.0) {
            errs.push(format!("admm.gamma_r must exceed 1 (got {})", self.gamma_r));
        }
        if !(self.tau > 1.0) {
            errs.push(format!("admm.tau must exceed 1 (got {})", self.tau));
        }
        if !(self.tol_abs > 0.0 && self.tol_rel >= 0.0) {
            errs.push("admm tolerances must be positive".to_string());
        }
        if self.max_iters == 0 {
            errs.push("admm.max_iters must be >= 1".to_string());
        }
        errs
    }

    /// Upper bound on distinct penalty values reachable by adaptation.
    pub fn distinct_r_bound(&self) -> usize {
        ((self.r_max / self.r_min).ln() / self.gamma_r.ln()).floor() as usize + 1
    }
}

/// Penalty adaptation from the primal and dual residuals.
pub fn penalty_adapt(r: f64, r_p: f64, r_d: f64, s: &AdmmSettings) -> f64 {
    if r_p > s.tau * r_d {
        (s.gamma_r * r).min(s.r_max)
    } else if r_d > s.tau * r_p {
        (r / s.gamma_r).max(s.r_min)
    } else {
        r
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AdmmStats {
    pub iters: usize,
    pub r_p: f64,
    pub r_d: f64,
    pub tol_p: f64,
    pub tol_d: f64,
    /// Penalty of the final (accepted) iteration.
    pub r: f64,
}

/// The phase-field discretization on the design domain: free (non-Dirichlet)
/// nodal dofs, the gradient operator `K`, the mass `S`, and the cached
/// factorizations of `K + r S`.
#[derive(Clone, Debug)]
pub struct DamageSystem {
    pub op: PenaltyOperator,
    /// Free index to node.
    pub free: Vec<usize>,
    /// Node to free index (`usize::MAX` when constrained), design nodes only.
    pub dof: Vec<usize>,
    /// Per design element coefficient of the gradient term.
    pub grad_coef: Vec<f64>,
}

impl DamageSystem {
    pub fn new(mesh: &Mesh2D, fixed: &[bool], grad_coef: Vec<f64>) -> Result<Self> {
        let nn = mesh.n_design_nodes;
        if fixed.len() != nn || grad_coef.len() != mesh.n_design_elems {
            return Err(Error::Internal("damage system size mismatch".into()));
        }
        let mut dof = vec![NONE; nn];
        let mut free = Vec::new();
        for i in 0..nn {
            if !fixed[i] {
                dof[i] = free.len();
                free.push(i);
            }
        }
        let nf = free.len();
        if nf == 0 {
            return Err(Error::invalid("every damage dof is constrained"));
        }
        let mut kt = Vec::with_capacity(16 * mesh.n_design_elems);
        let mut st = Vec::with_capacity(16 * mesh.n_design_elems);
        for e in 0..mesh.n_design_elems {
            let k = mesh.kernel(e);
            let el = &mesh.elements[e];
            for a in 0..4 {
                let ia = dof[el[a]];
                if ia == NONE {
                    continue;
                }
                for b in 0..4 {
                    let ib = dof[el[b]];
                    if ib == NONE {
                        continue;
                    }
                    let (mut kv, mut sv) = (0.0, 0.0);
                    for g in 0..4 {
                        kv += k.w[g] * (k.dndx[g][a] * k.dndx[g][b] + k.dndy[g][a] * k.dndy[g][b]);
                        sv += k.w[g] * k.n[g][a] * k.n[g][b];
                    }
                    kt.push((ia, ib, grad_coef[e] * kv));
                    st.push((ia, ib, sv));
                }
            }
        }
        let op = PenaltyOperator::new(Csr::from_triplets(nf, &kt)?, Csr::from_triplets(nf, &st)?)?;
        Ok(DamageSystem { op, free, dof, grad_coef })
    }

    pub fn n(&self) -> usize {
        self.free.len()
    }

    /// Weak image `v_i = sum_g w_g N_i(x_g) f_g` on free dofs.
    pub fn weak(&self, mesh: &Mesh2D, fg: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        for e in 0..mesh.n_design_elems {
            let k = mesh.kernel(e);
            for (a, &node) in mesh.elements[e].iter().enumerate() {
                let i = self.dof[node];
                if i == NONE {
                    continue;
                }
                out[i] += (0..4).map(|g| k.w[g] * k.n[g][a] * fg[4 * e + g]).sum::<f64>();
            }
        }
        out
    }

    /// Values of the free-dof field at every design Gauss point.
    pub fn at_gauss(&self, mesh: &Mesh2D, vf: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; 4 * mesh.n_design_elems];
        for e in 0..mesh.n_design_elems {
            let k = mesh.kernel(e);
            let el = &mesh.elements[e];
            let ve = [0, 1, 2, 3].map(|a| {
                let i = self.dof[el[a]];
                if i == NONE { 0.0 } else { vf[i] }
            });
            for g in 0..4 {
                out[4 * e + g] = k.interp(g, &ve);
            }
        }
        out
    }

    /// Free-dof vector scattered to all design nodes (zeros where constrained).
    pub fn to_nodal(&self, vf: &[f64]) -> Vec<f64> {
        self.dof.iter().map(|&i| if i == NONE { 0.0 } else { vf[i] }).collect()
    }

    /// Element values of a free-dof field.
    pub fn element_values(&self, mesh: &Mesh2D, e: usize, vf: &[f64]) -> [f64; 4] {
        let el = &mesh.elements[e];
        [0, 1, 2, 3].map(|a| {
            let i = self.dof[el[a]];
            if i == NONE { 0.0 } else { vf[i] }
        })
    }
}

/// Data of the local damage problem at one Gauss point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LocalDamage {
    /// Energy released by damage: `B_e psi+ + B_p (W^p + int g*)`.
    pub phi: f64,
    /// `B_a G_c / (4 c_w ell)`.
    pub coef: f64,
    pub alpha_n: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activity {
    /// Held at the previous value by irreversibility.
    Lower,
    /// Strictly between the previous value and one.
    Active,
    /// Fully damaged.
    Capped,
}

impl LocalDamage {
    /// Slope of the local residual in `alpha` without the penalty term.
    #[inline]
    pub fn curvature(&self, d1: f64, w1: f64) -> f64 {
        2.0 * (1.0 + d1) * self.phi + 2.0 * self.coef * (1.0 - w1)
    }
}

/// Local problem: with rate-independent damage the residual
/// `d'(alpha) phi + coef w'(alpha) - lambda - r (a - alpha)` is affine in
/// `alpha`, so its root is explicit; irreversibility and the cap clamp it to
/// `[alpha_n, 1]`.
#[inline]
pub fn local_alpha(ld: &LocalDamage, d1: f64, w1: f64, lambda: f64, a: f64, r: f64) -> (f64, Activity) {
    if ld.alpha_n >= 1.0 {
        return (1.0, Activity::Capped);
    }
    let slope = ld.curvature(d1, w1) + r;
    let r0 = -2.0 * ld.phi + ld.coef * w1 - lambda - r * a;
    let x = -r0 / slope;
    if x <= ld.alpha_n {
        (ld.alpha_n, Activity::Lower)
    } else if x >= 1.0 {
        (1.0, Activity::Capped)
    } else {
        (x, Activity::Active)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Runs ADMM until both feasibility tests pass. `a` and `lambda` are warm
/// starts on entry and the converged fields on exit; `r` carries the penalty
/// between steps.
#[allow(clippy::too_many_arguments)]
pub fn admm_damage_update(
    sys: &mut DamageSystem,
    mesh: &Mesh2D,
    local: &[LocalDamage],
    d1: f64,
    w1: f64,
    a: &mut Vec<f64>,
    lambda: &mut Vec<f64>,
    r: &mut f64,
    settings: &AdmmSettings,
    alpha: &mut Vec<f64>,
) -> Result<AdmmStats> {
    let n = sys.n();
    let floor = settings.tol_abs / (n as f64).sqrt();
    let mut sa = sys.op.s.mul(a);
    let mut history = Vec::new();
    for it in 1..=settings.max_iters {
        let ag = sys.at_gauss(mesh, a);
        let lg = sys.at_gauss(mesh, lambda);
        let rr = *r;
        let new_alpha: Vec<f64> = local
            .par_iter()
            .enumerate()
            .map(|(g, ld)| local_alpha(ld, d1, w1, lg[g], ag[g], rr).0)
            .collect();
        *alpha = new_alpha;
        let ahat = sys.weak(mesh, alpha);
        let sl = sys.op.s.mul(lambda);
        let rhs: Vec<f64> = ahat.iter().zip(&sl).map(|(x, y)| rr * x - y).collect();
        let a_new = sys.op.solve(rr, &rhs)?;
        let proj = sys.op.solve_mass(&ahat);
        for i in 0..n {
            lambda[i] += rr * (a_new[i] - proj[i]);
        }
        let sa_new = sys.op.s.mul(&a_new);
        let rp_vec: Vec<f64> = sa_new.iter().zip(&ahat).map(|(x, y)| x - y).collect();
        let rd_vec: Vec<f64> = sa_new.iter().zip(&sa).map(|(x, y)| x - y).collect();
        let r_p = norm(&rp_vec);
        let r_d = rr * norm(&rd_vec);
        let tol_p = floor + settings.tol_rel * norm(&ahat).max(norm(&sa_new));
        let tol_d = floor + settings.tol_rel * norm(&sys.op.s.mul(lambda));
        *a = a_new;
        sa = sa_new;
        if r_p <= tol_p && r_d <= tol_d {
            return Ok(AdmmStats { iters: it, r_p, r_d, tol_p, tol_d, r: rr });
        }
        if history.len() < 8 || it % 100 == 0 {
            history.push(format!("it {it}: r={rr:e} r_p={r_p:e}/{tol_p:e} r_d={r_d:e}/{tol_d:e}"));
        }
        if settings.adaptive {
            *r = penalty_adapt(rr, r_p, r_d, settings);
        }
    }
    Err(Error::Internal(format!(
        "ADMM did not converge in {} iterations; {}",
        settings.max_iters,
        history.join(", ")
    )))
}

/// Transposed damage update at a fixed penalty. On the active set the local
/// unknown `b` solves `(Y' + r) b = src + r z + chi`, the global field solves
/// `(K + r S) z = r W b - S chi`, and `chi` enforces `z = b` weakly. Off the
/// active set `b` is zero. `src` is the cotangent of `alpha` divided by the
/// quadrature weight, `curv` the local curvature `Y'`.
#[allow(clippy::too_many_arguments)]
pub fn adjoint_damage_update(
    sys: &mut DamageSystem,
    mesh: &Mesh2D,
    active: &[bool],
    src: &[f64],
    curv: &[f64],
    r: f64,
    z: &mut Vec<f64>,
    chi: &mut Vec<f64>,
    settings: &AdmmSettings,
    b: &mut Vec<f64>,
) -> Result<AdmmStats> {
    let n = sys.n();
    let ng = active.len();
    b.clear();
    b.resize(ng, 0.0);
    let guess: Vec<f64> = (0..ng)
        .map(|g| if active[g] { src[g] / (curv[g] + r) } else { 0.0 })
        .collect();
    let scale = norm(&sys.weak(mesh, &guess));
    if scale == 0.0 {
        z.iter_mut().for_each(|x| *x = 0.0);
        chi.iter_mut().for_each(|x| *x = 0.0);
        return Ok(AdmmStats { iters: 0, r, ..Default::default() });
    }
    let floor = settings.tol_abs / (n as f64).sqrt() * scale;
    let mut sz = sys.op.s.mul(z);
    let mut history = Vec::new();
    for it in 1..=settings.max_iters {
        let zg = sys.at_gauss(mesh, z);
        let cg = sys.at_gauss(mesh, chi);
        for g in 0..ng {
            if active[g] {
                b[g] = (src[g] + r * zg[g] + cg[g]) / (curv[g] + r);
            }
        }
        let bh = sys.weak(mesh, b);
        let sc = sys.op.s.mul(chi);
        let rhs: Vec<f64> = bh.iter().zip(&sc).map(|(x, y)| r * x - y).collect();
        let z_new = sys.op.solve(r, &rhs)?;
        let proj = sys.op.solve_mass(&bh);
        for i in 0..n {
            chi[i] += r * (z_new[i] - proj[i]);
        }
        let sz_new = sys.op.s.mul(&z_new);
        let rp_vec: Vec<f64> = sz_new.iter().zip(&bh).map(|(x, y)| x - y).collect();
        let rd_vec: Vec<f64> = sz_new.iter().zip(&sz).map(|(x, y)| x - y).collect();
        let r_p = norm(&rp_vec);
        let r_d = r * norm(&rd_vec);
        let tol_p = floor + settings.tol_rel * norm(&bh).max(norm(&sz_new));
        let tol_d = floor + settings.tol_rel * norm(&sys.op.s.mul(chi));
        *z = z_new;
        sz = sz_new;
        if r_p <= tol_p && r_d <= tol_d {
            return Ok(AdmmStats { iters: it, r_p, r_d, tol_p, tol_d, r });
        }
        if history.len() < 8 || it % 100 == 0 {
            history.push(format!("it {it}: r_p={r_p:e}/{tol_p:e} r_d={r_d:e}/{tol_d:e}"));
        }
    }
    Err(Error::Internal(format!(
        "adjoint ADMM did not converge in {} iterations; {}",
        settings.max_iters,
        history.join(", ")
    )))
}
