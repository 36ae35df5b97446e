//! Discrete adjoint of the forward scheme, run backwards over a recorded
//! trajectory. Every forward operation is transposed exactly, so the result
//! is the gradient of the discrete objective.

use rayon::prelude::*;

use crate::constitutive::{degr, wa};
use crate::error::{Error, Result};
use crate::forward::admm::{adjoint_damage_update, Activity, AdmmSettings, AdmmStats, LocalDamage};
use crate::forward::plasticity::return_map;
use crate::forward::{design_strains, kick, local_damage, masked_inverse_mass, ForwardResult};
use crate::mesh::Block;
use crate::objective::{disp_scale, disp_source, terminal_sources};
use crate::problem::Problem;
use crate::tensor::Sym3;

/// Cotangents of the Gauss-point history.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GaussPointBar {
    pub alpha: f64,
    pub q: f64,
    pub eps_p: Sym3,
    pub g_accum: f64,
}

/// The design sensitivity split by origin. Each vector has one entry per
/// design element; their sum is the gradient with respect to the physical
/// design.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SensitivityTerms {
    /// Explicit dependence of the final-time dissipation measures.
    pub objective: Vec<f64>,
    /// Mass density.
    pub inertia: Vec<f64>,
    /// Stiffness in the internal force.
    pub elastic: Vec<f64>,
    /// Elastic driving force of damage.
    pub damage_driving: Vec<f64>,
    /// Toughness in the gradient term of the phase field.
    pub damage_gradient: Vec<f64>,
    /// Toughness in the local damage hardening.
    pub damage_hardening: Vec<f64>,
    /// Plastic potentials, through the return map and the damage driving force.
    pub plastic: Vec<f64>,
}

impl SensitivityTerms {
    fn zeros(n: usize) -> Self {
        let z = vec![0.0; n];
        SensitivityTerms {
            objective: z.clone(),
            inertia: z.clone(),
            elastic: z.clone(),
            damage_driving: z.clone(),
            damage_gradient: z.clone(),
            damage_hardening: z.clone(),
            plastic: z,
        }
    }

    pub fn parts(&self) -> [(&'static str, &Vec<f64>); 7] {
        [
            ("objective", &self.objective),
            ("inertia", &self.inertia),
            ("elastic", &self.elastic),
            ("damage_driving", &self.damage_driving),
            ("damage_gradient", &self.damage_gradient),
            ("damage_hardening", &self.damage_hardening),
            ("plastic", &self.plastic),
        ]
    }

    pub fn total(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.objective.len()];
        for (_, v) in self.parts() {
            for (o, x) in out.iter_mut().zip(v) {
                *o += x;
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct AdjointResult {
    /// `dO/d eta_phys` per design element.
    pub gradient: Vec<f64>,
    pub terms: SensitivityTerms,
    /// Adjoint ADMM statistics per forward step.
    pub admm: Vec<AdmmStats>,
    /// Cotangent of the initial velocity.
    pub v0_bar: Vec<f64>,
}

/// Classifies the damage update of one Gauss point from its recorded values.
pub fn activity(alpha_old: f64, alpha_new: f64) -> Activity {
    if alpha_old >= 1.0 {
        Activity::Capped
    } else if alpha_new == alpha_old {
        Activity::Lower
    } else if alpha_new >= 1.0 {
        Activity::Capped
    } else {
        Activity::Active
    }
}

/// Runs the adjoint over the recorded trajectory of `fwd`, which must come
/// from `run_forward` on the same problem and design with recording on.
pub fn run_adjoint(p: &Problem, fwd: &mut ForwardResult, settings: Option<&AdmmSettings>) -> Result<AdjointResult> {
    let traj = fwd
        .trajectory
        .take()
        .ok_or_else(|| Error::invalid("the forward run was not recorded"))?;
    let out = adjoint_pass(p, fwd, &traj, settings.unwrap_or(&p.admm));
    fwd.trajectory = Some(traj);
    out
}

fn adjoint_pass(
    p: &Problem,
    fwd: &mut ForwardResult,
    traj: &crate::forward::Trajectory,
    settings: &AdmmSettings,
) -> Result<AdjointResult> {
    let mesh = &p.mesh;
    let steps = p.steps;
    if traj.u.len() != steps + 1 || traj.r.len() != steps || traj.gp.len() != steps + 1 {
        return Err(Error::invalid("trajectory does not match the problem step count"));
    }
    let f = fwd.factors.clone();
    let nd = mesh.n_dofs();
    let ne = mesh.n_design_elems;
    let ng = 4 * ne;
    let mat = &p.material;
    let el = mat.elastic();
    let mu = mat.shear();
    let (d1, w1) = (mat.d1, mat.w1);
    let c_a0 = mat.damage_coef();
    let gcoef = mat.gradient_coef();
    let dt = p.dt;
    let s_pow = p.objective.s;
    let scale = disp_scale(mat.sigma_y, mesh.length, p.final_time(), s_pow);
    let inv_m = masked_inverse_mass(p, &fwd.mass);
    let weights: Vec<f64> = (0..ng).map(|i| mesh.kernel(i / 4).w[i % 4]).collect();

    let mut terms = SensitivityTerms::zeros(ne);
    let mut ubar = vec![0.0; nd];
    let mut vbar = vec![0.0; nd];
    let mut gbar = vec![GaussPointBar::default(); ng];
    let nf = fwd.damage.n();
    let mut z = vec![0.0; nf];
    let mut chi = vec![0.0; nf];
    let mut b = vec![0.0; ng];
    let mut admm_stats = vec![AdmmStats::default(); steps];
    let fixed = AdmmSettings { adaptive: false, ..settings.clone() };

    let ts = terminal_sources(mesh, mat, &p.objective, &f, &traj.gp[steps])?;
    for i in 0..ng {
        gbar[i].alpha += ts.alpha[i];
        gbar[i].q += ts.q[i];
        gbar[i].g_accum += ts.g_accum[i];
    }
    terms.objective.copy_from_slice(&ts.eta);

    for n in (0..steps).rev() {
        let u_new = &traj.u[n + 1];
        let gp_old = &traj.gp[n];
        let gp_new = &traj.gp[n + 1];
        let r = traj.r[n];
        disp_source(&p.h1, u_new, scale, fwd.disp_power_sum, s_pow, dt, &mut ubar);

        // damage
        let eps = design_strains(p, u_new);
        let local: Vec<LocalDamage> = local_damage(p, &f, &eps, gp_old, gp_new);
        let act: Vec<Activity> = (0..ng).map(|i| activity(gp_old[i].alpha, gp_new[i].alpha)).collect();
        let active: Vec<bool> = act.iter().map(|a| *a == Activity::Active).collect();
        let src: Vec<f64> = (0..ng).map(|i| gbar[i].alpha / weights[i]).collect();
        let curv: Vec<f64> = local.iter().map(|l| l.curvature(d1, w1)).collect();
        admm_stats[n] = adjoint_damage_update(&mut fwd.damage, mesh, &active, &src, &curv, r, &mut z, &mut chi, &fixed, &mut b)
            .map_err(|e| Error::Solver { step: n, message: e.to_string() })?;
        let zg = fwd.damage.at_gauss(mesh, &z);
        let cg = fwd.damage.at_gauss(mesh, &chi);
        let mut eps_bar = vec![Sym3::ZERO; ng];
        let mut alpha_bar_old = vec![0.0; ng];
        for i in 0..ng {
            let e = i / 4;
            match act[i] {
                Activity::Lower => alpha_bar_old[i] = gbar[i].alpha + weights[i] * (r * zg[i] + cg[i]),
                Activity::Capped => {}
                Activity::Active => {
                    let s = &gp_new[i];
                    let wb = weights[i] * b[i];
                    let dd = degr(s.alpha, d1);
                    let ee = eps[i] - s.eps_p;
                    let tension = el.tension_stress(&ee).scale(wb * dd[1] * f[e].be.v);
                    eps_bar[i] -= tension;
                    gbar[i].eps_p += tension;
                    gbar[i].q -= wb * dd[1] * f[e].bp.v * mat.sigma0(s.q).0;
                    gbar[i].g_accum -= wb * dd[1] * f[e].bp.v;
                    terms.damage_driving[e] -= wb * dd[1] * f[e].be.d * el.psi_plus(&ee);
                    terms.plastic[e] -= wb * dd[1] * f[e].bp.d * (mat.wp(s.q) + s.g_accum);
                    terms.damage_hardening[e] -= wb * f[e].ba.d * c_a0 * wa(s.alpha, w1)[1];
                }
            }
        }
        if active.iter().any(|&x| x) {
            let a_new = &traj.a[n + 1];
            for e in 0..ne {
                let k = mesh.kernel(e);
                let ze = fwd.damage.element_values(mesh, e, &z);
                let ae = fwd.damage.element_values(mesh, e, a_new);
                let mut s = 0.0;
                for g in 0..4 {
                    let gz = k.grad(g, &ze);
                    let ga = k.grad(g, &ae);
                    s += k.w[g] * (gz[0] * ga[0] + gz[1] * ga[1]);
                }
                terms.damage_gradient[e] -= f[e].ba.d * gcoef * s;
            }
        }

        // plasticity
        let rms: Vec<Result<crate::forward::plasticity::ReturnMap>> = (0..ng)
            .into_par_iter()
            .map(|i| return_map(&eps[i], &gp_old[i], dt, f[i / 4].be.v, f[i / 4].bp.v, mat).map(|x| x.1))
            .collect();
        for (i, rm) in rms.into_iter().enumerate() {
            let rm = rm.map_err(|e| Error::Solver { step: n, message: e.to_string() })?;
            if !rm.plastic {
                continue;
            }
            let e = i / 4;
            let gb = &mut gbar[i];
            let dq_bar = gb.q + gb.eps_p.dot(&rm.m) + gb.g_accum * rm.g_rate;
            let sm_bar = -dq_bar / rm.f_dq;
            let v = gb.eps_p.scale(rm.dq);
            let proj = v - rm.n_hat.scale(rm.n_hat.dot(&v));
            let ebar = (rm.m.scale(sm_bar * 2.0 * mu * f[e].be.v) + proj.scale(1.5f64.sqrt() / rm.e_norm)).dev();
            eps_bar[i] += ebar;
            gb.eps_p -= ebar;
            gb.q += dq_bar * (-rm.f_q / rm.f_dq);
            terms.plastic[e] += dq_bar * (-(f[e].be.d * rm.f_be + f[e].bp.d * rm.f_bp) / rm.f_dq);
        }
        for i in 0..ng {
            gbar[i].alpha = alpha_bar_old[i];
        }
        for e in 0..ne {
            let k = mesh.kernel(e);
            let el_nodes = &mesh.elements[e];
            for g in 0..4 {
                let bt = k.bt(g, &eps_bar[4 * e + g]);
                for (a, &node) in el_nodes.iter().enumerate() {
                    ubar[2 * node] += bt[2 * a];
                    ubar[2 * node + 1] += bt[2 * a + 1];
                }
            }
        }

        // displacement
        let c = kick(n);
        for i in 0..nd {
            vbar[i] += dt * ubar[i];
        }
        let fbar: Vec<f64> = (0..nd).map(|i| c * dt * inv_m[i] * vbar[i]).collect();
        let u_old = &traj.u[n];
        let acc = &traj.accel[n];
        let per_elem: Vec<([f64; 8], [GaussPointBar; 4], f64, f64)> = (0..mesh.n_elems())
            .into_par_iter()
            .map(|e| {
                let k = mesh.kernel(e);
                let fe = mesh.element_dofs(e, &fbar);
                let ue = mesh.element_dofs(e, u_old);
                let mut ub = [0.0; 8];
                let mut gb = [GaussPointBar::default(); 4];
                let (mut elastic, mut inertia) = (0.0, 0.0);
                for g in 0..4 {
                    let sbar = k.strain(g, &fe).scale(-k.w[g]);
                    let eps = k.strain(g, &ue);
                    let t = match mesh.blocks[e] {
                        Block::Design => {
                            let s = &gp_old[4 * e + g];
                            let ee = eps - s.eps_p;
                            let dd = degr(s.alpha, d1);
                            let t = el.tangent_apply(&ee, dd[0], &sbar).scale(f[e].be.v);
                            gb[g].eps_p = -t;
                            gb[g].alpha = f[e].be.v * dd[1] * el.tension_stress(&ee).dot(&sbar);
                            elastic += f[e].be.d * el.stress(&ee, dd[0]).dot(&sbar);
                            t
                        }
                        Block::Flyer => p.flyer.as_ref().map(|x| x.elastic()).unwrap_or(el).tangent_apply(&eps, 1.0, &sbar),
                        Block::Contact => match &p.contact {
                            Some(cp) => cp.tangent_apply(&eps, &sbar),
                            None => Sym3::ZERO,
                        },
                    };
                    let bt = k.bt(g, &t);
                    for j in 0..8 {
                        ub[j] += bt[j];
                    }
                }
                if mesh.blocks[e] == Block::Design {
                    let nodes = &mesh.elements[e];
                    for (a, &node) in nodes.iter().enumerate() {
                        let lump: f64 = (0..4).map(|g| k.w[g] * k.n[g][a]).sum();
                        let fa = fbar[2 * node] * acc[2 * node] + fbar[2 * node + 1] * acc[2 * node + 1];
                        inertia -= fa * mat.rho * f[e].rho.d * lump;
                    }
                }
                (ub, gb, elastic, inertia)
            })
            .collect();
        for (e, (ub, gb, elastic, inertia)) in per_elem.into_iter().enumerate() {
            for (a, &node) in mesh.elements[e].iter().enumerate() {
                ubar[2 * node] += ub[2 * a];
                ubar[2 * node + 1] += ub[2 * a + 1];
            }
            if e < ne {
                for g in 0..4 {
                    let t = &mut gbar[4 * e + g];
                    t.eps_p += gb[g].eps_p;
                    t.alpha += gb[g].alpha;
                }
                terms.elastic[e] += elastic;
                terms.inertia[e] += inertia;
            }
        }
    }
    let v0_bar: Vec<f64> = (0..nd).map(|i| if p.fixed_dof[i] { 0.0 } else { vbar[i] }).collect();
    let gradient = terms.total();
    Ok(AdjointResult { gradient, terms, admm: admm_stats, v0_bar })
}

