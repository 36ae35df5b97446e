//! Time integration of the coupled problem: explicit central differences for
//! the displacement, an implicit return map for plasticity, and an ADMM
//! damage update at every step.

pub mod admm;
pub mod contact;
pub mod plasticity;

use rayon::prelude::*;

use crate::constitutive::{degr, wa};
use crate::error::{Error, Result};
use crate::interpolation::ElemFactors;
use crate::mesh::{lumped_mass, Block};
use crate::objective::{disp_scale, disp_term, dissipation, h1_norm_sq, ObjectiveValue};
use crate::problem::Problem;
use crate::tensor::Sym3;

use admm::{admm_damage_update, AdmmSettings, DamageSystem, LocalDamage};
use plasticity::return_map;

/// History variables at one Gauss point of the design domain.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GaussPointState {
    /// Local damage.
    pub alpha: f64,
    /// Accumulated plastic strain.
    pub q: f64,
    pub eps_p: Sym3,
    /// Time integral of the rate potential.
    pub g_accum: f64,
}

#[derive(Clone, Debug)]
pub struct ForwardState {
    pub u: Vec<f64>,
    /// Velocity at the last half step.
    pub v_half: Vec<f64>,
    /// Phase field on free damage dofs.
    pub a: Vec<f64>,
    /// Multiplier on free damage dofs.
    pub lambda: Vec<f64>,
    pub gp: Vec<GaussPointState>,
    /// Current ADMM penalty.
    pub r: f64,
    pub time: f64,
    pub step: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepDiagnostics {
    pub step: usize,
    /// Time at the end of the step.
    pub time: f64,
    pub admm_iters: usize,
    pub r: f64,
    pub r_p: f64,
    pub r_d: f64,
    /// Exit tolerances of the primal and dual residuals.
    pub tol_p: f64,
    pub tol_d: f64,
    /// Kinetic energy at the start of the step (mid-point form).
    pub kinetic: f64,
    /// Stored elastic energy at the start of the step.
    pub strain: f64,
    /// Plastic energy plus the accumulated rate potential after the step.
    pub plastic: f64,
    /// Damage energy after the step.
    pub damage: f64,
    pub max_alpha: f64,
    pub max_q: f64,
    pub plastic_points: usize,
}

/// Everything the adjoint needs. Index `n` of `u`, `a`, `lambda`, `gp` and
/// `times` is the state at `t_n` (`steps + 1` entries); `v_half`, `accel`
/// and `r` belong to the step `n -> n + 1` (`steps` entries).
#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub u: Vec<Vec<f64>>,
    pub v_half: Vec<Vec<f64>>,
    pub accel: Vec<Vec<f64>>,
    pub a: Vec<Vec<f64>>,
    pub lambda: Vec<Vec<f64>>,
    pub gp: Vec<Vec<GaussPointState>>,
    pub r: Vec<f64>,
    pub times: Vec<f64>,
}

pub struct ForwardResult {
    pub state: ForwardState,
    pub trajectory: Option<Trajectory>,
    pub diagnostics: Vec<StepDiagnostics>,
    /// `sum_n dt |u^(n+1)|_H1^s`.
    pub disp_power_sum: f64,
    pub factors: Vec<ElemFactors>,
    /// Lumped nodal mass.
    pub mass: Vec<f64>,
    pub damage: DamageSystem,
    /// Penalty values seen by the ADMM, one per step.
    pub r_history: Vec<f64>,
}

impl ForwardResult {
    pub fn objective(&self, p: &Problem) -> Result<ObjectiveValue> {
        let s = p.objective.s;
        let scale = disp_scale(p.material.sigma_y, p.mesh.length, p.final_time(), s);
        let disp = disp_term(scale, self.disp_power_sum, s);
        let (dp, da) = dissipation(&p.mesh, &p.material, &self.factors, &self.state.gp)?;
        Ok(ObjectiveValue { total: disp + p.objective.c_p * dp + p.objective.c_a * da, disp, dp, da })
    }

    pub fn factorizations(&self) -> usize {
        self.damage.op.factorizations()
    }
}

pub type Observer<'a> = dyn FnMut(&ForwardState, Option<&StepDiagnostics>) -> Result<()> + 'a;

#[derive(Default)]
pub struct ForwardOptions<'a> {
    /// Keep every step for the adjoint.
    pub record: bool,
    /// Replays a fixed penalty per step instead of adapting it.
    pub r_schedule: Option<&'a [f64]>,
    /// Called once before the first step and after every step.
    pub observer: Option<&'a mut Observer<'a>>,
}

/// Design-domain strain at every Gauss point.
pub fn design_strains(p: &Problem, u: &[f64]) -> Vec<Sym3> {
    let mesh = &p.mesh;
    (0..mesh.n_design_elems)
        .into_par_iter()
        .flat_map_iter(|e| {
            let k = mesh.kernel(e);
            let ue = mesh.element_dofs(e, u);
            (0..4).map(move |g| k.strain(g, &ue))
        })
        .collect()
}

/// Internal force `int B^T sigma` and stored elastic energy.
pub fn internal_force(p: &Problem, f: &[ElemFactors], u: &[f64], gp: &[GaussPointState]) -> (Vec<f64>, f64) {
    let mesh = &p.mesh;
    let el = p.material.elastic();
    let d1 = p.material.d1;
    let per_elem: Vec<([f64; 8], f64)> = (0..mesh.n_elems())
        .into_par_iter()
        .map(|e| {
            let k = mesh.kernel(e);
            let ue = mesh.element_dofs(e, u);
            let mut fe = [0.0; 8];
            let mut energy = 0.0;
            for g in 0..4 {
                let eps = k.strain(g, &ue);
                let (sig, w_el) = match mesh.blocks[e] {
                    Block::Design => {
                        let s = &gp[4 * e + g];
                        let ee = eps - s.eps_p;
                        let d = degr(s.alpha, d1)[0];
                        let be = f[e].be.v;
                        (el.stress(&ee, d).scale(be), be * el.energy(&ee, d))
                    }
                    Block::Flyer => {
                        let fl = p.flyer.as_ref().map(|x| x.elastic()).unwrap_or(el);
                        (fl.stress(&eps, 1.0), fl.energy(&eps, 1.0))
                    }
                    Block::Contact => match &p.contact {
                        Some(c) => (c.stress(&eps), c.energy(&eps)),
                        None => (Sym3::ZERO, 0.0),
                    },
                };
                let bt = k.bt(g, &sig);
                for i in 0..8 {
                    fe[i] += k.w[g] * bt[i];
                }
                energy += k.w[g] * w_el;
            }
            (fe, energy)
        })
        .collect();
    let mut out = vec![0.0; u.len()];
    let mut energy = 0.0;
    for (e, (fe, we)) in per_elem.iter().enumerate() {
        for (a, &node) in mesh.elements[e].iter().enumerate() {
            out[2 * node] += fe[2 * a];
            out[2 * node + 1] += fe[2 * a + 1];
        }
        energy += we;
    }
    (out, energy)
}

/// `1/m` per dof, zero on Dirichlet dofs.
pub fn masked_inverse_mass(p: &Problem, mass: &[f64]) -> Vec<f64> {
    (0..p.mesh.n_dofs())
        .map(|i| if p.fixed_dof[i] { 0.0 } else { 1.0 / mass[i / 2] })
        .collect()
}

/// Leapfrog kick fraction of step `n`: a half kick starts the scheme.
#[inline]
pub fn kick(n: usize) -> f64 {
    if n == 0 {
        0.5
    } else {
        1.0
    }
}

/// Damage system and its per-element gradient coefficients for a design.
pub fn damage_system(p: &Problem, f: &[ElemFactors]) -> Result<DamageSystem> {
    let gc = p.material.gradient_coef();
    let coef = (0..p.mesh.n_design_elems).map(|e| f[e].ba.v * gc).collect();
    DamageSystem::new(&p.mesh, &p.damage_fixed, coef)
}

/// Local damage data at every Gauss point after the plastic update.
pub fn local_damage(
    p: &Problem,
    f: &[ElemFactors],
    eps: &[Sym3],
    old: &[GaussPointState],
    new: &[GaussPointState],
) -> Vec<LocalDamage> {
    let el = p.material.elastic();
    let c_a0 = p.material.damage_coef();
    (0..new.len())
        .into_par_iter()
        .map(|i| {
            let e = i / 4;
            let s = &new[i];
            LocalDamage {
                phi: f[e].be.v * el.psi_plus(&(eps[i] - s.eps_p)) + f[e].bp.v * (p.material.wp(s.q) + s.g_accum),
                coef: f[e].ba.v * c_a0,
                alpha_n: old[i].alpha,
            }
        })
        .collect()
}

/// The explicit half of step `n`: returns the acceleration and updates
/// `v_half` and `u` in place. Also returns the stored energy at `u^n`.
pub fn explicit_displacement_step(
    p: &Problem,
    f: &[ElemFactors],
    inv_m: &[f64],
    n: usize,
    u: &mut [f64],
    v_half: &mut [f64],
    gp: &[GaussPointState],
) -> (Vec<f64>, f64) {
    let (fint, energy) = internal_force(p, f, u, gp);
    let c = kick(n);
    let mut force: Vec<f64> = fint.iter().map(|x| -x).collect();
    p.load.add_force(n, p.dt, c, &p.body, &mut force);
    let acc: Vec<f64> = force.iter().zip(inv_m).map(|(a, b)| a * b).collect();
    for i in 0..u.len() {
        v_half[i] += c * p.dt * acc[i];
        u[i] += p.dt * v_half[i];
    }
    (acc, energy)
}

pub fn run_forward(p: &Problem, eta: &[f64], mut opts: ForwardOptions<'_>) -> Result<ForwardResult> {
    let f = p.factors(eta)?;
    p.check_cfl(&f)?;
    let mesh = &p.mesh;
    let nd = mesh.n_dofs();
    if p.fixed_dof.len() != nd || p.v0.len() != nd {
        return Err(Error::invalid("boundary or initial-velocity arrays do not match the mesh"));
    }
    if let Some(s) = opts.r_schedule {
        if s.len() < p.steps {
            return Err(Error::invalid(format!("penalty schedule has {} entries for {} steps", s.len(), p.steps)));
        }
    }
    let mass = lumped_mass(mesh, &p.densities(&f)?)?;
    let inv_m = masked_inverse_mass(p, &mass);
    let mut sys = damage_system(p, &f)?;
    let ng = p.n_gauss();
    let nf = sys.n();
    let mut st = ForwardState {
        u: vec![0.0; nd],
        v_half: p.v0.iter().zip(&p.fixed_dof).map(|(v, &fx)| if fx { 0.0 } else { *v }).collect(),
        a: vec![0.0; nf],
        lambda: vec![0.0; nf],
        gp: vec![GaussPointState::default(); ng],
        r: p.admm.r0,
        time: 0.0,
        step: 0,
    };
    let mut traj = opts.record.then(|| Trajectory {
        u: vec![st.u.clone()],
        a: vec![st.a.clone()],
        lambda: vec![st.lambda.clone()],
        gp: vec![st.gp.clone()],
        times: vec![0.0],
        ..Default::default()
    });
    if let Some(obs) = opts.observer.as_mut() {
        obs(&st, None)?;
    }
    let fixed_settings = AdmmSettings { adaptive: false, ..p.admm.clone() };
    let s_pow = p.objective.s;
    let mut power_sum = 0.0;
    let mut diags = Vec::with_capacity(p.steps);
    let mut r_history = Vec::with_capacity(p.steps);
    let mut alpha = vec![0.0; ng];
    let (d1, w1) = (p.material.d1, p.material.w1);
    for n in 0..p.steps {
        let v_prev = st.v_half.clone();
        let (acc, strain) = explicit_displacement_step(p, &f, &inv_m, n, &mut st.u, &mut st.v_half, &st.gp);
        let kinetic = 0.5
            * (0..nd)
                .map(|i| if p.fixed_dof[i] { 0.0 } else { mass[i / 2] * v_prev[i] * st.v_half[i] })
                .sum::<f64>();
        let eps = design_strains(p, &st.u);
        let updated: Vec<Result<(GaussPointState, bool)>> = (0..ng)
            .into_par_iter()
            .map(|i| {
                let fe = &f[i / 4];
                return_map(&eps[i], &st.gp[i], p.dt, fe.be.v, fe.bp.v, &p.material).map(|(s, rm)| (s, rm.plastic))
            })
            .collect();
        let mut new_gp = Vec::with_capacity(ng);
        let mut plastic_points = 0;
        for (i, res) in updated.into_iter().enumerate() {
            let (s, plastic) = res.map_err(|e| Error::Solver { step: n, message: format!("gauss point {i}: {e}") })?;
            plastic_points += plastic as usize;
            new_gp.push(s);
        }
        let local = local_damage(p, &f, &eps, &st.gp, &new_gp);
        let settings = match opts.r_schedule {
            Some(s) => {
                st.r = s[n];
                &fixed_settings
            }
            None => &p.admm,
        };
        let stats = admm_damage_update(&mut sys, mesh, &local, d1, w1, &mut st.a, &mut st.lambda, &mut st.r, settings, &mut alpha)
            .map_err(|e| Error::Solver { step: n, message: e.to_string() })?;
        for (s, &al) in new_gp.iter_mut().zip(&alpha) {
            s.alpha = al;
        }
        st.gp = new_gp;
        st.step = n + 1;
        st.time = (n + 1) as f64 * p.dt;
        power_sum += p.dt * h1_norm_sq(&p.h1, &st.u).powf(0.5 * s_pow);
        r_history.push(stats.r);

        let c_a0 = p.material.damage_coef();
        let mut diag = StepDiagnostics {
            step: n,
            time: st.time,
            admm_iters: stats.iters,
            r: stats.r,
            r_p: stats.r_p,
            r_d: stats.r_d,
            tol_p: stats.tol_p,
            tol_d: stats.tol_d,
            kinetic,
            strain,
            plastic_points,
            ..Default::default()
        };
        for e in 0..mesh.n_design_elems {
            let k = mesh.kernel(e);
            for g in 0..4 {
                let s = &st.gp[4 * e + g];
                diag.plastic += k.w[g] * f[e].bp.v * (p.material.wp(s.q) + s.g_accum);
                diag.damage += k.w[g] * f[e].ba.v * c_a0 * wa(s.alpha, w1)[0];
                diag.max_alpha = diag.max_alpha.max(s.alpha);
                diag.max_q = diag.max_q.max(s.q);
            }
        }
        if let Some(t) = traj.as_mut() {
            t.u.push(st.u.clone());
            t.v_half.push(st.v_half.clone());
            t.accel.push(acc);
            t.a.push(st.a.clone());
            t.lambda.push(st.lambda.clone());
            t.gp.push(st.gp.clone());
            t.r.push(stats.r);
            t.times.push(st.time);
        }
        if let Some(obs) = opts.observer.as_mut() {
            obs(&st, Some(&diag))?;
        }
        diags.push(diag);
    }
    Ok(ForwardResult {
        state: st,
        trajectory: traj,
        diagnostics: diags,
        disp_power_sum: power_sum,
        factors: f,
        mass,
        damage: sys,
        r_history,
    })
}
