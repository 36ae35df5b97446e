//! A fully assembled simulation problem: mesh, materials, interpolation,
//! boundary conditions, loading and solver settings.

use serde::{Deserialize, Serialize};

use crate::constitutive::{Elastic, MaterialParams};
use crate::error::{Error, Result};
use crate::forward::admm::AdmmSettings;
use crate::forward::contact::ContactParams;
use crate::interpolation::{ElemFactors, Interpolation};
use crate::load::LoadProgram;
use crate::mesh::{Block, Mesh2D};
use crate::objective::{h1_gram, ObjectiveParams};
use crate::sparse::Csr;

/// Linear elastic impactor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlyerParams {
    pub e: f64,
    pub nu: f64,
    pub rho: f64,
}

impl FlyerParams {
    pub fn elastic(&self) -> Elastic {
        Elastic { k: self.e / (3.0 * (1.0 - 2.0 * self.nu)), mu: self.e / (2.0 * (1.0 + self.nu)) }
    }

    pub fn wave_speed(&self) -> f64 {
        let el = self.elastic();
        ((el.k + 4.0 * el.mu / 3.0) / self.rho).sqrt()
    }
}

#[derive(Clone, Debug)]
pub struct Problem {
    pub mesh: Mesh2D,
    /// Reference material; interpolation factors scale it.
    pub material: MaterialParams,
    pub interp: Interpolation,
    pub flyer: Option<FlyerParams>,
    pub contact: Option<ContactParams>,
    pub load: LoadProgram,
    /// Consistent nodal body force (empty when none).
    pub body: Vec<f64>,
    pub dt: f64,
    pub steps: usize,
    pub admm: AdmmSettings,
    pub objective: ObjectiveParams,
    /// Dirichlet flag per displacement dof.
    pub fixed_dof: Vec<bool>,
    /// Dirichlet flag per design node for the phase field.
    pub damage_fixed: Vec<bool>,
    /// Initial velocity per dof.
    pub v0: Vec<f64>,
    /// Courant number bound on the time step.
    pub cfl: f64,
    /// H1 Gram matrix on the design-domain displacement dofs.
    pub h1: Csr,
}

impl Problem {
    /// Unloaded, unconstrained problem with default settings.
    pub fn new(mesh: Mesh2D, material: MaterialParams, interp: Interpolation, dt: f64, steps: usize) -> Result<Self> {
        let h1 = h1_gram(&mesh)?;
        let nd = mesh.n_dofs();
        let nn = mesh.n_design_nodes;
        Ok(Problem {
            material,
            interp,
            flyer: None,
            contact: None,
            load: LoadProgram::none(),
            body: Vec::new(),
            dt,
            steps,
            admm: AdmmSettings::default(),
            objective: ObjectiveParams::default(),
            fixed_dof: vec![false; nd],
            damage_fixed: vec![false; nn],
            v0: vec![0.0; nd],
            cfl: 0.5,
            h1,
            mesh,
        })
    }

    /// Clamps both displacement components of the nodes and pins their
    /// phase field to zero.
    pub fn clamp_nodes(&mut self, nodes: &[usize]) {
        for &i in nodes {
            self.fixed_dof[2 * i] = true;
            self.fixed_dof[2 * i + 1] = true;
            if i < self.mesh.n_design_nodes {
                self.damage_fixed[i] = true;
            }
        }
    }

    /// Constrains a single displacement component without touching damage.
    pub fn fix_component(&mut self, nodes: &[usize], comp: usize) {
        for &i in nodes {
            self.fixed_dof[2 * i + comp] = true;
        }
    }

    pub fn final_time(&self) -> f64 {
        self.dt * self.steps as f64
    }

    pub fn n_gauss(&self) -> usize {
        4 * self.mesh.n_design_elems
    }

    pub fn factors(&self, eta: &[f64]) -> Result<Vec<ElemFactors>> {
        if eta.len() != self.mesh.n_design_elems {
            return Err(Error::invalid(format!(
                "design has {} entries, mesh has {} design elements",
                eta.len(),
                self.mesh.n_design_elems
            )));
        }
        eta.iter().map(|&x| self.interp.factors(x)).collect()
    }

    /// Per-element mass density.
    pub fn densities(&self, f: &[ElemFactors]) -> Result<Vec<f64>> {
        let mut rho = Vec::with_capacity(self.mesh.n_elems());
        for e in 0..self.mesh.n_elems() {
            rho.push(match self.mesh.blocks[e] {
                Block::Design => self.material.rho * f[e].rho.v,
                Block::Flyer => self.flyer.as_ref().ok_or_else(|| Error::invalid("flyer block without flyer material"))?.rho,
                Block::Contact => self.contact.as_ref().ok_or_else(|| Error::invalid("contact block without contact material"))?.rho,
            });
        }
        Ok(rho)
    }

    /// Largest stable step `cfl * min_e(h_e / c_e)`.
    pub fn cfl_limit(&self, f: &[ElemFactors]) -> Result<f64> {
        let el = self.material.elastic();
        let m0 = el.k + 4.0 * el.mu / 3.0;
        let mut limit = f64::INFINITY;
        for e in 0..self.mesh.n_elems() {
            let k = self.mesh.kernel(e);
            let h = k.hx.min(k.hy);
            let c = match self.mesh.blocks[e] {
                Block::Design => (m0 * f[e].be.v / (self.material.rho * f[e].rho.v)).sqrt(),
                Block::Flyer => self.flyer.as_ref().map(|p| p.wave_speed()).unwrap_or(0.0),
                Block::Contact => self.contact.as_ref().map(|p| p.wave_speed()).unwrap_or(0.0),
            };
            if c > 0.0 {
                limit = limit.min(self.cfl * h / c);
            }
        }
        Ok(limit)
    }

    pub fn check_cfl(&self, f: &[ElemFactors]) -> Result<()> {
        let limit = self.cfl_limit(f)?;
        if self.dt > limit {
            return Err(Error::config(format!(
                "time step {} exceeds the stability limit {limit:.6e} (courant number {})",
                self.dt, self.cfl
            )));
        }
        Ok(())
    }
}
