//! Run configuration: a strict TOML schema, validation that reports every
//! violation, and construction of the simulation problem.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::constitutive::MaterialParams;
use crate::error::{Error, Result};
use crate::forward::admm::AdmmSettings;
use crate::forward::contact::ContactParams;
use crate::interpolation::{Interpolation, SolidVoidScheme, TwoMaterialScheme};
use crate::load::{body_force_nodal, gaussian_profile, LoadProgram, PulseShape};
use crate::mesh::{build_structured_mesh, FlyerGeometry};
use crate::objective::ObjectiveParams;
use crate::optimizer::schedule::{ScheduleParams, ScheduleValues};
use crate::problem::{FlyerParams, Problem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    ModelProblem,
    BlastSolidVoid,
    ImpactTwoMaterial,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    pub length: f64,
    pub height: f64,
    pub nx: usize,
    pub ny: usize,
}

/// Pulse and body-force loading. Magnitudes are given in reference units:
/// the impulse in `L^2 sqrt(E rho)`, the duration in `L / c_L`, and the
/// traction window in `L`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LoadConfig {
    pub impulse_scale: f64,
    pub duration_scale: f64,
    pub shape: PulseShape,
    pub center_scale: f64,
    pub std_scale: f64,
    /// Total width of the truncated profile.
    pub width_scale: f64,
    pub body_force: [f64; 2],
}

impl Default for LoadConfig {
    fn default() -> Self {
        LoadConfig {
            impulse_scale: 0.0,
            duration_scale: 1.47,
            shape: PulseShape::Rectangular,
            center_scale: 0.5,
            std_scale: 0.05,
            width_scale: 0.2,
            body_force: [0.0, 0.0],
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContactConfig {
    /// Compressive bulk modulus; defaults to ten times the flyer modulus.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bulk: Option<f64>,
    /// Shear modulus before softening; defaults to the bulk modulus.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shear: Option<f64>,
    /// Softening fraction; defaults to `1e-4`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub soft: Option<f64>,
    /// Layer thickness; defaults to one design element row.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thickness: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlyerConfig {
    pub e: f64,
    pub nu: f64,
    pub rho: f64,
    pub length: f64,
    pub height: f64,
    pub nx: usize,
    pub ny: usize,
    /// Impact speed in units of the reference longitudinal wave speed.
    pub velocity_scale: f64,
    #[serde(default)]
    pub contact: ContactConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    /// Final time in units of `L / c_L`.
    pub final_time_scale: f64,
    pub steps: usize,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
}

fn default_cfl() -> f64 {
    0.5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    /// Volume bound as a fraction of the domain (solid-void), or bound on the
    /// strong-phase fraction (two-material; 1 leaves it inactive).
    pub volume_fraction: f64,
    /// Filter radius in units of `L`.
    pub filter_radius_scale: f64,
    /// Initial uniform design; defaults to the volume fraction.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta_init: Option<f64>,
    pub max_iters: usize,
    pub conv_tol: f64,
    pub move_limit: f64,
    pub schedule: ScheduleParams,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            volume_fraction: 0.5,
            filter_radius_scale: 0.021,
            eta_init: None,
            max_iters: 300,
            conv_tol: 1e-3,
            move_limit: 0.1,
            schedule: ScheduleParams::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CheckConfig {
    /// Number of sampled elements.
    pub samples: usize,
    /// Finite-difference step.
    pub h: f64,
    pub tol: f64,
    /// Elements with `|g| < threshold * max|g|` are reported but not judged.
    pub threshold: f64,
    pub budget_secs: f64,
    /// Uniform design of the check; defaults to the optimizer's initial design.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    /// Amplitude of a deterministic perturbation added to the uniform design.
    pub perturbation: f64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig { samples: 10, h: 1e-5, tol: 5e-3, threshold: 1e-3, budget_secs: 300.0, eta: None, perturbation: 0.1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub stride: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { stride: 100 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Scenario,
    #[serde(default)]
    pub seed: u64,
    pub geometry: Geometry,
    /// Reference material; the strong phase in two-material runs.
    pub material: MaterialParams,
    pub interpolation: Interpolation,
    #[serde(default)]
    pub load: LoadConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flyer: Option<FlyerConfig>,
    pub time: TimeConfig,
    #[serde(default)]
    pub admm: AdmmSettings,
    #[serde(default)]
    pub objective: ObjectiveParams,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub check: CheckConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn rel_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(s).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Internal(e.to_string()))
    }

    pub fn wave_speed(&self) -> f64 {
        self.material.wave_speed()
    }

    pub fn final_time(&self) -> f64 {
        self.time.final_time_scale * self.geometry.length / self.wave_speed()
    }

    pub fn dt(&self) -> f64 {
        self.final_time() / self.time.steps as f64
    }

    /// Uniform initial design.
    pub fn eta_init(&self) -> f64 {
        self.optimizer.eta_init.unwrap_or(match self.interpolation {
            Interpolation::SolidVoid(_) => self.optimizer.volume_fraction,
            Interpolation::TwoMaterial(_) => 0.5,
        })
    }

    /// Design of the gradient check: uniform plus a smooth deterministic
    /// perturbation, kept clear of the bounds by `margin`.
    pub fn check_design(&self, n: usize, margin: f64) -> Vec<f64> {
        let (lo, hi) = self.interpolation.bounds();
        let base = self.check.eta.unwrap_or_else(|| self.eta_init());
        (0..n)
            .map(|e| (base + self.check.perturbation * (1.3 * e as f64).sin()).clamp(lo + margin, hi - margin))
            .collect()
    }

    /// Schema-level checks plus the stability limit for the stiffest design.
    /// Every violation is collected.
    pub fn validate(&self) -> Result<()> {
        let mut errs = self.material.validate("material");
        let g = &self.geometry;
        if !(g.length > 0.0 && g.height > 0.0 && g.length.is_finite() && g.height.is_finite()) {
            errs.push(format!("geometry must have positive size (got {} x {})", g.length, g.height));
        }
        if g.nx == 0 || g.ny == 0 {
            errs.push(format!("geometry.nx and geometry.ny must be >= 1 (got {} x {})", g.nx, g.ny));
        }
        errs.extend(self.interpolation.validate());
        if let Interpolation::TwoMaterial(t) = &self.interpolation {
            if !(rel_eq(t.e2, self.material.e) && rel_eq(t.sy2, self.material.sigma_y) && rel_eq(t.gc2, self.material.gc)) {
                errs.push("material must be the strong phase (e = e2, sigma_y = sy2, gc = gc2)".to_string());
            }
        }
        if self.time.steps == 0 {
            errs.push("time.steps must be >= 1".to_string());
        }
        if !(self.time.final_time_scale > 0.0 && self.time.final_time_scale.is_finite()) {
            errs.push(format!("time.final_time_scale must be positive (got {})", self.time.final_time_scale));
        }
        if !(self.time.cfl > 0.0 && self.time.cfl <= 1.0) {
            errs.push(format!("time.cfl must lie in (0, 1] (got {})", self.time.cfl));
        }
        let l = &self.load;
        if !(l.impulse_scale >= 0.0 && l.duration_scale > 0.0 && l.std_scale > 0.0 && l.width_scale > 0.0) {
            errs.push("load scales must be positive (impulse may be zero)".to_string());
        }
        if let Some(f) = &self.flyer {
            for (name, v) in [("e", f.e), ("rho", f.rho), ("length", f.length), ("height", f.height)] {
                if !(v > 0.0 && v.is_finite()) {
                    errs.push(format!("flyer.{name} must be positive (got {v})"));
                }
            }
            if !(f.nu > -1.0 && f.nu < 0.5) {
                errs.push(format!("flyer.nu must lie in (-1, 0.5) (got {})", f.nu));
            }
            if f.nx == 0 || f.ny == 0 {
                errs.push("flyer.nx and flyer.ny must be >= 1".to_string());
            }
            if !(f.velocity_scale >= 0.0) {
                errs.push(format!("flyer.velocity_scale must be >= 0 (got {})", f.velocity_scale));
            }
            if let Some(s) = f.contact.soft {
                if !(s > 0.0 && s < 1.0) {
                    errs.push(format!("flyer.contact.soft must lie in (0, 1) (got {s})"));
                }
            }
            for (name, v) in [("bulk", f.contact.bulk), ("shear", f.contact.shear), ("thickness", f.contact.thickness)] {
                if let Some(v) = v {
                    if !(v > 0.0 && v.is_finite()) {
                        errs.push(format!("flyer.contact.{name} must be positive (got {v})"));
                    }
                }
            }
        } else if self.scenario == Scenario::ImpactTwoMaterial {
            errs.push("impact scenarios need a [flyer] table".to_string());
        }
        errs.extend(self.admm.validate());
        errs.extend(self.objective.validate());
        let o = &self.optimizer;
        if !(o.volume_fraction > 0.0 && o.volume_fraction <= 1.0) {
            errs.push(format!("optimizer.volume_fraction must lie in (0, 1] (got {})", o.volume_fraction));
        }
        if !(o.filter_radius_scale >= 0.0) {
            errs.push(format!("optimizer.filter_radius_scale must be >= 0 (got {})", o.filter_radius_scale));
        }
        let (lo, hi) = self.interpolation.bounds();
        let e0 = self.eta_init();
        if !(e0 >= lo && e0 <= hi) {
            errs.push(format!("initial design {e0} outside [{lo}, {hi}]"));
        }
        if !(o.conv_tol > 0.0 && o.move_limit > 0.0 && o.move_limit <= 1.0) {
            errs.push("optimizer.conv_tol and optimizer.move_limit must be positive".to_string());
        }
        errs.extend(o.schedule.validate());
        let c = &self.check;
        if !(c.h > 0.0 && c.tol > 0.0 && c.budget_secs > 0.0 && c.threshold >= 0.0 && c.perturbation >= 0.0) {
            errs.push("check parameters must be positive".to_string());
        }
        if let Some(x) = c.eta {
            if !(x >= lo && x <= hi) {
                errs.push(format!("check.eta {x} outside [{lo}, {hi}]"));
            }
        }
        if self.output.stride == 0 {
            errs.push("output.stride must be >= 1".to_string());
        }
        if errs.is_empty() {
            let p = self.build_problem(None).map_err(|e| match e {
                Error::Config(v) => v,
                other => vec![other.to_string()],
            });
            match p {
                Ok(p) => {
                    let solid = vec![hi; p.mesh.n_design_elems];
                    if let Err(Error::Config(v)) = p.factors(&solid).and_then(|f| p.check_cfl(&f)) {
                        errs.extend(v);
                    }
                }
                Err(v) => errs.extend(v),
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }

    /// Interpolation with continuation parameters applied.
    pub fn interpolation_at(&self, sched: Option<&ScheduleValues>) -> Interpolation {
        match (&self.interpolation, sched) {
            (Interpolation::SolidVoid(s), Some(v)) => {
                Interpolation::SolidVoid(SolidVoidScheme { k1: v.k1, k2: v.k2, ..s.clone() })
            }
            (Interpolation::TwoMaterial(t), Some(v)) => Interpolation::TwoMaterial(TwoMaterialScheme { p: v.p, ..t.clone() }),
            (i, None) => i.clone(),
        }
    }

    /// Builds the problem. Schedule values, when given, override the
    /// interpolation parameters and scale the load.
    pub fn build_problem(&self, sched: Option<&ScheduleValues>) -> Result<Problem> {
        let g = &self.geometry;
        let mut mesh = build_structured_mesh(g.nx, g.ny, g.length, g.height)?;
        let c_l = self.wave_speed();
        let hy = g.height / g.ny as f64;
        let mut flyer = None;
        let mut contact = None;
        if let Some(f) = &self.flyer {
            let thickness = f.contact.thickness.unwrap_or(hy);
            mesh = mesh.with_flyer(&FlyerGeometry {
                length: f.length,
                height: f.height,
                nx: f.nx,
                ny: f.ny,
                layer_thickness: thickness,
            })?;
            let bulk = f.contact.bulk.unwrap_or(10.0 * f.e);
            contact = Some(ContactParams {
                bulk,
                shear: f.contact.shear.unwrap_or(bulk),
                soft: f.contact.soft.unwrap_or(1e-4),
                rho: f.rho,
            });
            flyer = Some(FlyerParams { e: f.e, nu: f.nu, rho: f.rho });
        }
        let mut p = Problem::new(mesh, self.material.clone(), self.interpolation_at(sched), self.dt(), self.time.steps)?;
        p.flyer = flyer;
        p.contact = contact;
        p.cfl = self.time.cfl;
        p.admm = self.admm.clone();
        p.objective = self.objective.clone();
        let left = p.mesh.node_set("left").to_vec();
        let right = p.mesh.node_set("right").to_vec();
        p.clamp_nodes(&left);
        p.clamp_nodes(&right);
        let l = &self.load;
        let mut load = LoadProgram::none();
        if l.impulse_scale > 0.0 {
            let m = &self.material;
            load.nodal = gaussian_profile(
                &p.mesh,
                l.center_scale * g.length,
                l.std_scale * g.length,
                0.5 * l.width_scale * g.length,
            )?;
            load.impulse = l.impulse_scale * g.length * g.length * (m.e * m.rho).sqrt();
            load.duration = l.duration_scale * g.length / c_l;
            load.shape = l.shape;
        }
        load.scale = sched.map(|v| v.load).unwrap_or(1.0);
        load.body_force = l.body_force;
        p.body = if l.body_force == [0.0, 0.0] { Vec::new() } else { body_force_nodal(&p.mesh, l.body_force) };
        p.load = load;
        if let Some(f) = &self.flyer {
            let v = -f.velocity_scale * c_l;
            for &i in p.mesh.node_set("flyer").to_vec().iter() {
                p.v0[2 * i + 1] = v;
            }
        }
        Ok(p)
    }
}
