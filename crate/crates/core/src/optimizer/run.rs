//! The optimization loop: schedule update, forward and adjoint solves,
//! filtered sensitivities, and an MMA step under the volume bound.

use crate::config::RunConfig;
use crate::error::Result;
use crate::objective::ObjectiveValue;
use crate::sensitivity::{evaluate, DensityFilter};

use super::mma::{mma_step, MmaState};
use super::schedule::ScheduleValues;

#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub objective: ObjectiveValue,
    /// Filtered volume fraction of the evaluated design.
    pub volume: f64,
    /// Largest change of the raw design in the following MMA step.
    pub change: f64,
    pub schedule: ScheduleValues,
    pub forward_admm_iters: usize,
    pub adjoint_admm_iters: usize,
}

#[derive(Clone, Debug)]
pub struct OptimizationResult {
    pub eta_raw: Vec<f64>,
    pub eta_phys: Vec<f64>,
    pub history: Vec<IterationRecord>,
    pub converged: bool,
}

/// Volume fraction `sum A_e x_e / |Omega|` and its gradient in the raw design.
pub fn volume_fraction(areas: &[f64], filter: &DensityFilter, eta_raw: &[f64]) -> (f64, Vec<f64>) {
    let total: f64 = areas.iter().sum();
    let phys = filter.apply(eta_raw);
    let v = phys.iter().zip(areas).map(|(x, a)| x * a).sum::<f64>() / total;
    let dv: Vec<f64> = areas.iter().map(|a| a / total).collect();
    (v, filter.transpose(&dv))
}

pub type IterationObserver<'a> = dyn FnMut(&IterationRecord, &[f64], &[f64]) -> Result<()> + 'a;

/// Runs at most `max_iters` iterations from a uniform design. The observer
/// sees every record with the evaluated raw and filtered designs.
pub fn run_optimization(cfg: &RunConfig, max_iters: Option<usize>, observer: &mut IterationObserver<'_>) -> Result<OptimizationResult> {
    let o = &cfg.optimizer;
    let p0 = cfg.build_problem(Some(&o.schedule.at(1)))?;
    let ne = p0.mesh.n_design_elems;
    let filter = DensityFilter::new(&p0.mesh, o.filter_radius_scale * cfg.geometry.length);
    let areas: Vec<f64> = (0..ne).map(|e| p0.mesh.area(e)).collect();
    let (lo, hi) = cfg.interpolation.bounds();
    let mut mma = MmaState::new(ne, lo, hi, o.move_limit);
    let mut eta = vec![cfg.eta_init(); ne];
    let mut history = Vec::new();
    let mut converged = false;
    let max_iters = max_iters.unwrap_or(o.max_iters);
    let mut last_phys = filter.apply(&eta);
    // MMA works best with an objective of order ten; the scale is fixed at
    // the first evaluation so later iterations see a consistent problem.
    let mut obj_scale = None;
    for k in 1..=max_iters {
        let sched = o.schedule.at(k);
        let p = if k == 1 { p0.clone() } else { cfg.build_problem(Some(&sched))? };
        let (ev, _) = evaluate(&p, &filter, &eta, None, None)?;
        let (vol, dvol) = volume_fraction(&areas, &filter, &eta);
        let scale = *obj_scale.get_or_insert_with(|| {
            let o = ev.objective.total.abs();
            if o > 0.0 && o.is_finite() { 10.0 / o } else { 1.0 }
        });
        let g: Vec<f64> = ev.gradient.iter().map(|x| x * scale).collect();
        let next = mma_step(&eta, &g, vol - o.volume_fraction, &dvol, &mut mma)?;
        let change = next.iter().zip(&eta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let rec = IterationRecord {
            iter: k,
            objective: ev.objective,
            volume: vol,
            change,
            schedule: sched,
            forward_admm_iters: ev.forward_admm_iters,
            adjoint_admm_iters: ev.adjoint_admm_iters,
        };
        observer(&rec, &eta, &ev.eta_phys)?;
        history.push(rec);
        last_phys = ev.eta_phys;
        if change < o.conv_tol && k >= o.schedule.stationary_from() {
            converged = true;
            break;
        }
        eta = next;
    }
    if !converged {
        last_phys = filter.apply(&eta);
    }
    Ok(OptimizationResult { eta_phys: last_phys, eta_raw: eta, history, converged })
}
