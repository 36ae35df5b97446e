//! Density filter, the full gradient pipeline (filter, forward, adjoint,
//! filter transpose), and the finite-difference gradient checker.

use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;

use crate::adjoint::{run_adjoint, SensitivityTerms};
use crate::error::{Error, Result};
use crate::forward::admm::AdmmSettings;
use crate::forward::{run_forward, ForwardOptions, ForwardResult};
use crate::mesh::Mesh2D;
use crate::objective::ObjectiveValue;
use crate::problem::Problem;

/// Renormalized cone filter on design-element centroids.
#[derive(Clone, Debug)]
pub struct DensityFilter {
    rows: Vec<Vec<(usize, f64)>>,
}

impl DensityFilter {
    pub fn new(mesh: &Mesh2D, radius: f64) -> Self {
        let n = mesh.n_design_elems;
        let c: Vec<[f64; 2]> = (0..n).map(|e| mesh.centroid(e)).collect();
        let rows = (0..n)
            .map(|e| {
                let mut row: Vec<(usize, f64)> = (0..n)
                    .filter_map(|i| {
                        let d = ((c[e][0] - c[i][0]).powi(2) + (c[e][1] - c[i][1]).powi(2)).sqrt();
                        let w = (radius - d).max(0.0) * mesh.area(i);
                        (w > 0.0).then_some((i, w))
                    })
                    .collect();
                if row.is_empty() {
                    row.push((e, 1.0));
                }
                let s: f64 = row.iter().map(|x| x.1).sum();
                row.iter_mut().for_each(|x| x.1 /= s);
                row
            })
            .collect();
        DensityFilter { rows }
    }

    pub fn identity(n: usize) -> Self {
        DensityFilter { rows: (0..n).map(|e| vec![(e, 1.0)]).collect() }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, e: usize) -> &[(usize, f64)] {
        &self.rows[e]
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.iter().map(|&(i, w)| w * x[i]).sum()).collect()
    }

    pub fn transpose(&self, g: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows.len()];
        for (e, r) in self.rows.iter().enumerate() {
            for &(i, w) in r {
                out[i] += w * g[e];
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct Evaluation {
    pub objective: ObjectiveValue,
    pub eta_phys: Vec<f64>,
    /// Gradient with respect to the raw design.
    pub gradient: Vec<f64>,
    /// Gradient with respect to the filtered design.
    pub gradient_phys: Vec<f64>,
    pub terms: SensitivityTerms,
    /// Penalty per forward step, for replay.
    pub r_history: Vec<f64>,
    pub factorizations: usize,
    pub forward_admm_iters: usize,
    pub adjoint_admm_iters: usize,
}

/// Objective and gradient at a raw design.
pub fn evaluate(
    p: &Problem,
    filter: &DensityFilter,
    eta_raw: &[f64],
    r_schedule: Option<&[f64]>,
    adjoint_settings: Option<&AdmmSettings>,
) -> Result<(Evaluation, ForwardResult)> {
    let eta_phys = filter.apply(eta_raw);
    let mut fwd = run_forward(p, &eta_phys, ForwardOptions { record: true, r_schedule, observer: None })?;
    let objective = fwd.objective(p)?;
    let adj = run_adjoint(p, &mut fwd, adjoint_settings)?;
    let gradient = filter.transpose(&adj.gradient);
    let ev = Evaluation {
        objective,
        eta_phys,
        gradient,
        gradient_phys: adj.gradient,
        terms: adj.terms,
        r_history: fwd.r_history.clone(),
        factorizations: fwd.factorizations(),
        forward_admm_iters: fwd.diagnostics.iter().map(|d| d.admm_iters).sum(),
        adjoint_admm_iters: adj.admm.iter().map(|s| s.iters).sum(),
    };
    Ok((ev, fwd))
}

/// Objective only, optionally replaying a penalty schedule.
pub fn objective_at(p: &Problem, filter: &DensityFilter, eta_raw: &[f64], r_schedule: Option<&[f64]>) -> Result<ObjectiveValue> {
    let eta_phys = filter.apply(eta_raw);
    run_forward(p, &eta_phys, ForwardOptions { record: false, r_schedule, observer: None })?.objective(p)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdEntry {
    pub element: usize,
    pub adjoint: f64,
    pub fd: f64,
    pub rel_err: f64,
    /// Whether the entry is large enough to be held to the tolerance.
    pub judged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FdReport {
    pub entries: Vec<FdEntry>,
    pub h: f64,
    pub tol: f64,
    pub max_abs_grad: f64,
    pub objective: f64,
    /// Set when the time budget ran out before every sample was checked.
    pub aborted: bool,
    pub elapsed: Duration,
}

impl FdReport {
    pub fn max_rel_err(&self) -> f64 {
        self.entries.iter().filter(|e| e.judged).map(|e| e.rel_err).fold(0.0, f64::max)
    }

    pub fn judged(&self) -> usize {
        self.entries.iter().filter(|e| e.judged).count()
    }

    pub fn passed(&self) -> bool {
        !self.aborted && self.judged() > 0 && self.max_rel_err() <= self.tol
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("element,adjoint_grad,fd_grad,rel_err,judged\n");
        for e in &self.entries {
            s.push_str(&format!("{},{:.12e},{:.12e},{:.6e},{}\n", e.element, e.adjoint, e.fd, e.rel_err, e.judged));
        }
        s
    }
}

/// `count` distinct element indices drawn with a seeded generator.
pub fn sample_elements(n: usize, count: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut StdRng::seed_from_u64(seed));
    idx.truncate(count.min(n));
    idx
}

/// Settings of a gradient check.
#[derive(Clone, Debug)]
pub struct FdSettings {
    pub h: f64,
    pub tol: f64,
    pub threshold: f64,
    pub budget: Duration,
}

/// Compares the adjoint gradient with central differences of the objective
/// in the raw design at the sampled elements. The forward penalty schedule
/// of the base point is replayed in the perturbed runs so every evaluation
/// solves the same discrete problem.
pub fn fd_gradient_check(
    p: &Problem,
    filter: &DensityFilter,
    eta_raw: &[f64],
    elements: &[usize],
    s: &FdSettings,
) -> Result<FdReport> {
    let start = Instant::now();
    let (lo, hi) = p.interp.bounds();
    if eta_raw.iter().any(|&x| x - s.h < lo || x + s.h > hi) {
        return Err(Error::invalid("design too close to its bounds for the finite-difference step"));
    }
    let (ev, _) = evaluate(p, filter, eta_raw, None, None)?;
    let sched = ev.r_history.clone();
    let max_abs = ev.gradient.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    let mut report = FdReport {
        entries: Vec::new(),
        h: s.h,
        tol: s.tol,
        max_abs_grad: max_abs,
        objective: ev.objective.total,
        aborted: false,
        elapsed: Duration::ZERO,
    };
    for &e in elements {
        if start.elapsed() > s.budget {
            report.aborted = true;
            break;
        }
        let mut x = eta_raw.to_vec();
        x[e] = eta_raw[e] + s.h;
        let fp = objective_at(p, filter, &x, Some(&sched))?.total;
        x[e] = eta_raw[e] - s.h;
        let fm = objective_at(p, filter, &x, Some(&sched))?.total;
        let fd = (fp - fm) / (2.0 * s.h);
        let adj = ev.gradient[e];
        let denom = fd.abs().max(adj.abs());
        let rel_err = if denom > 0.0 { (adj - fd).abs() / denom } else { 0.0 };
        report.entries.push(FdEntry { element: e, adjoint: adj, fd, rel_err, judged: adj.abs() >= s.threshold * max_abs });
    }
    report.elapsed = start.elapsed();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_structured_mesh;

    #[test]
    fn small_radius_is_identity() {
        let m = build_structured_mesh(5, 3, 1.0, 0.6).unwrap();
        let f = DensityFilter::new(&m, 0.1);
        let x: Vec<f64> = (0..15).map(|i| i as f64).collect();
        assert_eq!(f.apply(&x), x);
    }

    #[test]
    fn rows_sum_to_one() {
        let m = build_structured_mesh(10, 4, 1.0, 0.4).unwrap();
        let f = DensityFilter::new(&m, 0.25);
        for e in 0..f.len() {
            let s: f64 = f.row(e).iter().map(|x| x.1).sum();
            assert!((s - 1.0).abs() < 1e-14);
        }
        let u = f.apply(&vec![0.3; 40]);
        assert!(u.iter().all(|v| (v - 0.3).abs() < 1e-15));
    }

    #[test]
    fn sampling_is_deterministic() {
        assert_eq!(sample_elements(50, 10, 7), sample_elements(50, 10, 7));
        let mut s = sample_elements(50, 10, 7);
        s.sort_unstable();
        s.dedup();
        assert_eq!(s.len(), 10);
    }
}
