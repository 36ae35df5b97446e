//! Command-line front end.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Parser, ValueEnum};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::forward::{run_forward, ForwardOptions, ForwardState, StepDiagnostics};
use crate::objective::ObjectiveValue;
use crate::optimizer::run_optimization;
use crate::output::{
    diagnostics_row, history_row, read_vtk_scalar, write_snapshot, write_text, FieldSnapshot, DIAGNOSTICS_HEADER,
    HISTORY_HEADER,
};
use crate::sensitivity::{fd_gradient_check, sample_elements, DensityFilter, FdSettings};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_CHECK: i32 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Forward,
    AdjointCheck,
    Optimize,
}

#[derive(Debug, Parser)]
#[command(name = "impactopt", version, about = "Dynamic ductile fracture simulation and topology optimization")]
pub struct Args {
    #[arg(long, value_enum)]
    pub mode: Mode,
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub output_dir: PathBuf,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Snapshot every K steps (forward mode); overrides the config.
    #[arg(long)]
    pub stride: Option<usize>,
    /// Element design to simulate in forward mode, read from the `eta` field
    /// of a snapshot file. Defaults to the uniform initial design.
    #[arg(long)]
    pub design: Option<PathBuf>,
    /// Optimization iteration cap; overrides the config.
    #[arg(long)]
    pub max_iters: Option<usize>,
}

/// Outcome of a run that completed without an error.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Done,
    CheckFailed,
}

pub fn exit_code(r: &Result<Outcome>) -> i32 {
    match r {
        Ok(Outcome::Done) => EXIT_OK,
        Ok(Outcome::CheckFailed) => EXIT_CHECK,
        Err(Error::Config(_) | Error::InvalidArgument(_)) => EXIT_CONFIG,
        Err(_) => EXIT_SOLVER,
    }
}

pub fn main_with_args(args: Args) -> i32 {
    let r = run(&args);
    if let Err(e) = &r {
        match e {
            Error::Config(v) => {
                eprintln!("configuration error:");
                for m in v {
                    eprintln!("  - {m}");
                }
            }
            other => eprintln!("error: {other}"),
        }
    }
    exit_code(&r)
}

pub fn run(args: &Args) -> Result<Outcome> {
    // An unreadable config file is a configuration problem, not a solver one.
    let mut cfg = RunConfig::load(&args.config).map_err(|e| match e {
        Error::Io { .. } => Error::config(e.to_string()),
        e => e,
    })?;
    if let Some(k) = args.stride {
        if k == 0 {
            return Err(Error::config("--stride must be >= 1"));
        }
        cfg.output.stride = k;
    }
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(Error::config("--threads must be >= 1"));
        }
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let dir = &args.output_dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_text(dir.join("config.toml"), &cfg.to_toml_string()?)?;
    match args.mode {
        Mode::Forward => forward(&cfg, args.design.as_deref(), dir).map(|_| Outcome::Done),
        Mode::AdjointCheck => adjoint_check(&cfg, dir),
        Mode::Optimize => optimize(&cfg, args.max_iters, dir).map(|_| Outcome::Done),
    }
}

fn objective_csv(o: &ObjectiveValue) -> String {
    format!("O_total,O_disp,D_p,D_a\n{:.12e},{:.12e},{:.12e},{:.12e}\n", o.total, o.disp, o.dp, o.da)
}

/// Forward simulation with strided snapshots and per-step diagnostics.
/// Returns the objective of the trajectory.
pub fn forward(cfg: &RunConfig, design: Option<&Path>, dir: &Path) -> Result<ObjectiveValue> {
    let p = cfg.build_problem(None)?;
    let ne = p.mesh.n_design_elems;
    let eta = match design {
        Some(path) => {
            let v = read_vtk_scalar(path, "eta")?;
            if v.len() < ne {
                return Err(Error::invalid(format!("{}: design has {} values, need {ne}", path.display(), v.len())));
            }
            v[..ne].to_vec()
        }
        None => vec![cfg.eta_init(); ne],
    };
    let stride = cfg.output.stride;
    let steps = p.steps;
    let mut csv = String::from(DIAGNOSTICS_HEADER);
    csv.push('\n');
    let t0 = Instant::now();
    let mut obs = |st: &ForwardState, d: Option<&StepDiagnostics>| -> Result<()> {
        if let Some(d) = d {
            csv.push_str(&diagnostics_row(d));
            csv.push('\n');
            if st.step % stride == 0 || st.step == steps {
                let snap = FieldSnapshot::from_state(&p.mesh, &p.damage_fixed, st, &eta);
                write_snapshot(dir.join(format!("snapshot_{:06}.vtk", st.step)), &p.mesh, &snap)?;
                eprintln!(
                    "step {:>6}/{steps}  t = {:.4e}  max q = {:.3e}  max alpha = {:.3e}",
                    st.step, st.time, d.max_q, d.max_alpha
                );
            }
        }
        Ok(())
    };
    let res = run_forward(&p, &eta, ForwardOptions { record: false, r_schedule: None, observer: Some(&mut obs) });
    write_text(dir.join("diagnostics.csv"), &csv)?;
    let obj = res?.objective(&p)?;
    write_text(dir.join("objective.csv"), &objective_csv(&obj))?;
    eprintln!("objective {:.6e} (disp {:.3e}, Dp {:.3e}, Da {:.3e}) in {:.1?}", obj.total, obj.disp, obj.dp, obj.da, t0.elapsed());
    Ok(obj)
}

/// Finite-difference check of the adjoint gradient at sampled elements.
pub fn adjoint_check(cfg: &RunConfig, dir: &Path) -> Result<Outcome> {
    let p = cfg.build_problem(None)?;
    let c = &cfg.check;
    let ne = p.mesh.n_design_elems;
    let filter = DensityFilter::new(&p.mesh, cfg.optimizer.filter_radius_scale * cfg.geometry.length);
    let eta = cfg.check_design(ne, 2.0 * c.h);
    let els = sample_elements(ne, c.samples, cfg.seed);
    let settings = FdSettings { h: c.h, tol: c.tol, threshold: c.threshold, budget: Duration::from_secs_f64(c.budget_secs) };
    let rep = fd_gradient_check(&p, &filter, &eta, &els, &settings)?;
    write_text(dir.join("gradient_check.csv"), &rep.to_csv())?;
    for e in &rep.entries {
        eprintln!(
            "element {:>6}  adjoint {:+.6e}  fd {:+.6e}  rel err {:.2e}{}",
            e.element,
            e.adjoint,
            e.fd,
            e.rel_err,
            if e.judged { "" } else { "  (below threshold)" }
        );
    }
    let ok = rep.passed();
    eprintln!(
        "{}: max rel err {:.3e} over {} judged elements (tol {:.1e}){} in {:.1?}",
        if ok { "PASS" } else { "FAIL" },
        rep.max_rel_err(),
        rep.judged(),
        rep.tol,
        if rep.aborted { ", time budget exhausted" } else { "" },
        rep.elapsed
    );
    Ok(if ok { Outcome::Done } else { Outcome::CheckFailed })
}

fn raw_csv(eta: &[f64]) -> String {
    let mut s = String::from("element,eta_raw\n");
    for (i, x) in eta.iter().enumerate() {
        s.push_str(&format!("{i},{x}\n"));
    }
    s
}

/// Optimization with per-iteration design snapshots and an objective
/// history. On failure the last accepted iterate is kept as a checkpoint.
pub fn optimize(cfg: &RunConfig, max_iters: Option<usize>, dir: &Path) -> Result<()> {
    let p = cfg.build_problem(None)?;
    let mesh = p.mesh;
    let mut hist = String::from(HISTORY_HEADER);
    hist.push('\n');
    let mut last_raw: Option<(usize, Vec<f64>)> = None;
    let mut obs = |rec: &crate::optimizer::IterationRecord, raw: &[f64], phys: &[f64]| -> Result<()> {
        hist.push_str(&history_row(rec));
        hist.push('\n');
        write_text(dir.join("objective_history.csv"), &hist)?;
        write_snapshot(dir.join(format!("design_{:04}.vtk", rec.iter)), &mesh, &FieldSnapshot::design(&mesh, phys))?;
        last_raw = Some((rec.iter, raw.to_vec()));
        eprintln!(
            "iter {:>4}  O = {:.6e}  V = {:.4}  change = {:.3e}",
            rec.iter, rec.objective.total, rec.volume, rec.change
        );
        Ok(())
    };
    match run_optimization(cfg, max_iters, &mut obs) {
        Ok(res) => {
            write_snapshot(dir.join("final_design.vtk"), &mesh, &FieldSnapshot::design(&mesh, &res.eta_phys))?;
            write_text(dir.join("final_design_raw.csv"), &raw_csv(&res.eta_raw))?;
            eprintln!("{} after {} iterations", if res.converged { "converged" } else { "stopped" }, res.history.len());
            Ok(())
        }
        Err(e) => {
            if let Some((k, raw)) = last_raw {
                write_text(dir.join("checkpoint_raw.csv"), &raw_csv(&raw))?;
                eprintln!("optimization failed; iterate {k} saved as checkpoint");
            }
            Err(e)
        }
    }
}
