//! Field snapshots as legacy ASCII VTK unstructured grids, and CSV tables
//! for scalar histories.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::forward::{ForwardState, GaussPointState, StepDiagnostics};
use crate::mesh::{Block, Mesh2D};
use crate::optimizer::IterationRecord;

/// Element and nodal fields of one instant.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldSnapshot {
    pub step: usize,
    pub time: f64,
    /// Nodal displacement, two components per node.
    pub u: Vec<f64>,
    /// Nodal phase field (zero outside the design domain).
    pub a: Vec<f64>,
    /// Design value per element; non-design blocks carry 1.
    pub eta: Vec<f64>,
    /// Gauss-point averages per element (zero outside the design domain).
    pub q: Vec<f64>,
    pub alpha: Vec<f64>,
    pub eps_p: Vec<f64>,
}

impl FieldSnapshot {
    /// `damage_fixed` flags the constrained design nodes; the state's phase
    /// field lives on the remaining ones in ascending order.
    pub fn from_state(mesh: &Mesh2D, damage_fixed: &[bool], st: &ForwardState, eta: &[f64]) -> Self {
        let ne = mesh.n_elems();
        let mut s = FieldSnapshot {
            step: st.step,
            time: st.time,
            u: st.u.clone(),
            a: vec![0.0; mesh.n_nodes()],
            eta: vec![1.0; ne],
            q: vec![0.0; ne],
            alpha: vec![0.0; ne],
            eps_p: vec![0.0; ne],
        };
        let free = damage_fixed.iter().enumerate().filter(|(_, &f)| !f).map(|(i, _)| i);
        for (node, &v) in free.zip(&st.a) {
            s.a[node] = v;
        }
        s.eta[..eta.len()].copy_from_slice(eta);
        fill_gauss_averages(mesh, &st.gp, &mut s);
        s
    }

    /// Design-only snapshot with zero state.
    pub fn design(mesh: &Mesh2D, eta: &[f64]) -> Self {
        let ne = mesh.n_elems();
        let mut eta_full = vec![1.0; ne];
        eta_full[..eta.len()].copy_from_slice(eta);
        FieldSnapshot {
            step: 0,
            time: 0.0,
            u: vec![0.0; mesh.n_dofs()],
            a: vec![0.0; mesh.n_nodes()],
            eta: eta_full,
            q: vec![0.0; ne],
            alpha: vec![0.0; ne],
            eps_p: vec![0.0; ne],
        }
    }
}

fn fill_gauss_averages(mesh: &Mesh2D, gp: &[GaussPointState], s: &mut FieldSnapshot) {
    for e in 0..mesh.n_design_elems {
        let pts = &gp[4 * e..4 * e + 4];
        s.q[e] = 0.25 * pts.iter().map(|p| p.q).sum::<f64>();
        s.alpha[e] = 0.25 * pts.iter().map(|p| p.alpha).sum::<f64>();
        s.eps_p[e] = 0.25 * pts.iter().map(|p| p.eps_p.norm()).sum::<f64>();
    }
}

fn block_id(b: Block) -> u8 {
    match b {
        Block::Design => 0,
        Block::Contact => 1,
        Block::Flyer => 2,
    }
}

/// Renders a snapshot. Floats use the shortest round-trip representation so
/// that reading back is exact.
pub fn snapshot_vtk(mesh: &Mesh2D, s: &FieldSnapshot) -> String {
    let nn = mesh.n_nodes();
    let ne = mesh.n_elems();
    let mut o = String::with_capacity(64 * (nn + ne));
    let _ = writeln!(o, "# vtk DataFile Version 3.0");
    let _ = writeln!(o, "impactopt step {} time {}", s.step, s.time);
    let _ = writeln!(o, "ASCII\nDATASET UNSTRUCTURED_GRID");
    let _ = writeln!(o, "FIELD FieldData 2\nSTEP 1 1 int\n{}\nTIME 1 1 double\n{}", s.step, s.time);
    let _ = writeln!(o, "POINTS {nn} double");
    for c in &mesh.coords {
        let _ = writeln!(o, "{} {} 0", c[0], c[1]);
    }
    let _ = writeln!(o, "CELLS {ne} {}", 5 * ne);
    for el in &mesh.elements {
        let _ = writeln!(o, "4 {} {} {} {}", el[0], el[1], el[2], el[3]);
    }
    let _ = writeln!(o, "CELL_TYPES {ne}");
    for _ in 0..ne {
        let _ = writeln!(o, "9");
    }
    let _ = writeln!(o, "CELL_DATA {ne}");
    let _ = writeln!(o, "SCALARS block int 1\nLOOKUP_TABLE default");
    for &b in &mesh.blocks {
        let _ = writeln!(o, "{}", block_id(b));
    }
    for (name, v) in [("eta", &s.eta), ("q", &s.q), ("alpha", &s.alpha), ("eps_p_norm", &s.eps_p)] {
        let _ = writeln!(o, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for x in v.iter() {
            let _ = writeln!(o, "{x}");
        }
    }
    let _ = writeln!(o, "POINT_DATA {nn}");
    let _ = writeln!(o, "VECTORS displacement double");
    for i in 0..nn {
        let _ = writeln!(o, "{} {} 0", s.u[2 * i], s.u[2 * i + 1]);
    }
    let _ = writeln!(o, "SCALARS phase_field double 1\nLOOKUP_TABLE default");
    for x in &s.a {
        let _ = writeln!(o, "{x}");
    }
    o
}

pub fn write_snapshot(path: impl AsRef<Path>, mesh: &Mesh2D, s: &FieldSnapshot) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, snapshot_vtk(mesh, s)).map_err(|e| Error::io(path, e))
}

/// Reads a named scalar field (cell or point data) back from a snapshot.
pub fn read_vtk_scalar(path: impl AsRef<Path>, name: &str) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let mut count = None;
    while let Some(line) = lines.next() {
        let mut it = line.split_whitespace();
        match it.next() {
            Some("CELL_DATA") | Some("POINT_DATA") => count = it.next().and_then(|c| c.parse::<usize>().ok()),
            Some("SCALARS") if it.next() == Some(name) => {
                let n = count.ok_or_else(|| Error::invalid(format!("{}: field {name} has no size", path.display())))?;
                lines.next();
                let vals: std::result::Result<Vec<f64>, _> = lines.by_ref().take(n).map(|l| l.trim().parse::<f64>()).collect();
                let vals = vals.map_err(|e| Error::invalid(format!("{}: bad value in {name}: {e}", path.display())))?;
                if vals.len() != n {
                    return Err(Error::invalid(format!("{}: field {name} is truncated", path.display())));
                }
                return Ok(vals);
            }
            _ => {}
        }
    }
    Err(Error::invalid(format!("{}: no field named {name}", path.display())))
}

pub const DIAGNOSTICS_HEADER: &str =
    "step,time,admm_iters,r,r_p,r_d,tol_p,tol_d,kinetic,strain,plastic,damage,max_alpha,max_q,plastic_points";

pub fn diagnostics_row(d: &StepDiagnostics) -> String {
    format!(
        "{},{:.9e},{},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{}",
        d.step, d.time, d.admm_iters, d.r, d.r_p, d.r_d, d.tol_p, d.tol_d, d.kinetic, d.strain, d.plastic, d.damage, d.max_alpha, d.max_q, d.plastic_points
    )
}

pub fn diagnostics_csv(d: &[StepDiagnostics]) -> String {
    let mut s = String::from(DIAGNOSTICS_HEADER);
    s.push('\n');
    for x in d {
        s.push_str(&diagnostics_row(x));
        s.push('\n');
    }
    s
}

pub const HISTORY_HEADER: &str = "iter,O_total,O_disp,D_p,D_a,volume,change,k1,k2,load,p,forward_admm_iters,adjoint_admm_iters";

pub fn history_row(r: &IterationRecord) -> String {
    let o = &r.objective;
    let s = &r.schedule;
    format!(
        "{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.6e},{},{},{},{},{},{}",
        r.iter, o.total, o.disp, o.dp, o.da, r.volume, r.change, s.k1, s.k2, s.load, s.p, r.forward_admm_iters, r.adjoint_admm_iters
    )
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_structured_mesh;

    #[test]
    fn eta_round_trips_exactly() {
        let m = build_structured_mesh(4, 3, 1.0, 0.75).unwrap();
        let eta: Vec<f64> = (0..12).map(|i| 0.01 + (i as f64 * 0.7).sin().abs() / 3.0).collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.vtk");
        write_snapshot(&path, &m, &FieldSnapshot::design(&m, &eta)).unwrap();
        assert_eq!(read_vtk_scalar(&path, "eta").unwrap(), eta);
        assert_eq!(read_vtk_scalar(&path, "phase_field").unwrap(), vec![0.0; 20]);
    }
}
