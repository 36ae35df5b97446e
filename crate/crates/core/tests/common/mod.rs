#![allow(dead_code)]

use std::path::PathBuf;

use impactopt::config::RunConfig;
use impactopt::mesh::Mesh2D;

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

pub fn scenario(name: &str) -> RunConfig {
    RunConfig::load(scenario_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Bilinear interpolation of a nodal vector field on a structured design grid.
pub fn sample_vector(mesh: &Mesh2D, u: &[f64], x: f64, y: f64) -> [f64; 2] {
    let (hx, hy) = (mesh.length / mesh.nx as f64, mesh.height / mesh.ny as f64);
    let i = ((x / hx).floor() as usize).min(mesh.nx - 1);
    let j = ((y / hy).floor() as usize).min(mesh.ny - 1);
    let s = (x / hx - i as f64).clamp(0.0, 1.0);
    let t = (y / hy - j as f64).clamp(0.0, 1.0);
    let nxn = mesh.nx + 1;
    let n00 = i + j * nxn;
    let w = [(n00, (1.0 - s) * (1.0 - t)), (n00 + 1, s * (1.0 - t)), (n00 + 1 + nxn, s * t), (n00 + nxn, (1.0 - s) * t)];
    let mut out = [0.0; 2];
    for (n, wt) in w {
        out[0] += wt * u[2 * n];
        out[1] += wt * u[2 * n + 1];
    }
    out
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
