//! Method of moving asymptotes for one inequality constraint, with the
//! dual of the convex subproblem solved by bisection.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct MmaState {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Previous two iterates, most recent first.
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub iter: usize,
    pub move_limit: f64,
    pub xmin: f64,
    pub xmax: f64,
}

impl MmaState {
    pub fn new(n: usize, xmin: f64, xmax: f64, move_limit: f64) -> Self {
        MmaState {
            lower: vec![xmin; n],
            upper: vec![xmax; n],
            x1: Vec::new(),
            x2: Vec::new(),
            iter: 0,
            move_limit,
            xmin,
            xmax,
        }
    }
}

const ASYINIT: f64 = 0.5;
const ASYINCR: f64 = 1.2;
const ASYDECR: f64 = 0.7;
const ALBEFA: f64 = 0.1;
const RAA0: f64 = 1e-5;
/// Closest an asymptote may get to the iterate, relative to the range.
const ASYMIN: f64 = 1e-5;

/// One MMA update of `x` for objective gradient `g0` and the constraint
/// `c(x) <= 0` with value `c` and gradient `dc`.
pub fn mma_step(x: &[f64], g0: &[f64], c: f64, dc: &[f64], st: &mut MmaState) -> Result<Vec<f64>> {
    let n = x.len();
    if g0.len() != n || dc.len() != n || st.lower.len() != n {
        return Err(Error::invalid("MMA input sizes differ"));
    }
    let range = st.xmax - st.xmin;
    st.iter += 1;
    for j in 0..n {
        if st.iter <= 2 || st.x2.is_empty() {
            st.lower[j] = x[j] - ASYINIT * range;
            st.upper[j] = x[j] + ASYINIT * range;
        } else {
            let s = (x[j] - st.x1[j]) * (st.x1[j] - st.x2[j]);
            let gamma = if s > 0.0 {
                ASYINCR
            } else if s < 0.0 {
                ASYDECR
            } else {
                1.0
            };
            let lo = x[j] - gamma * (st.x1[j] - st.lower[j]);
            let up = x[j] + gamma * (st.upper[j] - st.x1[j]);
            st.lower[j] = lo.clamp(x[j] - 10.0 * range, x[j] - ASYMIN * range);
            st.upper[j] = up.clamp(x[j] + ASYMIN * range, x[j] + 10.0 * range);
        }
    }
    let mut alpha = vec![0.0; n];
    let mut beta = vec![0.0; n];
    let (mut p0, mut q0, mut p1, mut q1) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut r1 = c;
    for j in 0..n {
        let (l, u) = (st.lower[j], st.upper[j]);
        alpha[j] = st.xmin.max(l + ALBEFA * (x[j] - l)).max(x[j] - st.move_limit * range);
        beta[j] = st.xmax.min(u - ALBEFA * (u - x[j])).min(x[j] + st.move_limit * range);
        let (ux2, xl2) = ((u - x[j]).powi(2), (x[j] - l).powi(2));
        let reg = RAA0 / range;
        p0[j] = ux2 * (1.001 * g0[j].max(0.0) + 0.001 * (-g0[j]).max(0.0) + reg);
        q0[j] = xl2 * (0.001 * g0[j].max(0.0) + 1.001 * (-g0[j]).max(0.0) + reg);
        p1[j] = ux2 * (1.001 * dc[j].max(0.0) + 0.001 * (-dc[j]).max(0.0) + reg);
        q1[j] = xl2 * (0.001 * dc[j].max(0.0) + 1.001 * (-dc[j]).max(0.0) + reg);
        r1 -= p1[j] / (u - x[j]) + q1[j] / (x[j] - l);
    }
    let primal = |lam: f64, out: &mut Vec<f64>| -> f64 {
        let mut g = r1;
        for j in 0..n {
            let (l, u) = (st.lower[j], st.upper[j]);
            let pp = (p0[j] + lam * p1[j]).sqrt();
            let qq = (q0[j] + lam * q1[j]).sqrt();
            let xj = ((pp * l + qq * u) / (pp + qq)).clamp(alpha[j], beta[j]);
            out[j] = xj;
            g += p1[j] / (u - xj) + q1[j] / (xj - l);
        }
        g
    };
    let mut xn = vec![0.0; n];
    if primal(0.0, &mut xn) > 0.0 {
        let mut hi = 1.0;
        let mut tries = 0;
        while primal(hi, &mut xn) > 0.0 {
            hi *= 10.0;
            tries += 1;
            if tries > 300 {
                return Err(Error::config(
                    "MMA subproblem infeasible: the volume bound cannot be met within the move limits",
                ));
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if primal(mid, &mut xn) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        primal(hi, &mut xn);
    }
    st.x2 = std::mem::take(&mut st.x1);
    st.x1 = x.to_vec();
    Ok(xn)
}
