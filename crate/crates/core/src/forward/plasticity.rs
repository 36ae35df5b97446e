//! Implicit J2 viscoplastic return map at a single Gauss point.

use crate::constitutive::MaterialParams;
use crate::error::{Error, Result};
use crate::tensor::Sym3;

use super::GaussPointState;

/// Everything the adjoint needs to transpose one return-map evaluation.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ReturnMap {
    pub plastic: bool,
    pub dq: f64,
    /// Flow direction frozen at the trial state, `M:M = 3/2`.
    pub m: Sym3,
    /// Unit trial deviator.
    pub n_hat: Sym3,
    /// Norm of the trial elastic deviator.
    pub e_norm: f64,
    /// Trial Mises stress including the stiffness factor.
    pub sigma_m: f64,
    /// `df/d dq` at the root (negative).
    pub f_dq: f64,
    /// `df/dq` at the root.
    pub f_q: f64,
    /// `df/dB_e` and `df/dB_p` at the root.
    pub f_be: f64,
    pub f_bp: f64,
    /// `dg*/dqdot` at the converged rate.
    pub g_rate: f64,
}

/// Trial-state check followed, if plastic, by the scalar solve of
/// `sigma_M - 3 B_e mu dq - B_p [sigma_0(q + dq) + sigma_y (dq/(dt eps_dot_0))^(1/m)] = 0`.
/// Damage never enters.
pub fn return_map(
    eps: &Sym3,
    st: &GaussPointState,
    dt: f64,
    be: f64,
    bp: f64,
    mat: &MaterialParams,
) -> Result<(GaussPointState, ReturnMap)> {
    let mu = mat.shear();
    let e_tr = (*eps - st.eps_p).dev();
    let e_norm = e_tr.norm();
    let sigma_m0 = (1.5f64).sqrt() * 2.0 * mu * e_norm;
    let sigma_m = be * sigma_m0;
    let (s0, _) = mat.sigma0(st.q);
    if !(e_norm > 0.0) || sigma_m <= bp * s0 {
        return Ok((*st, ReturnMap { sigma_m, e_norm, ..Default::default() }));
    }
    let n_hat = e_tr.scale(1.0 / e_norm);
    let m_dir = n_hat.scale((1.5f64).sqrt());
    let rate_ref = dt * mat.eps_dot_p0;
    let f = |x: f64| {
        let (s, ds) = mat.sigma0(st.q + x);
        let y = x / rate_ref;
        let rate = mat.sigma_y * y.powf(1.0 / mat.m);
        let drate = if x > 0.0 { rate / (mat.m * x) } else { f64::INFINITY };
        (sigma_m - 3.0 * be * mu * x - bp * (s + rate), -3.0 * be * mu - bp * (ds + drate))
    };
    let hi0 = sigma_m / (3.0 * be * mu);
    let (mut lo, mut hi) = (0.0f64, hi0);
    let mut x = hi0;
    let mut converged = false;
    // The rate term is steep near zero, so roots can sit many decades below
    // `hi0`: tolerances are relative to the bracket and the fallback step
    // is geometric.
    for _ in 0..400 {
        let (fx, dfx) = f(x);
        if fx == 0.0 {
            converged = true;
            break;
        }
        if fx > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi || hi < f64::MIN_POSITIVE {
            x = if fx > 0.0 { lo } else { hi };
            converged = true;
            break;
        }
        let mut next = x - fx / dfx;
        if !(next > lo && next < hi) {
            next = if lo == 0.0 {
                1e-2 * hi
            } else if hi > 4.0 * lo {
                (lo * hi).sqrt()
            } else {
                0.5 * (lo + hi)
            };
        }
        if (next - x).abs() <= 2.0 * f64::EPSILON * x {
            x = next;
            converged = true;
            break;
        }
        x = next;
    }
    let (fx, f_dq) = f(x);
    if !converged || !fx.is_finite() || !f_dq.is_finite() {
        return Err(Error::Internal(format!(
            "return map did not converge (residual {fx:e}, trial {sigma_m:e})"
        )));
    }
    let dq = x;
    let q_new = st.q + dq;
    let (s_new, ds_new) = mat.sigma0(q_new);
    let qd = dq / dt;
    let g_rate = mat.gbar_prime(qd);
    let next = GaussPointState {
        alpha: st.alpha,
        q: q_new,
        eps_p: st.eps_p + m_dir.scale(dq),
        g_accum: st.g_accum + dt * mat.gbar(qd),
    };
    let rm = ReturnMap {
        plastic: true,
        dq,
        m: m_dir,
        n_hat,
        e_norm,
        sigma_m,
        f_dq,
        f_q: -bp * ds_new,
        f_be: sigma_m0 - 3.0 * mu * dq,
        f_bp: -(s_new + g_rate),
        g_rate,
    };
    Ok((next, rm))
}
