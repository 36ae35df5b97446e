//! External loading: a truncated Gaussian traction on the top edge with a
//! prescribed total impulse, plus an optional uniform body force.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::Mesh2D;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PulseShape {
    Rectangular,
    HalfSine,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoadProgram {
    /// `(node, weight)` pairs of the traction profile; weights sum to one.
    pub nodal: Vec<(usize, f64)>,
    /// Total impulse per unit thickness, applied downward.
    pub impulse: f64,
    pub duration: f64,
    pub shape: PulseShape,
    /// Continuation multiplier on the impulse.
    pub scale: f64,
    /// Body force per unit volume.
    pub body_force: [f64; 2],
}

impl LoadProgram {
    pub fn none() -> Self {
        LoadProgram {
            nodal: Vec::new(),
            impulse: 0.0,
            duration: 1.0,
            shape: PulseShape::Rectangular,
            scale: 1.0,
            body_force: [0.0, 0.0],
        }
    }

    /// Time integral of the pulse over `[t0, t1]`.
    pub fn pulse_integral(&self, t0: f64, t1: f64) -> f64 {
        let a = t0.max(0.0);
        let b = t1.min(self.duration);
        if b <= a {
            return 0.0;
        }
        match self.shape {
            PulseShape::Rectangular => self.impulse * (b - a) / self.duration,
            PulseShape::HalfSine => {
                let w = std::f64::consts::PI / self.duration;
                0.5 * self.impulse * ((w * a).cos() - (w * b).cos())
            }
        }
    }

    /// Impulse delivered by step `n`: the pulse integrated over the window
    /// `[t_n - dt/2, t_n + dt/2]` clipped at zero. The windows tile the time
    /// axis, so the step impulses sum to the total impulse.
    pub fn step_impulse(&self, n: usize, dt: f64) -> f64 {
        let t = n as f64 * dt;
        self.scale * self.pulse_integral(t - 0.5 * dt, t + 0.5 * dt)
    }

    /// Adds the external force of step `n` to `f`. `kick` is the fraction of
    /// a full step the velocity update uses at this step.
    pub fn add_force(&self, n: usize, dt: f64, kick: f64, body: &[f64], f: &mut [f64]) {
        let imp = self.step_impulse(n, dt);
        if imp != 0.0 {
            let mag = imp / (kick * dt);
            for &(node, w) in &self.nodal {
                f[2 * node + 1] -= w * mag;
            }
        }
        if !body.is_empty() {
            for (fi, bi) in f.iter_mut().zip(body) {
                *fi += bi;
            }
        }
    }
}

const GL5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

/// Consistent nodal weights of a Gaussian traction with standard deviation
/// `std`, centred at `center` and truncated to `|x - center| <= half_width`,
/// on the top edge of the design grid. Normalized to unit total force.
pub fn gaussian_profile(mesh: &Mesh2D, center: f64, std: f64, half_width: f64) -> Result<Vec<(usize, f64)>> {
    if !(std > 0.0 && half_width > 0.0) {
        return Err(Error::invalid("traction width and deviation must be positive"));
    }
    let top = mesh.node_set("top");
    let mut w = vec![0.0; top.len()];
    let g = |x: f64| (-(x - center) * (x - center) / (2.0 * std * std)).exp();
    for s in 0..top.len().saturating_sub(1) {
        let (x0, x1) = (mesh.coords[top[s]][0], mesh.coords[top[s + 1]][0]);
        let a = x0.max(center - half_width);
        let b = x1.min(center + half_width);
        if b <= a {
            continue;
        }
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        for (xi, wq) in GL5 {
            let x = mid + half * xi;
            let t = (x - x0) / (x1 - x0);
            let v = wq * half * g(x);
            w[s] += v * (1.0 - t);
            w[s + 1] += v * t;
        }
    }
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return Err(Error::invalid("traction window does not intersect the top edge"));
    }
    Ok(top.iter().zip(&w).filter(|(_, &v)| v > 0.0).map(|(&i, &v)| (i, v / total)).collect())
}

/// Consistent nodal forces of a uniform body force over the given elements.
pub fn body_force_nodal(mesh: &Mesh2D, fb: [f64; 2]) -> Vec<f64> {
    let mut f = vec![0.0; mesh.n_dofs()];
    if fb == [0.0, 0.0] {
        return f;
    }
    for e in 0..mesh.n_elems() {
        let k = mesh.kernel(e);
        for (a, &i) in mesh.elements[e].iter().enumerate() {
            let s: f64 = (0..4).map(|g| k.w[g] * k.n[g][a]).sum();
            f[2 * i] += fb[0] * s;
            f[2 * i + 1] += fb[1] * s;
        }
    }
    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_structured_mesh;

    #[test]
    fn step_impulses_sum_to_total() {
        for shape in [PulseShape::Rectangular, PulseShape::HalfSine] {
            let lp = LoadProgram { impulse: 2.5, duration: 0.37, shape, ..LoadProgram::none() };
            let total: f64 = (0..200).map(|n| lp.step_impulse(n, 0.01)).sum();
            assert!((total - 2.5).abs() < 1e-12, "{shape:?}: {total}");
        }
    }

    #[test]
    fn profile_is_normalized_and_truncated() {
        let m = build_structured_mesh(40, 4, 1.0, 0.25).unwrap();
        let p = gaussian_profile(&m, 0.5, 0.05, 0.1).unwrap();
        let s: f64 = p.iter().map(|x| x.1).sum();
        assert!((s - 1.0).abs() < 1e-14);
        for &(i, _) in &p {
            let x = m.coords[i][0];
            assert!((x - 0.5).abs() <= 0.1 + 1.0 / 40.0 + 1e-12);
        }
    }
}
