//! Symmetric 3x3 tensors restricted to plane strain: the out-of-plane shear
//! components are identically zero, so only `xx`, `yy`, `zz` and `xy` are kept.
//!
//! `xy` holds the tensor component (not the engineering shear). The inner
//! product is the full Frobenius product, so `xy` counts twice.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Sym3 {
    pub xx: f64,
    pub yy: f64,
    pub zz: f64,
    pub xy: f64,
}

impl Sym3 {
    pub const ZERO: Sym3 = Sym3 { xx: 0.0, yy: 0.0, zz: 0.0, xy: 0.0 };

    pub const fn new(xx: f64, yy: f64, zz: f64, xy: f64) -> Self {
        Sym3 { xx, yy, zz, xy }
    }

    pub const fn identity() -> Self {
        Sym3 { xx: 1.0, yy: 1.0, zz: 1.0, xy: 0.0 }
    }

    /// Small strain from an in-plane displacement gradient `g[i][j] = du_i/dx_j`.
    pub fn from_grad(g: [[f64; 2]; 2]) -> Self {
        Sym3 { xx: g[0][0], yy: g[1][1], zz: 0.0, xy: 0.5 * (g[0][1] + g[1][0]) }
    }

    #[inline]
    pub fn trace(&self) -> f64 {
        self.xx + self.yy + self.zz
    }

    #[inline]
    pub fn dev(&self) -> Self {
        let m = self.trace() / 3.0;
        Sym3 { xx: self.xx - m, yy: self.yy - m, zz: self.zz - m, xy: self.xy }
    }

    #[inline]
    pub fn dot(&self, o: &Sym3) -> f64 {
        self.xx * o.xx + self.yy * o.yy + self.zz * o.zz + 2.0 * self.xy * o.xy
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    #[inline]
    pub fn scale(&self, s: f64) -> Self {
        Sym3 { xx: s * self.xx, yy: s * self.yy, zz: s * self.zz, xy: s * self.xy }
    }

    pub fn max_abs(&self) -> f64 {
        self.xx.abs().max(self.yy.abs()).max(self.zz.abs()).max(self.xy.abs())
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.xx, self.yy, self.zz, self.xy]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Sym3 { xx: a[0], yy: a[1], zz: a[2], xy: a[3] }
    }
}

impl Add for Sym3 {
    type Output = Sym3;
    #[inline]
    fn add(self, o: Sym3) -> Sym3 {
        Sym3 { xx: self.xx + o.xx, yy: self.yy + o.yy, zz: self.zz + o.zz, xy: self.xy + o.xy }
    }
}

impl Sub for Sym3 {
    type Output = Sym3;
    #[inline]
    fn sub(self, o: Sym3) -> Sym3 {
        Sym3 { xx: self.xx - o.xx, yy: self.yy - o.yy, zz: self.zz - o.zz, xy: self.xy - o.xy }
    }
}

impl Neg for Sym3 {
    type Output = Sym3;
    #[inline]
    fn neg(self) -> Sym3 {
        self.scale(-1.0)
    }
}

impl Mul<Sym3> for f64 {
    type Output = Sym3;
    #[inline]
    fn mul(self, t: Sym3) -> Sym3 {
        t.scale(self)
    }
}

impl AddAssign for Sym3 {
    #[inline]
    fn add_assign(&mut self, o: Sym3) {
        *self = *self + o;
    }
}

impl SubAssign for Sym3 {
    #[inline]
    fn sub_assign(&mut self, o: Sym3) {
        *self = *self - o;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dev_is_trace_free() {
        let t = Sym3::new(1.0, -2.0, 0.5, 0.3);
        assert!(t.dev().trace().abs() < 1e-15);
    }

    #[test]
    fn frobenius_counts_shear_twice() {
        let t = Sym3::new(0.0, 0.0, 0.0, 1.0);
        assert_eq!(t.dot(&t), 2.0);
    }

    #[test]
    fn strain_from_grad_is_symmetric_part() {
        let e = Sym3::from_grad([[1.0, 2.0], [4.0, 3.0]]);
        assert_eq!(e, Sym3::new(1.0, 3.0, 0.0, 3.0));
    }
}
