//! Structured meshes of axis-aligned bilinear quadrilaterals.
//!
//! Node and element numbering is dense and 0-based. The design domain always
//! comes first: nodes `0..n_design_nodes` and elements `0..n_design_elems`
//! form the `nx` by `ny` grid, with node `(i, j)` at index `i + j*(nx+1)`.
//! Extra blocks (contact layer, flyer) are appended after it.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::tensor::Sym3;

/// Gauss abscissa of the 2-point rule on [-1, 1].
pub const GAUSS_X: f64 = 0.577_350_269_189_625_8;

/// Reference coordinates of the four element corners, counter-clockwise.
const CORNERS: [[f64; 2]; 4] = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Block {
    Design,
    Contact,
    Flyer,
}

/// Shape values, physical gradients and quadrature weights of a rectangle.
#[derive(Clone, Debug)]
pub struct GaussKernel {
    /// `n[g][a]`: shape function `a` at Gauss point `g`.
    pub n: [[f64; 4]; 4],
    pub dndx: [[f64; 4]; 4],
    pub dndy: [[f64; 4]; 4],
    /// Quadrature weight times Jacobian determinant.
    pub w: [f64; 4],
    pub hx: f64,
    pub hy: f64,
}

impl GaussKernel {
    pub fn rectangle(hx: f64, hy: f64) -> Self {
        let mut n = [[0.0; 4]; 4];
        let mut dndx = [[0.0; 4]; 4];
        let mut dndy = [[0.0; 4]; 4];
        for (g, gp) in CORNERS.iter().enumerate() {
            let (xi, et) = (gp[0] * GAUSS_X, gp[1] * GAUSS_X);
            for (a, c) in CORNERS.iter().enumerate() {
                n[g][a] = 0.25 * (1.0 + c[0] * xi) * (1.0 + c[1] * et);
                dndx[g][a] = 0.25 * c[0] * (1.0 + c[1] * et) * 2.0 / hx;
                dndy[g][a] = 0.25 * c[1] * (1.0 + c[0] * xi) * 2.0 / hy;
            }
        }
        let wq = 0.25 * hx * hy;
        GaussKernel { n, dndx, dndy, w: [wq; 4], hx, hy }
    }

    pub fn jacobian_det(&self) -> f64 {
        0.25 * self.hx * self.hy
    }

    /// Plane strain at Gauss point `g` from local dofs `[ux0, uy0, ux1, ...]`.
    #[inline]
    pub fn strain(&self, g: usize, ue: &[f64; 8]) -> Sym3 {
        let (mut gxx, mut gxy, mut gyx, mut gyy) = (0.0, 0.0, 0.0, 0.0);
        for a in 0..4 {
            let (dx, dy) = (self.dndx[g][a], self.dndy[g][a]);
            gxx += dx * ue[2 * a];
            gxy += dy * ue[2 * a];
            gyx += dx * ue[2 * a + 1];
            gyy += dy * ue[2 * a + 1];
        }
        Sym3::new(gxx, gyy, 0.0, 0.5 * (gxy + gyx))
    }

    /// `B^T sigma` for Gauss point `g` (no quadrature weight applied).
    #[inline]
    pub fn bt(&self, g: usize, s: &Sym3) -> [f64; 8] {
        let mut out = [0.0; 8];
        for a in 0..4 {
            let (dx, dy) = (self.dndx[g][a], self.dndy[g][a]);
            out[2 * a] = s.xx * dx + s.xy * dy;
            out[2 * a + 1] = s.xy * dx + s.yy * dy;
        }
        out
    }

    #[inline]
    pub fn interp(&self, g: usize, ve: &[f64; 4]) -> f64 {
        (0..4).map(|a| self.n[g][a] * ve[a]).sum()
    }

    #[inline]
    pub fn grad(&self, g: usize, ve: &[f64; 4]) -> [f64; 2] {
        let mut out = [0.0; 2];
        for a in 0..4 {
            out[0] += self.dndx[g][a] * ve[a];
            out[1] += self.dndy[g][a] * ve[a];
        }
        out
    }
}

/// Geometry of the flyer and contact-layer blocks appended above the domain.
#[derive(Clone, Debug, PartialEq)]
pub struct FlyerGeometry {
    pub length: f64,
    pub height: f64,
    pub nx: usize,
    pub ny: usize,
    pub layer_thickness: f64,
}

#[derive(Clone, Debug)]
pub struct Mesh2D {
    pub coords: Vec<[f64; 2]>,
    pub elements: Vec<[usize; 4]>,
    pub blocks: Vec<Block>,
    kernel_of: Vec<usize>,
    kernels: Vec<GaussKernel>,
    /// Named node sets: `left`, `right`, `bottom`, `top` of the design grid,
    /// plus `flyer`, `contact_band`, `impact_face` when a flyer is present.
    pub boundary_sets: BTreeMap<String, Vec<usize>>,
    pub nx: usize,
    pub ny: usize,
    pub length: f64,
    pub height: f64,
    pub n_design_nodes: usize,
    pub n_design_elems: usize,
}

impl Mesh2D {
    pub fn n_nodes(&self) -> usize {
        self.coords.len()
    }

    pub fn n_elems(&self) -> usize {
        self.elements.len()
    }

    pub fn n_dofs(&self) -> usize {
        2 * self.coords.len()
    }

    pub fn kernel(&self, e: usize) -> &GaussKernel {
        &self.kernels[self.kernel_of[e]]
    }

    pub fn area(&self, e: usize) -> f64 {
        let k = self.kernel(e);
        k.hx * k.hy
    }

    pub fn centroid(&self, e: usize) -> [f64; 2] {
        let c = self.elements[e].iter().fold([0.0, 0.0], |acc, &i| {
            [acc[0] + self.coords[i][0], acc[1] + self.coords[i][1]]
        });
        [0.25 * c[0], 0.25 * c[1]]
    }

    pub fn gauss_points(&self, e: usize) -> [[f64; 2]; 4] {
        let k = self.kernel(e);
        let c = self.centroid(e);
        let mut out = [[0.0; 2]; 4];
        for (g, gp) in CORNERS.iter().enumerate() {
            out[g] = [c[0] + 0.5 * k.hx * gp[0] * GAUSS_X, c[1] + 0.5 * k.hy * gp[1] * GAUSS_X];
        }
        out
    }

    /// Smallest element edge over elements of the given block.
    pub fn min_edge(&self, block: Block) -> f64 {
        (0..self.n_elems())
            .filter(|&e| self.blocks[e] == block)
            .map(|e| self.kernel(e).hx.min(self.kernel(e).hy))
            .fold(f64::INFINITY, f64::min)
    }

    #[inline]
    pub fn element_dofs(&self, e: usize, u: &[f64]) -> [f64; 8] {
        let mut out = [0.0; 8];
        for (a, &i) in self.elements[e].iter().enumerate() {
            out[2 * a] = u[2 * i];
            out[2 * a + 1] = u[2 * i + 1];
        }
        out
    }

    #[inline]
    pub fn element_nodal(&self, e: usize, f: &[f64]) -> [f64; 4] {
        let el = &self.elements[e];
        [f[el[0]], f[el[1]], f[el[2]], f[el[3]]]
    }

    pub fn node_set(&self, name: &str) -> &[usize] {
        self.boundary_sets.get(name).map(|v| v.as_slice()).unwrap_or(&[])
    }

    /// Appends a contact layer and a flyer block above the centre of the
    /// top edge. The flyer columns must coincide with domain columns so the
    /// layer is conforming on both faces.
    pub fn with_flyer(mut self, f: &FlyerGeometry) -> Result<Mesh2D> {
        let mut errs = Vec::new();
        if f.nx == 0 || f.ny == 0 {
            errs.push("flyer mesh counts must be >= 1".to_string());
        }
        if !(f.length > 0.0 && f.height > 0.0 && f.layer_thickness > 0.0) {
            errs.push("flyer length, height and layer thickness must be > 0".to_string());
        }
        if f.length > self.length {
            errs.push("flyer is wider than the domain".to_string());
        }
        if !errs.is_empty() {
            return Err(Error::InvalidArgument(errs.join("; ")));
        }
        let hx = self.length / self.nx as f64;
        let fhx = f.length / f.nx as f64;
        let offset = 0.5 * (self.length - f.length) / hx;
        let i0 = offset.round() as usize;
        if (fhx - hx).abs() > 1e-9 * hx || (offset - i0 as f64).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "flyer columns (width {fhx}) must align with domain columns (width {hx})"
            )));
        }
        let top = self.height;
        let nxn = self.nx + 1;
        let face: Vec<usize> = (0..=f.nx).map(|i| i0 + i + self.ny * nxn).collect();
        let base = self.coords.len();
        let y0 = top + f.layer_thickness;
        let fhy = f.height / f.ny as f64;
        for j in 0..=f.ny {
            for i in 0..=f.nx {
                let x = (i0 + i) as f64 * hx;
                self.coords.push([x, y0 + j as f64 * fhy]);
            }
        }
        let fnode = |i: usize, j: usize| base + i + j * (f.nx + 1);
        let layer_kernel = self.kernel_id(fhx, f.layer_thickness);
        for i in 0..f.nx {
            self.elements.push([face[i], face[i + 1], fnode(i + 1, 0), fnode(i, 0)]);
            self.blocks.push(Block::Contact);
            self.kernel_of.push(layer_kernel);
        }
        let flyer_kernel = self.kernel_id(fhx, fhy);
        for j in 0..f.ny {
            for i in 0..f.nx {
                self.elements.push([fnode(i, j), fnode(i + 1, j), fnode(i + 1, j + 1), fnode(i, j + 1)]);
                self.blocks.push(Block::Flyer);
                self.kernel_of.push(flyer_kernel);
            }
        }
        let flyer_nodes: Vec<usize> = (base..self.coords.len()).collect();
        let mut band = face.clone();
        band.extend((0..=f.nx).map(|i| fnode(i, 0)));
        self.boundary_sets.insert("flyer".into(), flyer_nodes);
        self.boundary_sets.insert("contact_band".into(), band);
        self.boundary_sets.insert("impact_face".into(), face);
        Ok(self)
    }

    fn kernel_id(&mut self, hx: f64, hy: f64) -> usize {
        if let Some(i) = self
            .kernels
            .iter()
            .position(|k| k.hx.to_bits() == hx.to_bits() && k.hy.to_bits() == hy.to_bits())
        {
            return i;
        }
        self.kernels.push(GaussKernel::rectangle(hx, hy));
        self.kernels.len() - 1
    }

    /// Displacement gradient `[[du_x/dx, du_x/dy], [du_y/dx, du_y/dy]]` at
    /// every Gauss point, element-major (`4*e + g`).
    pub fn gradient_at_gauss(&self, u: &[f64]) -> Result<Vec<[[f64; 2]; 2]>> {
        if u.len() != self.n_dofs() {
            return Err(Error::invalid(format!(
                "displacement has {} entries, mesh has {} dofs",
                u.len(),
                self.n_dofs()
            )));
        }
        let mut out = Vec::with_capacity(4 * self.n_elems());
        for e in 0..self.n_elems() {
            let k = self.kernel(e);
            let el = &self.elements[e];
            for g in 0..4 {
                let mut m = [[0.0; 2]; 2];
                for a in 0..4 {
                    for c in 0..2 {
                        m[c][0] += k.dndx[g][a] * u[2 * el[a] + c];
                        m[c][1] += k.dndy[g][a] * u[2 * el[a] + c];
                    }
                }
                out.push(m);
            }
        }
        Ok(out)
    }

    /// Gradient of a scalar nodal field at every Gauss point.
    pub fn scalar_gradient_at_gauss(&self, f: &[f64]) -> Result<Vec<[f64; 2]>> {
        if f.len() != self.n_nodes() {
            return Err(Error::invalid(format!(
                "nodal field has {} entries, mesh has {} nodes",
                f.len(),
                self.n_nodes()
            )));
        }
        let mut out = Vec::with_capacity(4 * self.n_elems());
        for e in 0..self.n_elems() {
            let k = self.kernel(e);
            let fe = self.element_nodal(e, f);
            for g in 0..4 {
                out.push(k.grad(g, &fe));
            }
        }
        Ok(out)
    }
}

/// Builds the `nx` by `ny` grid on `[0, length] x [0, height]`.
pub fn build_structured_mesh(nx: usize, ny: usize, length: f64, height: f64) -> Result<Mesh2D> {
    let mut errs = Vec::new();
    if nx == 0 || ny == 0 {
        errs.push(format!("element counts must be >= 1 (got {nx} x {ny})"));
    }
    if !(length > 0.0 && length.is_finite() && height > 0.0 && height.is_finite()) {
        errs.push(format!("domain size must be positive (got {length} x {height})"));
    }
    if !errs.is_empty() {
        return Err(Error::InvalidArgument(errs.join("; ")));
    }
    let (hx, hy) = (length / nx as f64, height / ny as f64);
    let nxn = nx + 1;
    let mut coords = Vec::with_capacity(nxn * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            coords.push([i as f64 * hx, j as f64 * hy]);
        }
    }
    let mut elements = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let n0 = i + j * nxn;
            elements.push([n0, n0 + 1, n0 + 1 + nxn, n0 + nxn]);
        }
    }
    let mut sets = BTreeMap::new();
    sets.insert("left".to_string(), (0..=ny).map(|j| j * nxn).collect());
    sets.insert("right".to_string(), (0..=ny).map(|j| nx + j * nxn).collect());
    sets.insert("bottom".to_string(), (0..=nx).collect());
    sets.insert("top".to_string(), (0..=nx).map(|i| i + ny * nxn).collect());
    let n_elems = elements.len();
    Ok(Mesh2D {
        n_design_nodes: coords.len(),
        n_design_elems: n_elems,
        coords,
        elements,
        blocks: vec![Block::Design; n_elems],
        kernel_of: vec![0; n_elems],
        kernels: vec![GaussKernel::rectangle(hx, hy)],
        boundary_sets: sets,
        nx,
        ny,
        length,
        height,
    })
}

/// Row-sum lumped mass per node for a per-element mass density.
pub fn lumped_mass(mesh: &Mesh2D, density: &[f64]) -> Result<Vec<f64>> {
    if density.len() != mesh.n_elems() {
        return Err(Error::invalid(format!(
            "density has {} entries, mesh has {} elements",
            density.len(),
            mesh.n_elems()
        )));
    }
    if let Some(e) = density.iter().position(|&r| !(r > 0.0)) {
        return Err(Error::invalid(format!("nonpositive density {} on element {e}", density[e])));
    }
    let mut m = vec![0.0; mesh.n_nodes()];
    for e in 0..mesh.n_elems() {
        let k = mesh.kernel(e);
        for (a, &i) in mesh.elements[e].iter().enumerate() {
            m[i] += density[e] * (0..4).map(|g| k.w[g] * k.n[g][a]).sum::<f64>();
        }
    }
    Ok(m)
}

/// Nodes touched by elements of a block, ascending.
pub fn block_nodes(mesh: &Mesh2D, block: Block) -> Vec<usize> {
    let mut seen = HashMap::new();
    for (e, el) in mesh.elements.iter().enumerate() {
        if mesh.blocks[e] == block {
            for &i in el {
                seen.insert(i, ());
            }
        }
    }
    let mut v: Vec<usize> = seen.into_keys().collect();
    v.sort_unstable();
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_element() {
        let m = build_structured_mesh(1, 1, 1.0, 1.0).unwrap();
        assert_eq!(m.n_nodes(), 4);
        assert_eq!(m.n_elems(), 1);
        assert!((m.area(0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn reference_mesh_counts() {
        let m = build_structured_mesh(100, 25, 1.0, 0.25).unwrap();
        assert_eq!(m.n_nodes(), 2626);
        assert_eq!(m.n_elems(), 2500);
        assert!((m.kernel(0).hx - 0.01).abs() < 1e-15);
        assert!((m.kernel(0).hy - 0.01).abs() < 1e-15);
    }

    #[test]
    fn affine_jacobians_positive() {
        let m = build_structured_mesh(2, 1, 2.0, 1.0).unwrap();
        for e in 0..2 {
            let k = m.kernel(e);
            assert!((k.jacobian_det() - 0.25).abs() < 1e-15);
            assert!(k.w.iter().all(|&w| w > 0.0));
        }
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(build_structured_mesh(0, 1, 1.0, 1.0).is_err());
        assert!(build_structured_mesh(1, 1, -1.0, 1.0).is_err());
        assert!(build_structured_mesh(1, 1, 1.0, 0.0).is_err());
    }

    #[test]
    fn boundary_sets() {
        let m = build_structured_mesh(3, 2, 3.0, 2.0).unwrap();
        assert_eq!(m.node_set("left"), &[0, 4, 8]);
        assert_eq!(m.node_set("right"), &[3, 7, 11]);
        assert_eq!(m.node_set("top"), &[8, 9, 10, 11]);
    }

    #[test]
    fn flyer_block_is_conforming() {
        let m = build_structured_mesh(10, 2, 1.0, 0.2).unwrap();
        let g = FlyerGeometry { length: 0.6, height: 0.1, nx: 6, ny: 2, layer_thickness: 0.1 };
        let m = m.with_flyer(&g).unwrap();
        assert_eq!(m.n_elems(), 20 + 6 + 12);
        let face = m.node_set("impact_face");
        assert_eq!(face.len(), 7);
        assert!((m.coords[face[0]][0] - 0.2).abs() < 1e-12);
        for e in 20..26 {
            assert_eq!(m.blocks[e], Block::Contact);
            assert!((m.area(e) - 0.01).abs() < 1e-12);
        }
        let bad = FlyerGeometry { nx: 7, ..g };
        assert!(build_structured_mesh(10, 2, 1.0, 0.2).unwrap().with_flyer(&bad).is_err());
    }
}
