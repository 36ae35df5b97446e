//! Symmetric sparse matrices and a cached envelope Cholesky factorization.
//!
//! Matrices are assembled into compressed-row storage (both triangles).
//! Factorizations reorder with reverse Cuthill-McKee and store the lower
//! envelope row by row, which is compact for the banded systems produced by
//! structured meshes.

use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub vals: Vec<f64>,
}

impl Csr {
    /// Sums duplicate entries. Column indices within a row end up sorted.
    pub fn from_triplets(n: usize, trip: &[(usize, usize, f64)]) -> Result<Csr> {
        if let Some(&(i, j, _)) = trip.iter().find(|&&(i, j, _)| i >= n || j >= n) {
            return Err(Error::invalid(format!("entry ({i}, {j}) outside {n}x{n} matrix")));
        }
        let mut sorted: Vec<(usize, usize, f64)> = trip.to_vec();
        sorted.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut vals: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in sorted {
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Csr { n, row_ptr, col_idx, vals })
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (self.col_idx[k], self.vals[k]))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let cols = &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]];
        match cols.binary_search(&j) {
            Ok(k) => self.vals[self.row_ptr[i] + k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * x[self.col_idx[k]];
            }
            y[i] = s;
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        y
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// `max |A - A^T|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// `self + s*other`; both must share one sparsity pattern.
    pub fn add_scaled(&self, s: f64, other: &Csr) -> Result<Csr> {
        if self.row_ptr != other.row_ptr || self.col_idx != other.col_idx {
            return Err(Error::Internal("sparsity patterns differ".into()));
        }
        let vals = self.vals.iter().zip(&other.vals).map(|(a, b)| a + s * b).collect();
        Ok(Csr { n: self.n, row_ptr: self.row_ptr.clone(), col_idx: self.col_idx.clone(), vals })
    }
}

/// Reverse Cuthill-McKee ordering of the matrix graph. Returns `perm` with
/// `perm[new] = old`.
pub fn rcm_ordering(a: &Csr) -> Vec<usize> {
    let n = a.n;
    let degree: Vec<usize> = (0..n).map(|i| a.row_ptr[i + 1] - a.row_ptr[i]).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let bfs_levels = |start: usize, mark: &mut Vec<usize>, stamp: usize| -> (usize, usize) {
        let mut q = VecDeque::new();
        q.push_back((start, 0usize));
        mark[start] = stamp;
        let mut far = (0usize, start);
        while let Some((v, d)) = q.pop_front() {
            if d > far.0 || (d == far.0 && degree[v] < degree[far.1]) {
                far = (d, v);
            }
            for (w, _) in a.row(v) {
                if mark[w] != stamp {
                    mark[w] = stamp;
                    q.push_back((w, d + 1));
                }
            }
        }
        far
    };
    let mut mark = vec![usize::MAX; n];
    let mut stamp = 0usize;
    for seed in 0..n {
        if visited[seed] {
            continue;
        }
        // pseudo-peripheral start node
        let mut start = seed;
        let mut ecc = 0usize;
        for _ in 0..8 {
            let (e, far) = bfs_levels(start, &mut mark, stamp);
            stamp += 1;
            if e <= ecc && start != seed {
                break;
            }
            ecc = e;
            start = far;
        }
        let mut q = VecDeque::new();
        q.push_back(start);
        visited[start] = true;
        while let Some(v) = q.pop_front() {
            order.push(v);
            let mut nb: Vec<usize> = a.row(v).map(|(w, _)| w).filter(|&w| !visited[w]).collect();
            nb.sort_by_key(|&w| (degree[w], w));
            for w in nb {
                visited[w] = true;
                q.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// Lower envelope Cholesky factor `P A P^T = L L^T`.
#[derive(Clone, Debug)]
pub struct SkylineCholesky {
    n: usize,
    perm: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
    vals: Vec<f64>,
}

impl SkylineCholesky {
    pub fn factor(a: &Csr) -> Result<SkylineCholesky> {
        let n = a.n;
        let perm = rcm_ordering(a);
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for old in 0..n {
            let i = inv[old];
            for (c, _) in a.row(old) {
                let j = inv[c];
                if j < first[i] {
                    first[i] = j;
                }
            }
        }
        let mut start = vec![0usize; n + 1];
        for i in 0..n {
            start[i + 1] = start[i] + (i - first[i] + 1);
        }
        let mut vals = vec![0.0; start[n]];
        for old in 0..n {
            let i = inv[old];
            for (c, v) in a.row(old) {
                let j = inv[c];
                if j <= i {
                    vals[start[i] + j - first[i]] += v;
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let (head, row_i) = vals.split_at_mut(start[i]);
                let row_j = &head[start[j]..start[j + 1]];
                let mut s = row_i[j - fi];
                let li = &row_i[k0 - fi..j - fi];
                let lj = &row_j[k0 - fj..j - fj];
                s -= li.iter().zip(lj).map(|(x, y)| x * y).sum::<f64>();
                row_i[j - fi] = s / row_j[j - fj];
            }
            let row_i = &mut vals[start[i]..start[i + 1]];
            let d = row_i[i - fi] - row_i[..i - fi].iter().map(|x| x * x).sum::<f64>();
            if !(d > 0.0) {
                return Err(Error::Internal(format!(
                    "matrix not positive definite (pivot {d:e} at row {})",
                    perm[i]
                )));
            }
            row_i[i - fi] = d.sqrt();
        }
        Ok(SkylineCholesky { n, perm, first, start, vals })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn envelope_size(&self) -> usize {
        self.vals.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for i in 0..self.n {
            let fi = self.first[i];
            let row = &self.vals[self.start[i]..self.start[i + 1]];
            let s: f64 = row[..i - fi].iter().zip(&y[fi..i]).map(|(l, v)| l * v).sum();
            y[i] = (y[i] - s) / row[i - fi];
        }
        for i in (0..self.n).rev() {
            let fi = self.first[i];
            let row = &self.vals[self.start[i]..self.start[i + 1]];
            y[i] /= row[i - fi];
            let xi = y[i];
            for (k, l) in (fi..i).zip(row) {
                y[k] -= l * xi;
            }
        }
        let mut x = vec![0.0; self.n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

/// The operator family `K + r S` with one cached factorization per distinct
/// penalty value `r` (keyed by its bit pattern), plus a factorization of `S`.
#[derive(Clone, Debug)]
pub struct PenaltyOperator {
    pub k: Csr,
    pub s: Csr,
    s_factor: SkylineCholesky,
    cache: HashMap<u64, SkylineCholesky>,
    factorizations: usize,
}

impl PenaltyOperator {
    pub fn new(k: Csr, s: Csr) -> Result<Self> {
        let s_factor = SkylineCholesky::factor(&s)?;
        Ok(PenaltyOperator { k, s, s_factor, cache: HashMap::new(), factorizations: 0 })
    }

    pub fn n(&self) -> usize {
        self.k.n
    }

    /// Solves `(K + r S) x = b`, factorizing on first use of `r`.
    pub fn solve(&mut self, r: f64, b: &[f64]) -> Result<Vec<f64>> {
        let key = r.to_bits();
        if !self.cache.contains_key(&key) {
            let m = self.k.add_scaled(r, &self.s)?;
            self.cache.insert(key, SkylineCholesky::factor(&m)?);
            self.factorizations += 1;
        }
        Ok(self.cache[&key].solve(b))
    }

    pub fn solve_mass(&self, b: &[f64]) -> Vec<f64> {
        self.s_factor.solve(b)
    }

    /// Penalty factorizations performed so far (the mass factor excluded).
    pub fn factorizations(&self) -> usize {
        self.factorizations
    }

    pub fn distinct_penalties(&self) -> usize {
        self.cache.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> Csr {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0 + 0.1 * i as f64));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        Csr::from_triplets(n, &t).unwrap()
    }

    #[test]
    fn duplicates_are_summed() {
        let a = Csr::from_triplets(2, &[(0, 0, 1.0), (0, 0, 2.0), (1, 0, 1.0)]).unwrap();
        assert_eq!(a.get(0, 0), 3.0);
        assert_eq!(a.get(1, 0), 1.0);
        assert_eq!(a.get(0, 1), 0.0);
    }

    #[test]
    fn cholesky_solves_tridiagonal() {
        let a = laplacian_1d(50);
        let f = SkylineCholesky::factor(&a).unwrap();
        let x0: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
        let b = a.mul(&x0);
        let x = f.solve(&b);
        for (u, v) in x.iter().zip(&x0) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn rcm_is_a_permutation() {
        let a = laplacian_1d(17);
        let mut p = rcm_ordering(&a);
        p.sort_unstable();
        assert_eq!(p, (0..17).collect::<Vec<_>>());
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let a = Csr::from_triplets(2, &[(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)]).unwrap();
        assert!(SkylineCholesky::factor(&a).is_err());
    }
}
