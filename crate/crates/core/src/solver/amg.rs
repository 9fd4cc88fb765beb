//! Smoothed-aggregation algebraic multigrid, applied as one symmetric
//! V-cycle. Used for the auxiliary-space solves when a direct factorization
//! would not fit in memory.

use crate::error::{Error, Result};
use crate::sparse::{LinearOperator, SparseMatrix, TripletBuilder};

use super::direct::DirectFactor;

const COARSE_SIZE: usize = 400;
const STRENGTH: f64 = 0.08;
const MAX_LEVELS: usize = 20;

struct Level {
    a: SparseMatrix,
    /// Damped inverse diagonal `ω / a_ii`.
    smoother: Vec<f64>,
    p: SparseMatrix,
    r: SparseMatrix,
}

pub struct Amg {
    levels: Vec<Level>,
    coarse: DirectFactor,
    n: usize,
}

impl Amg {
    pub fn new(a: &SparseMatrix, what: &str) -> Result<Self> {
        Self::with_components(a, 1, what)
    }

    /// Rows `i` with equal `i % components` form one unknown; aggregates
    /// never mix unknowns, so each coarse space keeps one constant mode per
    /// component.
    pub fn with_components(a: &SparseMatrix, components: usize, what: &str) -> Result<Self> {
        let n = a.nrows();
        let mut comp: Vec<usize> = (0..n).map(|i| i % components.max(1)).collect();
        let mut levels = Vec::new();
        let mut cur = a.clone();
        while cur.nrows() > COARSE_SIZE && levels.len() < MAX_LEVELS {
            let d = cur.diagonal();
            if let Some(i) = d.iter().position(|&v| !(v > 0.0)) {
                return Err(Error::Singular {
                    what: what.to_string(),
                    row: i,
                });
            }
            let inv_d: Vec<f64> = d.iter().map(|v| 1.0 / v).collect();
            let rho = spectral_radius(&cur, &inv_d);
            let agg = aggregate(&cur, &d, &comp);
            let n_coarse = agg.iter().max().map_or(0, |m| m + 1);
            if n_coarse == 0 || n_coarse >= cur.nrows() {
                break;
            }
            let mut coarse_comp = vec![0; n_coarse];
            for (i, &g) in agg.iter().enumerate() {
                coarse_comp[g] = comp[i];
            }
            let tent = tentative(&agg, n_coarse);
            let omega = 4.0 / (3.0 * rho);
            // P = (I - ω D⁻¹ A) P_tent
            let dinv_a = scale_rows(&cur, &inv_d);
            let p = tent.add_scaled(1.0, &dinv_a.matmul(&tent), -omega);
            let r = p.transpose();
            let coarse = r.matmul(&cur).matmul(&p).symmetrized();
            levels.push(Level {
                smoother: inv_d.iter().map(|v| omega * v).collect(),
                a: cur,
                p,
                r,
            });
            cur = coarse;
            comp = coarse_comp;
        }
        Ok(Self {
            coarse: DirectFactor::new(&cur, what)?,
            levels,
            n,
        })
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len() + 1
    }

    fn cycle(&self, lvl: usize, b: &[f64], x: &mut [f64]) {
        if lvl == self.levels.len() {
            self.coarse.solve_into(b, x);
            return;
        }
        let l = &self.levels[lvl];
        for (xi, (bi, si)) in x.iter_mut().zip(b.iter().zip(&l.smoother)) {
            *xi = bi * si;
        }
        let mut ax = l.a.mul_vec(x);
        let res: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
        let rc = l.r.mul_vec(&res);
        let mut xc = vec![0.0; rc.len()];
        self.cycle(lvl + 1, &rc, &mut xc);
        let corr = l.p.mul_vec(&xc);
        for (xi, ci) in x.iter_mut().zip(&corr) {
            *xi += ci;
        }
        l.a.mul_vec_into(x, &mut ax);
        for i in 0..x.len() {
            x[i] += (b[i] - ax[i]) * l.smoother[i];
        }
    }
}

impl LinearOperator for Amg {
    fn nrows(&self) -> usize {
        self.n
    }
    fn ncols(&self) -> usize {
        self.n
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.cycle(0, x, y);
    }
}

fn scale_rows(a: &SparseMatrix, s: &[f64]) -> SparseMatrix {
    let mut t = TripletBuilder::with_capacity(a.nrows(), a.ncols(), a.nnz());
    for r in 0..a.nrows() {
        let (cs, vs) = a.row(r);
        for (&c, &v) in cs.iter().zip(vs) {
            t.push(r, c, v * s[r]);
        }
    }
    t.build()
}

/// Power iteration on `D⁻¹ A` from a fixed start vector.
fn spectral_radius(a: &SparseMatrix, inv_d: &[f64]) -> f64 {
    let n = a.nrows();
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 7919) % 13) as f64 / 13.0).collect();
    let mut lambda = 1.0;
    for _ in 0..15 {
        let nv = crate::sparse::norm2(&v);
        v.iter_mut().for_each(|x| *x /= nv);
        let mut w = a.mul_vec(&v);
        for (wi, di) in w.iter_mut().zip(inv_d) {
            *wi *= di;
        }
        lambda = crate::sparse::norm2(&w);
        v = w;
    }
    // power iteration underestimates; pad slightly
    1.05 * lambda
}

/// Greedy aggregation over the strong-coupling graph. Returns the aggregate
/// of every row.
fn aggregate(a: &SparseMatrix, d: &[f64], comp: &[usize]) -> Vec<usize> {
    let n = a.nrows();
    let strong: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let (cs, vs) = a.row(i);
            cs.iter()
                .zip(vs)
                .filter(|(&j, &v)| {
                    j != i && comp[i] == comp[j] && v.abs() >= STRENGTH * (d[i] * d[j]).sqrt()
                })
                .map(|(&j, _)| j)
                .collect()
        })
        .collect();
    const NONE: usize = usize::MAX;
    let mut agg = vec![NONE; n];
    let mut count = 0;
    for i in 0..n {
        if agg[i] == NONE && strong[i].iter().all(|&j| agg[j] == NONE) {
            agg[i] = count;
            for &j in &strong[i] {
                agg[j] = count;
            }
            count += 1;
        }
    }
    let snapshot = agg.clone();
    for i in 0..n {
        if agg[i] == NONE {
            if let Some(&j) = strong[i].iter().find(|&&j| snapshot[j] != NONE) {
                agg[i] = snapshot[j];
            }
        }
    }
    for i in 0..n {
        if agg[i] == NONE {
            agg[i] = count;
            for &j in &strong[i] {
                if agg[j] == NONE {
                    agg[j] = count;
                }
            }
            count += 1;
        }
    }
    agg
}

fn tentative(agg: &[usize], n_coarse: usize) -> SparseMatrix {
    let mut size = vec![0usize; n_coarse];
    for &g in agg {
        size[g] += 1;
    }
    let mut t = TripletBuilder::with_capacity(agg.len(), n_coarse, agg.len());
    for (i, &g) in agg.iter().enumerate() {
        t.push(i, g, 1.0 / (size[g] as f64).sqrt());
    }
    t.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::norm2;

    fn laplacian_3d(m: usize) -> SparseMatrix {
        let idx = |i: usize, j: usize, k: usize| i + m * (j + m * k);
        let mut t = TripletBuilder::new(m * m * m, m * m * m);
        for k in 0..m {
            for j in 0..m {
                for i in 0..m {
                    let r = idx(i, j, k);
                    t.push(r, r, 6.0);
                    let mut nb = |c: usize| t.push(r, c, -1.0);
                    if i > 0 {
                        nb(idx(i - 1, j, k));
                    }
                    if i + 1 < m {
                        nb(idx(i + 1, j, k));
                    }
                    if j > 0 {
                        nb(idx(i, j - 1, k));
                    }
                    if j + 1 < m {
                        nb(idx(i, j + 1, k));
                    }
                    if k > 0 {
                        nb(idx(i, j, k - 1));
                    }
                    if k + 1 < m {
                        nb(idx(i, j, k + 1));
                    }
                }
            }
        }
        t.build()
    }

    #[test]
    fn vcycle_contracts_on_laplacian() {
        let a = laplacian_3d(14);
        let amg = Amg::new(&a, "laplacian").unwrap();
        assert!(amg.n_levels() >= 2);
        let b: Vec<f64> = (0..a.nrows()).map(|i| ((i * 31) % 17) as f64 - 8.0).collect();
        // stationary iteration x += B (b - A x)
        let mut x = vec![0.0; b.len()];
        let mut z = vec![0.0; b.len()];
        for _ in 0..10 {
            let ax = a.mul_vec(&x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
            amg.apply(&r, &mut z);
            for (xi, zi) in x.iter_mut().zip(&z) {
                *xi += zi;
            }
        }
        let ax = a.mul_vec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
        assert!(norm2(&r) < 1e-3 * norm2(&b), "{}", norm2(&r) / norm2(&b));
    }
}
