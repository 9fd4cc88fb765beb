//! Envelope (profile) factorization after reverse Cuthill–McKee reordering.
//!
//! Symmetric matrices get `L D Lᵀ`; everything else gets `L U` without
//! pivoting, which is adequate for the definite and block-triangular systems
//! built here. The envelope of the symmetrized pattern is stored row-wise for
//! `L` and column-wise for `U`.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::sparse::{LinearOperator, SparseMatrix};

#[derive(Debug, Clone)]
pub struct DirectFactor {
    n: usize,
    /// `perm[new] = old`.
    perm: Vec<usize>,
    /// First column of the envelope in each (permuted) row.
    first: Vec<usize>,
    /// Offset of row `i`'s strictly-lower envelope in `lower`.
    offset: Vec<usize>,
    lower: Vec<f64>,
    /// Column-wise strictly-upper envelope of `U`; empty for `L D Lᵀ`.
    upper: Vec<f64>,
    diag: Vec<f64>,
    symmetric: bool,
}

/// Reverse Cuthill–McKee ordering of the symmetrized pattern. Returns
/// `perm[new] = old`.
pub fn rcm_ordering(a: &SparseMatrix) -> Vec<usize> {
    let n = a.nrows();
    let adj = symmetric_adjacency(a);
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);

    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&v| (degree[v], v));

    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        let root = pseudo_peripheral(seed, &adj, &degree);
        let mut queue = VecDeque::from([root]);
        visited[root] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&u| !visited[u]).collect();
            next.sort_by_key(|&u| (degree[u], u));
            for u in next {
                visited[u] = true;
                queue.push_back(u);
            }
        }
    }
    order.reverse();
    order
}

fn symmetric_adjacency(a: &SparseMatrix) -> Vec<Vec<usize>> {
    let n = a.nrows();
    let mut adj = vec![Vec::new(); n];
    for r in 0..n {
        for &c in a.row(r).0 {
            if c != r {
                adj[r].push(c);
                adj[c].push(r);
            }
        }
    }
    for l in &mut adj {
        l.sort_unstable();
        l.dedup();
    }
    adj
}

/// Level-set heuristic: walk to the far end of the BFS tree until the
/// eccentricity stops growing.
fn pseudo_peripheral(start: usize, adj: &[Vec<usize>], degree: &[usize]) -> usize {
    let mut root = start;
    let mut ecc = 0;
    loop {
        let levels = bfs_levels(root, adj);
        let depth = levels.len();
        let last = levels.last().expect("nonempty");
        let cand = *last.iter().min_by_key(|&&v| (degree[v], v)).expect("nonempty");
        if depth <= ecc || cand == root {
            return root;
        }
        ecc = depth;
        root = cand;
    }
}

fn bfs_levels(root: usize, adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut seen = std::collections::HashSet::from([root]);
    let mut levels = vec![vec![root]];
    loop {
        let mut next = Vec::new();
        for &v in levels.last().unwrap() {
            for &u in &adj[v] {
                if seen.insert(u) {
                    next.push(u);
                }
            }
        }
        if next.is_empty() {
            return levels;
        }
        levels.push(next);
    }
}

impl DirectFactor {
    /// Factors `a`; `what` names the matrix in error messages.
    pub fn new(a: &SparseMatrix, what: &str) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Dimension(format!("{what} is {}×{}", n, a.ncols())));
        }
        let symmetric = a.asymmetry() <= 1e-14;
        let perm = rcm_ordering(a);
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }

        // envelope of the symmetrized permuted pattern
        let mut first: Vec<usize> = (0..n).collect();
        for r in 0..n {
            for &c in a.row(r).0 {
                let (i, j) = (inv[r], inv[c]);
                let (hi, lo) = (i.max(j), i.min(j));
                first[hi] = first[hi].min(lo);
            }
        }
        let mut offset = vec![0usize; n + 1];
        for i in 0..n {
            offset[i + 1] = offset[i] + (i - first[i]);
        }
        let env = offset[n];
        let mut lower = vec![0.0; env];
        let mut upper = if symmetric { Vec::new() } else { vec![0.0; env] };
        let mut diag = vec![0.0; n];
        let mut row_scale = vec![0.0f64; n];

        for r in 0..n {
            let (cs, vs) = a.row(r);
            for (&c, &v) in cs.iter().zip(vs) {
                let (i, j) = (inv[r], inv[c]);
                row_scale[i] = row_scale[i].max(v.abs());
                if i == j {
                    diag[i] = v;
                } else if j < i {
                    lower[offset[i] + j - first[i]] = v;
                } else if !symmetric {
                    // U column j, row i
                    upper[offset[j] + i - first[j]] = v;
                }
            }
        }

        let mut f = Self {
            n,
            perm,
            first,
            offset,
            lower,
            upper,
            diag,
            symmetric,
        };
        if symmetric {
            f.factor_ldlt(what, &row_scale)?;
        } else {
            f.factor_lu(what, &row_scale)?;
        }
        Ok(f)
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Stored envelope entries below the diagonal.
    pub fn envelope_size(&self) -> usize {
        self.offset[self.n]
    }

    fn row_l(&self, i: usize) -> &[f64] {
        &self.lower[self.offset[i]..self.offset[i + 1]]
    }

    fn col_u(&self, j: usize) -> &[f64] {
        &self.upper[self.offset[j]..self.offset[j + 1]]
    }

    fn check_pivot(&self, what: &str, i: usize, d: f64, scale: f64) -> Result<()> {
        if !d.is_finite() || d.abs() <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::Singular {
                what: what.to_string(),
                row: self.perm[i],
            });
        }
        Ok(())
    }

    fn factor_ldlt(&mut self, what: &str, scale: &[f64]) -> Result<()> {
        let mut u = Vec::new();
        for i in 0..self.n {
            let fi = self.first[i];
            let off = self.offset[i];
            // u_j = A_ij - Σ_k L_jk u_k, then L_ij = u_j / d_j
            u.clear();
            u.extend_from_slice(&self.lower[off..self.offset[i + 1]]);
            for j in fi..i {
                let fj = self.first[j];
                let k0 = fi.max(fj);
                let lj = &self.lower[self.offset[j] + k0 - fj..self.offset[j] + j - fj];
                let ui = &u[k0 - fi..j - fi];
                let s: f64 = lj.iter().zip(ui).map(|(a, b)| a * b).sum();
                u[j - fi] -= s;
            }
            let mut d = self.diag[i];
            for j in fi..i {
                let l = u[j - fi] / self.diag[j];
                d -= l * u[j - fi];
                self.lower[off + j - fi] = l;
            }
            self.check_pivot(what, i, d, scale[i])?;
            self.diag[i] = d;
        }
        Ok(())
    }

    fn factor_lu(&mut self, what: &str, scale: &[f64]) -> Result<()> {
        for i in 0..self.n {
            let fi = self.first[i];
            let off = self.offset[i];
            for j in fi..i {
                let fj = self.first[j];
                let k0 = fi.max(fj);
                let oj = self.offset[j];
                // L_ij = (A_ij - Σ_k L_ik U_kj) / U_jj
                let s: f64 = (k0..j)
                    .map(|k| self.lower[off + k - fi] * self.upper[oj + k - fj])
                    .sum();
                self.lower[off + j - fi] = (self.lower[off + j - fi] - s) / self.diag[j];
                // U_ji = A_ji - Σ_k L_jk U_ki
                let s: f64 = (k0..j)
                    .map(|k| self.lower[oj + k - fj] * self.upper[off + k - fi])
                    .sum();
                self.upper[off + j - fi] -= s;
            }
            let s: f64 = (fi..i)
                .map(|k| self.lower[off + k - fi] * self.upper[off + k - fi])
                .sum();
            let d = self.diag[i] - s;
            self.check_pivot(what, i, d, scale[i])?;
            self.diag[i] = d;
        }
        Ok(())
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        self.solve_into(b, &mut x);
        x
    }

    pub fn solve_into(&self, b: &[f64], x: &mut [f64]) {
        let n = self.n;
        let mut y: Vec<f64> = self.perm.iter().map(|&o| b[o]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let s: f64 = self.row_l(i).iter().zip(&y[fi..i]).map(|(l, v)| l * v).sum();
            y[i] -= s;
        }
        if self.symmetric {
            for (v, d) in y.iter_mut().zip(&self.diag) {
                *v /= d;
            }
            for j in (0..n).rev() {
                let fj = self.first[j];
                let yj = y[j];
                for (k, l) in (fj..j).zip(self.row_l(j)) {
                    y[k] -= l * yj;
                }
            }
        } else {
            for j in (0..n).rev() {
                y[j] /= self.diag[j];
                let fj = self.first[j];
                let yj = y[j];
                for (k, u) in (fj..j).zip(self.col_u(j)) {
                    y[k] -= u * yj;
                }
            }
        }
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
    }
}

impl LinearOperator for DirectFactor {
    fn nrows(&self) -> usize {
        self.n
    }
    fn ncols(&self) -> usize {
        self.n
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.solve_into(x, y)
    }
}

/// Factors `m` for exact application of `m⁻¹`.
pub fn direct_factor(m: &SparseMatrix) -> Result<DirectFactor> {
    DirectFactor::new(m, "matrix")
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_by_two() {
        let m = SparseMatrix::from_diagonal(&[2.0, 4.0]);
        let x = direct_factor(&m).unwrap().solve(&[2.0, 4.0]);
        assert_eq!(x, vec![1.0, 1.0]);
        let i = SparseMatrix::identity(4);
        assert_eq!(direct_factor(&i).unwrap().solve(&[1.0, 2.0, 3.0, 4.0]), vec![1.0, 2.0, 3.0, 4.0]);
    }

    fn random_sparse(n: usize, symmetric: bool, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for _ in 0..3 {
                let j = rng.gen_range(0..n);
                if i != j {
                    let v = rng.gen_range(-1.0..1.0);
                    m[(i, j)] += v;
                    if symmetric {
                        m[(j, i)] += v;
                    } else {
                        m[(j, i)] += rng.gen_range(-1.0..1.0);
                    }
                }
            }
        }
        for i in 0..n {
            let s: f64 = (0..n).map(|j| m[(i, j)].abs() + m[(j, i)].abs()).sum();
            m[(i, i)] = s + 1.0;
        }
        m
    }

    #[test]
    fn matches_dense_solve() {
        for symmetric in [true, false] {
            let d = random_sparse(60, symmetric, 7);
            let s = SparseMatrix::from_dense(&d);
            let f = direct_factor(&s).unwrap();
            assert_eq!(f.is_symmetric(), symmetric);
            let b: Vec<f64> = (0..60).map(|i| (i as f64).sin()).collect();
            let x = f.solve(&b);
            let reference = d.clone().lu().solve(&nalgebra::DVector::from_vec(b.clone())).unwrap();
            for (p, q) in x.iter().zip(reference.iter()) {
                assert!((p - q).abs() < 1e-12, "{p} vs {q}");
            }
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let d = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(matches!(
            direct_factor(&SparseMatrix::from_dense(&d)),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn rcm_shrinks_band_of_scrambled_path() {
        // path graph under a scrambled labelling
        let n = 40;
        let lab: Vec<usize> = (0..n).map(|i| (i * 17) % n).collect();
        let mut t = crate::sparse::TripletBuilder::new(n, n);
        for i in 0..n {
            t.push(lab[i], lab[i], 2.0);
            if i + 1 < n {
                t.push(lab[i], lab[i + 1], -1.0);
                t.push(lab[i + 1], lab[i], -1.0);
            }
        }
        let f = direct_factor(&t.build()).unwrap();
        assert_eq!(f.envelope_size(), n - 1);
    }
}
