//! Auxiliary-space preconditioner for `a M_E + b CURLᵀ M_F CURL`. The additive form is
//!
//! `z = Smooth(r) + G L_g⁻¹ Gᵀ r + Π L_v⁻¹ Πᵀ r`
//!
//! with `L_g = Gᵀ S G` (scalar potentials) and `L_v = Πᵀ S Π` (nodal
//! vector fields). Boundary vertices are dropped from both transfer
//! operators. The multiplicative cycle visits the same corrections in
//! the symmetric order smooth, gradient, nodal, gradient, smooth, each on
//! the current residual, with l1-Jacobi smoothing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::PolyMesh;
use crate::sparse::{axpy, dot, norm2, LinearOperator, SparseMatrix};
use crate::vem::IncidenceOperators;

use super::amg::Amg;
use super::direct::DirectFactor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum AuxSolver {
    /// Sparse direct factorization.
    Direct,
    /// Jacobi-preconditioned CG to a relative tolerance.
    Cg { tol: f64 },
    /// One smoothed-aggregation V-cycle.
    Amg,
}

impl Default for AuxSolver {
    fn default() -> Self {
        AuxSolver::Direct
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmsCycle {
    Additive,
    #[default]
    Multiplicative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AmsOptions {
    /// Jacobi sweeps on the full operator (per smoothing stage).
    pub smoothing_sweeps: usize,
    pub aux_solver: AuxSolver,
    pub cycle: AmsCycle,
}

impl Default for AmsOptions {
    fn default() -> Self {
        Self {
            smoothing_sweeps: 1,
            aux_solver: AuxSolver::Direct,
            cycle: AmsCycle::Multiplicative,
        }
    }
}

enum AuxInverse {
    Direct(DirectFactor),
    Cg { m: SparseMatrix, inv_diag: Vec<f64>, tol: f64 },
    Amg(Amg),
}

impl AuxInverse {
    fn build(m: SparseMatrix, solver: AuxSolver, components: usize, what: &str) -> Result<Self> {
        if m.nrows() == 0 {
            return Ok(AuxInverse::Direct(DirectFactor::new(&m, what)?));
        }
        Ok(match solver {
            AuxSolver::Direct => AuxInverse::Direct(DirectFactor::new(&m, what)?),
            AuxSolver::Cg { tol } => {
                let d = m.diagonal();
                if let Some(i) = d.iter().position(|&v| !(v > 0.0)) {
                    return Err(Error::Singular {
                        what: what.to_string(),
                        row: i,
                    });
                }
                AuxInverse::Cg {
                    inv_diag: d.iter().map(|v| 1.0 / v).collect(),
                    m,
                    tol,
                }
            }
            AuxSolver::Amg => AuxInverse::Amg(Amg::with_components(&m, components, what)?),
        })
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        match self {
            AuxInverse::Direct(f) => f.solve_into(x, y),
            AuxInverse::Cg { m, inv_diag, tol } => pcg(m, inv_diag, x, y, *tol),
            AuxInverse::Amg(a) => a.apply(x, y),
        }
    }
}

/// Jacobi-preconditioned CG from zero.
fn pcg(m: &SparseMatrix, inv_diag: &[f64], b: &[f64], x: &mut [f64], tol: f64) {
    x.fill(0.0);
    let bn = norm2(b);
    if bn == 0.0 {
        return;
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(inv_diag).map(|(a, d)| a * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0; b.len()];
    for _ in 0..10 * b.len().max(100) {
        m.mul_vec_into(&p, &mut q);
        let alpha = rz / dot(&p, &q);
        axpy(alpha, &p, x);
        axpy(-alpha, &q, &mut r);
        if norm2(&r) <= tol * bn {
            return;
        }
        for ((zi, ri), di) in z.iter_mut().zip(&r).zip(inv_diag) {
            *zi = ri * di;
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
}

pub struct AuxSpacePreconditioner {
    s: SparseMatrix,
    inv_diag: Vec<f64>,
    sweeps: usize,
    cycle: AmsCycle,
    grad: SparseMatrix,
    grad_t: SparseMatrix,
    nodal: SparseMatrix,
    nodal_t: SparseMatrix,
    l_g: AuxInverse,
    l_v: AuxInverse,
}

impl std::fmt::Debug for AuxSpacePreconditioner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AuxSpacePreconditioner")
            .field("n", &self.s.nrows())
            .field("n_grad", &self.grad.ncols())
            .field("n_nodal", &self.nodal.ncols())
            .finish()
    }
}

/// Builds the preconditioner for `s`, which acts on `free_edges`.
pub fn aux_space_build(
    s: &SparseMatrix,
    mesh: &PolyMesh,
    incidence: &IncidenceOperators,
    free_edges: &[usize],
    options: &AmsOptions,
) -> Result<AuxSpacePreconditioner> {
    if s.nrows() != free_edges.len() || s.ncols() != free_edges.len() {
        return Err(Error::Dimension(format!(
            "operator is {}×{} for {} free edges",
            s.nrows(),
            s.ncols(),
            free_edges.len()
        )));
    }
    let interior: Vec<usize> = (0..mesh.n_vertices())
        .filter(|&v| !mesh.is_boundary_vertex(v))
        .collect();
    let interior3: Vec<usize> = interior
        .iter()
        .flat_map(|&v| [3 * v, 3 * v + 1, 3 * v + 2])
        .collect();
    let grad = incidence.grad.submatrix(free_edges, &interior);
    let nodal = incidence.nodal.submatrix(free_edges, &interior3);
    let grad_t = grad.transpose();
    let nodal_t = nodal.transpose();
    let l_g = grad_t.matmul(s).matmul(&grad).symmetrized();
    let l_v = nodal_t.matmul(s).matmul(&nodal).symmetrized();

    let d = s.diagonal();
    if let Some(i) = d.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "smoother needs a positive diagonal, row {i} has {}",
            d[i]
        )));
    }
    let scale: Vec<f64> = match options.cycle {
        AmsCycle::Additive => d,
        AmsCycle::Multiplicative => (0..s.nrows())
            .map(|i| s.row(i).1.iter().map(|v| v.abs()).sum())
            .collect(),
    };
    Ok(AuxSpacePreconditioner {
        s: s.clone(),
        inv_diag: scale.iter().map(|v| 1.0 / v).collect(),
        sweeps: options.smoothing_sweeps,
        cycle: options.cycle,
        l_g: AuxInverse::build(l_g, options.aux_solver, 1, "gradient auxiliary space")?,
        l_v: AuxInverse::build(l_v, options.aux_solver, 3, "nodal vector auxiliary space")?,
        grad,
        grad_t,
        nodal,
        nodal_t,
    })
}

impl AuxSpacePreconditioner {
    /// `z += D⁻¹ (r - S z)`, repeated.
    fn smooth_update(&self, r: &[f64], z: &mut [f64], sz: &mut [f64]) {
        for _ in 0..self.sweeps {
            self.s.mul_vec_into(z, sz);
            for i in 0..r.len() {
                z[i] += (r[i] - sz[i]) * self.inv_diag[i];
            }
        }
    }

    fn residual(&self, r: &[f64], z: &[f64], out: &mut [f64]) {
        self.s.mul_vec_into(z, out);
        for (o, ri) in out.iter_mut().zip(r) {
            *o = ri - *o;
        }
    }

    fn smooth(&self, r: &[f64], z: &mut [f64]) {
        z.fill(0.0);
        let mut sz = vec![0.0; r.len()];
        for sweep in 0..self.sweeps {
            if sweep > 0 {
                self.s.mul_vec_into(z, &mut sz);
            }
            for i in 0..r.len() {
                z[i] += (r[i] - sz[i]) * self.inv_diag[i];
            }
        }
    }

    fn subspace(&self, r: &[f64], z: &mut [f64], p: &SparseMatrix, pt: &SparseMatrix, inv: &AuxInverse) {
        if p.ncols() == 0 {
            return;
        }
        let rc = pt.mul_vec(r);
        let mut xc = vec![0.0; rc.len()];
        inv.apply(&rc, &mut xc);
        let corr = p.mul_vec(&xc);
        for (zi, ci) in z.iter_mut().zip(&corr) {
            *zi += ci;
        }
    }
}

impl LinearOperator for AuxSpacePreconditioner {
    fn nrows(&self) -> usize {
        self.s.nrows()
    }
    fn ncols(&self) -> usize {
        self.s.nrows()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        match self.cycle {
            AmsCycle::Additive => {
                self.smooth(x, y);
                self.subspace(x, y, &self.grad, &self.grad_t, &self.l_g);
                self.subspace(x, y, &self.nodal, &self.nodal_t, &self.l_v);
            }
            AmsCycle::Multiplicative => {
                y.fill(0.0);
                let mut res = vec![0.0; x.len()];
                self.smooth_update(x, y, &mut res);
                self.residual(x, y, &mut res);
                self.subspace(&res, y, &self.grad, &self.grad_t, &self.l_g);
                self.residual(x, y, &mut res);
                self.subspace(&res, y, &self.nodal, &self.nodal_t, &self.l_v);
                self.residual(x, y, &mut res);
                self.subspace(&res, y, &self.grad, &self.grad_t, &self.l_g);
                self.smooth_update(x, y, &mut res);
            }
        }
    }
}
