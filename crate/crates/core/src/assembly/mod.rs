//! Global block system of one implicit Euler step, in (B, E) ordering:
//!
//! ```text
//! [ C   B2 ] [B]   [rhs_B]      C  = M_F(1/μ) / τ
//! [ B1  A  ] [E] = [rhs_E]      B2 = M_F(1/μ) CURL
//!                               B1 = -CURLᵀ M_F(1/μ)
//!                               A  = M_E(ε/τ + σ)
//! ```
//!
//! `M_X(w)` is the mass matrix assembled with per-cell weight `w`. The Schur
//! complement `A - B1 C⁻¹ B2 = A + τ CURLᵀ M_F(1/μ) CURL` is sparse.
//! Essential boundary conditions are imposed by dropping boundary edges and
//! faces from every block.

use std::path::Path;

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::{GeometricCache, Point, PolyMesh};
use crate::sparse::{SparseMatrix, TripletBuilder};
use crate::vem::{IncidenceOperators, LocalVemOperators};

/// Per-cell material constants and the timestep.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysParams {
    pub epsilon: Vec<f64>,
    pub sigma: Vec<f64>,
    pub mu: Vec<f64>,
    pub tau: f64,
}

impl PhysParams {
    pub fn uniform(n_cells: usize, epsilon: f64, sigma: f64, mu: f64, tau: f64) -> Self {
        Self {
            epsilon: vec![epsilon; n_cells],
            sigma: vec![sigma; n_cells],
            mu: vec![mu; n_cells],
            tau,
        }
    }

    pub fn validate(&self, n_cells: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return bad(format!("timestep must be positive, got {}", self.tau));
        }
        for (name, v) in [("epsilon", &self.epsilon), ("sigma", &self.sigma), ("mu", &self.mu)] {
            if v.len() != n_cells {
                return bad(format!("{name} has {} entries for {n_cells} cells", v.len()));
            }
        }
        for c in 0..n_cells {
            if !(self.epsilon[c] > 0.0 && self.epsilon[c].is_finite()) {
                return bad(format!("cell {c}: epsilon must be > 0"));
            }
            if !(self.mu[c] > 0.0 && self.mu[c].is_finite()) {
                return bad(format!("cell {c}: mu must be > 0"));
            }
            if !(self.sigma[c] >= 0.0 && self.sigma[c].is_finite()) {
                return bad(format!("cell {c}: sigma must be >= 0"));
            }
        }
        Ok(())
    }
}

/// Free (interior) edges and faces, in increasing global order.
#[derive(Debug, Clone, PartialEq)]
pub struct DofPartition {
    pub free_edges: Vec<usize>,
    pub free_faces: Vec<usize>,
    pub n_edges: usize,
    pub n_faces: usize,
}

impl DofPartition {
    pub fn n_free_edges(&self) -> usize {
        self.free_edges.len()
    }

    pub fn n_free_faces(&self) -> usize {
        self.free_faces.len()
    }

    pub fn n_free(&self) -> usize {
        self.free_edges.len() + self.free_faces.len()
    }

    /// Edges plus faces, boundary included.
    pub fn n_total(&self) -> usize {
        self.n_edges + self.n_faces
    }

    /// Global face array with zeros on the boundary.
    pub fn expand_faces(&self, free: &[f64]) -> Vec<f64> {
        scatter(self.n_faces, &self.free_faces, free)
    }

    pub fn expand_edges(&self, free: &[f64]) -> Vec<f64> {
        scatter(self.n_edges, &self.free_edges, free)
    }

    pub fn restrict_edges(&self, all: &[f64]) -> Vec<f64> {
        self.free_edges.iter().map(|&e| all[e]).collect()
    }

    pub fn restrict_faces(&self, all: &[f64]) -> Vec<f64> {
        self.free_faces.iter().map(|&f| all[f]).collect()
    }
}

fn scatter(n: usize, idx: &[usize], vals: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (&i, &v) in idx.iter().zip(vals) {
        out[i] = v;
    }
    out
}

/// Tangential trace of E and normal trace of B vanish on the boundary, so
/// every boundary edge and face is removed from the unknowns.
pub fn apply_boundary_conditions(mesh: &PolyMesh) -> DofPartition {
    DofPartition {
        free_edges: (0..mesh.n_edges()).filter(|&e| !mesh.is_boundary_edge(e)).collect(),
        free_faces: (0..mesh.n_faces()).filter(|&f| !mesh.is_boundary_face(f)).collect(),
        n_edges: mesh.n_edges(),
        n_faces: mesh.n_faces(),
    }
}

#[derive(Debug, Clone)]
pub struct BlockSystem {
    pub dofs: DofPartition,
    pub tau: f64,
    pub alpha: f64,
    /// Free faces × free faces.
    pub c: SparseMatrix,
    /// Free faces × free edges.
    pub b2: SparseMatrix,
    /// Free edges × free faces.
    pub b1: SparseMatrix,
    /// Free edges × free edges.
    pub a: SparseMatrix,
    pub schur: SparseMatrix,
    /// CURL restricted to free faces × free edges.
    pub curl: SparseMatrix,
    /// `M_F(1/μ)`, free × free.
    pub face_mass_mu: SparseMatrix,
    /// `M_E(ε/τ)`, free × free.
    pub edge_mass_eps: SparseMatrix,
    /// Unweighted `M_E`, free rows × all edges (source term).
    pub edge_mass_source: SparseMatrix,
    /// Unweighted global mass matrices, boundary included.
    pub edge_mass: SparseMatrix,
    pub face_mass: SparseMatrix,
}

/// Global mass matrix from per-cell local matrices and cell weights, summed
/// in cell order.
fn assemble_mass<F>(n: usize, n_cells: usize, weight: F, local: impl Fn(usize) -> (Vec<usize>, nalgebra::DMatrix<f64>) + Sync) -> SparseMatrix
where
    F: Fn(usize) -> f64 + Sync,
{
    let locals: Vec<(Vec<usize>, nalgebra::DMatrix<f64>)> = (0..n_cells)
        .into_par_iter()
        .map(|c| {
            let (idx, m) = local(c);
            (idx, m * weight(c))
        })
        .collect();
    let cap = locals.iter().map(|(i, _)| i.len() * i.len()).sum();
    let mut t = TripletBuilder::with_capacity(n, n, cap);
    for (idx, m) in &locals {
        for (i, &gi) in idx.iter().enumerate() {
            for (j, &gj) in idx.iter().enumerate() {
                t.push(gi, gj, m[(i, j)]);
            }
        }
    }
    t.build()
}

fn edge_mass(mesh: &PolyMesh, ops: &[LocalVemOperators], alpha: f64, w: impl Fn(usize) -> f64 + Sync) -> SparseMatrix {
    assemble_mass(mesh.n_edges(), mesh.n_cells(), w, |c| {
        let s = &ops[c].edge;
        (s.edges.clone(), &s.consistency + &s.stabilization * alpha)
    })
}

fn face_mass(mesh: &PolyMesh, ops: &[LocalVemOperators], alpha: f64, w: impl Fn(usize) -> f64 + Sync) -> SparseMatrix {
    assemble_mass(mesh.n_faces(), mesh.n_cells(), w, |c| {
        let s = &ops[c].face;
        (s.faces.clone(), &s.consistency + &s.stabilization * alpha)
    })
}

pub fn assemble_blocks(
    mesh: &PolyMesh,
    local_ops: &[LocalVemOperators],
    incidence: &IncidenceOperators,
    params: &PhysParams,
    alpha: f64,
) -> Result<BlockSystem> {
    params.validate(mesh.n_cells())?;
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "stabilization parameter must be finite and >= 0, got {alpha}"
        )));
    }
    if local_ops.len() != mesh.n_cells() {
        return Err(Error::Dimension(format!(
            "{} local operators for {} cells",
            local_ops.len(),
            mesh.n_cells()
        )));
    }
    let tau = params.tau;
    let dofs = apply_boundary_conditions(mesh);
    let (fe, ff) = (&dofs.free_edges, &dofs.free_faces);

    let mf_mu = face_mass(mesh, local_ops, alpha, |c| 1.0 / params.mu[c]).submatrix(ff, ff);
    let me_a = edge_mass(mesh, local_ops, alpha, |c| params.epsilon[c] / tau + params.sigma[c]);
    let me_eps = edge_mass(mesh, local_ops, alpha, |c| params.epsilon[c] / tau);
    let me = edge_mass(mesh, local_ops, alpha, |_| 1.0);
    let mf = face_mass(mesh, local_ops, alpha, |_| 1.0);

    let curl = incidence.curl.submatrix(ff, fe);
    let c = mf_mu.scaled(1.0 / tau);
    let b2 = mf_mu.matmul(&curl);
    let b1 = curl.transpose().matmul(&mf_mu).scaled(-1.0);
    let a = me_a.submatrix(fe, fe);

    let mut sys = BlockSystem {
        tau,
        alpha,
        c,
        b2,
        b1,
        a,
        schur: SparseMatrix::zeros(fe.len(), fe.len()),
        curl,
        face_mass_mu: mf_mu,
        edge_mass_eps: me_eps.submatrix(fe, fe),
        edge_mass_source: me.submatrix(fe, &(0..mesh.n_edges()).collect::<Vec<_>>()),
        edge_mass: me,
        face_mass: mf,
        dofs,
    };
    sys.schur = assemble_schur(&sys);
    Ok(sys)
}

/// `S_C = A + τ CURLᵀ M_F(1/μ) CURL` on free DoFs, symmetrized.
pub fn assemble_schur(blocks: &BlockSystem) -> SparseMatrix {
    let ct = blocks.curl.transpose();
    let cc = ct.matmul(&blocks.face_mass_mu).matmul(&blocks.curl);
    blocks.a.add_scaled(1.0, &cc, blocks.tau).symmetrized()
}

impl BlockSystem {
    pub fn n_b(&self) -> usize {
        self.dofs.n_free_faces()
    }

    pub fn n_e(&self) -> usize {
        self.dofs.n_free_edges()
    }

    pub fn n(&self) -> usize {
        self.n_b() + self.n_e()
    }

    /// The full 2×2 block matrix as one sparse matrix.
    pub fn monolithic(&self) -> SparseMatrix {
        let nb = self.n_b();
        let mut t = TripletBuilder::with_capacity(
            self.n(),
            self.n(),
            self.c.nnz() + self.b1.nnz() + self.b2.nnz() + self.a.nnz(),
        );
        let mut put = |m: &SparseMatrix, r0: usize, c0: usize| {
            for r in 0..m.nrows() {
                let (cs, vs) = m.row(r);
                for (&c, &v) in cs.iter().zip(vs) {
                    t.push(r0 + r, c0 + c, v);
                }
            }
        };
        put(&self.c, 0, 0);
        put(&self.b2, 0, nb);
        put(&self.b1, nb, 0);
        put(&self.a, nb, nb);
        t.build()
    }

    /// Writes `C`, `B1`, `B2`, `A` and `S_C` as MatrixMarket files into `dir`.
    pub fn write_matrix_market(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, m) in [
            ("C", &self.c),
            ("B1", &self.b1),
            ("B2", &self.b2),
            ("A", &self.a),
            ("S_C", &self.schur),
        ] {
            m.write_matrix_market(&dir.join(format!("{name}.mtx")))?;
        }
        Ok(())
    }
}

/// Free-DoF unknowns of one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub b: Vec<f64>,
    pub e: Vec<f64>,
}

impl StateVector {
    pub fn zeros(dofs: &DofPartition) -> Self {
        Self {
            b: vec![0.0; dofs.n_free_faces()],
            e: vec![0.0; dofs.n_free_edges()],
        }
    }

    /// Splits a (B, E) vector.
    pub fn from_block(x: &[f64], n_b: usize) -> Self {
        Self {
            b: x[..n_b].to_vec(),
            e: x[n_b..].to_vec(),
        }
    }

    pub fn to_block(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.b.len() + self.e.len());
        v.extend_from_slice(&self.b);
        v.extend_from_slice(&self.e);
        v
    }
}

/// `dof_e = f(midpoint) · t_e` on every edge.
pub fn interpolate_edge_field(geom: &GeometricCache, f: impl Fn(&Point) -> Vector3<f64>) -> Vec<f64> {
    (0..geom.edge_length.len())
        .map(|e| f(&geom.edge_midpoint[e]).dot(&geom.edge_tangent[e]))
        .collect()
}

/// `dof_F = |F| f(x_F) · n_F` on every face.
pub fn interpolate_face_field(geom: &GeometricCache, f: impl Fn(&Point) -> Vector3<f64>) -> Vec<f64> {
    (0..geom.face_area.len())
        .map(|k| geom.face_area[k] * f(&geom.face_centroid[k]).dot(&geom.face_normal[k]))
        .collect()
}

/// Right-hand side in (B, E) ordering. `j_dofs` covers all edges, so the
/// source is not truncated at the boundary.
pub fn assemble_rhs(blocks: &BlockSystem, prev: &StateVector, j_dofs: &[f64]) -> Result<Vec<f64>> {
    if prev.b.len() != blocks.n_b() || prev.e.len() != blocks.n_e() {
        return Err(Error::InvalidArgument(format!(
            "state has ({}, {}) entries, system expects ({}, {})",
            prev.b.len(),
            prev.e.len(),
            blocks.n_b(),
            blocks.n_e()
        )));
    }
    if j_dofs.len() != blocks.dofs.n_edges {
        return Err(Error::InvalidArgument(format!(
            "source has {} edge values, mesh has {} edges",
            j_dofs.len(),
            blocks.dofs.n_edges
        )));
    }
    let mut rhs = blocks.c.mul_vec(&prev.b);
    let mut re = blocks.edge_mass_eps.mul_vec(&prev.e);
    let src = blocks.edge_mass_source.mul_vec(j_dofs);
    for (r, s) in re.iter_mut().zip(&src) {
        *r += s;
    }
    rhs.extend(re);
    Ok(rhs)
}

/// Net outflow `Σ_F s_FP dof_F` of a face field per cell.
pub fn cell_divergence(incidence: &IncidenceOperators, dofs: &DofPartition, b_free: &[f64]) -> Vec<f64> {
    incidence.div.mul_vec(&dofs.expand_faces(b_free))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{compute_geometry, generate_hex, BoxDomain};
    use crate::vem::{build_incidence, build_local_operators};

    fn system(n: usize, params: impl Fn(usize) -> PhysParams) -> BlockSystem {
        let m = generate_hex([n; 3], &BoxDomain::unit()).unwrap();
        let g = compute_geometry(&m).unwrap();
        let ops = build_local_operators(&m, &g).unwrap();
        let inc = build_incidence(&m, &g);
        assemble_blocks(&m, &ops, &inc, &params(m.n_cells()), 1.0).unwrap()
    }

    #[test]
    fn single_cell_has_empty_system() {
        let s = system(1, |n| PhysParams::uniform(n, 1.0, 1.0, 1.0, 1.0));
        assert_eq!(s.n(), 0);
        assert_eq!(s.dofs.n_total(), 12 + 6);
        let rhs = assemble_rhs(&s, &StateVector::zeros(&s.dofs), &[1.0; 12]).unwrap();
        assert!(rhs.is_empty());
    }

    #[test]
    fn hex2_free_counts() {
        let s = system(2, |n| PhysParams::uniform(n, 1.0, 1.0, 1.0, 0.05));
        assert_eq!(s.dofs.n_total(), 90);
        // interior edges: the 6 half-edges touching the centre vertex;
        // interior faces: 3 mid-planes × 4 quads
        assert_eq!((s.n_e(), s.n_b()), (6, 12));
    }

    #[test]
    fn conductivity_free_scaling() {
        let s = system(2, |n| PhysParams::uniform(n, 1.0, 0.0, 1.0, 0.1));
        let me = s.edge_mass.submatrix(&s.dofs.free_edges, &s.dofs.free_edges);
        let diff = s.a.add_scaled(1.0, &me, -10.0);
        assert!(diff.values().iter().all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn invalid_params_are_rejected() {
        let m = generate_hex([2; 3], &BoxDomain::unit()).unwrap();
        let g = compute_geometry(&m).unwrap();
        let ops = build_local_operators(&m, &g).unwrap();
        let inc = build_incidence(&m, &g);
        let mut p = PhysParams::uniform(m.n_cells(), 1.0, 1.0, 1.0, 0.1);
        p.mu[3] = 0.0;
        assert!(assemble_blocks(&m, &ops, &inc, &p, 1.0).is_err());
        let p = PhysParams::uniform(m.n_cells(), 1.0, -1.0, 1.0, 0.1);
        assert!(assemble_blocks(&m, &ops, &inc, &p, 1.0).is_err());
        let p = PhysParams::uniform(m.n_cells(), 1.0, 1.0, 1.0, 0.0);
        assert!(assemble_blocks(&m, &ops, &inc, &p, 1.0).is_err());
        let p = PhysParams::uniform(m.n_cells(), 1.0, 1.0, 1.0, 0.1);
        assert!(assemble_blocks(&m, &ops, &inc, &p, -0.5).is_err());
    }

    #[test]
    fn rhs_checks_dimensions() {
        let s = system(2, |n| PhysParams::uniform(n, 1.0, 1.0, 1.0, 0.1));
        let bad = StateVector { b: vec![0.0; 3], e: vec![0.0; 6] };
        assert!(assemble_rhs(&s, &bad, &vec![0.0; 54]).is_err());
        let zero = assemble_rhs(&s, &StateVector::zeros(&s.dofs), &vec![0.0; 54]).unwrap();
        assert!(zero.iter().all(|&v| v == 0.0));
    }
}
