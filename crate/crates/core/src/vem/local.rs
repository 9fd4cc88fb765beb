//! Cell-local lowest-order edge and face spaces.
//!
//! Both projections onto constant vector fields are computed from the
//! degrees of freedom by integrating the defining moment identity by parts,
//! so only boundary quantities of the cell (face centroids, edge midpoints,
//! orientations) enter:
//!
//! * edge space: a constant `p` equals `curl(p × (x - x_P)) / 2`, and the
//!   tangential trace on each face is reduced once more to edge circulations,
//!   giving `∫_P v·p = p · Σ_e m_e v_e` with
//!   `m_e = ½ Σ_{F ∋ e} s_FP s_eF |e| (x_F - x_P) × (x_e - x_F)`;
//! * face space: `p = ∇(p·(x - x_P))`, giving `∫_P w·p = p · Σ_F s_FP w_F (x_F - x_P)`.
//!
//! The Gram matrix of the constants is `|P| I`, so the 3×3 moment system is
//! diagonal.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::mesh::{GeometricCache, PolyMesh};

#[derive(Debug, Clone)]
pub struct LocalEdgeSpace {
    pub cell: usize,
    /// Global edge indices, sorted.
    pub edges: Vec<usize>,
    /// `3 × n`: edge DoFs to the constant projection.
    pub projection: DMatrix<f64>,
    /// `n × 3`: row `e` is `t_eᵀ`.
    pub dofs_of_constants: DMatrix<f64>,
    /// `|P| Πᵀ Π`.
    pub consistency: DMatrix<f64>,
    /// `σ_P (I - DΠ)ᵀ(I - DΠ)` with `σ_P = tr(consistency) / n`.
    pub stabilization: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct LocalFaceSpace {
    pub cell: usize,
    /// Global face indices in cell order.
    pub faces: Vec<usize>,
    /// `3 × n`: face fluxes to the constant projection.
    pub projection: DMatrix<f64>,
    /// `n × 3`: row `F` is `|F| n_Fᵀ`.
    pub dofs_of_constants: DMatrix<f64>,
    pub consistency: DMatrix<f64>,
    pub stabilization: DMatrix<f64>,
}

/// Constant-field projection for the edge space of `cell`, columns ordered
/// as [`PolyMesh::cell_edges`].
pub fn local_edge_projection(
    mesh: &PolyMesh,
    geom: &GeometricCache,
    cell: usize,
) -> Result<DMatrix<f64>> {
    let edges = mesh.cell_edges(cell);
    let xp = geom.cell_centroid[cell];
    let mut proj = DMatrix::zeros(3, edges.len());
    for f in &mesh.cells()[cell] {
        let xf = geom.face_centroid[f.index];
        let arm = xf - xp;
        for e in &mesh.faces()[f.index] {
            let col = edges.binary_search(&e.index).expect("face edge belongs to cell");
            let w = arm.cross(&(geom.edge_midpoint[e.index] - xf))
                * (0.5 * f.sign_f64() * e.sign_f64() * geom.edge_length[e.index]);
            for k in 0..3 {
                proj[(k, col)] += w[k];
            }
        }
    }
    proj /= geom.cell_volume[cell];

    let mut d = DMatrix::zeros(edges.len(), 3);
    for (row, &e) in edges.iter().enumerate() {
        for k in 0..3 {
            d[(row, k)] = geom.edge_tangent[e][k];
        }
    }
    check_moment_system(cell, "edge", &proj, &d)?;
    Ok(proj)
}

/// Constant-field projection for the face space of `cell`, columns in the
/// cell's face order.
pub fn local_face_projection(
    mesh: &PolyMesh,
    geom: &GeometricCache,
    cell: usize,
) -> Result<DMatrix<f64>> {
    let faces = &mesh.cells()[cell];
    let xp = geom.cell_centroid[cell];
    let vol = geom.cell_volume[cell];
    let mut proj = DMatrix::zeros(3, faces.len());
    for (col, f) in faces.iter().enumerate() {
        let arm = (geom.face_centroid[f.index] - xp) * (f.sign_f64() / vol);
        for k in 0..3 {
            proj[(k, col)] = arm[k];
        }
    }
    check_moment_system(cell, "face", &proj, &face_dofs_of_constants(mesh, geom, cell))?;
    Ok(proj)
}

fn face_dofs_of_constants(mesh: &PolyMesh, geom: &GeometricCache, cell: usize) -> DMatrix<f64> {
    let faces = &mesh.cells()[cell];
    let mut d = DMatrix::zeros(faces.len(), 3);
    for (row, f) in faces.iter().enumerate() {
        let v = geom.face_normal[f.index] * geom.face_area[f.index];
        for k in 0..3 {
            d[(row, k)] = v[k];
        }
    }
    d
}

/// The DoFs must be able to represent every constant field, and the
/// projection must recover it.
fn check_moment_system(
    cell: usize,
    space: &'static str,
    proj: &DMatrix<f64>,
    d: &DMatrix<f64>,
) -> Result<()> {
    let gram = d.transpose() * d;
    let eig = SymmetricEigen::new(gram).eigenvalues;
    let (lo, hi) = (eig.min(), eig.max());
    if !(hi > 0.0) || !(lo > 1e-10 * hi) {
        return Err(Error::SingularCell { cell, space });
    }
    let defect = (proj * d - DMatrix::<f64>::identity(3, 3)).amax();
    if !(defect < 1e-8) {
        return Err(Error::SingularCell { cell, space });
    }
    Ok(())
}

fn stabilized(
    vol: f64,
    proj: &DMatrix<f64>,
    d: &DMatrix<f64>,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = proj.ncols();
    let consistency = proj.transpose() * proj * vol;
    let sigma = consistency.trace() / n as f64;
    let defect = DMatrix::<f64>::identity(n, n) - d * proj;
    let stabilization = defect.transpose() * &defect * sigma;
    (consistency, stabilization)
}

impl LocalEdgeSpace {
    pub fn new(mesh: &PolyMesh, geom: &GeometricCache, cell: usize) -> Result<Self> {
        let projection = local_edge_projection(mesh, geom, cell)?;
        let edges = mesh.cell_edges(cell);
        let mut d = DMatrix::zeros(edges.len(), 3);
        for (row, &e) in edges.iter().enumerate() {
            for k in 0..3 {
                d[(row, k)] = geom.edge_tangent[e][k];
            }
        }
        let (consistency, stabilization) = stabilized(geom.cell_volume[cell], &projection, &d);
        Ok(Self {
            cell,
            edges,
            projection,
            dofs_of_constants: d,
            consistency,
            stabilization,
        })
    }

    pub fn mass(&self, alpha: f64) -> Result<DMatrix<f64>> {
        check_alpha(alpha)?;
        Ok(&self.consistency + &self.stabilization * alpha)
    }
}

impl LocalFaceSpace {
    pub fn new(mesh: &PolyMesh, geom: &GeometricCache, cell: usize) -> Result<Self> {
        let projection = local_face_projection(mesh, geom, cell)?;
        let d = face_dofs_of_constants(mesh, geom, cell);
        let (consistency, stabilization) = stabilized(geom.cell_volume[cell], &projection, &d);
        Ok(Self {
            cell,
            faces: mesh.cells()[cell].iter().map(|f| f.index).collect(),
            projection,
            dofs_of_constants: d,
            consistency,
            stabilization,
        })
    }

    pub fn mass(&self, alpha: f64) -> Result<DMatrix<f64>> {
        check_alpha(alpha)?;
        Ok(&self.consistency + &self.stabilization * alpha)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "stabilization parameter must be finite and >= 0, got {alpha}"
        )));
    }
    Ok(())
}

/// Local edge mass matrix `|P| ΠᵀΠ + α σ_P (I - DΠ)ᵀ(I - DΠ)`.
pub fn local_edge_mass(
    mesh: &PolyMesh,
    geom: &GeometricCache,
    cell: usize,
    alpha: f64,
) -> Result<DMatrix<f64>> {
    check_alpha(alpha)?;
    LocalEdgeSpace::new(mesh, geom, cell)?.mass(alpha)
}

/// Local face mass matrix, same construction on face fluxes.
pub fn local_face_mass(
    mesh: &PolyMesh,
    geom: &GeometricCache,
    cell: usize,
    alpha: f64,
) -> Result<DMatrix<f64>> {
    check_alpha(alpha)?;
    LocalFaceSpace::new(mesh, geom, cell)?.mass(alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{compute_geometry, generate_hex, generate_tet, BoxDomain, Point};
    use nalgebra::{DVector, Vector3};

    fn cube() -> (PolyMesh, GeometricCache) {
        let m = generate_hex([1; 3], &BoxDomain::unit()).unwrap();
        let g = compute_geometry(&m).unwrap();
        (m, g)
    }

    #[test]
    fn edge_projection_reproduces_x_direction() {
        let (m, g) = cube();
        let p = local_edge_projection(&m, &g, 0).unwrap();
        let dofs: Vec<f64> = m
            .cell_edges(0)
            .iter()
            .map(|&e| g.edge_tangent[e].dot(&Vector3::x()))
            .collect();
        let out = &p * DVector::from_vec(dofs);
        assert!((out - Vector3::x()).norm() < 1e-14);
        let zero = &p * DVector::zeros(12);
        assert_eq!(zero.norm(), 0.0);
    }

    #[test]
    fn edge_projection_of_rotational_field_is_cell_average() {
        // v = β(y, -x, 0) + c lies in the lowest-order edge space of a cube;
        // its average over [0,1]^3 is β(1/2, -1/2, 0) + c.
        let (m, g) = cube();
        let beta = 0.7;
        let c = Vector3::new(0.3, -1.1, 2.0);
        let v = |x: &Point| Vector3::new(beta * x.y, -beta * x.x, 0.0) + c;
        let p = local_edge_projection(&m, &g, 0).unwrap();
        let dofs: Vec<f64> = m
            .cell_edges(0)
            .iter()
            .map(|&e| v(&g.edge_midpoint[e]).dot(&g.edge_tangent[e]))
            .collect();
        let out = &p * DVector::from_vec(dofs);
        let expected = Vector3::new(0.5 * beta, -0.5 * beta, 0.0) + c;
        assert!((&out - expected).norm() < 1e-14, "{out}");
    }

    #[test]
    fn face_projection_on_cube_and_tets() {
        let (m, g) = cube();
        let p = local_face_projection(&m, &g, 0).unwrap();
        let dofs: Vec<f64> = m.cells()[0]
            .iter()
            .map(|f| g.face_area[f.index] * g.face_normal[f.index].z)
            .collect();
        let out = &p * DVector::from_vec(dofs);
        assert!((out - Vector3::z()).norm() < 1e-14);

        let t = generate_tet([1; 3], &BoxDomain::unit()).unwrap();
        let gt = compute_geometry(&t).unwrap();
        let c = Vector3::new(0.31, -0.77, 1.9);
        for cell in 0..t.n_cells() {
            let p = local_face_projection(&t, &gt, cell).unwrap();
            let dofs: Vec<f64> = t.cells()[cell]
                .iter()
                .map(|f| gt.face_area[f.index] * gt.face_normal[f.index].dot(&c))
                .collect();
            assert!((&p * DVector::from_vec(dofs) - c).norm() < 1e-12);
        }
    }

    #[test]
    fn alpha_zero_leaves_only_consistency() {
        let (m, g) = cube();
        let e = local_edge_mass(&m, &g, 0, 0.0).unwrap();
        let f = local_face_mass(&m, &g, 0, 0.0).unwrap();
        let rank = |a: &DMatrix<f64>| a.clone().svd(false, false).rank(1e-10 * a.amax());
        assert!(rank(&e) <= 3);
        assert!(rank(&f) <= 3);
    }

    #[test]
    fn negative_alpha_is_rejected() {
        let (m, g) = cube();
        assert!(matches!(
            local_edge_mass(&m, &g, 0, -1.0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(local_face_mass(&m, &g, 0, f64::NAN).is_err());
    }

    #[test]
    fn unit_cube_masses_are_spd() {
        let (m, g) = cube();
        for mass in [
            local_edge_mass(&m, &g, 0, 1.0).unwrap(),
            local_face_mass(&m, &g, 0, 1.0).unwrap(),
        ] {
            let eig = SymmetricEigen::new(mass.clone()).eigenvalues;
            assert!(eig.min() > 1e-3 * eig.max(), "{eig}");
            assert!((&mass - mass.transpose()).amax() < 1e-15);
        }
    }
}
