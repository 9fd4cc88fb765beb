use crate::mesh::{GeometricCache, PolyMesh};
use crate::sparse::{SparseMatrix, TripletBuilder};

/// Global topological operators between the lowest-order spaces.
#[derive(Debug, Clone)]
pub struct IncidenceOperators {
    /// `n_faces × n_edges`, entry `s_eF |e|`: edge tangential values to face fluxes.
    pub curl: SparseMatrix,
    /// `n_edges × n_vertices`, entries `±1/|e|`: nodal values to tangential values.
    pub grad: SparseMatrix,
    /// `n_cells × n_faces`, entry `s_FP`: face fluxes to net cell outflow.
    pub div: SparseMatrix,
    /// `n_edges × 3 n_vertices`: nodal vector fields to edge DoFs.
    pub nodal: SparseMatrix,
}

pub fn build_incidence(mesh: &PolyMesh, geom: &GeometricCache) -> IncidenceOperators {
    let mut curl = TripletBuilder::new(mesh.n_faces(), mesh.n_edges());
    for (f, face) in mesh.faces().iter().enumerate() {
        for e in face {
            curl.push(f, e.index, e.sign_f64() * geom.edge_length[e.index]);
        }
    }

    let mut grad = TripletBuilder::new(mesh.n_edges(), mesh.n_vertices());
    for (e, &[a, b]) in mesh.edges().iter().enumerate() {
        let inv = 1.0 / geom.edge_length[e];
        grad.push(e, a, -inv);
        grad.push(e, b, inv);
    }

    let mut div = TripletBuilder::new(mesh.n_cells(), mesh.n_faces());
    for (c, cell) in mesh.cells().iter().enumerate() {
        for f in cell {
            div.push(c, f.index, f.sign_f64());
        }
    }

    IncidenceOperators {
        curl: curl.build(),
        grad: grad.build(),
        div: div.build(),
        nodal: nodal_interpolation(mesh, geom),
    }
}

/// Endpoint-average interpolation of a nodal vector field onto edge
/// tangents: `dof_e = t_e · (u(v1) + u(v2)) / 2`. Vertex `v` owns columns
/// `3v..3v+3`.
pub fn nodal_interpolation(mesh: &PolyMesh, geom: &GeometricCache) -> SparseMatrix {
    let mut t = TripletBuilder::with_capacity(mesh.n_edges(), 3 * mesh.n_vertices(), 6 * mesh.n_edges());
    for (e, &[a, b]) in mesh.edges().iter().enumerate() {
        let tan = geom.edge_tangent[e];
        let (lo, hi) = (a.min(b), a.max(b));
        for v in [lo, hi] {
            for k in 0..3 {
                t.push(e, 3 * v + k, 0.5 * tan[k]);
            }
        }
    }
    t.build()
}
