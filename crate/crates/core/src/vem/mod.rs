//! Lowest-order virtual element operators: per-cell constant projections and
//! stabilized mass matrices for the edge (H(curl)) and face (H(div)) spaces,
//! and the global incidence operators linking vertices, edges, faces and
//! cells.

mod incidence;
mod local;

use rayon::prelude::*;

use crate::error::Result;
use crate::mesh::{GeometricCache, PolyMesh};

pub use incidence::{build_incidence, nodal_interpolation, IncidenceOperators};
pub use local::{
    local_edge_mass, local_edge_projection, local_face_mass, local_face_projection,
    LocalEdgeSpace, LocalFaceSpace,
};

/// Edge and face spaces of one cell.
#[derive(Debug, Clone)]
pub struct LocalVemOperators {
    pub edge: LocalEdgeSpace,
    pub face: LocalFaceSpace,
}

/// Builds the local spaces of every cell (in parallel, output in cell order).
pub fn build_local_operators(
    mesh: &PolyMesh,
    geom: &GeometricCache,
) -> Result<Vec<LocalVemOperators>> {
    (0..mesh.n_cells())
        .into_par_iter()
        .map(|c| {
            Ok(LocalVemOperators {
                edge: LocalEdgeSpace::new(mesh, geom, c)?,
                face: LocalFaceSpace::new(mesh, geom, c)?,
            })
        })
        .collect()
}
