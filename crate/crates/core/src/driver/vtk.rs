use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DVector, Vector3};

use crate::assembly::{DofPartition, StateVector};
use crate::error::{Error, Result};
use crate::mesh::PolyMesh;
use crate::vem::LocalVemOperators;

const VTK_POLYHEDRON: u8 = 42;

/// Legacy ASCII unstructured grid with one polyhedron per cell and the
/// per-cell constant projections of E and B as cell vectors.
pub fn export_vtk(
    mesh: &PolyMesh,
    local_ops: &[LocalVemOperators],
    dofs: &DofPartition,
    state: &StateVector,
    path: &Path,
) -> Result<()> {
    if state.e.len() != dofs.n_free_edges() || state.b.len() != dofs.n_free_faces() {
        return Err(Error::InvalidArgument(format!(
            "state has ({}, {}) entries, mesh expects ({}, {})",
            state.b.len(),
            state.e.len(),
            dofs.n_free_faces(),
            dofs.n_free_edges()
        )));
    }
    let e_all = dofs.expand_edges(&state.e);
    let b_all = dofs.expand_faces(&state.b);

    let mut s = String::new();
    s.push_str("# vtk DataFile Version 4.2\nmaxvem fields\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {} double", mesh.n_vertices());
    for p in mesh.vertices() {
        let _ = writeln!(s, "{:.16e} {:.16e} {:.16e}", p.x, p.y, p.z);
    }

    let streams: Vec<Vec<usize>> = (0..mesh.n_cells())
        .map(|c| {
            let faces = &mesh.cells()[c];
            let mut v = vec![faces.len()];
            for f in faces {
                let mut verts = mesh.face_vertices(f.index);
                if f.sign < 0 {
                    verts.reverse();
                }
                v.push(verts.len());
                v.extend(verts);
            }
            v
        })
        .collect();
    let size: usize = streams.iter().map(|v| v.len() + 1).sum();
    let _ = writeln!(s, "CELLS {} {size}", mesh.n_cells());
    for st in &streams {
        let _ = write!(s, "{}", st.len());
        for v in st {
            let _ = write!(s, " {v}");
        }
        s.push('\n');
    }
    let _ = writeln!(s, "CELL_TYPES {}", mesh.n_cells());
    for _ in 0..mesh.n_cells() {
        let _ = writeln!(s, "{VTK_POLYHEDRON}");
    }

    let _ = writeln!(s, "CELL_DATA {}", mesh.n_cells());
    let fields: [(&str, Box<dyn Fn(&LocalVemOperators) -> Vector3<f64>>); 2] = [
        (
            "E_proj",
            Box::new(|op: &LocalVemOperators| {
                let local = DVector::from_iterator(op.edge.edges.len(), op.edge.edges.iter().map(|&e| e_all[e]));
                let v = &op.edge.projection * local;
                Vector3::new(v[0], v[1], v[2])
            }),
        ),
        (
            "B_proj",
            Box::new(|op: &LocalVemOperators| {
                let local = DVector::from_iterator(op.face.faces.len(), op.face.faces.iter().map(|&f| b_all[f]));
                let v = &op.face.projection * local;
                Vector3::new(v[0], v[1], v[2])
            }),
        ),
    ];
    for (name, field) in &fields {
        let _ = writeln!(s, "VECTORS {name} double");
        for op in local_ops {
            let v = field(op);
            let _ = writeln!(s, "{:.16e} {:.16e} {:.16e}", v.x, v.y, v.z);
        }
    }
    std::fs::write(path, s)?;
    Ok(())
}
