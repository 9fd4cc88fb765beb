//! Oriented polyhedral mesh complex.
//!
//! Edges carry a direction (first vertex to second), faces are loops of
//! signed edges traversed counterclockwise about the face normal, and cells
//! are sets of signed faces with `+1` meaning the face normal points out of
//! the cell. Boundary flags are derived from face-cell incidence.

mod generate;
mod geometry;
mod io;
mod topology;

use std::collections::HashMap;

use nalgebra::Vector3;

use crate::error::{Error, Result};

pub use generate::{generate_hex, generate_tet, BoxDomain};
pub use geometry::{compute_geometry, GeometricCache};
pub use io::{load_mesh, parse_mesh, save_mesh, write_mesh};
pub use topology::{validate_topology, TopologyCheck, TopologyReport};

pub type Point = Vector3<f64>;

/// An entity index together with an orientation sign (`+1` or `-1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Oriented {
    pub index: usize,
    pub sign: i8,
}

impl Oriented {
    pub fn new(index: usize, sign: i8) -> Self {
        Self { index, sign }
    }

    pub fn sign_f64(self) -> f64 {
        f64::from(self.sign)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolyMesh {
    vertices: Vec<Point>,
    edges: Vec<[usize; 2]>,
    faces: Vec<Vec<Oriented>>,
    cells: Vec<Vec<Oriented>>,
    boundary_vertices: Vec<bool>,
    boundary_edges: Vec<bool>,
    boundary_faces: Vec<bool>,
}

impl PolyMesh {
    /// Assembles a mesh from raw incidence lists. Only index ranges and signs
    /// are checked here; use [`validate_topology`] for the complex invariants.
    pub fn new(
        vertices: Vec<Point>,
        edges: Vec<[usize; 2]>,
        faces: Vec<Vec<Oriented>>,
        cells: Vec<Vec<Oriented>>,
    ) -> Result<Self> {
        let nv = vertices.len();
        for (e, &[a, b]) in edges.iter().enumerate() {
            if a >= nv || b >= nv || a == b {
                return Err(Error::InvalidArgument(format!(
                    "edge {e} has invalid endpoints ({a}, {b})"
                )));
            }
        }
        check_signed_lists(&faces, edges.len(), "face", "edge")?;
        check_signed_lists(&cells, faces.len(), "cell", "face")?;

        let mut face_cells = vec![0usize; faces.len()];
        for cell in &cells {
            for f in cell {
                face_cells[f.index] += 1;
            }
        }
        let boundary_faces: Vec<bool> = face_cells.iter().map(|&c| c == 1).collect();
        let mut boundary_edges = vec![false; edges.len()];
        for (f, face) in faces.iter().enumerate() {
            if boundary_faces[f] {
                for e in face {
                    boundary_edges[e.index] = true;
                }
            }
        }
        let mut boundary_vertices = vec![false; nv];
        for (e, &[a, b]) in edges.iter().enumerate() {
            if boundary_edges[e] {
                boundary_vertices[a] = true;
                boundary_vertices[b] = true;
            }
        }
        Ok(Self {
            vertices,
            edges,
            faces,
            cells,
            boundary_vertices,
            boundary_edges,
            boundary_faces,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn faces(&self) -> &[Vec<Oriented>] {
        &self.faces
    }

    pub fn cells(&self) -> &[Vec<Oriented>] {
        &self.cells
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertices[v]
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.boundary_edges[e]
    }

    pub fn is_boundary_face(&self, f: usize) -> bool {
        self.boundary_faces[f]
    }

    /// Total edge plus face count, boundary included.
    pub fn total_dofs(&self) -> usize {
        self.n_edges() + self.n_faces()
    }

    /// Start vertex of a signed edge.
    pub fn edge_tail(&self, e: Oriented) -> usize {
        let [a, b] = self.edges[e.index];
        if e.sign > 0 {
            a
        } else {
            b
        }
    }

    /// Vertex loop of a face in traversal order.
    pub fn face_vertices(&self, f: usize) -> Vec<usize> {
        self.faces[f].iter().map(|&e| self.edge_tail(e)).collect()
    }

    /// Sorted distinct edges of a cell.
    pub fn cell_edges(&self, c: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.cells[c]
            .iter()
            .flat_map(|f| self.faces[f.index].iter().map(|e| e.index))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Sorted distinct vertices of a cell.
    pub fn cell_vertices(&self, c: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .cell_edges(c)
            .into_iter()
            .flat_map(|e| self.edges[e])
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Flips the sign of one face inside one cell. Only useful for
    /// constructing invalid meshes in tests and diagnostics.
    pub fn flip_cell_face_sign(&mut self, cell: usize, local_face: usize) {
        let f = &mut self.cells[cell][local_face];
        f.sign = -f.sign;
    }
}

fn check_signed_lists(
    lists: &[Vec<Oriented>],
    bound: usize,
    owner: &str,
    item: &str,
) -> Result<()> {
    for (i, list) in lists.iter().enumerate() {
        if list.len() < 3 {
            return Err(Error::InvalidArgument(format!(
                "{owner} {i} has only {} {item}s",
                list.len()
            )));
        }
        for o in list {
            if o.index >= bound {
                return Err(Error::InvalidArgument(format!(
                    "{owner} {i} references {item} {} (only {bound} exist)",
                    o.index
                )));
            }
            if o.sign != 1 && o.sign != -1 {
                return Err(Error::InvalidArgument(format!(
                    "{owner} {i} has sign {} on {item} {}",
                    o.sign, o.index
                )));
            }
        }
    }
    Ok(())
}

/// Builds an oriented mesh from cells described by outward vertex loops.
///
/// Edges are directed from the lower to the higher vertex index. A face is
/// stored with the orientation whose normal has a positive dominant
/// component, so axis-aligned faces get `+x`, `+y` or `+z` normals.
#[derive(Debug, Default)]
pub struct MeshBuilder {
    vertices: Vec<Point>,
    edges: Vec<[usize; 2]>,
    edge_map: HashMap<(usize, usize), usize>,
    faces: Vec<Vec<Oriented>>,
    face_loops: Vec<Vec<usize>>,
    face_map: HashMap<Vec<usize>, usize>,
    cells: Vec<Vec<Oriented>>,
}

impl MeshBuilder {
    pub fn new(vertices: Vec<Point>) -> Self {
        Self {
            vertices,
            ..Default::default()
        }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    /// Adds a convex cell; each face loop is reoriented to point outward
    /// (away from the vertex average of the cell).
    pub fn add_convex_cell(&mut self, faces: &[Vec<usize>]) -> Result<usize> {
        let mut ids: Vec<usize> = faces.iter().flatten().copied().collect();
        ids.sort_unstable();
        ids.dedup();
        let center =
            ids.iter().map(|&v| self.vertices[v]).sum::<Point>() / ids.len() as f64;
        let oriented: Vec<Vec<usize>> = faces
            .iter()
            .map(|lp| {
                let n = newell_normal(lp.iter().map(|&v| self.vertices[v]));
                let c = lp.iter().map(|&v| self.vertices[v]).sum::<Point>() / lp.len() as f64;
                if n.dot(&(c - center)) < 0.0 {
                    lp.iter().rev().copied().collect()
                } else {
                    lp.clone()
                }
            })
            .collect();
        self.add_cell(&oriented)
    }

    /// Adds a cell whose face loops are already oriented outward.
    pub fn add_cell(&mut self, faces: &[Vec<usize>]) -> Result<usize> {
        let mut signed = Vec::with_capacity(faces.len());
        for lp in faces {
            if lp.len() < 3 || lp.iter().any(|&v| v >= self.vertices.len()) {
                return Err(Error::InvalidArgument(format!(
                    "face loop {lp:?} is too short or out of range"
                )));
            }
            let mut key = lp.clone();
            key.sort_unstable();
            let entry = match self.face_map.get(&key) {
                Some(&f) => {
                    let stored = &self.face_loops[f];
                    let same = same_orientation(stored, lp).ok_or_else(|| {
                        Error::InvalidArgument(format!(
                            "face loop {lp:?} does not match stored loop {stored:?}"
                        ))
                    })?;
                    Oriented::new(f, if same { 1 } else { -1 })
                }
                None => {
                    let n = newell_normal(lp.iter().map(|&v| self.vertices[v]));
                    let flip = !canonical_positive(&n);
                    let stored: Vec<usize> = if flip {
                        lp.iter().rev().copied().collect()
                    } else {
                        lp.clone()
                    };
                    let f = self.faces.len();
                    let edges = (0..stored.len())
                        .map(|i| self.edge(stored[i], stored[(i + 1) % stored.len()]))
                        .collect();
                    self.faces.push(edges);
                    self.face_loops.push(stored);
                    self.face_map.insert(key, f);
                    Oriented::new(f, if flip { -1 } else { 1 })
                }
            };
            signed.push(entry);
        }
        self.cells.push(signed);
        Ok(self.cells.len() - 1)
    }

    fn edge(&mut self, a: usize, b: usize) -> Oriented {
        let key = (a.min(b), a.max(b));
        let idx = *self.edge_map.entry(key).or_insert_with(|| {
            self.edges.push([key.0, key.1]);
            self.edges.len() - 1
        });
        Oriented::new(idx, if a < b { 1 } else { -1 })
    }

    pub fn build(self) -> Result<PolyMesh> {
        PolyMesh::new(self.vertices, self.edges, self.faces, self.cells)
    }
}

fn same_orientation(stored: &[usize], given: &[usize]) -> Option<bool> {
    let k = stored.len();
    if k != given.len() {
        return None;
    }
    let pos = stored.iter().position(|&v| v == given[0])?;
    if stored[(pos + 1) % k] == given[1] {
        Some(true)
    } else if stored[(pos + k - 1) % k] == given[1] {
        Some(false)
    } else {
        None
    }
}

/// Area-weighted normal of a closed polygon (not normalized).
pub(crate) fn newell_normal(points: impl Iterator<Item = Point> + Clone) -> Point {
    let pts: Vec<Point> = points.collect();
    let n = pts.len();
    let mut acc = Point::zeros();
    for i in 0..n {
        acc += pts[i].cross(&pts[(i + 1) % n]);
    }
    acc * 0.5
}

fn canonical_positive(n: &Point) -> bool {
    let m = n.amax();
    for i in 0..3 {
        if n[i].abs() >= m * (1.0 - 1e-12) {
            return n[i] > 0.0;
        }
    }
    true
}
