//! Writes the general-polyhedron sample meshes shipped in `data/`.
//!
//! ```text
//! cargo run --example sample_meshes -- crates/core/data
//! ```

use std::collections::HashMap;
use std::path::PathBuf;

use maxvem::mesh::{save_mesh, validate_topology, MeshBuilder, Point, PolyMesh};

/// Collects cells as vertex loops over lattice coordinates, then drops
/// unused points before handing everything to `MeshBuilder`.
struct Collector {
    index: HashMap<[i64; 3], usize>,
    points: Vec<Point>,
    cells: Vec<Vec<Vec<usize>>>,
    scale: f64,
}

impl Collector {
    fn new(scale: f64) -> Self {
        Self {
            index: HashMap::new(),
            points: Vec::new(),
            cells: Vec::new(),
            scale,
        }
    }

    fn id(&mut self, p: [i64; 3]) -> usize {
        let scale = self.scale;
        *self.index.entry(p).or_insert_with(|| {
            self.points
                .push(Point::new(p[0] as f64 * scale, p[1] as f64 * scale, p[2] as f64 * scale));
            self.points.len() - 1
        })
    }

    fn cell(&mut self, faces: Vec<Vec<[i64; 3]>>) {
        let faces = faces
            .into_iter()
            .map(|f| f.into_iter().map(|p| self.id(p)).collect())
            .collect();
        self.cells.push(faces);
    }

    fn build(self) -> PolyMesh {
        let mut b = MeshBuilder::new(self.points);
        for c in &self.cells {
            b.add_convex_cell(c).expect("valid cell");
        }
        b.build().expect("valid mesh")
    }
}

/// Corners of an axis-aligned square on `axis = level`, in loop order.
fn square(axis: usize, level: i64, lo: [i64; 2], size: i64) -> Vec<[i64; 3]> {
    let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
    [(0, 0), (size, 0), (size, size), (0, size)]
        .iter()
        .map(|&(du, dv)| {
            let mut p = [0; 3];
            p[axis] = level;
            p[u] = lo[0] + du;
            p[v] = lo[1] + dv;
            p
        })
        .collect()
}

fn cube_faces(o: [i64; 3], s: i64) -> Vec<(usize, i64, [i64; 2])> {
    let mut out = Vec::new();
    for axis in 0..3 {
        let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
        for level in [o[axis], o[axis] + s] {
            out.push((axis, level, [o[u], o[v]]));
        }
    }
    out
}

/// `n³` cubes, each split into six pyramids with apex at its center.
fn pyramids(n: i64) -> PolyMesh {
    let mut c = Collector::new(1.0 / (2 * n) as f64);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let o = [2 * i, 2 * j, 2 * k];
                let apex = [o[0] + 1, o[1] + 1, o[2] + 1];
                for (axis, level, lo) in cube_faces(o, 2) {
                    let base = square(axis, level, lo, 2);
                    let mut faces = vec![base.clone()];
                    for q in 0..4 {
                        faces.push(vec![base[q], base[(q + 1) % 4], apex]);
                    }
                    c.cell(faces);
                }
            }
        }
    }
    c.build()
}

/// A 2×2×2 block grid where blocks of even parity are refined into 2×2×2
/// cubes. Coarse cells see split faces and hanging edge midpoints.
fn checkerboard() -> PolyMesh {
    let fine = |b: [i64; 3]| (b[0] + b[1] + b[2]) % 2 == 0;
    let inside = |b: [i64; 3]| b.iter().all(|&x| (0..2).contains(&x));
    let mut used = std::collections::HashSet::new();
    for bz in 0..2 {
        for by in 0..2 {
            for bx in 0..2 {
                let b = [bx, by, bz];
                let step = if fine(b) { 1 } else { 2 };
                for dz in (0..=2).step_by(step) {
                    for dy in (0..=2).step_by(step) {
                        for dx in (0..=2).step_by(step) {
                            used.insert([2 * bx + dx, 2 * by + dy, 2 * bz + dz]);
                        }
                    }
                }
            }
        }
    }

    let mut c = Collector::new(0.25);
    for bz in 0..2 {
        for by in 0..2 {
            for bx in 0..2 {
                let b = [bx, by, bz];
                let o = [2 * bx, 2 * by, 2 * bz];
                if fine(b) {
                    for k in 0..2 {
                        for j in 0..2 {
                            for i in 0..2 {
                                let fo = [o[0] + i, o[1] + j, o[2] + k];
                                let faces = cube_faces(fo, 1)
                                    .into_iter()
                                    .map(|(a, l, lo)| square(a, l, lo, 1))
                                    .collect();
                                c.cell(faces);
                            }
                        }
                    }
                    continue;
                }
                let mut faces = Vec::new();
                for (axis, level, lo) in cube_faces(o, 2) {
                    let mut nb = b;
                    nb[axis] += if level == o[axis] { -1 } else { 1 };
                    if inside(nb) && fine(nb) {
                        for (du, dv) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                            faces.push(square(axis, level, [lo[0] + du, lo[1] + dv], 1));
                        }
                        continue;
                    }
                    let corners = square(axis, level, lo, 2);
                    let mut lp = Vec::new();
                    for q in 0..4 {
                        let (p, r) = (corners[q], corners[(q + 1) % 4]);
                        lp.push(p);
                        let mid = [(p[0] + r[0]) / 2, (p[1] + r[1]) / 2, (p[2] + r[2]) / 2];
                        if used.contains(&mid) {
                            lp.push(mid);
                        }
                    }
                    faces.push(lp);
                }
                c.cell(faces);
            }
        }
    }
    c.build()
}

fn main() {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data".into()));
    std::fs::create_dir_all(&dir).expect("output directory");
    for (name, mesh) in [("pyramids", pyramids(2)), ("checkerboard", checkerboard())] {
        let report = validate_topology(&mesh);
        assert!(report.passed(), "{name}: {report}");
        let path = dir.join(format!("{name}.pmesh"));
        save_mesh(&mesh, &path).expect("write mesh");
        println!(
            "{}: {} vertices, {} edges, {} faces, {} cells, {} dofs",
            path.display(),
            mesh.n_vertices(),
            mesh.n_edges(),
            mesh.n_faces(),
            mesh.n_cells(),
            mesh.total_dofs()
        );
    }
}
