use std::collections::HashMap;
use std::fmt;

use super::{Point, PolyMesh};

#[derive(Debug, Clone, PartialEq)]
pub struct TopologyCheck {
    pub name: &'static str,
    /// Offending entity indices (faces or cells, depending on the check).
    pub offenders: Vec<usize>,
}

impl TopologyCheck {
    pub fn passed(&self) -> bool {
        self.offenders.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopologyReport {
    pub checks: Vec<TopologyCheck>,
}

impl TopologyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(TopologyCheck::passed)
    }

    pub fn check(&self, name: &str) -> Option<&TopologyCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for TopologyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            if c.passed() {
                writeln!(f, "{:<22} pass", c.name)?;
            } else {
                let shown: Vec<String> = c.offenders.iter().take(10).map(|i| i.to_string()).collect();
                let more = if c.offenders.len() > 10 { ", ..." } else { "" };
                writeln!(
                    f,
                    "{:<22} FAIL ({} offenders: {}{more})",
                    c.name,
                    c.offenders.len(),
                    shown.join(", ")
                )?;
            }
        }
        Ok(())
    }
}

pub const FACE_LOOPS_CLOSED: &str = "face_loops_closed";
pub const FACE_EDGES_UNIQUE: &str = "face_edges_unique";
pub const CELL_FACES_UNIQUE: &str = "cell_faces_unique";
pub const FACE_CELL_INCIDENCE: &str = "face_cell_incidence";
pub const BOUNDARY_OF_BOUNDARY: &str = "boundary_of_boundary";

pub fn validate_topology(mesh: &PolyMesh) -> TopologyReport {
    let v = mesh.vertices();

    let mut open_faces = Vec::new();
    for (f, face) in mesh.faces().iter().enumerate() {
        let k = face.len();
        let chained = (0..k).all(|i| {
            let head = {
                let e = face[i];
                let [a, b] = mesh.edges()[e.index];
                if e.sign > 0 {
                    b
                } else {
                    a
                }
            };
            head == mesh.edge_tail(face[(i + 1) % k])
        });
        let mut sum = Point::zeros();
        let mut perimeter = 0.0;
        for e in face {
            let [a, b] = mesh.edges()[e.index];
            let d = v[b] - v[a];
            sum += d * e.sign_f64();
            perimeter += d.norm();
        }
        if !chained || sum.norm() > 1e-12 * perimeter {
            open_faces.push(f);
        }
    }

    let repeated = |list: &[super::Oriented]| {
        let mut idx: Vec<usize> = list.iter().map(|o| o.index).collect();
        idx.sort_unstable();
        idx.windows(2).any(|w| w[0] == w[1])
    };
    let face_dups: Vec<usize> = (0..mesh.n_faces())
        .filter(|&f| repeated(&mesh.faces()[f]))
        .collect();
    let cell_dups: Vec<usize> = (0..mesh.n_cells())
        .filter(|&c| repeated(&mesh.cells()[c]))
        .collect();

    let mut incident: Vec<Vec<i8>> = vec![Vec::new(); mesh.n_faces()];
    for cell in mesh.cells() {
        for f in cell {
            incident[f.index].push(f.sign);
        }
    }
    let bad_faces: Vec<usize> = incident
        .iter()
        .enumerate()
        .filter(|(_, s)| !(s.len() == 1 || (s.len() == 2 && s[0] == -s[1])))
        .map(|(f, _)| f)
        .collect();

    let mut bad_cells = Vec::new();
    let mut acc: HashMap<usize, i32> = HashMap::new();
    for (c, cell) in mesh.cells().iter().enumerate() {
        acc.clear();
        for f in cell {
            for e in &mesh.faces()[f.index] {
                *acc.entry(e.index).or_insert(0) += i32::from(f.sign) * i32::from(e.sign);
            }
        }
        if acc.values().any(|&s| s != 0) {
            bad_cells.push(c);
        }
    }

    TopologyReport {
        checks: vec![
            TopologyCheck {
                name: FACE_LOOPS_CLOSED,
                offenders: open_faces,
            },
            TopologyCheck {
                name: FACE_EDGES_UNIQUE,
                offenders: face_dups,
            },
            TopologyCheck {
                name: CELL_FACES_UNIQUE,
                offenders: cell_dups,
            },
            TopologyCheck {
                name: FACE_CELL_INCIDENCE,
                offenders: bad_faces,
            },
            TopologyCheck {
                name: BOUNDARY_OF_BOUNDARY,
                offenders: bad_cells,
            },
        ],
    }
}
